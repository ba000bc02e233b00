#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

namespace ktlab {

// Deterministic PRNG with hand-rolled distributions. std:: distributions are
// implementation-defined, which would break bit-reproducibility of seeded
// runs across toolchains, so the float/normal constructions live here.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {
        // splitmix64 warm-up so small seeds diverge immediately
        next_u64();
    }

    uint64_t next_u64() {
        uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1)
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform01();
    }

    // standard normal via Box-Muller with a cached spare
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double two_pi = 6.283185307179586476925286766559;
        double u = 1.0 - uniform01(); // avoid log(0)
        double a = std::sqrt(-2.0 * std::log(u));
        double theta = two_pi * uniform01();
        spare_ = a * std::sin(theta);
        has_spare_ = true;
        return a * std::cos(theta);
    }

    double normal(double mean, double stddev) {
        return mean + stddev * normal();
    }

    // uniform integer in [0, n)
    uint64_t below(uint64_t n) {
        // rejection sampling keeps the draw unbiased
        uint64_t threshold = (~n + 1) % n; // 2^64 mod n
        for (;;) {
            uint64_t r = next_u64();
            if (r >= threshold) {
                return r % n;
            }
        }
    }

    bool bernoulli(double p) {
        return uniform01() < p;
    }

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

inline uint64_t fnv1a64(const void* data, size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    uint64_t h = 0xcbf29ce484222325ULL;
    for (size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline uint64_t fnv1a64(std::string_view s) {
    return fnv1a64(s.data(), s.size());
}

// Named substream derivation: every component draws from its own stream so
// seeded runs compose deterministically regardless of evaluation order.
inline uint64_t substream(uint64_t seed, std::string_view name, uint64_t a = 0, uint64_t b = 0) {
    uint64_t z = seed ^ fnv1a64(name);
    auto mix = [](uint64_t x) {
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    };
    z = mix(z + 0x9e3779b97f4a7c15ULL);
    z = mix(z ^ (a + 0x9e3779b97f4a7c15ULL));
    z = mix(z ^ (b + 0x6a09e667f3bcc909ULL));
    return z;
}

} // namespace ktlab
