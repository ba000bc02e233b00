#include "ktlab/fusion.hpp"

#include <cmath>

#include "ktlab/errors.hpp"

namespace ktlab::fusion {

namespace {
void check_skill(int skill, int skill_count) {
    if (skill < 0 || skill >= skill_count) {
        throw DataError("fusion: skill index out of range");
    }
}
} // namespace

BinarizedSpatial binarize_spatial(const std::vector<double>& scores_at_skill) {
    BinarizedSpatial out;
    out.activations.reserve(scores_at_skill.size());
    out.bits.reserve(scores_at_skill.size());
    for (double score : scores_at_skill) {
        if (!std::isfinite(score)) {
            throw NumericError("binarize_spatial: non-finite score");
        }
        const double a = 1.0 / (1.0 + std::exp(-score));
        out.activations.push_back(a);
        out.bits.push_back(a > 0.5 ? 1 : 0);
    }
    return out;
}

std::vector<int> spatial_hot_indices(const std::vector<int>& bits, const std::vector<int>& skills,
                                     int skill_count, size_t length) {
    std::vector<int> hot(length);
    for (size_t t = 0; t < length; ++t) {
        check_skill(skills[t], skill_count);
        hot[t] = bits[t] * skill_count + skills[t];
    }
    return hot;
}

std::vector<int> record_hot_indices(const std::vector<int>& skills, const std::vector<int>& correct,
                                    int skill_count, size_t length) {
    std::vector<int> hot(length);
    for (size_t t = 0; t < length; ++t) {
        check_skill(skills[t], skill_count);
        hot[t] = (1 - correct[t]) * skill_count + skills[t];
    }
    return hot;
}

namespace {
Tensor one_hot_from_indices(const std::vector<int>& hot, int skill_count, size_t window,
                            size_t length) {
    Tensor out({window, 2 * static_cast<size_t>(skill_count)});
    for (size_t t = 0; t < length; ++t) {
        out.at(t, static_cast<size_t>(hot[t])) = 1.0;
    }
    return out;
}
} // namespace

Tensor one_hot_spatial(const std::vector<int>& bits, const std::vector<int>& skills, int skill_count,
                       size_t window, size_t length) {
    return one_hot_from_indices(spatial_hot_indices(bits, skills, skill_count, length), skill_count,
                                window, length);
}

Tensor one_hot_records(const std::vector<int>& skills, const std::vector<int>& correct,
                       int skill_count, size_t window, size_t length) {
    return one_hot_from_indices(record_hot_indices(skills, correct, skill_count, length), skill_count,
                                window, length);
}

Tensor join_features(const Tensor& spatial_one_hot, const Tensor& record_one_hot) {
    if (spatial_one_hot.rank() != 2 || record_one_hot.rank() != 2 ||
        spatial_one_hot.dim(0) != record_one_hot.dim(0) ||
        spatial_one_hot.dim(1) != record_one_hot.dim(1)) {
        throw NumericError("join_features: shape mismatch");
    }
    const size_t k = spatial_one_hot.dim(0), w = spatial_one_hot.dim(1);
    Tensor out({k, 2 * w});
    for (size_t t = 0; t < k; ++t) {
        const double* a = spatial_one_hot.data() + t * w;
        const double* b = record_one_hot.data() + t * w;
        double* dst = out.data() + t * 2 * w;
        for (size_t j = 0; j < w; ++j) {
            dst[j] = a[j];
            dst[w + j] = b[j];
        }
    }
    return out;
}

} // namespace ktlab::fusion
