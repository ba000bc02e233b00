#include "ktlab/optim.hpp"

#include <cmath>

#include "ktlab/errors.hpp"

namespace ktlab {

Parameter* ParamSet::find(const std::string& name) {
    for (auto& p : params_) {
        if (p.name == name) {
            return &p;
        }
    }
    return nullptr;
}

const Parameter* ParamSet::find(const std::string& name) const {
    for (const auto& p : params_) {
        if (p.name == name) {
            return &p;
        }
    }
    return nullptr;
}

double AdamConfig::effective_learning_rate() const {
    const long unit = decay_per_step ? step : static_cast<long>(epoch);
    const long stairs = decay_every_epochs > 0 ? unit / decay_every_epochs : 0;
    return learning_rate * std::pow(decay_rate, static_cast<double>(stairs));
}

void AdamConfig::validate() const {
    if (!(learning_rate > 0.0)) {
        throw ConfigError("adam: learning rate must be positive");
    }
    if (!(decay_rate > 0.0) || decay_rate > 1.0) {
        throw ConfigError("adam: decay rate must be in (0, 1]");
    }
    if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0) {
        throw ConfigError("adam: betas must be in [0, 1)");
    }
    if (!(epsilon > 0.0)) {
        throw ConfigError("adam: epsilon must be positive");
    }
}

void adam_step(ParamSet& params, AdamConfig& cfg) {
    cfg.validate();
    cfg.step += 1;
    const double lr = cfg.effective_learning_rate();
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(cfg.step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(cfg.step));

    for (auto& p : params.items()) {
        double* v = p.value.data();
        const double* g = p.grad.data();
        double* m1 = p.moment1.data();
        double* m2 = p.moment2.data();
        const size_t n = p.value.size();
        for (size_t i = 0; i < n; ++i) {
            if (!std::isfinite(g[i])) {
                throw NumericError("adam: non-finite gradient in parameter '" + p.name + "'");
            }
            m1[i] = cfg.beta1 * m1[i] + (1.0 - cfg.beta1) * g[i];
            m2[i] = cfg.beta2 * m2[i] + (1.0 - cfg.beta2) * g[i] * g[i];
            const double mhat = m1[i] / bc1;
            const double vhat = m2[i] / bc2;
            v[i] -= lr * mhat / (std::sqrt(vhat) + cfg.epsilon);
        }
    }
}

} // namespace ktlab
