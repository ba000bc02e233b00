#include "ktlab/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace ktlab {

GradCheckReport grad_check(const std::function<double()>& loss_fn, ParamSet& params, double h) {
    GradCheckReport report;
    for (auto& p : params.items()) {
        GradCheckEntry entry{p.name, 0.0};
        double* v = p.value.data();
        const double* a = p.grad.data();
        for (size_t i = 0; i < p.value.size(); ++i) {
            const double keep = v[i];
            v[i] = keep + h;
            const double up = loss_fn();
            v[i] = keep - h;
            const double down = loss_fn();
            v[i] = keep;
            const double numeric = (up - down) / (2.0 * h);
            const double denom = std::max(1e-8, std::abs(a[i]) + std::abs(numeric));
            entry.max_rel_error = std::max(entry.max_rel_error, std::abs(a[i] - numeric) / denom);
        }
        report.max_rel_error = std::max(report.max_rel_error, entry.max_rel_error);
        report.per_param.push_back(std::move(entry));
    }
    return report;
}

} // namespace ktlab
