#pragma once

#include <functional>
#include <string>
#include <vector>

#include "ktlab/optim.hpp"

namespace ktlab {

struct GradCheckEntry {
    std::string name;
    double max_rel_error = 0.0;
};

struct GradCheckReport {
    std::vector<GradCheckEntry> per_param;
    double max_rel_error = 0.0;
};

// Central-difference check of the analytic gradients already stored in
// params[i].grad against the given loss function. loss_fn must be a
// deterministic pure function of the parameter values; it is re-evaluated
// with each element displaced by +/- h. Relative error per element is
// |a - n| / max(1e-8, |a| + |n|).
GradCheckReport grad_check(const std::function<double()>& loss_fn, ParamSet& params,
                           double h = 1e-4);

} // namespace ktlab
