#pragma once

#include <cstdint>

#include "ktlab/gradcheck.hpp"
#include "ktlab/model.hpp"

namespace ktlab {

struct FullModelCheck {
    GradCheckReport report;
    int attempts = 1;       // probe redraws needed to clear the guard bands
    size_t parameters = 0;  // total scalar parameter count
};

// End-to-end reverse-mode check of the full dkt-stdrl loss on a tiny
// configuration (M=7, n=4, k=9, g=5, channels (2,3,3), kernel width 2)
// against central finite differences. The probe point is redrawn until every
// binarization score sits clear of the threshold and every prediction sits
// clear of the clip bounds, so the finite differences probe a smooth region.
FullModelCheck full_model_grad_check(uint64_t seed, double h = 1e-4);

} // namespace ktlab
