#pragma once

#include <vector>

#include "ktlab/rng.hpp"
#include "ktlab/tape.hpp"

namespace ktlab::spatial {

// One gated convolution layer: paired value/gate causal convolutions feeding
// a GLU, mirroring the paired-linear-map pattern of the prior fusion.
struct ConvLayerVars {
    VarId value_kernel; // w x Cin x Cout
    VarId value_bias;   // Cout
    VarId gate_kernel;  // w x Cin x Cout
    VarId gate_bias;    // Cout
};

// Hierarchical gated convolution stack producing the spatial learning
// feature: repeated {causal conv (value), causal conv (gate), GLU}, with
// dropout after each layer in training mode.
VarId extract_spatial(Tape& t, VarId input, const std::vector<ConvLayerVars>& layers,
                      double keep_prob, bool training, Rng& rng, size_t length);

// Per-skill projection head: raw spatial scores, row t = F_KS row t * W + b.
VarId project_per_skill(Tape& t, VarId spatial_features, VarId weight, VarId bias, size_t length);

} // namespace ktlab::spatial
