#include "ktlab/spatial.hpp"

#include "ktlab/ops.hpp"

namespace ktlab::spatial {

VarId extract_spatial(Tape& t, VarId input, const std::vector<ConvLayerVars>& layers,
                      double keep_prob, bool training, Rng& rng, size_t length) {
    VarId x = input;
    for (const auto& layer : layers) {
        const VarId value = ops::conv1d_causal(t, x, layer.value_kernel, layer.value_bias, length);
        const VarId gate = ops::conv1d_causal(t, x, layer.gate_kernel, layer.gate_bias, length);
        x = ops::glu(t, value, gate);
        x = ops::dropout(t, x, keep_prob, training, rng, length);
    }
    return x;
}

VarId project_per_skill(Tape& t, VarId spatial_features, VarId weight, VarId bias, size_t length) {
    return ops::affine(t, spatial_features, weight, bias, length);
}

} // namespace ktlab::spatial
