#include "ktlab/temporal.hpp"

namespace ktlab::temporal {

namespace {

// Assembles the directional halves: forward state, plus either the real
// backward state, a zero block (suppressed), or nothing (unidirectional).
template <class RunDirection>
VarId encode_common(Tape& t, const BiLstmVars& p, size_t length, double keep_prob, bool training,
                    Rng& rng, RunDirection run) {
    const VarId fwd = run(p.forward, ops::LstmDirection::Forward);
    VarId hidden;
    if (!p.bidirectional) {
        hidden = fwd;
    } else if (p.suppress_backward) {
        const VarId zero = t.constant(Tensor(t.val(fwd).shape()));
        hidden = ops::concat_cols(t, {fwd, zero}, length);
    } else {
        const VarId bwd = run(p.backward, ops::LstmDirection::Backward);
        hidden = ops::concat_cols(t, {fwd, bwd}, length);
    }
    return ops::dropout(t, hidden, keep_prob, training, rng, length);
}

} // namespace

VarId bilstm_encode(Tape& t, VarId joint_features, const BiLstmVars& p, size_t length,
                    double keep_prob, bool training, Rng& rng) {
    return encode_common(t, p, length, keep_prob, training, rng,
                         [&](const ops::LstmVars& vars, ops::LstmDirection dir) {
                             return ops::lstm_sequence(t, joint_features, vars, dir, length);
                         });
}

VarId bilstm_encode_onehot(Tape& t, const std::vector<std::array<int, 2>>& hot, size_t k,
                           const BiLstmVars& p, size_t length, double keep_prob, bool training,
                           Rng& rng) {
    return encode_common(t, p, length, keep_prob, training, rng,
                         [&](const ops::LstmVars& vars, ops::LstmDirection dir) {
                             return ops::lstm_sequence_onehot(t, hot, k, vars, dir, length);
                         });
}

VarId knowledge_state(Tape& t, VarId hidden, VarId weight, VarId bias, size_t length) {
    return ops::affine(t, hidden, weight, bias, length);
}

NextStepPrediction predict_next(Tape& t, VarId state, const WindowRow& row) {
    NextStepPrediction out;
    if (row.length < 2) {
        return out; // no transitions: contributes nothing to loss or metrics
    }
    std::vector<int> cols(row.length - 1);
    out.targets.resize(row.length - 1);
    out.skills.resize(row.length - 1);
    for (size_t tt = 0; tt + 1 < row.length; ++tt) {
        cols[tt] = row.skills[tt + 1];
        out.skills[tt] = row.skills[tt + 1];
        out.targets[tt] = row.correct[tt + 1];
    }
    const VarId raw = ops::gather_step_cols(t, state, std::move(cols));
    out.probs = ops::clip(t, ops::sigmoid(t, raw), kProbClip, 1.0 - kProbClip);
    return out;
}

} // namespace ktlab::temporal
