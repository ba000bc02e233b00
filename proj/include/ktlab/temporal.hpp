#pragma once

#include <array>
#include <vector>

#include "ktlab/dataio.hpp"
#include "ktlab/ops.hpp"
#include "ktlab/rng.hpp"
#include "ktlab/tape.hpp"

namespace ktlab::temporal {

struct BiLstmVars {
    ops::LstmVars forward;
    ops::LstmVars backward; // unused when bidirectional is false
    bool bidirectional = true;
    // Inference-only switch: run with the backward direction silenced. Not
    // the default evaluation protocol; provided for leakage-free scoring.
    bool suppress_backward = false;
};

// h_t = forward state (+) backward state over the valid prefix, with output
// dropout in training mode. Padded rows are zero. -> k x 2g (k x g when
// unidirectional).
VarId bilstm_encode(Tape& t, VarId joint_features, const BiLstmVars& p, size_t length,
                    double keep_prob, bool training, Rng& rng);

// Same encoding for rows that are concatenated one-hots (hot column indices
// per step, -1 for unused slots).
VarId bilstm_encode_onehot(Tape& t, const std::vector<std::array<int, 2>>& hot, size_t k,
                           const BiLstmVars& p, size_t length, double keep_prob, bool training,
                           Rng& rng);

// Per-skill raw knowledge-state scores: row t = H row t * W + b. -> k x M.
VarId knowledge_state(Tape& t, VarId hidden, VarId weight, VarId bias, size_t length);

// Next-step predictions: p_{t+1} = sigmoid(state(t, s_{t+1})) for
// t = 0 .. length-2, paired with target r_{t+1}. Probabilities are clipped
// away from {0, 1} before any loss logarithm.
struct NextStepPrediction {
    VarId probs = kNoVar;     // clipped probability vector, empty when length < 2
    std::vector<int> targets; // r_{t+1}
    std::vector<int> skills;  // s_{t+1}

    size_t count() const { return targets.size(); }
};

inline constexpr double kProbClip = 1e-7;

NextStepPrediction predict_next(Tape& t, VarId state, const WindowRow& row);

} // namespace ktlab::temporal
