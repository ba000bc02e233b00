#pragma once

#include <array>
#include <vector>

#include "ktlab/rng.hpp"
#include "ktlab/tape.hpp"

namespace ktlab::ops {

// All sequence tensors follow one convention: shape k x C with only the first
// `valid_rows` rows populated; padded rows are zero and stay zero through
// every op, and gradients never flow into them.

// y = x * w + b, row-wise over the valid prefix. x: k x A, w: A x B, b: B.
VarId affine(Tape& t, VarId x, VarId w, VarId b, size_t valid_rows);

// Columnwise concatenation of k x C_i blocks.
VarId concat_cols(Tape& t, const std::vector<VarId>& parts, size_t valid_rows);

// value (x) sigmoid(gate), elementwise; shapes must match.
VarId glu(Tape& t, VarId value, VarId gate);

VarId sigmoid(Tape& t, VarId x);

// Causal 1-D convolution with left zero padding of width w-1: output row t
// reads input rows t-w+1 .. t only. input: k x Cin, kernels: w x Cin x Cout,
// bias: Cout.
VarId conv1d_causal(Tape& t, VarId input, VarId kernels, VarId bias, size_t valid_rows);

// Softmax over unmasked entries with max subtraction; masked entries get
// weight 0; all-masked input yields all zeros. logits: length-k vector.
Tensor masked_softmax(const Tensor& logits, const std::vector<char>& mask);
VarId masked_softmax(Tape& t, VarId logits, std::vector<char> mask);

// Inverted dropout: keep with probability keep_prob and scale by 1/keep_prob
// in training mode; identity in evaluation mode. Masks are drawn over the
// valid prefix only.
VarId dropout(Tape& t, VarId x, double keep_prob, bool training, Rng& rng, size_t valid_rows);

struct LstmVars {
    VarId wx; // D x 4g, gate order [input, forget, output, candidate]
    VarId wh; // g x 4g
    VarId b;  // 4g
};

enum class LstmDirection { Forward, Backward };

// Standard LSTM over the valid prefix, zero initial state. The backward
// direction processes steps length-1 .. 0 and writes each hidden state back
// to its own position. Rows >= length emit zeros. inputs: k x D -> k x g.
VarId lstm_sequence(Tape& t, VarId inputs, const LstmVars& p, LstmDirection dir, size_t length);

// Same recurrence for inputs that are rows with at most two unit entries
// (one-hot concatenations). hot[t] lists the hot column indices of step t,
// -1 for unused slots. The input is constant: no gradient flows into it.
VarId lstm_sequence_onehot(Tape& t, const std::vector<std::array<int, 2>>& hot, size_t k,
                           const LstmVars& p, LstmDirection dir, size_t length);

// out row t = table row ids[t], for t < valid_rows; remaining rows zero.
VarId gather_rows(Tape& t, VarId table, std::vector<int> ids, size_t out_rows, size_t valid_rows);

// v[i] = mat(i, cols[i]) for i < cols.size().
VarId gather_step_cols(Tape& t, VarId mat, std::vector<int> cols);

// Hard clip; gradient is zero outside (lo, hi).
VarId clip(Tape& t, VarId x, double lo, double hi);

// -sum_i (r_i log p_i + (1-r_i) log(1-p_i)); probs and targets same length.
VarId bce_sum(Tape& t, VarId probs, std::vector<int> targets);
double bce_sum_value(const std::vector<double>& probs, const std::vector<int>& targets);

VarId add_scalars(Tape& t, VarId a, VarId b);

} // namespace ktlab::ops
