#pragma once

#include <vector>

#include "ktlab/dataio.hpp"
#include "ktlab/tape.hpp"
#include "ktlab/tensor.hpp"

namespace ktlab::prior {

// Interaction embedding: row t is [s_t (+) 0] on a correct answer and
// [0 (+) s_t] on an incorrect one; padded steps are all-zero rows.
// table: M x n -> k x 2n.
VarId embed_interactions(Tape& t, VarId table, const WindowRow& row);

// Skill-embedding rows for each step: k x n, row t = table row skills[t].
VarId skill_vectors(Tape& t, VarId table, const WindowRow& row);

// Historical relevant performance: attention over the strict past, weighted
// by skill-embedding similarity to the current step. Row 0 is zero.
// embedded: k x 2n, skill_vecs: k x n -> k x 2n.
VarId historical_relevant_performance(Tape& t, VarId embedded, VarId skill_vecs, size_t length);

// Concept-wise percent correct over the strict past; unattempted skills read
// 0. Pure data feature (no parameters). -> k x M.
Tensor concept_percent_correct(const WindowRow& row, int skill_count);

struct PriorFusion {
    VarId joint;  // F_JPF: columnwise (F_LIS, F_HRP, F_CPC)
    VarId fused;  // F_ILA: (F_JPF W3 + b3) (x) sigmoid(F_JPF W4 + b4)
};

// parts: the feature blocks to concatenate, in order.
PriorFusion fuse_prior(Tape& t, const std::vector<VarId>& parts, VarId w_value, VarId b_value,
                       VarId w_gate, VarId b_gate, size_t length);

} // namespace ktlab::prior
