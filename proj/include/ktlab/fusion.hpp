#pragma once

#include <vector>

#include "ktlab/dataio.hpp"
#include "ktlab/tensor.hpp"

namespace ktlab::fusion {

struct BinarizedSpatial {
    std::vector<double> activations; // sigmoid of the raw scores, per step
    std::vector<int> bits;           // 1 where activation > 0.5, else 0
};

// Sigmoid then hard threshold; a tie at exactly 0.5 maps to 0. The threshold
// is non-differentiable, so everything downstream of it treats these as data.
BinarizedSpatial binarize_spatial(const std::vector<double>& scores_at_skill);

// One-hot row t has its 1 at index bit_t * M + s_t. -> k x 2M, padded rows zero.
Tensor one_hot_spatial(const std::vector<int>& bits, const std::vector<int>& skills, int skill_count,
                       size_t window, size_t length);

// One-hot row t has its 1 at index (1 - r_t) * M + s_t. -> k x 2M.
Tensor one_hot_records(const std::vector<int>& skills, const std::vector<int>& correct,
                       int skill_count, size_t window, size_t length);

// Columnwise concatenation, spatial block first. -> k x 4M.
Tensor join_features(const Tensor& spatial_one_hot, const Tensor& record_one_hot);

// Hot-index forms of the same encodings, used by the one-hot LSTM fast path.
std::vector<int> spatial_hot_indices(const std::vector<int>& bits, const std::vector<int>& skills,
                                     int skill_count, size_t length);
std::vector<int> record_hot_indices(const std::vector<int>& skills, const std::vector<int>& correct,
                                    int skill_count, size_t length);

} // namespace ktlab::fusion
