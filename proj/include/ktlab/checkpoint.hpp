#pragma once

#include <cstdint>
#include <string>

#include "ktlab/model.hpp"

namespace ktlab {

inline constexpr uint32_t kCheckpointVersion = 1;

// Checkpoint layout: magic bytes "KTSTDRL\0", little-endian u32 version,
// little-endian u64 manifest byte length, structured-text manifest (variant
// id, hyperparameters, parameter names/shapes), then each parameter as raw
// little-endian 64-bit reals in manifest order. Round-trips are bit-exact.
void save_checkpoint(const Model& model, const std::string& path);
Model load_checkpoint(const std::string& path);

} // namespace ktlab
