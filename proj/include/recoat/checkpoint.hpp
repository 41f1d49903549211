#pragma once

#include <string>
#include <utility>
#include <vector>

#include "recoat/param_store.hpp"
#include "recoat/tensor.hpp"

namespace recoat {

// Binary container: magic "RCAT", u32 format version, u32 parameter count,
// then per parameter: u32 name length, name bytes, u32 rank, u32 dims[rank],
// raw float32 little-endian values. Round-trips value-exactly at 32-bit
// precision.
inline constexpr std::uint32_t kCheckpointVersion = 1;

using NamedTensors = std::vector<std::pair<std::string, Tensor>>;

void write_checkpoint(const std::string& path, const NamedTensors& tensors);
NamedTensors read_checkpoint(const std::string& path);

// rounds every value through float32 (the checkpoint's storage precision)
void round_to_f32(Tensor& t);

void save_params(const std::string& path, const ParamStore& store);
// loads by name into an existing store; names and shapes must match exactly
void load_params(const std::string& path, ParamStore& store);

}  // namespace recoat
