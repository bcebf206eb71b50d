#pragma once

#include <string>
#include <utility>
#include <vector>

#include "amd/tensor.hpp"

namespace amd {

using NamedTensors = std::vector<std::pair<std::string, Tensor>>;

/// Writes tensors in the order given. Little-endian binary layout:
/// magic "AMDW", format version u32, tensor count u32, then per tensor
/// name length u32 + UTF-8 name, rank u32, dims u32 each, raw f64 values.
/// The round trip is bit-exact.
void save_weights(const std::string& path, const NamedTensors& tensors);

/// Throws DataError on bad magic, unsupported version or truncation.
NamedTensors load_weights(const std::string& path);

/// Lookup helper; throws DataError when the name is absent.
const Tensor& find_tensor(const NamedTensors& tensors, const std::string& name);

}  // namespace amd
