#pragma once

#include <string>
#include <vector>

#include "deepindex/tensor.hpp"

namespace deepindex {

// Binary named-tensor container used for model checkpoints.
// Layout (little-endian): magic "DIDX", version byte, u32 record count, then
// per record: u32 name length, name bytes, u32 ndim, u32 dims, f32 values
// in row-major order.
void save_checkpoint(const std::string& path, const std::vector<Parameter>& tensors);
std::vector<Parameter> load_checkpoint(const std::string& path);

}  // namespace deepindex
