#pragma once

#include <filesystem>

#include "vqtoken/attention.hpp"

namespace vqtoken {

// VQTP parameter checkpoint (little-endian): magic "VQTP", version u16 = 1,
// variant u8, heads u8, D u32, then named tensors as (name length u16, name
// bytes, rows u32, cols u32, float32 row-major data). Besides the trainable
// tensors the file carries "shape" (1x4: T,H,W,K; literal-flat only) and
// "residual" (1x1 flag).

void save_params(const VqAttnParams& params, const std::filesystem::path& path);
VqAttnParams load_params(const std::filesystem::path& path);

}  // namespace vqtoken
