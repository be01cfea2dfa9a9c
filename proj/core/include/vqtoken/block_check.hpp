#pragma once

#include <cstdint>

#include "vqtoken/attention.hpp"
#include "vqtoken/grad_check.hpp"

namespace vqtoken {

/// Configuration for the end-to-end gradient check over the fusion block:
/// encoder MLP -> VQ-Attention -> pooled features -> linear probe -> CE loss
/// on one small synthetic clip. Shapes stay tiny so central finite
/// differences over every scalar parameter stay fast.
struct BlockCheckConfig {
  EncoderVariant variant = EncoderVariant::kClusterPositional;
  std::uint64_t seed = 0;
  std::uint32_t dim = 8;
  std::uint32_t heads = 2;
  GridDims dims{2, 3, 3};
  std::size_t clusters = 3;
  double fd_step = 1e-5;
  /// Test hook: biases one analytic gradient entry so the check must fail.
  bool corrupt = false;
};

/// Runs the check and reports the worst relative error per trainable tensor
/// (attention projections, encoder MLP layers, probe weight and bias).
GradCheckReport check_attention_block(const BlockCheckConfig& cfg);

}  // namespace vqtoken
