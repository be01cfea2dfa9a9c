#pragma once

#include "vqtoken/attention.hpp"
#include "vqtoken/codebook.hpp"
#include "vqtoken/encoder.hpp"
#include "vqtoken/grid.hpp"
#include "vqtoken/quantizer.hpp"

namespace vqtoken {

/// Full reduction of one clip: quantize -> codebook -> index map ->
/// encode -> attention.
struct CompressResult {
  CompressedTokens compressed;
  IndexMap index_map;
  ClusterAssignment assignment;
  Codebook codebook;
  Matrix m_tilde;
};

/// End-to-end deterministic given qcfg.seed and the params. Errors from the
/// stages propagate unchanged.
CompressResult compress_clip(const TokenGrid& grid, const QuantizerConfig& qcfg,
                             VqAttnParams& params);

}  // namespace vqtoken
