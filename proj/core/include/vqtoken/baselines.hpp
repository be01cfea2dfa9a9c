#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vqtoken/grid.hpp"
#include "vqtoken/matrix.hpp"

namespace vqtoken {

enum class ReducerMethod { kPrune, kTome, kVidTome, kInterp, kVqFixed, kVqAdaptive };

const char* reducer_name(ReducerMethod m);
ReducerMethod reducer_from_name(const std::string& name);

struct ReducerSpec {
  ReducerMethod method = ReducerMethod::kVqFixed;
  std::size_t budget = 32;  // m
};

/// Output of a reducer: exactly the requested number of tokens plus, for
/// each output token, the source cells it summarizes.
struct ReducedSequence {
  Matrix tokens;  // m x D
  std::vector<std::vector<std::uint32_t>> source_map;
  std::string method;
  /// True when source sets are a disjoint cover (merging methods); pruning
  /// keeps singletons of a subset and interpolation sets may overlap.
  bool sources_partition = false;
};

/// Keeps the m most salient tokens in original order. Saliency is
/// ||t_i|| * (1 - mean cosine to the other tokens of the same frame); ties
/// keep the lower linear index.
ReducedSequence prune_tokens(const TokenGrid& grid, std::size_t m);

/// ToMe-style iterative bipartite soft matching within each frame:
/// alternate-position partition, match by cosine, merge the r most similar
/// pairs per round (size-weighted means) until exactly m tokens remain.
/// Requires m >= T (per-frame merging keeps at least one token per frame).
ReducedSequence merge_tome(const TokenGrid& grid, std::size_t m, bool per_frame = true);

/// VidToMe-style merging across the whole sequence with candidate pairs
/// restricted to a sliding temporal window of 2 frames.
ReducedSequence merge_vidtome(const TokenGrid& grid, std::size_t m);

/// Per-frame align-corners bilinear resampling of the HxW grid to
/// out_h x out_w; output count is T*out_h*out_w.
ReducedSequence interpolate_tokens(const TokenGrid& grid, std::uint32_t out_h,
                                   std::uint32_t out_w);

/// Factors a per-frame budget into out_h x out_w with out_h <= H,
/// out_w <= W (largest near-square factorization); throws ContractError if
/// the target does not factor.
std::pair<std::uint32_t, std::uint32_t> factor_per_frame(std::size_t per_frame,
                                                         const GridDims& dims);

/// VQTC view of a reduced sequence: K := m, cells map to the output token
/// that owns them; cells no output claims get the sentinel id m.
CompressedFile to_compressed(const ReducedSequence& seq, const GridDims& dims);

}  // namespace vqtoken
