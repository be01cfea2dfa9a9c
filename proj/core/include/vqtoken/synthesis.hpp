#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vqtoken/grid.hpp"

namespace vqtoken {

/// Motion class of a synthetic clip; doubles as the proxy-task label.
enum class MotionClass : int { kLeft = 0, kRight = 1, kUp = 2, kDown = 3 };

const char* motion_name(MotionClass m);

struct SynthConfig {
  GridDims dims{8, 6, 6};
  std::uint32_t dim = 32;
  std::size_t num_objects = 1;
  MotionClass motion = MotionClass::kRight;
  double noise_std = 0.0;
  std::uint64_t seed = 0;
  /// Signature pool seed; 0 derives it from `seed`. Dataset builders pass a
  /// fixed value so all clips share one signature pool.
  std::uint64_t signature_seed = 0;
};

struct SynthClip {
  TokenGrid grid;
  ClipLabel label;
  /// Per-cell group id: 0 = background, 1..num_objects = objects. This is
  /// the generative ground truth that clustering should recover.
  std::vector<std::uint32_t> ground_truth;
};

/// Unit-norm, mutually orthogonal signature rows (Gaussian draws followed by
/// Gram-Schmidt). Requires count <= dim.
Matrix make_signatures(std::size_t count, std::uint32_t dim, std::uint64_t seed);

/// Builds one clip: each object is a contiguous 2x2 patch of cells sharing a
/// per-object signature; background cells share one background signature.
/// Objects translate one cell per frame in the motion direction, wrapping
/// toroidally, so the patch stays on-grid for any frame count. Gaussian
/// noise with per-component std noise_std/sqrt(D) is added and rows are
/// re-normalized. Throws ContractError on infeasible configs (patch larger
/// than the grid, or no room for disjoint objects plus background).
SynthClip synthesize_clip(const SynthConfig& cfg);

}  // namespace vqtoken
