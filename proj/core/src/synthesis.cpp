#include "vqtoken/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "vqtoken/errors.hpp"

namespace vqtoken {

namespace {

constexpr std::uint32_t kPatch = 2;  // objects are 2x2 cell patches

struct Velocity {
  int dh;
  int dw;
};

Velocity velocity_of(MotionClass m) {
  switch (m) {
    case MotionClass::kLeft: return {0, -1};
    case MotionClass::kRight: return {0, +1};
    case MotionClass::kUp: return {-1, 0};
    case MotionClass::kDown: return {+1, 0};
  }
  return {0, 0};
}

std::uint32_t wrap(int v, std::uint32_t extent) {
  int m = v % static_cast<int>(extent);
  if (m < 0) m += static_cast<int>(extent);
  return static_cast<std::uint32_t>(m);
}

// Greedy non-overlapping placement of num_objects patch anchors, retried
// over fresh shuffles, with a disjoint-tiling fallback.
std::vector<std::pair<std::uint32_t, std::uint32_t>> place_objects(
    const GridDims& dims, std::size_t num_objects, Rng& rng) {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> anchors;
  for (std::uint32_t h = 0; h + kPatch <= dims.height; ++h)
    for (std::uint32_t w = 0; w + kPatch <= dims.width; ++w) anchors.emplace_back(h, w);

  auto try_greedy = [&](std::vector<std::pair<std::uint32_t, std::uint32_t>> pool) {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> placed;
    std::vector<bool> occupied(static_cast<std::size_t>(dims.height) * dims.width, false);
    for (const auto& [h0, w0] : pool) {
      bool free = true;
      for (std::uint32_t dh = 0; dh < kPatch && free; ++dh)
        for (std::uint32_t dw = 0; dw < kPatch && free; ++dw)
          free = !occupied[(h0 + dh) * dims.width + (w0 + dw)];
      if (!free) continue;
      for (std::uint32_t dh = 0; dh < kPatch; ++dh)
        for (std::uint32_t dw = 0; dw < kPatch; ++dw)
          occupied[(h0 + dh) * dims.width + (w0 + dw)] = true;
      placed.emplace_back(h0, w0);
      if (placed.size() == num_objects) return placed;
    }
    return std::vector<std::pair<std::uint32_t, std::uint32_t>>{};
  };

  for (int attempt = 0; attempt < 32; ++attempt) {
    auto pool = anchors;
    for (std::size_t i = pool.size(); i > 1; --i)
      std::swap(pool[i - 1], pool[rng.next_below(i)]);
    auto placed = try_greedy(pool);
    if (!placed.empty()) return placed;
  }

  // Disjoint tiling: anchors on a stride-2 lattice never overlap.
  std::vector<std::pair<std::uint32_t, std::uint32_t>> tiled;
  for (std::uint32_t h = 0; h + kPatch <= dims.height; h += kPatch)
    for (std::uint32_t w = 0; w + kPatch <= dims.width; w += kPatch) tiled.emplace_back(h, w);
  for (std::size_t i = tiled.size(); i > 1; --i)
    std::swap(tiled[i - 1], tiled[rng.next_below(i)]);
  auto placed = try_greedy(tiled);
  if (placed.empty()) {
    throw ContractError("synthesize_clip: cannot place " + std::to_string(num_objects) +
                        " disjoint objects on a " + std::to_string(dims.height) + "x" +
                        std::to_string(dims.width) + " grid");
  }
  return placed;
}

}  // namespace

const char* motion_name(MotionClass m) {
  switch (m) {
    case MotionClass::kLeft: return "left";
    case MotionClass::kRight: return "right";
    case MotionClass::kUp: return "up";
    case MotionClass::kDown: return "down";
  }
  return "?";
}

Matrix make_signatures(std::size_t count, std::uint32_t dim, std::uint64_t seed) {
  if (count > dim) {
    throw ContractError("make_signatures: need count <= dim for orthogonal signatures");
  }
  Rng rng(seed);
  Matrix sig(count, dim);
  for (std::size_t i = 0; i < count; ++i) {
    // Draw, then Gram-Schmidt against the previous rows; redraw on collapse.
    while (true) {
      for (std::uint32_t d = 0; d < dim; ++d) sig(i, d) = rng.normal();
      for (std::size_t j = 0; j < i; ++j) {
        const double proj = dot(sig.row(i), sig.row(j));
        for (std::uint32_t d = 0; d < dim; ++d) sig(i, d) -= proj * sig(j, d);
      }
      const double n = norm2(sig.row(i));
      if (n > 1e-6) {
        for (std::uint32_t d = 0; d < dim; ++d) sig(i, d) /= n;
        break;
      }
    }
  }
  return sig;
}

SynthClip synthesize_clip(const SynthConfig& cfg) {
  if (cfg.dims.frames == 0 || cfg.dims.height == 0 || cfg.dims.width == 0 || cfg.dim == 0) {
    throw ContractError("synthesize_clip: dims must be >= 1");
  }
  if (cfg.noise_std < 0.0) throw ContractError("synthesize_clip: noise_std must be >= 0");
  if (cfg.dims.height < kPatch || cfg.dims.width < kPatch) {
    throw ContractError("synthesize_clip: object patch larger than grid");
  }
  const std::size_t object_cells = cfg.num_objects * kPatch * kPatch;
  const std::size_t frame_cells = static_cast<std::size_t>(cfg.dims.height) * cfg.dims.width;
  if (object_cells >= frame_cells) {
    throw ContractError("synthesize_clip: objects leave no background cells");
  }
  if (cfg.num_objects + 1 > cfg.dim) {
    throw ContractError("synthesize_clip: need num_objects + 1 <= dim");
  }

  Rng rng(cfg.seed);
  const std::uint64_t sig_seed =
      cfg.signature_seed != 0 ? cfg.signature_seed : cfg.seed ^ 0x5167A3B1C2D4E5F6ULL;
  // Row 0 is the background signature, rows 1.. are the objects.
  const Matrix signatures = make_signatures(cfg.num_objects + 1, cfg.dim, sig_seed);

  const auto anchors = place_objects(cfg.dims, cfg.num_objects, rng);
  const Velocity vel = velocity_of(cfg.motion);

  SynthClip clip;
  clip.grid.dims = cfg.dims;
  clip.grid.dim = cfg.dim;
  clip.grid.embeddings = Matrix(cfg.dims.cell_count(), cfg.dim);
  clip.ground_truth.assign(cfg.dims.cell_count(), 0);

  for (std::uint32_t f = 0; f < cfg.dims.frames; ++f) {
    for (std::size_t obj = 0; obj < anchors.size(); ++obj) {
      const auto [h0, w0] = anchors[obj];
      for (std::uint32_t dh = 0; dh < kPatch; ++dh) {
        for (std::uint32_t dw = 0; dw < kPatch; ++dw) {
          const std::uint32_t h =
              wrap(static_cast<int>(h0 + dh) + vel.dh * static_cast<int>(f), cfg.dims.height);
          const std::uint32_t w =
              wrap(static_cast<int>(w0 + dw) + vel.dw * static_cast<int>(f), cfg.dims.width);
          clip.ground_truth[cfg.dims.linear_index(f, h, w)] =
              static_cast<std::uint32_t>(obj + 1);
        }
      }
    }
  }

  const double component_std =
      cfg.noise_std / std::sqrt(static_cast<double>(cfg.dim));
  for (std::size_t i = 0; i < cfg.dims.cell_count(); ++i) {
    const std::uint32_t group = clip.ground_truth[i];
    auto row = clip.grid.embeddings.row(i);
    for (std::uint32_t d = 0; d < cfg.dim; ++d) row[d] = signatures(group, d);
    if (cfg.noise_std > 0.0) {
      for (std::uint32_t d = 0; d < cfg.dim; ++d) row[d] += component_std * rng.normal();
      const double n = norm2(row);
      if (n > 1e-12) {
        for (std::uint32_t d = 0; d < cfg.dim; ++d) row[d] /= n;
      }
    }
  }

  clip.label.clip_id = "seed-" + std::to_string(cfg.seed);
  clip.label.class_id = static_cast<int>(cfg.motion);
  clip.grid.validate();
  return clip;
}

}  // namespace vqtoken
