#include "vqtoken/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "vqtoken/errors.hpp"
#include "vqtoken/quantizer.hpp"

namespace vqtoken {

const char* reducer_name(ReducerMethod m) {
  switch (m) {
    case ReducerMethod::kPrune: return "prune";
    case ReducerMethod::kTome: return "tome";
    case ReducerMethod::kVidTome: return "vidtome";
    case ReducerMethod::kInterp: return "interp";
    case ReducerMethod::kVqFixed: return "vq-fixed";
    case ReducerMethod::kVqAdaptive: return "vq-adaptive";
  }
  return "?";
}

ReducerMethod reducer_from_name(const std::string& name) {
  if (name == "prune") return ReducerMethod::kPrune;
  if (name == "tome") return ReducerMethod::kTome;
  if (name == "vidtome") return ReducerMethod::kVidTome;
  if (name == "interp") return ReducerMethod::kInterp;
  if (name == "vq" || name == "vq-fixed") return ReducerMethod::kVqFixed;
  if (name == "vq-adaptive") return ReducerMethod::kVqAdaptive;
  throw ContractError("unknown method '" + name +
                      "' (valid: prune, tome, vidtome, interp, vq, vq-adaptive)");
}

namespace {

void check_budget(const TokenGrid& grid, std::size_t m) {
  grid.validate();
  if (m == 0 || m > grid.token_count()) {
    throw ContractError("reducer: budget must satisfy 1 <= m <= N");
  }
}

}  // namespace

ReducedSequence prune_tokens(const TokenGrid& grid, std::size_t m) {
  check_budget(grid, m);
  const std::size_t n = grid.token_count();
  const std::size_t frame_cells =
      static_cast<std::size_t>(grid.dims.height) * grid.dims.width;

  std::vector<double> saliency(n, 0.0);
  for (std::uint32_t f = 0; f < grid.dims.frames; ++f) {
    const std::size_t base = static_cast<std::size_t>(f) * frame_cells;
    for (std::size_t i = 0; i < frame_cells; ++i) {
      const auto row = grid.embeddings.row(base + i);
      double mean_sim = 0.0;
      std::size_t others = 0;
      for (std::size_t j = 0; j < frame_cells; ++j) {
        if (j == i) continue;
        mean_sim += cosine_similarity(row, grid.embeddings.row(base + j));
        ++others;
      }
      if (others > 0) mean_sim /= static_cast<double>(others);
      saliency[base + i] = norm2(row) * (1.0 - mean_sim);
    }
  }

  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    if (saliency[a] != saliency[b]) return saliency[a] > saliency[b];
    return a < b;
  });
  std::vector<std::uint32_t> kept(order.begin(), order.begin() + m);
  std::sort(kept.begin(), kept.end());

  ReducedSequence seq;
  seq.method = "prune";
  seq.tokens = Matrix(m, grid.dim);
  seq.source_map.resize(m);
  for (std::size_t j = 0; j < m; ++j) {
    const auto src = grid.embeddings.row(kept[j]);
    std::copy(src.begin(), src.end(), seq.tokens.row(j).begin());
    seq.source_map[j] = {kept[j]};
  }
  return seq;
}

namespace {

struct MergeGroup {
  std::vector<double> vec;           // size-weighted mean of sources
  std::vector<std::uint32_t> sources;
  std::uint32_t frame;
  std::uint32_t min_index;
};

ReducedSequence merge_groups(const TokenGrid& grid, std::size_t m, bool per_frame,
                             const char* method) {
  const std::size_t n = grid.token_count();
  std::vector<MergeGroup> groups(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    const auto row = grid.embeddings.row(i);
    groups[i].vec.assign(row.begin(), row.end());
    groups[i].sources = {i};
    groups[i].frame = grid.dims.coords(i)[0];
    groups[i].min_index = i;
  }

  // r merges per round, progressive schedule scaled to the budget.
  const std::size_t rounds = std::max<std::size_t>(
      1, static_cast<std::size_t>(
             std::ceil(std::log2(static_cast<double>(n) / static_cast<double>(m)))));
  const std::size_t per_round = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(static_cast<double>(n - m) /
                                            static_cast<double>(rounds))));

  int window = 1;  // |frame delta| < window qualifies; per-frame keeps 1
  while (groups.size() > m) {
    std::sort(groups.begin(), groups.end(), [](const MergeGroup& a, const MergeGroup& b) {
      return a.min_index < b.min_index;
    });

    // Alternate-position bipartite split over the current sequence order.
    std::vector<std::size_t> side_a, side_b;
    for (std::size_t i = 0; i < groups.size(); ++i) {
      (i % 2 == 0 ? side_a : side_b).push_back(i);
    }

    struct Proposal {
      double sim;
      std::size_t a;
      std::size_t b;
    };
    std::vector<Proposal> proposals;
    for (std::size_t a : side_a) {
      double best_sim = -std::numeric_limits<double>::infinity();
      std::size_t best_b = groups.size();
      for (std::size_t b : side_b) {
        const int df = std::abs(static_cast<int>(groups[a].frame) -
                                static_cast<int>(groups[b].frame));
        if (per_frame ? df != 0 : df >= window) continue;
        const double sim = cosine_similarity(
            std::span<const double>(groups[a].vec),
            std::span<const double>(groups[b].vec));
        if (sim > best_sim ||
            (sim == best_sim && best_b < groups.size() &&
             groups[b].min_index < groups[best_b].min_index)) {
          best_sim = sim;
          best_b = b;
        }
      }
      if (best_b < groups.size()) proposals.push_back({best_sim, a, best_b});
    }

    if (proposals.empty()) {
      if (per_frame) {
        throw ContractError(std::string(method) +
                            ": no mergeable pairs left above the budget");
      }
      ++window;  // widen the temporal window rather than stall
      continue;
    }

    std::sort(proposals.begin(), proposals.end(), [&](const Proposal& x, const Proposal& y) {
      if (x.sim != y.sim) return x.sim > y.sim;
      return groups[x.a].min_index < groups[y.a].min_index;
    });

    const std::size_t quota = std::min(per_round, groups.size() - m);
    std::vector<bool> dead(groups.size(), false);
    std::size_t merged = 0;
    for (const Proposal& p : proposals) {
      if (merged == quota) break;
      if (dead[p.a]) continue;
      MergeGroup& a = groups[p.a];
      MergeGroup& b = groups[p.b];
      const double sa = static_cast<double>(a.sources.size());
      const double sb = static_cast<double>(b.sources.size());
      const double inv = 1.0 / (sa + sb);
      for (std::size_t d = 0; d < b.vec.size(); ++d) {
        b.vec[d] = (sa * a.vec[d] + sb * b.vec[d]) * inv;
      }
      b.sources.insert(b.sources.end(), a.sources.begin(), a.sources.end());
      if (a.min_index < b.min_index) {
        b.min_index = a.min_index;
        b.frame = a.frame;
      }
      dead[p.a] = true;
      ++merged;
    }

    std::vector<MergeGroup> next;
    next.reserve(groups.size() - merged);
    for (std::size_t i = 0; i < groups.size(); ++i) {
      if (!dead[i]) next.push_back(std::move(groups[i]));
    }
    groups = std::move(next);
  }

  std::sort(groups.begin(), groups.end(), [](const MergeGroup& a, const MergeGroup& b) {
    return a.min_index < b.min_index;
  });

  ReducedSequence seq;
  seq.method = method;
  seq.sources_partition = true;
  seq.tokens = Matrix(groups.size(), grid.dim);
  seq.source_map.resize(groups.size());
  for (std::size_t j = 0; j < groups.size(); ++j) {
    std::copy(groups[j].vec.begin(), groups[j].vec.end(), seq.tokens.row(j).begin());
    seq.source_map[j] = groups[j].sources;
    std::sort(seq.source_map[j].begin(), seq.source_map[j].end());
  }
  return seq;
}

}  // namespace

ReducedSequence merge_tome(const TokenGrid& grid, std::size_t m, bool per_frame) {
  check_budget(grid, m);
  if (per_frame && m < grid.dims.frames) {
    throw ContractError("tome: per-frame merging needs budget >= frame count");
  }
  return merge_groups(grid, m, per_frame, per_frame ? "tome" : "tome-global");
}

ReducedSequence merge_vidtome(const TokenGrid& grid, std::size_t m) {
  check_budget(grid, m);
  return merge_groups(grid, m, /*per_frame=*/false, "vidtome");
}

ReducedSequence interpolate_tokens(const TokenGrid& grid, std::uint32_t out_h,
                                   std::uint32_t out_w) {
  grid.validate();
  if (out_h == 0 || out_w == 0 || out_h > grid.dims.height || out_w > grid.dims.width) {
    throw ContractError("interp: target must satisfy 1 <= h' <= H, 1 <= w' <= W");
  }

  const auto sample_coord = [](std::uint32_t out, std::uint32_t in, std::uint32_t idx) {
    // Align-corners; a single output row samples the center.
    if (out == 1) return (static_cast<double>(in) - 1.0) / 2.0;
    return static_cast<double>(idx) * (static_cast<double>(in) - 1.0) /
           (static_cast<double>(out) - 1.0);
  };

  const std::size_t per_frame = static_cast<std::size_t>(out_h) * out_w;
  ReducedSequence seq;
  seq.method = "interp";
  seq.tokens = Matrix(static_cast<std::size_t>(grid.dims.frames) * per_frame, grid.dim);
  seq.source_map.resize(seq.tokens.rows());

  std::size_t out_idx = 0;
  for (std::uint32_t f = 0; f < grid.dims.frames; ++f) {
    for (std::uint32_t oh = 0; oh < out_h; ++oh) {
      for (std::uint32_t ow = 0; ow < out_w; ++ow, ++out_idx) {
        const double y = sample_coord(out_h, grid.dims.height, oh);
        const double x = sample_coord(out_w, grid.dims.width, ow);
        const auto y0 = static_cast<std::uint32_t>(std::floor(y));
        const auto x0 = static_cast<std::uint32_t>(std::floor(x));
        const std::uint32_t y1 = std::min(y0 + 1, grid.dims.height - 1);
        const std::uint32_t x1 = std::min(x0 + 1, grid.dims.width - 1);
        const double fy = y - y0;
        const double fx = x - x0;

        const struct {
          std::uint32_t h, w;
          double weight;
        } corners[4] = {
            {y0, x0, (1.0 - fy) * (1.0 - fx)},
            {y0, x1, (1.0 - fy) * fx},
            {y1, x0, fy * (1.0 - fx)},
            {y1, x1, fy * fx},
        };

        auto dst = seq.tokens.row(out_idx);
        // Nearest source cell first: it owns the output id in VQTC maps.
        const std::uint32_t nh = fy < 0.5 ? y0 : y1;
        const std::uint32_t nw = fx < 0.5 ? x0 : x1;
        seq.source_map[out_idx].push_back(
            static_cast<std::uint32_t>(grid.dims.linear_index(f, nh, nw)));
        for (const auto& c : corners) {
          if (c.weight == 0.0) continue;
          const std::size_t src = grid.dims.linear_index(f, c.h, c.w);
          const auto srow = grid.embeddings.row(src);
          for (std::size_t d = 0; d < dst.size(); ++d) dst[d] += c.weight * srow[d];
          if (src != seq.source_map[out_idx].front()) {
            seq.source_map[out_idx].push_back(static_cast<std::uint32_t>(src));
          }
        }
      }
    }
  }
  return seq;
}

std::pair<std::uint32_t, std::uint32_t> factor_per_frame(std::size_t per_frame,
                                                         const GridDims& dims) {
  for (std::uint32_t h = static_cast<std::uint32_t>(
           std::floor(std::sqrt(static_cast<double>(per_frame))));
       h >= 1; --h) {
    if (per_frame % h != 0) continue;
    const std::size_t w = per_frame / h;
    if (h <= dims.height && w <= dims.width) {
      return {h, static_cast<std::uint32_t>(w)};
    }
    if (w <= dims.height && h <= dims.width) {
      return {static_cast<std::uint32_t>(w), h};
    }
  }
  throw ContractError("interp: per-frame target " + std::to_string(per_frame) +
                      " does not factor into h'xw' within the grid");
}

CompressedFile to_compressed(const ReducedSequence& seq, const GridDims& dims) {
  CompressedFile file;
  file.tokens = seq.tokens;
  file.map.dims = dims;
  file.map.cluster_count = static_cast<std::uint32_t>(seq.tokens.rows());
  const auto sentinel = file.map.cluster_count;
  file.map.ids.assign(dims.cell_count(), sentinel);
  for (std::size_t j = 0; j < seq.source_map.size(); ++j) {
    if (seq.sources_partition) {
      for (std::uint32_t cell : seq.source_map[j]) {
        file.map.ids[cell] = static_cast<std::uint32_t>(j);
      }
    } else if (!seq.source_map[j].empty()) {
      // Identity-style: only the primary cell carries the output id.
      const std::uint32_t cell = seq.source_map[j].front();
      if (file.map.ids[cell] == sentinel) {
        file.map.ids[cell] = static_cast<std::uint32_t>(j);
      }
    }
  }
  return file;
}

}  // namespace vqtoken
