#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "vqtoken/matrix.hpp"

namespace vqtoken {

/// T x H x W cell layout shared by token grids and index maps. Cells are
/// linearized as i = f*(H*W) + h*W + w.
struct GridDims {
  std::uint32_t frames = 0;  // T
  std::uint32_t height = 0;  // H
  std::uint32_t width = 0;   // W

  std::size_t cell_count() const {
    return static_cast<std::size_t>(frames) * height * width;
  }

  /// Bijective over the grid; throws ContractError on out-of-range coords.
  std::size_t linear_index(std::uint32_t f, std::uint32_t h, std::uint32_t w) const;

  /// Inverse of linear_index.
  std::array<std::uint32_t, 3> coords(std::size_t i) const;

  bool operator==(const GridDims&) const = default;
};

/// Video token grid: one D-dimensional embedding per (f, h, w) cell, stored
/// as an N x D matrix in linear-index row order.
struct TokenGrid {
  GridDims dims;
  std::uint32_t dim = 0;  // D
  Matrix embeddings;      // N x D

  std::size_t token_count() const { return dims.cell_count(); }

  /// Checks N = T*H*W, row width D and finiteness; throws ContractError.
  void validate() const;
};

struct ClipLabel {
  std::string clip_id;
  int class_id = 0;
};

/// Cluster-id grid produced by the token hash: cell (f,h,w) records which
/// codebook entry its token belongs to.
struct IndexMap {
  GridDims dims;
  std::uint32_t cluster_count = 0;           // K
  std::vector<std::uint32_t> ids;            // linear-index order, values < K

  std::uint32_t at(std::uint32_t f, std::uint32_t h, std::uint32_t w) const {
    return ids[dims.linear_index(f, h, w)];
  }
};

// --- VQTK grid file (little-endian) ---------------------------------------
// magic "VQTK", version u16 = 1, dtype u8 = 1 (float32), reserved u8 = 0,
// T, H, W, D each u32, then T*H*W*D float32 values in (f,h,w,d) order.
// Embeddings are float32 on disk, widened to double in memory.

void write_grid(const TokenGrid& grid, const std::filesystem::path& path);
TokenGrid read_grid(const std::filesystem::path& path);

// --- VQTC compressed-output file (little-endian) --------------------------
// magic "VQTC", version u16 = 1, K u32, D u32, T, H, W u32, K*D float32
// codebook rows (post-attention tokens B'), then T*H*W u32 cluster ids.
// Reducer outputs may use the sentinel id == K for dropped cells.

struct CompressedFile {
  Matrix tokens;  // K x D
  IndexMap map;
};

void write_compressed(const CompressedFile& file, const std::filesystem::path& path);
CompressedFile read_compressed(const std::filesystem::path& path);

}  // namespace vqtoken
