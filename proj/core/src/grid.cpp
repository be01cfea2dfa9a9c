#include "vqtoken/grid.hpp"

#include <cstring>
#include <fstream>
#include <limits>

#include "vqtoken/errors.hpp"

namespace vqtoken {

std::size_t GridDims::linear_index(std::uint32_t f, std::uint32_t h, std::uint32_t w) const {
  if (f >= frames || h >= height || w >= width) {
    throw ContractError("linear_index: coordinate (" + std::to_string(f) + "," +
                        std::to_string(h) + "," + std::to_string(w) + ") out of range");
  }
  return static_cast<std::size_t>(f) * height * width +
         static_cast<std::size_t>(h) * width + w;
}

std::array<std::uint32_t, 3> GridDims::coords(std::size_t i) const {
  if (i >= cell_count()) throw ContractError("coords: index out of range");
  const std::size_t hw = static_cast<std::size_t>(height) * width;
  return {static_cast<std::uint32_t>(i / hw),
          static_cast<std::uint32_t>((i % hw) / width),
          static_cast<std::uint32_t>(i % width)};
}

void TokenGrid::validate() const {
  if (dims.frames == 0 || dims.height == 0 || dims.width == 0 || dim == 0) {
    throw ContractError("token grid: dimensions must be >= 1");
  }
  if (embeddings.rows() != token_count() || embeddings.cols() != dim) {
    throw ContractError("token grid: embedding shape mismatch");
  }
  require_finite(embeddings, "token grid embeddings");
}

namespace {

constexpr std::uint16_t kFormatVersion = 1;
constexpr std::uint8_t kDtypeFloat32 = 1;
// Payload sanity cap: 2^31 scalar values (8 GiB of doubles in memory).
constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 31;

void put_bytes(std::ofstream& out, const void* data, std::size_t n) {
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
}

template <typename T>
void put(std::ofstream& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  put_bytes(out, &value, sizeof(T));
}

void get_bytes(std::ifstream& in, void* data, std::size_t n, const char* what) {
  in.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) {
    throw FormatError(FormatError::Code::kTruncated,
                      std::string(what) + ": truncated payload");
  }
}

template <typename T>
T get(std::ifstream& in, const char* what) {
  T value{};
  get_bytes(in, &value, sizeof(T), what);
  return value;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw FormatError(FormatError::Code::kCorrupt,
                      "cannot open file: " + path.string());
  }
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw FormatError(FormatError::Code::kCorrupt,
                      "cannot write file: " + path.string());
  }
  return out;
}

void check_magic(std::ifstream& in, const char expected[4], const char* what) {
  char magic[4] = {};
  get_bytes(in, magic, 4, what);
  if (std::memcmp(magic, expected, 4) != 0) {
    throw FormatError(FormatError::Code::kBadMagic, std::string(what) + ": bad magic");
  }
}

void check_version(std::ifstream& in, const char* what) {
  const auto version = get<std::uint16_t>(in, what);
  if (version != kFormatVersion) {
    throw FormatError(FormatError::Code::kBadVersion,
                      std::string(what) + ": unsupported version " + std::to_string(version));
  }
}

void write_f32(std::ofstream& out, const Matrix& m) {
  std::vector<float> buf(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) buf[i] = static_cast<float>(m.data()[i]);
  put_bytes(out, buf.data(), buf.size() * sizeof(float));
}

Matrix read_f32(std::ifstream& in, std::size_t rows, std::size_t cols, const char* what) {
  std::vector<float> buf(rows * cols);
  get_bytes(in, buf.data(), buf.size() * sizeof(float), what);
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < buf.size(); ++i) m.data()[i] = static_cast<double>(buf[i]);
  return m;
}

}  // namespace

void write_grid(const TokenGrid& grid, const std::filesystem::path& path) {
  grid.validate();
  auto out = open_output(path);
  put_bytes(out, "VQTK", 4);
  put(out, kFormatVersion);
  put(out, kDtypeFloat32);
  put(out, std::uint8_t{0});
  put(out, grid.dims.frames);
  put(out, grid.dims.height);
  put(out, grid.dims.width);
  put(out, grid.dim);
  write_f32(out, grid.embeddings);
  if (!out) throw FormatError(FormatError::Code::kCorrupt, "grid write failed");
}

TokenGrid read_grid(const std::filesystem::path& path) {
  auto in = open_input(path);
  check_magic(in, "VQTK", "grid");
  check_version(in, "grid");
  const auto dtype = get<std::uint8_t>(in, "grid");
  if (dtype != kDtypeFloat32) {
    throw FormatError(FormatError::Code::kBadDtype,
                      "grid: unsupported dtype " + std::to_string(dtype));
  }
  get<std::uint8_t>(in, "grid");  // reserved
  TokenGrid grid;
  grid.dims.frames = get<std::uint32_t>(in, "grid");
  grid.dims.height = get<std::uint32_t>(in, "grid");
  grid.dims.width = get<std::uint32_t>(in, "grid");
  grid.dim = get<std::uint32_t>(in, "grid");
  if (grid.dims.frames == 0 || grid.dims.height == 0 || grid.dims.width == 0 ||
      grid.dim == 0) {
    throw FormatError(FormatError::Code::kCorrupt, "grid: zero dimension in header");
  }
  const std::uint64_t elements = static_cast<std::uint64_t>(grid.dims.frames) *
                                 grid.dims.height * grid.dims.width * grid.dim;
  if (elements > kMaxElements) {
    throw FormatError(FormatError::Code::kDimensionOverflow,
                      "grid: header declares " + std::to_string(elements) + " values");
  }
  grid.embeddings = read_f32(in, grid.token_count(), grid.dim, "grid");
  return grid;
}

void write_compressed(const CompressedFile& file, const std::filesystem::path& path) {
  if (file.tokens.rows() == 0 || file.tokens.cols() == 0) {
    throw ContractError("compressed write: empty token matrix");
  }
  if (file.map.ids.size() != file.map.dims.cell_count()) {
    throw ContractError("compressed write: index map size mismatch");
  }
  auto out = open_output(path);
  put_bytes(out, "VQTC", 4);
  put(out, kFormatVersion);
  put(out, static_cast<std::uint32_t>(file.tokens.rows()));
  put(out, static_cast<std::uint32_t>(file.tokens.cols()));
  put(out, file.map.dims.frames);
  put(out, file.map.dims.height);
  put(out, file.map.dims.width);
  write_f32(out, file.tokens);
  put_bytes(out, file.map.ids.data(), file.map.ids.size() * sizeof(std::uint32_t));
  if (!out) throw FormatError(FormatError::Code::kCorrupt, "compressed write failed");
}

CompressedFile read_compressed(const std::filesystem::path& path) {
  auto in = open_input(path);
  check_magic(in, "VQTC", "compressed");
  check_version(in, "compressed");
  CompressedFile file;
  const auto k = get<std::uint32_t>(in, "compressed");
  const auto d = get<std::uint32_t>(in, "compressed");
  file.map.dims.frames = get<std::uint32_t>(in, "compressed");
  file.map.dims.height = get<std::uint32_t>(in, "compressed");
  file.map.dims.width = get<std::uint32_t>(in, "compressed");
  const std::uint64_t elements =
      static_cast<std::uint64_t>(k) * d + file.map.dims.cell_count();
  if (k == 0 || d == 0 || elements > kMaxElements) {
    throw FormatError(FormatError::Code::kDimensionOverflow, "compressed: bad header dims");
  }
  file.tokens = read_f32(in, k, d, "compressed");
  file.map.cluster_count = k;
  file.map.ids.resize(file.map.dims.cell_count());
  get_bytes(in, file.map.ids.data(), file.map.ids.size() * sizeof(std::uint32_t),
            "compressed");
  // Sentinel id == K marks dropped cells for pruning/interpolation outputs.
  for (std::uint32_t id : file.map.ids) {
    if (id > k) {
      throw FormatError(FormatError::Code::kCorrupt,
                        "compressed: cluster id " + std::to_string(id) + " out of range");
    }
  }
  return file;
}

}  // namespace vqtoken
