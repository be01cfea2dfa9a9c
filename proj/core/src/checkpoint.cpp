#include "vqtoken/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <map>

#include "vqtoken/errors.hpp"

namespace vqtoken {

namespace {

constexpr std::uint16_t kVersion = 1;

template <typename T>
void put(std::ofstream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::ifstream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (static_cast<std::size_t>(in.gcount()) != sizeof(T)) {
    throw FormatError(FormatError::Code::kTruncated, "params: truncated payload");
  }
  return value;
}

void put_tensor(std::ofstream& out, const std::string& name, const Matrix& m) {
  put(out, static_cast<std::uint16_t>(name.size()));
  out.write(name.data(), static_cast<std::streamsize>(name.size()));
  put(out, static_cast<std::uint32_t>(m.rows()));
  put(out, static_cast<std::uint32_t>(m.cols()));
  std::vector<float> buf(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) buf[i] = static_cast<float>(m.data()[i]);
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
}

}  // namespace

void save_params(const VqAttnParams& params, const std::filesystem::path& path) {
  params.validate();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw FormatError(FormatError::Code::kCorrupt, "cannot write params: " + path.string());
  }
  out.write("VQTP", 4);
  put(out, kVersion);
  put(out, static_cast<std::uint8_t>(params.variant));
  put(out, static_cast<std::uint8_t>(params.heads));
  put(out, params.dim);

  for (const auto& [name, tensor] : params.named_tensors()) put_tensor(out, name, *tensor);

  Matrix shape(1, 4);
  shape(0, 0) = params.shape_dims.frames;
  shape(0, 1) = params.shape_dims.height;
  shape(0, 2) = params.shape_dims.width;
  shape(0, 3) = params.shape_clusters;
  put_tensor(out, "shape", shape);
  put_tensor(out, "residual", Matrix(1, 1, params.residual ? 1.0 : 0.0));
  if (!out) throw FormatError(FormatError::Code::kCorrupt, "params write failed");
}

VqAttnParams load_params(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw FormatError(FormatError::Code::kCorrupt, "cannot open params: " + path.string());
  }
  char magic[4] = {};
  in.read(magic, 4);
  if (in.gcount() != 4 || std::memcmp(magic, "VQTP", 4) != 0) {
    throw FormatError(FormatError::Code::kBadMagic, "params: bad magic");
  }
  if (get<std::uint16_t>(in) != kVersion) {
    throw FormatError(FormatError::Code::kBadVersion, "params: unsupported version");
  }
  const auto variant_raw = get<std::uint8_t>(in);
  if (variant_raw > 1) {
    throw FormatError(FormatError::Code::kCorrupt, "params: unknown variant");
  }

  VqAttnParams params;
  params.variant = static_cast<EncoderVariant>(variant_raw);
  params.heads = get<std::uint8_t>(in);
  params.dim = get<std::uint32_t>(in);

  std::map<std::string, Matrix> tensors;
  while (true) {
    std::uint16_t name_len = 0;
    in.read(reinterpret_cast<char*>(&name_len), sizeof(name_len));
    if (in.gcount() == 0) break;  // clean EOF
    if (static_cast<std::size_t>(in.gcount()) != sizeof(name_len)) {
      throw FormatError(FormatError::Code::kTruncated, "params: truncated tensor header");
    }
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    if (static_cast<std::size_t>(in.gcount()) != name_len) {
      throw FormatError(FormatError::Code::kTruncated, "params: truncated tensor name");
    }
    const auto rows = get<std::uint32_t>(in);
    const auto cols = get<std::uint32_t>(in);
    const std::uint64_t count = static_cast<std::uint64_t>(rows) * cols;
    if (count == 0 || count > (std::uint64_t{1} << 28)) {
      throw FormatError(FormatError::Code::kDimensionOverflow, "params: bad tensor shape");
    }
    std::vector<float> buf(count);
    in.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(count * sizeof(float)));
    if (static_cast<std::size_t>(in.gcount()) != count * sizeof(float)) {
      throw FormatError(FormatError::Code::kTruncated, "params: truncated tensor data");
    }
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = static_cast<double>(buf[i]);
    tensors.emplace(std::move(name), std::move(m));
  }

  auto take = [&](const std::string& name) {
    auto it = tensors.find(name);
    if (it == tensors.end()) {
      throw FormatError(FormatError::Code::kCorrupt, "params: missing tensor " + name);
    }
    Matrix m = std::move(it->second);
    tensors.erase(it);
    return m;
  };

  params.w_q = take("w_q");
  params.w_k = take("w_k");
  params.w_v = take("w_v");
  const Matrix shape = take("shape");
  params.shape_dims.frames = static_cast<std::uint32_t>(shape(0, 0));
  params.shape_dims.height = static_cast<std::uint32_t>(shape(0, 1));
  params.shape_dims.width = static_cast<std::uint32_t>(shape(0, 2));
  params.shape_clusters = static_cast<std::uint32_t>(shape(0, 3));
  params.residual = take("residual")(0, 0) != 0.0;

  params.encoder_mlp.activation = Activation::kRelu;
  for (std::size_t i = 0; tensors.count("mlp." + std::to_string(i) + ".weight"); ++i) {
    LinearLayer layer;
    layer.weight = take("mlp." + std::to_string(i) + ".weight");
    layer.bias = take("mlp." + std::to_string(i) + ".bias");
    if (layer.bias.rows() != 1 || layer.bias.cols() != layer.weight.cols()) {
      throw FormatError(FormatError::Code::kCorrupt, "params: inconsistent mlp tensors");
    }
    params.encoder_mlp.layers.push_back(std::move(layer));
  }
  if (!tensors.empty()) {
    throw FormatError(FormatError::Code::kCorrupt,
                      "params: unexpected tensor " + tensors.begin()->first);
  }
  try {
    params.validate();
  } catch (const ContractError& e) {
    throw FormatError(FormatError::Code::kCorrupt, std::string("params: ") + e.what());
  }
  return params;
}

}  // namespace vqtoken
