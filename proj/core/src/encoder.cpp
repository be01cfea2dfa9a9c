#include "vqtoken/encoder.hpp"

#include <string>
#include <vector>

#include "vqtoken/errors.hpp"
#include "vqtoken/flops.hpp"
#include "vqtoken/positional.hpp"

namespace vqtoken {

namespace {

Matrix reshape(const Matrix& m, std::size_t rows, std::size_t cols) {
  if (m.size() != rows * cols) throw ContractError("reshape: size mismatch");
  Matrix out(rows, cols);
  out.data() = m.data();
  return out;
}

void check_ids(const IndexMap& map) {
  if (map.cluster_count == 0) throw ContractError("index map: zero clusters");
  if (map.ids.size() != map.dims.cell_count()) {
    throw ContractError("index map: id count != cell count");
  }
  for (std::uint32_t id : map.ids) {
    if (id >= map.cluster_count) {
      throw ContractError("index map: id " + std::to_string(id) + " out of range");
    }
  }
}

}  // namespace

Matrix cluster_positional_inputs(const IndexMap& map, std::uint32_t dim,
                                 bool allow_empty_clusters) {
  check_ids(map);
  const std::size_t k = map.cluster_count;
  const std::size_t n = map.ids.size();
  const Matrix pe = pe_table(map.dims, dim);

  Matrix inputs(k, dim + 1);
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t id = map.ids[i];
    auto dst = inputs.row(id);
    const auto src = pe.row(i);
    for (std::uint32_t d = 0; d < dim; ++d) dst[d] += src[d];
    ++counts[id];
  }
  flops::add(n * dim);
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] == 0) {
      if (!allow_empty_clusters) {
        throw ContractError("encoder: cluster " + std::to_string(c) + " has no cells");
      }
      continue;  // zero pooled features, zero occupancy
    }
    auto row = inputs.row(c);
    const double inv = 1.0 / static_cast<double>(counts[c]);
    for (std::uint32_t d = 0; d < dim; ++d) row[d] *= inv;
    row[dim] = static_cast<double>(counts[c]) / static_cast<double>(n);
  }
  return inputs;
}

Matrix literal_flat_input(const IndexMap& map) {
  check_ids(map);
  Matrix input(1, map.ids.size());
  const double inv = 1.0 / static_cast<double>(map.cluster_count);
  for (std::size_t i = 0; i < map.ids.size(); ++i) {
    input(0, i) = static_cast<double>(map.ids[i]) * inv;
  }
  return input;
}

Matrix encode_from_inputs(const Matrix& inputs, VqAttnParams& params,
                          std::size_t cluster_count, bool cache) {
  params.validate();
  if (params.variant == EncoderVariant::kClusterPositional) {
    if (inputs.rows() != cluster_count || inputs.cols() != params.dim + 1) {
      throw ContractError("encoder: inputs must be Kx(D+1)");
    }
    return params.encoder_mlp.forward(inputs, cache);
  }
  const Matrix flat = params.encoder_mlp.forward(inputs, cache);
  return reshape(flat, cluster_count, params.dim);
}

Matrix encode_index_map(const IndexMap& map, VqAttnParams& params,
                        const EncodeOptions& options) {
  params.validate();
  if (params.variant == EncoderVariant::kClusterPositional) {
    const Matrix inputs =
        cluster_positional_inputs(map, params.dim, options.allow_empty_clusters);
    return encode_from_inputs(inputs, params, map.cluster_count, options.cache);
  }
  if (!(map.dims == params.shape_dims) || map.cluster_count != params.shape_clusters) {
    throw ContractError("encoder: literal-flat params configured for a different shape");
  }
  const Matrix input = literal_flat_input(map);
  return encode_from_inputs(input, params, map.cluster_count, options.cache);
}

Mlp::BackwardResult encode_index_map_backward(const Matrix& m_tilde_grad,
                                              VqAttnParams& params) {
  if (params.variant == EncoderVariant::kClusterPositional) {
    return params.encoder_mlp.backward(m_tilde_grad);
  }
  const Matrix flat = reshape(m_tilde_grad, 1, m_tilde_grad.size());
  return params.encoder_mlp.backward(flat);
}

}  // namespace vqtoken
