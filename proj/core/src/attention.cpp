#include "vqtoken/attention.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "vqtoken/errors.hpp"
#include "vqtoken/flops.hpp"

namespace vqtoken {

namespace {

constexpr std::size_t kLiteralHiddenCap = 4096;

Matrix slice_cols(const Matrix& m, std::size_t c0, std::size_t c1) {
  Matrix out(m.rows(), c1 - c0);
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = c0; j < c1; ++j) out(i, j - c0) = m(i, j);
  return out;
}

void paste_cols(Matrix& dst, const Matrix& src, std::size_t c0) {
  for (std::size_t i = 0; i < src.rows(); ++i)
    for (std::size_t j = 0; j < src.cols(); ++j) dst(i, c0 + j) = src(i, j);
}

std::uint64_t fnv1a(const void* data, std::size_t bytes, std::uint64_t h) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < bytes; ++i) {
    h ^= p[i];
    h *= 0x100000001B3ULL;
  }
  return h;
}

constexpr std::uint64_t kFnvOffset = 0xCBF29CE484222325ULL;

}  // namespace

const char* variant_name(EncoderVariant v) {
  return v == EncoderVariant::kLiteralFlat ? "literal-flat" : "cluster-positional";
}

EncoderVariant variant_from_name(const std::string& name) {
  if (name == "literal-flat") return EncoderVariant::kLiteralFlat;
  if (name == "cluster-positional") return EncoderVariant::kClusterPositional;
  throw ContractError("unknown encoder variant: " + name +
                      " (expected literal-flat or cluster-positional)");
}

std::vector<std::pair<std::string, Matrix*>> VqAttnParams::named_tensors() {
  std::vector<std::pair<std::string, Matrix*>> out;
  out.emplace_back("w_q", &w_q);
  out.emplace_back("w_k", &w_k);
  out.emplace_back("w_v", &w_v);
  for (std::size_t i = 0; i < encoder_mlp.layers.size(); ++i) {
    out.emplace_back("mlp." + std::to_string(i) + ".weight", &encoder_mlp.layers[i].weight);
    out.emplace_back("mlp." + std::to_string(i) + ".bias", &encoder_mlp.layers[i].bias);
  }
  return out;
}

std::vector<std::pair<std::string, const Matrix*>> VqAttnParams::named_tensors() const {
  std::vector<std::pair<std::string, const Matrix*>> out;
  for (auto& [name, tensor] : const_cast<VqAttnParams*>(this)->named_tensors())
    out.emplace_back(name, tensor);
  return out;
}

void VqAttnParams::validate() const {
  if (dim == 0) throw ContractError("attn params: dim must be >= 1");
  if (heads == 0 || dim % heads != 0) {
    throw ContractError("attn params: dim " + std::to_string(dim) +
                        " not divisible by heads " + std::to_string(heads));
  }
  for (const Matrix* proj : {&w_q, &w_k, &w_v}) {
    if (proj->rows() != dim || proj->cols() != dim) {
      throw ContractError("attn params: projections must be DxD");
    }
  }
  if (encoder_mlp.layers.empty()) throw ContractError("attn params: missing encoder mlp");
  if (variant == EncoderVariant::kLiteralFlat) {
    if (shape_clusters == 0 || shape_dims.cell_count() == 0) {
      throw ContractError("attn params: literal-flat variant needs a fixed shape");
    }
  }
}

VqAttnParams make_attn_params(EncoderVariant variant, std::uint32_t dim,
                              std::uint32_t heads, std::uint64_t seed,
                              const GridDims& shape_dims, std::uint32_t shape_clusters) {
  VqAttnParams params;
  params.variant = variant;
  params.dim = dim;
  params.heads = heads;
  params.shape_dims = shape_dims;
  params.shape_clusters = shape_clusters;

  Rng rng(seed);
  const double proj_scale = 1.0 / std::sqrt(static_cast<double>(dim));
  Rng rq = rng.fork(1), rk = rng.fork(2), rv = rng.fork(3), rm = rng.fork(4);
  params.w_q = Matrix::random_uniform(dim, dim, proj_scale, rq);
  params.w_k = Matrix::random_uniform(dim, dim, proj_scale, rk);
  params.w_v = Matrix::random_uniform(dim, dim, proj_scale, rv);

  if (variant == EncoderVariant::kClusterPositional) {
    params.encoder_mlp = make_mlp(dim + 1, {2 * static_cast<std::size_t>(dim)}, dim, rm);
  } else {
    const std::size_t n = shape_dims.cell_count();
    const std::size_t out = static_cast<std::size_t>(shape_clusters) * dim;
    if (n == 0 || out == 0) {
      throw ContractError("make_attn_params: literal-flat variant needs shape dims and K");
    }
    const std::size_t hidden = std::min(4 * out, kLiteralHiddenCap);
    params.encoder_mlp = make_mlp(n, {hidden}, out, rm);
  }
  params.validate();
  return params;
}

Matrix vq_attention(const Matrix& codebook, const Matrix& m_tilde,
                    const VqAttnParams& params, AttnCache* cache) {
  params.validate();
  const std::size_t k = codebook.rows();
  const std::size_t d = params.dim;
  if (codebook.cols() != d || m_tilde.rows() != k || m_tilde.cols() != d) {
    throw ContractError("vq_attention: B and M~ must both be KxD");
  }

  const Matrix q = matmul(codebook, params.w_q);
  const Matrix kk = matmul(codebook, params.w_k);
  const Matrix v = matmul(m_tilde, params.w_v);

  const std::size_t dh = d / params.heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  Matrix attn(k, d);
  std::vector<Matrix> head_weights;
  head_weights.reserve(params.heads);
  for (std::uint32_t h = 0; h < params.heads; ++h) {
    const std::size_t c0 = h * dh;
    const Matrix qh = slice_cols(q, c0, c0 + dh);
    const Matrix kh = slice_cols(kk, c0, c0 + dh);
    const Matrix vh = slice_cols(v, c0, c0 + dh);
    Matrix scores = matmul(qh, transpose(kh));
    for (auto& s : scores.data()) s *= scale;
    flops::add(scores.size());
    const Matrix weights = row_softmax(scores);
    paste_cols(attn, matmul(weights, vh), c0);
    head_weights.push_back(weights);
  }

  if (cache) {
    cache->codebook = codebook;
    cache->m_tilde = m_tilde;
    cache->q = q;
    cache->k = kk;
    cache->v = v;
    cache->head_weights = std::move(head_weights);
  }

  if (params.residual) {
    Matrix out = add(codebook, attn);
    require_finite(out, "vq_attention");
    return out;
  }
  require_finite(attn, "vq_attention");
  return attn;
}

AttnGrads vq_attention_backward(const Matrix& grad_out, const AttnCache& cache,
                                const VqAttnParams& params) {
  params.validate();
  if (cache.head_weights.size() != params.heads) {
    throw StateError("vq_attention_backward called without a cached forward");
  }
  const std::size_t k = cache.codebook.rows();
  const std::size_t d = params.dim;
  if (grad_out.rows() != k || grad_out.cols() != d) {
    throw ContractError("vq_attention_backward: gradient shape mismatch");
  }

  const std::size_t dh = d / params.heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  // The residual path contributes only to the (stop-gradient) codebook.
  Matrix dq(k, d), dk(k, d), dv(k, d);
  for (std::uint32_t h = 0; h < params.heads; ++h) {
    const std::size_t c0 = h * dh;
    const Matrix d_out_h = slice_cols(grad_out, c0, c0 + dh);
    const Matrix qh = slice_cols(cache.q, c0, c0 + dh);
    const Matrix kh = slice_cols(cache.k, c0, c0 + dh);
    const Matrix vh = slice_cols(cache.v, c0, c0 + dh);
    const Matrix& weights = cache.head_weights[h];

    const Matrix d_weights = matmul(d_out_h, transpose(vh));
    const Matrix d_vh = matmul(transpose(weights), d_out_h);

    // Softmax backward per row: dS_ij = A_ij (dA_ij - sum_j' dA_ij' A_ij').
    Matrix d_scores(k, k);
    for (std::size_t i = 0; i < k; ++i) {
      double row_dot = 0.0;
      for (std::size_t j = 0; j < k; ++j) row_dot += d_weights(i, j) * weights(i, j);
      for (std::size_t j = 0; j < k; ++j) {
        d_scores(i, j) = weights(i, j) * (d_weights(i, j) - row_dot) * scale;
      }
    }
    flops::add(4ull * k * k);

    paste_cols(dq, matmul(d_scores, kh), c0);
    paste_cols(dk, matmul(transpose(d_scores), qh), c0);
    paste_cols(dv, d_vh, c0);
  }

  AttnGrads grads;
  grads.w_q = matmul(transpose(cache.codebook), dq);
  grads.w_k = matmul(transpose(cache.codebook), dk);
  grads.w_v = matmul(transpose(cache.m_tilde), dv);
  grads.m_tilde = matmul(dv, transpose(params.w_v));
  return grads;
}

std::uint64_t hash_matrix(const Matrix& m) {
  std::uint64_t h = kFnvOffset;
  const std::uint64_t rows = m.rows(), cols = m.cols();
  h = fnv1a(&rows, sizeof(rows), h);
  h = fnv1a(&cols, sizeof(cols), h);
  return fnv1a(m.data().data(), m.size() * sizeof(double), h);
}

std::uint64_t hash_index_map(const IndexMap& map) {
  std::uint64_t h = kFnvOffset;
  h = fnv1a(&map.dims, sizeof(map.dims), h);
  h = fnv1a(&map.cluster_count, sizeof(map.cluster_count), h);
  return fnv1a(map.ids.data(), map.ids.size() * sizeof(std::uint32_t), h);
}

std::uint64_t hash_params(const VqAttnParams& params) {
  std::uint64_t h = kFnvOffset;
  const auto variant = static_cast<std::uint8_t>(params.variant);
  h = fnv1a(&variant, 1, h);
  h = fnv1a(&params.heads, sizeof(params.heads), h);
  h = fnv1a(&params.dim, sizeof(params.dim), h);
  for (const auto& [name, tensor] : params.named_tensors()) {
    h = fnv1a(name.data(), name.size(), h);
    const std::uint64_t mh = hash_matrix(*tensor);
    h = fnv1a(&mh, sizeof(mh), h);
  }
  return h;
}

}  // namespace vqtoken
