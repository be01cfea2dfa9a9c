#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vqtoken/grid.hpp"
#include "vqtoken/linear.hpp"
#include "vqtoken/matrix.hpp"

namespace vqtoken {

/// How the index map is turned into the K x D value matrix M~.
enum class EncoderVariant : std::uint8_t {
  /// Flatten the whole map into a length-N id vector (ids normalized by K)
  /// and run one MLP N -> P -> K*D. Bound to a fixed (T,H,W,K) shape.
  kLiteralFlat = 0,
  /// Per cluster: mean-pool the fixed positional encodings over member
  /// cells, append normalized occupancy |s_k|/N, and apply a shared MLP
  /// (D+1) -> 2D -> D. Works for any K and grid shape. Default.
  kClusterPositional = 1,
};

const char* variant_name(EncoderVariant v);
EncoderVariant variant_from_name(const std::string& name);

/// All trainable parameters of the fusion block: the W_Q/W_K/W_V projections
/// (each D x D) and the index-map encoder MLP.
struct VqAttnParams {
  EncoderVariant variant = EncoderVariant::kClusterPositional;
  std::uint32_t dim = 0;    // D
  std::uint32_t heads = 4;  // D must be divisible by heads
  bool residual = true;     // B' = B + Attn(...) when set

  Matrix w_q;
  Matrix w_k;
  Matrix w_v;
  Mlp encoder_mlp;

  /// Fixed shape for the literal-flat variant (unused otherwise).
  GridDims shape_dims{};
  std::uint32_t shape_clusters = 0;

  std::vector<std::pair<std::string, Matrix*>> named_tensors();
  std::vector<std::pair<std::string, const Matrix*>> named_tensors() const;

  void validate() const;
};

/// Seeded initialization (centered uniform, 1/sqrt(fan-in) scale). The
/// literal-flat variant needs the fixed grid shape and cluster count; the
/// hidden width is min(4*K*D, 4096) there and 2D for cluster-positional.
VqAttnParams make_attn_params(EncoderVariant variant, std::uint32_t dim,
                              std::uint32_t heads, std::uint64_t seed,
                              const GridDims& shape_dims = {},
                              std::uint32_t shape_clusters = 0);

/// Forward/backward caches for one attention evaluation.
struct AttnCache {
  Matrix codebook;  // B
  Matrix m_tilde;   // M~
  Matrix q, k, v;
  std::vector<Matrix> head_weights;  // softmax rows per head
};

struct AttnGrads {
  Matrix w_q;
  Matrix w_k;
  Matrix w_v;
  Matrix m_tilde;  // gradient flowing back into the encoder output
};

/// B' = [B +] MultiHeadAttn(Q = B W_Q, K = B W_K, V = M~ W_V); scores scaled
/// by 1/sqrt(D/heads). B and M~ must both be K x D.
Matrix vq_attention(const Matrix& codebook, const Matrix& m_tilde,
                    const VqAttnParams& params, AttnCache* cache = nullptr);

/// Exact gradients of the attention block; the codebook itself is treated as
/// non-differentiable (stop-gradient through the discrete assignment).
AttnGrads vq_attention_backward(const Matrix& grad_out, const AttnCache& cache,
                                const VqAttnParams& params);

/// Compressed token set B' with provenance hashes of what produced it.
struct CompressedTokens {
  Matrix tokens;  // K x D
  std::uint64_t codebook_hash = 0;
  std::uint64_t index_map_hash = 0;
  std::uint64_t params_hash = 0;
};

std::uint64_t hash_matrix(const Matrix& m);
std::uint64_t hash_index_map(const IndexMap& map);
std::uint64_t hash_params(const VqAttnParams& params);

}  // namespace vqtoken
