#pragma once

#include "vqtoken/attention.hpp"
#include "vqtoken/grid.hpp"
#include "vqtoken/matrix.hpp"

namespace vqtoken {

struct EncodeOptions {
  /// Cache activations inside the encoder MLP for a later backward pass.
  bool cache = false;
  /// Ablation paths may feed maps whose id range has holes; empty clusters
  /// then pool to zero features instead of raising an error.
  bool allow_empty_clusters = false;
};

/// Per-cluster encoder inputs for the cluster-positional variant: mean of
/// the positional-encoding rows over the cluster's member cells with the
/// normalized occupancy |s_k|/N appended; K x (D+1).
Matrix cluster_positional_inputs(const IndexMap& map, std::uint32_t dim,
                                 bool allow_empty_clusters = false);

/// Flattened map for the literal-flat variant: cell ids normalized by K,
/// 1 x N in linear-index order.
Matrix literal_flat_input(const IndexMap& map);

/// Runs the encoder MLP on precomputed inputs (from one of the two builders
/// above) and shapes the result to K x D.
Matrix encode_from_inputs(const Matrix& inputs, VqAttnParams& params,
                          std::size_t cluster_count, bool cache = false);

/// M~ = encoder(map): builds the variant's inputs and applies the MLP.
/// The literal-flat variant requires the map shape and cluster count to
/// match the params' configured shape.
Matrix encode_index_map(const IndexMap& map, VqAttnParams& params,
                        const EncodeOptions& options = {});

/// Gradients of the encoder MLP given d(loss)/dM~; requires a cached
/// forward. input_grad in the result is w.r.t. the (non-trainable) inputs.
Mlp::BackwardResult encode_index_map_backward(const Matrix& m_tilde_grad,
                                              VqAttnParams& params);

}  // namespace vqtoken
