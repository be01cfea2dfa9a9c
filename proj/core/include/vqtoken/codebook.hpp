#pragma once

#include "vqtoken/grid.hpp"
#include "vqtoken/matrix.hpp"
#include "vqtoken/quantizer.hpp"

namespace vqtoken {

/// Compact discrete token set: one centroid row per cluster, in cluster-id
/// order. Rows are the plain arithmetic means of the member embeddings.
struct Codebook {
  Matrix centroids;  // K x D

  std::size_t cluster_count() const { return centroids.rows(); }
  std::size_t dim() const { return centroids.cols(); }
};

/// b_k = mean of the member rows of cluster k. Requires the assignment to
/// cover exactly the grid's tokens with no empty cluster.
Codebook build_codebook(const TokenGrid& grid, const ClusterAssignment& assignment);

/// The token hash: records each cell's cluster id at its original
/// spatial-temporal location. Requires assignment length == T*H*W.
IndexMap build_index_map(const ClusterAssignment& assignment, const GridDims& dims);

}  // namespace vqtoken
