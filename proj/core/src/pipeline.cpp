#include "vqtoken/pipeline.hpp"

namespace vqtoken {

CompressResult compress_clip(const TokenGrid& grid, const QuantizerConfig& qcfg,
                             VqAttnParams& params) {
  grid.validate();
  CompressResult result;
  result.assignment = qcfg.mode == QuantizerConfig::Mode::kFixed
                          ? kmeans_fixed(grid.embeddings, qcfg)
                          : kmeans_adaptive(grid.embeddings, qcfg);
  result.codebook = build_codebook(grid, result.assignment);
  result.index_map = build_index_map(result.assignment, grid.dims);
  result.m_tilde = encode_index_map(result.index_map, params);
  result.compressed.tokens =
      vq_attention(result.codebook.centroids, result.m_tilde, params);
  result.compressed.codebook_hash = hash_matrix(result.codebook.centroids);
  result.compressed.index_map_hash = hash_index_map(result.index_map);
  result.compressed.params_hash = hash_params(params);
  return result;
}

}  // namespace vqtoken
