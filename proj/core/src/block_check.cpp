#include "vqtoken/block_check.hpp"

#include <cmath>

#include "vqtoken/codebook.hpp"
#include "vqtoken/encoder.hpp"
#include "vqtoken/positional.hpp"
#include "vqtoken/quantizer.hpp"
#include "vqtoken/synthesis.hpp"

namespace vqtoken {

GradCheckReport check_attention_block(const BlockCheckConfig& cfg) {
  SynthConfig synth;
  synth.dims = cfg.dims;
  synth.dim = cfg.dim;
  synth.num_objects = 1;
  synth.motion = static_cast<MotionClass>(cfg.seed % 4);
  synth.noise_std = 0.1;
  synth.seed = cfg.seed * 977 + 13;
  const SynthClip clip = synthesize_clip(synth);

  QuantizerConfig qcfg;
  qcfg.mode = QuantizerConfig::Mode::kFixed;
  qcfg.cluster_count = cfg.clusters;
  qcfg.seed = cfg.seed;
  const ClusterAssignment assignment = kmeans_fixed(clip.grid.embeddings, qcfg);
  const Codebook book = build_codebook(clip.grid, assignment);
  const IndexMap map = build_index_map(assignment, clip.grid.dims);

  VqAttnParams params =
      make_attn_params(cfg.variant, cfg.dim, cfg.heads, cfg.seed ^ 0xB10C,
                       clip.grid.dims, static_cast<std::uint32_t>(cfg.clusters));
  const Matrix inputs = cfg.variant == EncoderVariant::kClusterPositional
                            ? cluster_positional_inputs(map, cfg.dim)
                            : literal_flat_input(map);

  // Probe head with random (nonzero) weights so gradients flow everywhere.
  Rng probe_rng(cfg.seed ^ 0x9B0BE);
  const std::size_t num_classes = 4;
  Matrix probe_w = Matrix::random_uniform(2 * cfg.dim, num_classes,
                                          1.0 / std::sqrt(2.0 * cfg.dim), probe_rng);
  Matrix probe_b = Matrix::random_uniform(1, num_classes, 0.1, probe_rng);
  const std::size_t label = cfg.seed % num_classes;
  const Matrix seq_pe = pe_sequence(cfg.clusters, cfg.dim);

  const auto features_of = [&](const Matrix& out_tokens) {
    Matrix f(1, 2 * cfg.dim);
    const double inv = 1.0 / static_cast<double>(out_tokens.rows());
    for (std::size_t i = 0; i < out_tokens.rows(); ++i)
      for (std::uint32_t d = 0; d < cfg.dim; ++d) {
        f(0, d) += out_tokens(i, d) * inv;
        f(0, cfg.dim + d) += out_tokens(i, d) * seq_pe(i, d) * inv;
      }
    return f;
  };

  const auto loss_fn = [&]() {
    VqAttnParams& p = params;
    const Matrix m_tilde = encode_from_inputs(inputs, p, cfg.clusters, false);
    const Matrix out = vq_attention(book.centroids, m_tilde, p);
    const Matrix feats = features_of(out);
    Matrix logits = matmul(feats, probe_w);
    for (std::size_t j = 0; j < num_classes; ++j) logits(0, j) += probe_b(0, j);
    const Matrix probs = row_softmax(logits);
    return -std::log(std::max(probs(0, label), 1e-300));
  };

  const auto analytic_fn = [&]() {
    VqAttnParams& p = params;
    const Matrix m_tilde = encode_from_inputs(inputs, p, cfg.clusters, true);
    AttnCache cache;
    const Matrix out = vq_attention(book.centroids, m_tilde, p, &cache);
    const Matrix feats = features_of(out);
    Matrix logits = matmul(feats, probe_w);
    for (std::size_t j = 0; j < num_classes; ++j) logits(0, j) += probe_b(0, j);
    const Matrix probs = row_softmax(logits);

    Matrix dlogits = probs;
    dlogits(0, label) -= 1.0;
    std::vector<Matrix> grads;
    const Matrix d_feats = matmul(dlogits, transpose(probe_w));
    Matrix d_out(out.rows(), out.cols());
    const double inv = 1.0 / static_cast<double>(out.rows());
    for (std::size_t i = 0; i < out.rows(); ++i)
      for (std::uint32_t d = 0; d < cfg.dim; ++d)
        d_out(i, d) = (d_feats(0, d) + d_feats(0, cfg.dim + d) * seq_pe(i, d)) * inv;

    const AttnGrads attn = vq_attention_backward(d_out, cache, p);
    const auto mlp = encode_index_map_backward(attn.m_tilde, p);

    grads.push_back(attn.w_q);
    grads.push_back(attn.w_k);
    grads.push_back(attn.w_v);
    for (const auto& lg : mlp.layer_grads) {
      grads.push_back(lg.weight);
      grads.push_back(lg.bias);
    }
    grads.push_back(matmul(transpose(feats), dlogits));
    grads.push_back(dlogits);
    if (cfg.corrupt && !grads.empty()) grads[0](0, 0) += 1e-3;
    return grads;
  };

  std::vector<ParamRef> refs;
  for (auto& [name, tensor] : params.named_tensors()) refs.push_back({name, tensor});
  refs.push_back({"probe.weight", &probe_w});
  refs.push_back({"probe.bias", &probe_b});

  return grad_check(loss_fn, analytic_fn, refs, cfg.fd_step);
}

}  // namespace vqtoken
