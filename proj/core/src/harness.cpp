#include "vqtoken/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "vqtoken/codebook.hpp"
#include "vqtoken/encoder.hpp"
#include "vqtoken/errors.hpp"
#include "vqtoken/parallel.hpp"
#include "vqtoken/pipeline.hpp"
#include "vqtoken/positional.hpp"

namespace vqtoken {

namespace {

std::string hex64(std::uint64_t v) {
  std::ostringstream ss;
  ss << std::hex << v;
  return ss.str();
}

std::uint64_t fnv_string(const std::string& s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

Matrix pooled_features(const Matrix& tokens, const Matrix& pe) {
  const std::size_t k = tokens.rows();
  const std::size_t d = tokens.cols();
  Matrix out(1, 2 * d);
  const double inv = 1.0 / static_cast<double>(k);
  for (std::size_t i = 0; i < k; ++i) {
    const auto row = tokens.row(i);
    const auto pe_row = pe.row(i);
    for (std::size_t j = 0; j < d; ++j) {
      out(0, j) += row[j] * inv;
      out(0, d + j) += row[j] * pe_row[j] * inv;
    }
  }
  return out;
}

// Cache of sequence-position encodings keyed by (count, dim).
class SeqPeCache {
 public:
  const Matrix& get(std::size_t count, std::uint32_t dim) {
    const auto key = std::make_pair(count, dim);
    auto it = cache_.find(key);
    if (it == cache_.end()) it = cache_.emplace(key, pe_sequence(count, dim)).first;
    return it->second;
  }

 private:
  std::map<std::pair<std::size_t, std::uint32_t>, Matrix> cache_;
};

// --- VQ clip state ---------------------------------------------------------

// Per-clip constants on the stop-gradient side of the fusion block.
struct VqClipState {
  Matrix codebook;        // B, possibly ablated
  Matrix encoder_inputs;  // variant inputs (pooled PE / flattened map)
  std::size_t clusters = 0;
  std::size_t iterations = 0;
};

struct VqPrepOptions {
  AblationState hash = AblationState::kOn;
  bool random_codebook = false;
};

VqClipState prepare_vq_clip(const TokenGrid& grid, const QuantizerConfig& qcfg,
                            const HarnessOptions& opts, const VqPrepOptions& prep,
                            std::uint64_t clip_stream) {
  const ClusterAssignment assignment = qcfg.mode == QuantizerConfig::Mode::kFixed
                                           ? kmeans_fixed(grid.embeddings, qcfg)
                                           : kmeans_adaptive(grid.embeddings, qcfg);
  const Codebook book = build_codebook(grid, assignment);
  IndexMap map = build_index_map(assignment, grid.dims);

  VqClipState state;
  state.clusters = assignment.cluster_count;
  state.iterations = assignment.iterations;
  state.codebook = book.centroids;

  Rng rng(opts.seed ^ 0xAB1A7E5ULL);
  if (prep.hash == AblationState::kRand) {
    // Shuffle the map cells: occupancy per id survives, positions do not.
    Rng shuffle_rng = rng.fork(clip_stream * 2 + 1);
    for (std::size_t i = map.ids.size(); i > 1; --i)
      std::swap(map.ids[i - 1], map.ids[shuffle_rng.next_below(i)]);
  }
  if (prep.random_codebook) {
    // Fresh centroids drawn uniformly from the clip's embedding value range.
    Rng cb_rng = rng.fork(clip_stream * 2 + 2);
    double lo = grid.embeddings.data()[0], hi = lo;
    for (double v : grid.embeddings.data()) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    for (auto& v : state.codebook.data()) v = cb_rng.uniform(lo, hi);
  }

  if (opts.variant == EncoderVariant::kClusterPositional) {
    state.encoder_inputs =
        cluster_positional_inputs(map, grid.dim, /*allow_empty_clusters=*/true);
  } else {
    state.encoder_inputs = literal_flat_input(map);
  }
  return state;
}

Matrix vq_forward_features(const VqClipState& state, VqAttnParams& params,
                           SeqPeCache& seq_pe, AttnCache* cache = nullptr) {
  const Matrix m_tilde =
      encode_from_inputs(state.encoder_inputs, params, state.clusters, cache != nullptr);
  const Matrix out = vq_attention(state.codebook, m_tilde, params, cache);
  return pooled_features(out, seq_pe.get(state.clusters, static_cast<std::uint32_t>(out.cols())));
}

// --- Joint fine-tuning ------------------------------------------------------

struct JointResult {
  VqAttnParams params;
  LinearProbe probe;
  double test_accuracy = 0.0;
};

// Full-batch gradient descent over probe + attention + encoder parameters.
// Per-clip gradients land in per-clip slots and are reduced in clip order,
// so results are identical for any thread count.
JointResult train_joint(const std::vector<VqClipState>& states, const ProxyDataset& data,
                        VqAttnParams base_params, const HarnessOptions& opts) {
  const auto& train_idx = data.train_indices();
  const auto& test_idx = data.test_indices();
  const std::size_t n_train = train_idx.size();
  const std::size_t num_classes = data.config().num_classes;
  const std::uint32_t d = base_params.dim;

  // Standardizer frozen from the initial feature distribution.
  Matrix init_features(n_train, 2 * d);
  parallel_for(n_train, opts.threads, [&](std::size_t t) {
    SeqPeCache seq_pe;
    VqAttnParams local = base_params;
    const Matrix f = vq_forward_features(states[train_idx[t]], local, seq_pe);
    std::copy(f.data().begin(), f.data().end(), init_features.row(t).begin());
  });

  JointResult result;
  result.params = std::move(base_params);
  fit_standardizer(init_features, result.probe.feat_mean, result.probe.feat_scale);
  result.probe.weight = Matrix(2 * d, num_classes);
  result.probe.bias = Matrix(1, num_classes);

  auto tensors = result.params.named_tensors();
  struct ClipGrads {
    std::vector<Matrix> params;
    Matrix probe_w;
    Matrix probe_b;
    double loss = 0.0;
  };
  std::vector<ClipGrads> slots(n_train);

  for (std::size_t epoch = 0; epoch < opts.joint_epochs; ++epoch) {
    parallel_for(n_train, opts.threads, [&](std::size_t t) {
      SeqPeCache seq_pe;
      VqAttnParams local = result.params;
      const VqClipState& state = states[train_idx[t]];
      const int label = data.clip(train_idx[t]).label.class_id;

      AttnCache cache;
      const Matrix feats = vq_forward_features(state, local, seq_pe, &cache);
      const Matrix z = standardize(feats, result.probe.feat_mean, result.probe.feat_scale);

      Matrix logits = matmul(z, result.probe.weight);
      for (std::size_t j = 0; j < num_classes; ++j) logits(0, j) += result.probe.bias(0, j);
      const Matrix probs = row_softmax(logits);

      ClipGrads& g = slots[t];
      g.loss = -std::log(std::max(probs(0, static_cast<std::size_t>(label)), 1e-300));
      Matrix dlogits = probs;
      dlogits(0, static_cast<std::size_t>(label)) -= 1.0;
      const double inv_n = 1.0 / static_cast<double>(n_train);
      for (auto& v : dlogits.data()) v *= inv_n;

      g.probe_w = matmul(transpose(z), dlogits);
      g.probe_b = dlogits;

      Matrix dz = matmul(dlogits, transpose(result.probe.weight));
      for (std::size_t j = 0; j < dz.cols(); ++j) dz(0, j) *= result.probe.feat_scale(0, j);

      // Pooled-feature backward into B'.
      const std::size_t k = state.clusters;
      const Matrix& pe = seq_pe.get(k, d);
      Matrix d_out(k, d);
      const double inv_k = 1.0 / static_cast<double>(k);
      for (std::size_t i = 0; i < k; ++i)
        for (std::uint32_t c = 0; c < d; ++c)
          d_out(i, c) = (dz(0, c) + dz(0, d + c) * pe(i, c)) * inv_k;

      const AttnGrads attn_grads = vq_attention_backward(d_out, cache, local);
      const auto mlp_grads = encode_index_map_backward(attn_grads.m_tilde, local);

      g.params.clear();
      g.params.push_back(attn_grads.w_q);
      g.params.push_back(attn_grads.w_k);
      g.params.push_back(attn_grads.w_v);
      for (const auto& lg : mlp_grads.layer_grads) {
        g.params.push_back(lg.weight);
        g.params.push_back(lg.bias);
      }
    });

    double loss = 0.0;
    Matrix dw(2 * d, num_classes), db(1, num_classes);
    std::vector<Matrix> dparams;
    for (const auto& [name, tensor] : tensors)
      dparams.emplace_back(tensor->rows(), tensor->cols());
    for (const ClipGrads& g : slots) {
      loss += g.loss;
      axpy(dw, 1.0, g.probe_w);
      axpy(db, 1.0, g.probe_b);
      for (std::size_t p = 0; p < dparams.size(); ++p) axpy(dparams[p], 1.0, g.params[p]);
    }
    loss /= static_cast<double>(n_train);
    if (!std::isfinite(loss)) {
      throw StateError("joint training: loss diverged at epoch " + std::to_string(epoch));
    }
    result.probe.loss_history.push_back(loss);

    axpy(result.probe.weight, -opts.probe_lr, dw);
    axpy(result.probe.bias, -opts.probe_lr, db);
    for (std::size_t p = 0; p < dparams.size(); ++p)
      axpy(*tensors[p].second, -opts.joint_lr, dparams[p]);
  }

  // Test accuracy with the fine-tuned extractor.
  Matrix test_features(test_idx.size(), 2 * d);
  parallel_for(test_idx.size(), opts.threads, [&](std::size_t t) {
    SeqPeCache seq_pe;
    VqAttnParams local = result.params;
    const Matrix f = vq_forward_features(states[test_idx[t]], local, seq_pe);
    std::copy(f.data().begin(), f.data().end(), test_features.row(t).begin());
  });
  std::vector<int> test_labels;
  test_labels.reserve(test_idx.size());
  for (std::size_t i : test_idx) test_labels.push_back(data.clip(i).label.class_id);
  result.test_accuracy = evaluate_probe(result.probe, test_features, test_labels);
  return result;
}

// --- Run assembly -----------------------------------------------------------

std::vector<int> labels_of(const ProxyDataset& data, const std::vector<std::size_t>& idx) {
  std::vector<int> labels;
  labels.reserve(idx.size());
  for (std::size_t i : idx) labels.push_back(data.clip(i).label.class_id);
  return labels;
}

Matrix gather_rows(const Matrix& all, const std::vector<std::size_t>& idx) {
  Matrix out(idx.size(), all.cols());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const auto src = all.row(idx[r]);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return out;
}

std::string run_config_hash(const ProxyDataset& data, const HarnessOptions& opts,
                            const std::string& method, const std::string& budget) {
  std::ostringstream ss;
  ss << data.id() << '|' << method << '|' << budget << '|' << opts.seed << '|'
     << opts.probe_epochs << '|' << opts.probe_lr << '|' << opts.joint_epochs << '|'
     << opts.joint_lr << '|' << opts.heads << '|' << variant_name(opts.variant) << '|'
     << opts.quantizer.k_min << '|' << opts.quantizer.k_max << '|'
     << opts.quantizer.split_threshold << '|' << opts.llm_layers;
  return hex64(fnv_string(ss.str()));
}

std::uint64_t baseline_module_flops(ReducerMethod method, const ProxyDataset& data,
                                    std::size_t m) {
  const auto& cfg = data.config();
  const std::uint64_t n = cfg.dims.cell_count();
  const std::uint64_t d = cfg.dim;
  const std::uint64_t frame_cells =
      static_cast<std::uint64_t>(cfg.dims.height) * cfg.dims.width;
  const std::uint64_t cos_cost = 6 * d + 2;
  switch (method) {
    case ReducerMethod::kPrune:
      // All-pairs cosine within each frame.
      return n * (frame_cells - 1) * cos_cost;
    case ReducerMethod::kTome:
    case ReducerMethod::kVidTome: {
      // Simulated round schedule; candidates restricted by the frame window.
      const double frames = cfg.dims.frames;
      const double window = method == ReducerMethod::kTome ? 1.0 : 3.0;
      const std::size_t rounds = std::max<std::size_t>(
          1, static_cast<std::size_t>(std::ceil(
                 std::log2(static_cast<double>(n) / static_cast<double>(m)))));
      const std::size_t per_round = std::max<std::size_t>(
          1, static_cast<std::size_t>(
                 std::ceil(static_cast<double>(n - m) / static_cast<double>(rounds))));
      std::uint64_t total = 0;
      std::size_t cur = n;
      while (cur > m) {
        const double half = static_cast<double>(cur) / 2.0;
        total += static_cast<std::uint64_t>(half * (half * window / frames)) * cos_cost;
        cur -= std::min(per_round, cur - m);
      }
      return total;
    }
    case ReducerMethod::kInterp:
      // 4 corners, d multiply-adds each, per output cell.
      return static_cast<std::uint64_t>(m) * 4 * 2 * d;
    default:
      return 0;
  }
}

MetricsReport make_metrics(const ProxyDataset& data, const HarnessOptions& opts,
                           const std::string& method, double avg_tokens, double accuracy,
                           std::uint64_t mod_flops, const std::string& config_hash,
                           double wall_ms) {
  const double n = static_cast<double>(data.config().dims.cell_count());
  MetricsReport m;
  m.token_count = avg_tokens;
  m.token_percent = 100.0 * avg_tokens / n;
  m.accuracy = accuracy;
  m.tok_dense = tok_dense(accuracy, avg_tokens);
  m.module_flops = mod_flops;
  ComplexityModel llm;
  llm.reduced_tokens = static_cast<std::size_t>(std::llround(avg_tokens));
  llm.dim = data.config().dim;
  llm.layers = opts.llm_layers;
  m.llm_flops = llm_flops(llm);
  m.wall_clock_ms = wall_ms;
  m.method = method;
  m.config_hash = config_hash;
  return m;
}

std::uint64_t vq_module_flops(const ProxyDataset& data, const HarnessOptions& opts,
                              double avg_clusters, double avg_iters) {
  ComplexityModel model;
  model.original_tokens = data.config().dims.cell_count();
  model.clusters = static_cast<std::size_t>(std::llround(avg_clusters));
  model.reduced_tokens = model.clusters;
  model.dim = data.config().dim;
  model.kmeans_iters = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(avg_iters)));
  model.heads = opts.heads;
  model.layers = opts.llm_layers;
  return module_flops(model);
}

// Reduces every clip with a baseline method; features land in slots.
Matrix baseline_features(const ProxyDataset& data, ReducerMethod method, std::size_t budget,
                         const HarnessOptions& opts) {
  const std::size_t d = data.config().dim;
  Matrix features(data.size(), 2 * d);
  parallel_for(data.size(), opts.threads, [&](std::size_t i) {
    const TokenGrid& grid = data.clip(i).grid;
    ReducedSequence seq;
    switch (method) {
      case ReducerMethod::kPrune: seq = prune_tokens(grid, budget); break;
      case ReducerMethod::kTome: seq = merge_tome(grid, budget); break;
      case ReducerMethod::kVidTome: seq = merge_vidtome(grid, budget); break;
      case ReducerMethod::kInterp: {
        const auto [h2, w2] = factor_per_frame(budget / grid.dims.frames, grid.dims);
        seq = interpolate_tokens(grid, h2, w2);
        break;
      }
      default: throw ContractError("baseline_features: not a baseline method");
    }
    const Matrix f = reduced_features(seq.tokens);
    std::copy(f.data().begin(), f.data().end(), features.row(i).begin());
  });
  return features;
}

BenchmarkRun probe_only_run(const ProxyDataset& data, const HarnessOptions& opts,
                            const Matrix& all_features, const std::string& method,
                            const ReducerSpec& spec, bool adaptive, double avg_tokens,
                            std::uint64_t mod_flops, double wall_ms) {
  const Matrix train_f = gather_rows(all_features, data.train_indices());
  const Matrix test_f = gather_rows(all_features, data.test_indices());
  const auto result = train_and_eval_probe(
      train_f, labels_of(data, data.train_indices()), test_f,
      labels_of(data, data.test_indices()), data.config().num_classes,
      ProbeConfig{opts.probe_epochs, opts.probe_lr});

  BenchmarkRun run;
  run.spec = spec;
  run.method = method;
  run.adaptive = adaptive;
  run.dataset_id = data.id();
  run.accuracy = result.test_accuracy;
  run.avg_tokens = avg_tokens;
  run.config_hash = run_config_hash(data, opts, method,
                                    adaptive ? "adaptive" : std::to_string(spec.budget));
  run.metrics = make_metrics(data, opts, method, avg_tokens, run.accuracy, mod_flops,
                             run.config_hash, wall_ms);
  return run;
}

VqAttnParams params_for(const ProxyDataset& data, const HarnessOptions& opts,
                        std::size_t clusters, std::uint64_t seed) {
  return make_attn_params(opts.variant, data.config().dim, opts.heads, seed,
                          data.config().dims, static_cast<std::uint32_t>(clusters));
}

struct VqRunInputs {
  std::vector<VqClipState> states;
  double avg_clusters = 0.0;
  double avg_iters = 0.0;
};

VqRunInputs prepare_vq_states(const ProxyDataset& data, const HarnessOptions& opts,
                              const QuantizerConfig& qcfg, const VqPrepOptions& prep) {
  VqRunInputs inputs;
  inputs.states.resize(data.size());
  parallel_for(data.size(), opts.threads, [&](std::size_t i) {
    QuantizerConfig clip_cfg = qcfg;
    clip_cfg.seed = Rng(opts.seed).fork(i + 101).next_u64();
    inputs.states[i] = prepare_vq_clip(data.clip(i).grid, clip_cfg, opts, prep, i);
  });
  for (const auto& s : inputs.states) {
    inputs.avg_clusters += static_cast<double>(s.clusters);
    inputs.avg_iters += static_cast<double>(s.iterations);
  }
  inputs.avg_clusters /= static_cast<double>(inputs.states.size());
  inputs.avg_iters /= static_cast<double>(inputs.states.size());
  return inputs;
}

BenchmarkRun vq_run(const ProxyDataset& data, const HarnessOptions& opts,
                    const VqRunInputs& inputs, const std::string& method,
                    const ReducerSpec& spec, bool adaptive, bool train_attention,
                    std::uint64_t params_seed) {
  VqAttnParams params = params_for(
      data, opts, spec.budget, params_seed);
  const std::string budget_str = adaptive ? "adaptive" : std::to_string(spec.budget);

  double accuracy = 0.0;
  if (train_attention && opts.joint_epochs > 0) {
    accuracy = train_joint(inputs.states, data, std::move(params), opts).test_accuracy;
  } else {
    const std::size_t d = data.config().dim;
    Matrix features(data.size(), 2 * d);
    parallel_for(data.size(), opts.threads, [&](std::size_t i) {
      SeqPeCache seq_pe;
      VqAttnParams local = params;
      const Matrix f = vq_forward_features(inputs.states[i], local, seq_pe);
      std::copy(f.data().begin(), f.data().end(), features.row(i).begin());
    });
    const auto result = train_and_eval_probe(
        gather_rows(features, data.train_indices()), labels_of(data, data.train_indices()),
        gather_rows(features, data.test_indices()), labels_of(data, data.test_indices()),
        data.config().num_classes, ProbeConfig{opts.probe_epochs, opts.probe_lr});
    accuracy = result.test_accuracy;
  }

  BenchmarkRun run;
  run.spec = spec;
  run.method = method;
  run.adaptive = adaptive;
  run.dataset_id = data.id();
  run.accuracy = accuracy;
  run.avg_tokens = inputs.avg_clusters;
  run.config_hash = run_config_hash(data, opts, method, budget_str);
  run.metrics = make_metrics(data, opts, method, run.avg_tokens, accuracy,
                             vq_module_flops(data, opts, inputs.avg_clusters,
                                             inputs.avg_iters),
                             run.config_hash, 0.0);
  return run;
}

double measure_reduction_ms(const ProxyDataset& data, const HarnessOptions& opts,
                            ReducerMethod method, std::size_t budget) {
  if (!opts.measure_time || data.size() == 0) return 0.0;
  const TokenGrid& grid = data.clip(0).grid;
  return measure_wall_clock([&] {
    switch (method) {
      case ReducerMethod::kPrune: prune_tokens(grid, budget); break;
      case ReducerMethod::kTome: merge_tome(grid, budget); break;
      case ReducerMethod::kVidTome: merge_vidtome(grid, budget); break;
      case ReducerMethod::kInterp: {
        const auto [h2, w2] = factor_per_frame(budget / grid.dims.frames, grid.dims);
        interpolate_tokens(grid, h2, w2);
        break;
      }
      default: break;
    }
  });
}

}  // namespace

Matrix reduced_features(const Matrix& tokens) {
  if (tokens.rows() == 0) throw ContractError("reduced_features: empty token set");
  return pooled_features(tokens,
                         pe_sequence(tokens.rows(), static_cast<std::uint32_t>(tokens.cols())));
}

Matrix reference_features(const TokenGrid& grid) {
  grid.validate();
  return pooled_features(grid.embeddings, pe_table(grid.dims, grid.dim));
}

ProbeRunResult train_and_eval_probe(const Matrix& train_features,
                                    const std::vector<int>& train_labels,
                                    const Matrix& test_features,
                                    const std::vector<int>& test_labels,
                                    std::size_t num_classes, const ProbeConfig& cfg) {
  ProbeRunResult result;
  result.probe = train_probe(train_features, train_labels, num_classes, cfg);
  result.test_accuracy = evaluate_probe(result.probe, test_features, test_labels);
  return result;
}

std::vector<AblationSpec> standard_ablation_rows() {
  using S = AblationState;
  return {
      {"vq-cb-only", true, S::kOff, S::kOff},
      {"vq-rand-attn", true, S::kOn, S::kRand},
      {"vq-rand-hash", true, S::kRand, S::kOn},
      {"vq-rand-codebook", true, S::kOn, S::kOn},  // codebook randomized below
      {"vq-full", true, S::kOn, S::kOn},
  };
}

std::vector<BenchmarkRun> run_fixed_length(const ProxyDataset& data,
                                           const std::vector<std::size_t>& budgets,
                                           const std::vector<ReducerMethod>& methods,
                                           const HarnessOptions& opts) {
  const std::size_t n = data.config().dims.cell_count();
  std::vector<BenchmarkRun> runs;

  // Unreduced reference row: original tokens with their original-cell PE.
  {
    const std::size_t d = data.config().dim;
    Matrix features(data.size(), 2 * d);
    parallel_for(data.size(), opts.threads, [&](std::size_t i) {
      const Matrix f = reference_features(data.clip(i).grid);
      std::copy(f.data().begin(), f.data().end(), features.row(i).begin());
    });
    runs.push_back(probe_only_run(data, opts, features, "full",
                                  ReducerSpec{ReducerMethod::kVqFixed, n}, false,
                                  static_cast<double>(n), 0, 0.0));
  }

  for (std::size_t budget : budgets) {
    if (budget == 0 || budget > n) {
      throw ContractError("run_fixed_length: budget must satisfy 1 <= m <= N");
    }
    for (ReducerMethod method : methods) {
      switch (method) {
        case ReducerMethod::kPrune:
        case ReducerMethod::kTome:
        case ReducerMethod::kVidTome: {
          const Matrix features = baseline_features(data, method, budget, opts);
          runs.push_back(probe_only_run(
              data, opts, features, reducer_name(method), ReducerSpec{method, budget},
              false, static_cast<double>(budget),
              baseline_module_flops(method, data, budget),
              measure_reduction_ms(data, opts, method, budget)));
          break;
        }
        case ReducerMethod::kInterp: {
          if (budget % data.config().dims.frames != 0) continue;  // infeasible budget
          try {
            factor_per_frame(budget / data.config().dims.frames, data.config().dims);
          } catch (const ContractError&) {
            continue;
          }
          const Matrix features = baseline_features(data, method, budget, opts);
          runs.push_back(probe_only_run(
              data, opts, features, reducer_name(method), ReducerSpec{method, budget},
              false, static_cast<double>(budget),
              baseline_module_flops(method, data, budget),
              measure_reduction_ms(data, opts, method, budget)));
          break;
        }
        case ReducerMethod::kVqFixed: {
          QuantizerConfig qcfg = opts.quantizer;
          qcfg.mode = QuantizerConfig::Mode::kFixed;
          qcfg.cluster_count = budget;
          const VqRunInputs inputs = prepare_vq_states(data, opts, qcfg, {});
          runs.push_back(vq_run(data, opts, inputs, "vq-fixed",
                                ReducerSpec{method, budget}, false,
                                /*train_attention=*/true, opts.seed));
          break;
        }
        case ReducerMethod::kVqAdaptive:
          break;  // adaptive subtask only
      }
    }
  }
  return runs;
}

std::vector<BenchmarkRun> run_adaptive_length(const ProxyDataset& data,
                                              const HarnessOptions& opts) {
  std::vector<BenchmarkRun> runs;

  {
    QuantizerConfig qcfg = opts.quantizer;
    qcfg.mode = QuantizerConfig::Mode::kAdaptive;
    const VqRunInputs inputs = prepare_vq_states(data, opts, qcfg, {});
    // Shared-MLP encoder handles per-clip cluster counts; the literal-flat
    // variant cannot, so adaptive runs always use cluster-positional.
    HarnessOptions adaptive_opts = opts;
    adaptive_opts.variant = EncoderVariant::kClusterPositional;
    BenchmarkRun run = vq_run(data, adaptive_opts, inputs, "vq-adaptive",
                              ReducerSpec{ReducerMethod::kVqAdaptive, opts.quantizer.k_max},
                              true, /*train_attention=*/true, opts.seed);
    run.spec.budget = 0;
    runs.push_back(run);
  }

  {
    const std::size_t per_frame =
        static_cast<std::size_t>(opts.interp_h) * opts.interp_w;
    const std::size_t total = per_frame * data.config().dims.frames;
    const std::size_t d = data.config().dim;
    Matrix features(data.size(), 2 * d);
    parallel_for(data.size(), opts.threads, [&](std::size_t i) {
      const Matrix f = reduced_features(
          interpolate_tokens(data.clip(i).grid, opts.interp_h, opts.interp_w).tokens);
      std::copy(f.data().begin(), f.data().end(), features.row(i).begin());
    });
    BenchmarkRun run = probe_only_run(
        data, opts, features, "interp", ReducerSpec{ReducerMethod::kInterp, total}, true,
        static_cast<double>(total), baseline_module_flops(ReducerMethod::kInterp, data, total),
        measure_reduction_ms(data, opts, ReducerMethod::kInterp, total));
    runs.push_back(run);
  }
  return runs;
}

std::vector<BenchmarkRun> run_ablation(const ProxyDataset& data, const HarnessOptions& opts,
                                       std::size_t budget,
                                       const std::vector<AblationSpec>& rows) {
  QuantizerConfig qcfg = opts.quantizer;
  qcfg.mode = QuantizerConfig::Mode::kFixed;
  qcfg.cluster_count = budget;

  std::vector<BenchmarkRun> runs;
  for (const AblationSpec& row : rows) {
    if (!row.use_codebook) {
      throw ContractError("ablation: the codebook stage cannot be disabled");
    }
    VqPrepOptions prep;
    prep.hash = row.use_hash;
    prep.random_codebook = row.name == "vq-rand-codebook";
    const VqRunInputs inputs = prepare_vq_states(data, opts, qcfg, prep);

    if (row.use_hash == AblationState::kOff || row.use_attn == AblationState::kOff) {
      // Codebook-only: the compact token set without the fusion block.
      const std::size_t d = data.config().dim;
      Matrix features(data.size(), 2 * d);
      parallel_for(data.size(), opts.threads, [&](std::size_t i) {
        const Matrix f = reduced_features(inputs.states[i].codebook);
        std::copy(f.data().begin(), f.data().end(), features.row(i).begin());
      });
      runs.push_back(probe_only_run(data, opts, features, row.name,
                                    ReducerSpec{ReducerMethod::kVqFixed, budget}, false,
                                    inputs.avg_clusters,
                                    vq_module_flops(data, opts, inputs.avg_clusters,
                                                    inputs.avg_iters),
                                    0.0));
      continue;
    }

    const bool train_attention = row.use_attn == AblationState::kOn;
    const std::uint64_t params_seed =
        row.use_attn == AblationState::kRand ? opts.seed ^ 0xF0E1D2C3B4A59687ULL : opts.seed;
    runs.push_back(vq_run(data, opts, inputs, row.name,
                          ReducerSpec{ReducerMethod::kVqFixed, budget}, false,
                          train_attention, params_seed));
  }
  return runs;
}

void write_runs_ledger(const std::vector<BenchmarkRun>& runs,
                       const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw FormatError(FormatError::Code::kCorrupt, "cannot write ledger: " + path.string());
  }
  for (const BenchmarkRun& run : runs) {
    nlohmann::ordered_json j;
    j["method"] = run.method;
    if (run.adaptive) {
      j["budget"] = "adaptive";
    } else {
      j["budget"] = run.spec.budget;
    }
    j["datasetId"] = run.dataset_id;
    j["accuracy"] = run.metrics.accuracy;
    j["avgTokens"] = run.metrics.token_count;
    j["metrics"] = nlohmann::ordered_json::parse(metrics_json(run.metrics));
    out << j.dump() << '\n';
  }
}

namespace {

std::string format4(double v) {
  std::ostringstream ss;
  ss.precision(4);
  ss << std::fixed << v;
  return ss.str();
}

}  // namespace

std::string runs_csv(const std::vector<BenchmarkRun>& runs) {
  std::ostringstream out;
  out << "method,budget,avg_tokens,accuracy,tokdense,module_flops,llm_flops,wall_ms\n";
  for (const BenchmarkRun& run : runs) {
    out << run.method << ','
        << (run.adaptive ? std::string("adaptive") : std::to_string(run.spec.budget)) << ','
        << format4(run.avg_tokens) << ',' << format4(run.accuracy) << ','
        << format4(run.metrics.tok_dense) << ',' << run.metrics.module_flops << ','
        << run.metrics.llm_flops << ',' << format4(run.metrics.wall_clock_ms) << '\n';
  }
  return out.str();
}

std::string runs_table(const std::vector<BenchmarkRun>& runs) {
  constexpr int kw = 18;
  std::ostringstream out;
  auto cell = [&](const std::string& s) {
    out << s;
    for (int i = static_cast<int>(s.size()); i < kw; ++i) out << ' ';
  };
  cell("method");
  cell("budget");
  cell("avg_tokens");
  cell("accuracy");
  cell("tokdense");
  cell("module_flops");
  cell("llm_flops");
  out << '\n';
  for (const BenchmarkRun& run : runs) {
    cell(run.method);
    cell(run.adaptive ? "adaptive" : std::to_string(run.spec.budget));
    cell(format4(run.avg_tokens));
    cell(format4(run.accuracy));
    cell(format4(run.metrics.tok_dense));
    cell(std::to_string(run.metrics.module_flops));
    cell(std::to_string(run.metrics.llm_flops));
    out << '\n';
  }
  return out.str();
}

}  // namespace vqtoken
