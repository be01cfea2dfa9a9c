#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "vqtoken/attention.hpp"
#include "vqtoken/baselines.hpp"
#include "vqtoken/dataset.hpp"
#include "vqtoken/metrics.hpp"
#include "vqtoken/probe.hpp"
#include "vqtoken/quantizer.hpp"

namespace vqtoken {

struct HarnessOptions {
  std::size_t probe_epochs = 500;
  double probe_lr = 0.1;
  /// Joint fine-tuning of encoder MLP + attention projections alongside the
  /// probe, used for vq-* runs and ablation rows whose attention is live.
  std::size_t joint_epochs = 300;
  double joint_lr = 0.02;
  std::size_t threads = 0;  // 0 = hardware concurrency
  /// Timing is opt-in: ledgers stay byte-identical across runs when off.
  bool measure_time = false;
  std::size_t llm_layers = 24;
  std::uint32_t heads = 4;
  std::uint64_t seed = 0;
  EncoderVariant variant = EncoderVariant::kClusterPositional;
  QuantizerConfig quantizer;           // adaptive-mode defaults
  std::uint32_t interp_h = 3;          // adaptive-subtask interpolation default
  std::uint32_t interp_w = 3;
};

struct BenchmarkRun {
  ReducerSpec spec;
  std::string method;  // display name; ablation rows get vq-* names
  bool adaptive = false;
  std::string dataset_id;
  double accuracy = 0.0;  // percent on the test split
  double avg_tokens = 0.0;
  MetricsReport metrics;
  std::string config_hash;
};

enum class AblationState { kOn, kOff, kRand };

struct AblationSpec {
  std::string name;
  bool use_codebook = true;
  AblationState use_hash = AblationState::kOn;
  AblationState use_attn = AblationState::kOn;
};

/// The five standard rows: codebook only; codebook+hash with rand attn;
/// codebook+attn with rand hash; rand codebook + hash + attn; full.
std::vector<AblationSpec> standard_ablation_rows();

/// Fixed-length subtask. Always includes the unreduced reference row
/// (method "full", budget N) first, then one row per (method, budget).
/// Infeasible combinations (interp budgets that do not factor per frame)
/// are skipped.
std::vector<BenchmarkRun> run_fixed_length(const ProxyDataset& data,
                                           const std::vector<std::size_t>& budgets,
                                           const std::vector<ReducerMethod>& methods,
                                           const HarnessOptions& opts);

/// Adaptive-length subtask: vq-adaptive plus interpolation at its default.
std::vector<BenchmarkRun> run_adaptive_length(const ProxyDataset& data,
                                              const HarnessOptions& opts);

/// Ablation matrix at a fixed budget (default 32); component randomization
/// changes content, never token counts.
std::vector<BenchmarkRun> run_ablation(const ProxyDataset& data, const HarnessOptions& opts,
                                       std::size_t budget = 32,
                                       const std::vector<AblationSpec>& rows =
                                           standard_ablation_rows());

/// Probe features. Reduced sequences get [mean(tokens), mean(tokens .*
/// sequence-PE)]; the unreduced reference keeps its original cell PE, which
/// is what reduction destroys.
Matrix reduced_features(const Matrix& tokens);
Matrix reference_features(const TokenGrid& grid);

/// Probe training on frozen features (the spec's trainProbe operation).
struct ProbeRunResult {
  LinearProbe probe;
  double test_accuracy = 0.0;
};
ProbeRunResult train_and_eval_probe(const Matrix& train_features,
                                    const std::vector<int>& train_labels,
                                    const Matrix& test_features,
                                    const std::vector<int>& test_labels,
                                    std::size_t num_classes, const ProbeConfig& cfg);

void write_runs_ledger(const std::vector<BenchmarkRun>& runs,
                       const std::filesystem::path& path);
std::string runs_csv(const std::vector<BenchmarkRun>& runs);
std::string runs_table(const std::vector<BenchmarkRun>& runs);

}  // namespace vqtoken
