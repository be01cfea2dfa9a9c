#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>

namespace vqtoken {

/// Inputs to the analytic cost models, mirroring the complexity-table
/// symbols: n original tokens, m reduced tokens, d token dim, L transformer
/// layers, plus the clustering parameters of the reduction module itself.
struct ComplexityModel {
  std::size_t original_tokens = 288;  // n
  std::size_t reduced_tokens = 32;    // m
  std::size_t dim = 32;               // d
  std::size_t layers = 24;            // L
  std::size_t kmeans_iters = 25;
  std::size_t clusters = 32;          // K
  std::size_t heads = 4;
};

/// Accuracy per retained token. token_count may be fractional (adaptive
/// averages); throws ContractError when it is not positive.
double tok_dense(double accuracy, double token_count);

/// Analytic flop count of the reduction module (normalize + K-means++ seed
/// + Lloyd iterations + codebook + encoder MLP + attention), counting one
/// multiply-add as 2 flops. The terms mirror the implemented kernels, so an
/// instrumented run at the same shape agrees within a few percent; the
/// total is linear in n at fixed (m, d, iters).
std::uint64_t module_flops(const ComplexityModel& model);

/// Downstream cost proxy 2 * m^2 * d * L (attention scores + mix per layer).
/// An order-of-magnitude proxy, not a measured LLM cost.
std::uint64_t llm_flops(const ComplexityModel& model);

/// Median of `reps` timed repetitions after one warm-up, monotonic clock.
double measure_wall_clock(const std::function<void()>& thunk, int reps = 5);

struct MetricsReport {
  double token_count = 0.0;
  double token_percent = 0.0;
  double accuracy = 0.0;
  double tok_dense = 0.0;
  std::uint64_t module_flops = 0;
  std::uint64_t llm_flops = 0;
  double wall_clock_ms = 0.0;
  std::string method;
  std::string config_hash;
};

/// One-line JSON with the exact field names tokenCount, tokenPercent,
/// accuracy, tokDense, moduleFlops, llmFlops, wallClockMs, method,
/// configHash.
std::string metrics_json(const MetricsReport& report);

/// Appends one JSON line to the run ledger.
void append_ledger(const std::filesystem::path& path, const std::string& json_line);

}  // namespace vqtoken
