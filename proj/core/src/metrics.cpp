#include "vqtoken/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <sstream>
#include <vector>

#include <nlohmann/json.hpp>

#include "vqtoken/errors.hpp"

namespace vqtoken {

double tok_dense(double accuracy, double token_count) {
  if (!(token_count > 0.0)) {
    throw ContractError("tok_dense: token count must be positive");
  }
  return accuracy / token_count;
}

std::uint64_t module_flops(const ComplexityModel& model) {
  const std::uint64_t n = model.original_tokens;
  const std::uint64_t k = model.clusters;
  const std::uint64_t d = model.dim;
  const std::uint64_t iters = model.kmeans_iters;
  const std::uint64_t heads = std::max<std::uint64_t>(1, model.heads);

  // Token normalization: norm (2d+1) + scale d per row.
  const std::uint64_t normalize = n * (3 * d + 1);
  // K-means++ seeding: K-1 distance passes of n dots (2d each).
  const std::uint64_t seeding = 2 * n * (k > 0 ? k - 1 : 0) * d;
  // Per Lloyd iteration: assignment n*K dots, centroid accumulate/scale
  // n*d + K*d plus renormalization K*(3d+1), cost pass n*(2d) + 2n.
  const std::uint64_t per_iter =
      2 * n * k * d + (n * d + k * d) + k * (3 * d + 1) + 2 * n * d + 2 * n;
  // Codebook build: accumulate n*d + scale K*d.
  const std::uint64_t codebook = n * d + k * d;
  // Encoder (cluster-positional): PE pooling n*d, then the shared MLP
  // (d+1) -> 2d -> d over K rows.
  const std::uint64_t encoder = n * d + 2 * k * (d + 1) * 2 * d + k * 2 * d +
                                2 * k * 2 * d * d + k * d;
  // Attention: Q/K/V projections, per-head scores/scale/softmax/mix,
  // residual add.
  const std::uint64_t attention = 3 * 2 * k * d * d + 2 * k * k * d + heads * k * k +
                                  heads * 5 * k * k + 2 * k * k * d + k * d;

  return normalize + seeding + iters * per_iter + codebook + encoder + attention;
}

std::uint64_t llm_flops(const ComplexityModel& model) {
  const std::uint64_t m = model.reduced_tokens;
  return 2 * m * m * model.dim * model.layers;
}

double measure_wall_clock(const std::function<void()>& thunk, int reps) {
  reps = std::max(reps, 5);
  thunk();  // warm-up
  std::vector<double> samples;
  samples.reserve(reps);
  for (int i = 0; i < reps; ++i) {
    const auto start = std::chrono::steady_clock::now();
    thunk();
    const auto stop = std::chrono::steady_clock::now();
    samples.push_back(std::chrono::duration<double, std::milli>(stop - start).count());
  }
  std::sort(samples.begin(), samples.end());
  return samples[samples.size() / 2];
}

namespace {

// Fixed 4-decimal formatting keeps ledger bytes stable across runs.
double round4(double v) {
  std::ostringstream ss;
  ss.precision(4);
  ss << std::fixed << v;
  return std::stod(ss.str());
}

}  // namespace

std::string metrics_json(const MetricsReport& report) {
  nlohmann::ordered_json j;
  j["tokenCount"] = round4(report.token_count);
  j["tokenPercent"] = round4(report.token_percent);
  j["accuracy"] = round4(report.accuracy);
  j["tokDense"] = round4(report.tok_dense);
  j["moduleFlops"] = report.module_flops;
  j["llmFlops"] = report.llm_flops;
  j["wallClockMs"] = round4(report.wall_clock_ms);
  j["method"] = report.method;
  j["configHash"] = report.config_hash;
  return j.dump();
}

void append_ledger(const std::filesystem::path& path, const std::string& json_line) {
  std::ofstream out(path, std::ios::app);
  if (!out) {
    throw FormatError(FormatError::Code::kCorrupt, "cannot append ledger: " + path.string());
  }
  out << json_line << '\n';
}

}  // namespace vqtoken
