#include "vqtoken/quantizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "vqtoken/errors.hpp"
#include "vqtoken/flops.hpp"

namespace vqtoken {

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ContractError("cosine: dimension mismatch");
  const double na = norm2(a);
  const double nb = norm2(b);
  if (na < 1e-300 || nb < 1e-300) return 0.0;
  return dot(a, b) / (na * nb);
}

Matrix normalize_rows(const Matrix& m) {
  Matrix out = m;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto row = out.row(i);
    const double n = norm2(row);
    if (n > 1e-300) {
      for (double& v : row) v /= n;
    }
  }
  flops::add(m.size());
  return out;
}

namespace {

// Internal Lloyd state over unit-normalized tokens. Centroids are kept
// unit-normalized so assignment can use plain dot products.
struct LloydState {
  Matrix centroids;                       // K x D, unit rows
  std::vector<std::uint32_t> assignments;  // per token
  std::size_t iterations = 0;
  std::vector<double> cost_history;
};

std::vector<std::vector<std::uint32_t>> collect_members(
    const std::vector<std::uint32_t>& assignments, std::size_t k) {
  std::vector<std::vector<std::uint32_t>> members(k);
  for (std::uint32_t i = 0; i < assignments.size(); ++i)
    members[assignments[i]].push_back(i);
  return members;
}

void renormalize_row(Matrix& m, std::size_t r) {
  auto row = m.row(r);
  const double n = norm2(row);
  if (n > 1e-300) {
    for (double& v : row) v /= n;
  }
}

// Mean of the member unit tokens, renormalized. Empty input keeps `fallback`.
void recompute_centroid(const Matrix& unit, const std::vector<std::uint32_t>& members,
                        Matrix& centroids, std::size_t k) {
  if (members.empty()) return;  // keep previous centroid
  auto crow = centroids.row(k);
  std::fill(crow.begin(), crow.end(), 0.0);
  for (std::uint32_t i : members) {
    const auto trow = unit.row(i);
    for (std::size_t d = 0; d < crow.size(); ++d) crow[d] += trow[d];
  }
  const double inv = 1.0 / static_cast<double>(members.size());
  for (double& v : crow) v *= inv;
  flops::add(members.size() * crow.size() + crow.size());
  renormalize_row(centroids, k);
}

// K-means++ seeding with distance 1 - cosine over unit tokens.
Matrix seed_centroids(const Matrix& unit, std::size_t k, Rng& rng) {
  const std::size_t n = unit.rows();
  Matrix centroids(k, unit.cols());
  std::vector<double> best_dist(n, 1.0);  // 1 - cos to nearest chosen seed

  std::size_t first = rng.next_below(n);
  for (std::size_t d = 0; d < unit.cols(); ++d) centroids(0, d) = unit(first, d);

  for (std::size_t c = 1; c < k; ++c) {
    const auto prev = centroids.row(c - 1);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double dist = 1.0 - dot(unit.row(i), prev);
      best_dist[i] = std::min(best_dist[i], std::max(dist, 0.0));
      total += best_dist[i];
    }
    std::size_t pick = 0;
    if (total <= 1e-300) {
      // All remaining mass at distance 0 (duplicate tokens); fall back to a
      // uniform draw, the repair step sorts out duplicates.
      pick = rng.next_below(n);
    } else {
      const double u = rng.next_double() * total;
      double acc = 0.0;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        acc += best_dist[i];
        if (acc >= u) {
          pick = i;
          break;
        }
      }
    }
    for (std::size_t d = 0; d < unit.cols(); ++d) centroids(c, d) = unit(pick, d);
  }
  return centroids;
}

std::uint32_t nearest_centroid(const Matrix& unit, std::size_t token,
                               const Matrix& centroids) {
  std::uint32_t best = 0;
  double best_sim = -std::numeric_limits<double>::infinity();
  const auto trow = unit.row(token);
  for (std::size_t k = 0; k < centroids.rows(); ++k) {
    const double sim = dot(trow, centroids.row(k));
    if (sim > best_sim) {  // ties keep the lowest cluster id
      best_sim = sim;
      best = static_cast<std::uint32_t>(k);
    }
  }
  return best;
}

// Move the globally worst-assigned token (lowest cosine to its centroid,
// drawn from clusters with >= 2 members) into each empty cluster.
void repair_empty_clusters(const Matrix& unit, const Matrix& centroids,
                           std::vector<std::uint32_t>& assignments, std::size_t k) {
  std::vector<std::size_t> sizes(k, 0);
  for (std::uint32_t a : assignments) ++sizes[a];
  for (std::size_t empty = 0; empty < k; ++empty) {
    if (sizes[empty] != 0) continue;
    double worst_sim = std::numeric_limits<double>::infinity();
    std::size_t worst_token = assignments.size();
    for (std::size_t i = 0; i < assignments.size(); ++i) {
      if (sizes[assignments[i]] < 2) continue;
      const double sim = dot(unit.row(i), centroids.row(assignments[i]));
      if (sim < worst_sim) {
        worst_sim = sim;
        worst_token = i;
      }
    }
    if (worst_token == assignments.size()) {
      throw ContractError("kmeans: cannot repair empty cluster (k > token count?)");
    }
    --sizes[assignments[worst_token]];
    assignments[worst_token] = static_cast<std::uint32_t>(empty);
    ++sizes[empty];
  }
}

double partition_cost(const Matrix& unit, const std::vector<std::uint32_t>& assignments,
                      const Matrix& centroids) {
  double total = 0.0;
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    total += 1.0 - dot(unit.row(i), centroids.row(assignments[i]));
  }
  flops::add(2 * assignments.size());
  return total / static_cast<double>(assignments.size());
}

// Lloyd iterations from the given centroids until assignments stabilize,
// cost improvement drops below tol, or max_iters is hit. One iteration is
// assign -> repair -> recompute means -> cost, so on exit the centroids are
// always the means of the final (valid) partition. Appends to cost_history;
// the sequence is non-increasing (the argmax step cannot raise cost, repair
// zeroes the moved token's cost, and the mean update is per-cluster optimal).
void run_lloyd(const Matrix& unit, LloydState& state, const QuantizerConfig& cfg) {
  const std::size_t n = unit.rows();
  const std::size_t k = state.centroids.rows();
  if (cfg.max_iters == 0) throw ContractError("kmeans: max_iters must be >= 1");
  std::vector<std::uint32_t> prev;
  double prev_cost = std::numeric_limits<double>::infinity();

  for (std::size_t iter = 0; iter < cfg.max_iters; ++iter) {
    std::vector<std::uint32_t> assignments(n);
    for (std::size_t i = 0; i < n; ++i)
      assignments[i] = nearest_centroid(unit, i, state.centroids);
    repair_empty_clusters(unit, state.centroids, assignments, k);
    const bool stable = !prev.empty() && assignments == prev;

    state.assignments = std::move(assignments);
    const auto members = collect_members(state.assignments, k);
    for (std::size_t c = 0; c < k; ++c)
      recompute_centroid(unit, members[c], state.centroids, c);

    const double cost = partition_cost(unit, state.assignments, state.centroids);
    state.cost_history.push_back(cost);
    ++state.iterations;

    if (stable) break;
    if (std::isfinite(prev_cost) && std::abs(prev_cost - cost) < cfg.tol) break;
    prev = state.assignments;
    prev_cost = cost;
  }
}

ClusterAssignment finalize(const Matrix& unit, LloydState&& state) {
  ClusterAssignment result;
  result.assignments = std::move(state.assignments);
  result.cluster_count = state.centroids.rows();
  result.member_sets = collect_members(result.assignments, result.cluster_count);
  result.iterations = state.iterations;
  result.cost_history = std::move(state.cost_history);
  result.final_cost = result.cost_history.back();
  validate_assignment(result, unit.rows());
  return result;
}

LloydState cluster_fixed(const Matrix& unit, std::size_t k, const QuantizerConfig& cfg,
                         Rng& rng) {
  LloydState state;
  state.centroids = seed_centroids(unit, k, rng);
  run_lloyd(unit, state, cfg);
  return state;
}

void check_tokens(const Matrix& tokens) {
  if (tokens.rows() == 0) throw ContractError("kmeans: no tokens");
  require_finite(tokens, "kmeans tokens");
}

}  // namespace

ClusterAssignment kmeans_fixed(const Matrix& tokens, const QuantizerConfig& cfg) {
  check_tokens(tokens);
  const std::size_t k = cfg.cluster_count;
  if (k == 0 || k > tokens.rows()) {
    throw ContractError("kmeans_fixed: need 1 <= K <= N, got K=" + std::to_string(k) +
                        " N=" + std::to_string(tokens.rows()));
  }
  const Matrix unit = normalize_rows(tokens);
  Rng rng(cfg.seed);
  return finalize(unit, cluster_fixed(unit, k, cfg, rng));
}

ClusterAssignment kmeans_adaptive(const Matrix& tokens, const QuantizerConfig& cfg) {
  check_tokens(tokens);
  if (cfg.k_min == 0 || cfg.k_min > cfg.k_max || cfg.k_max > tokens.rows()) {
    throw ContractError("kmeans_adaptive: need 1 <= Kmin <= Kmax <= N");
  }
  if (!(cfg.split_threshold > 0.0 && cfg.split_threshold < 1.0)) {
    throw ContractError("kmeans_adaptive: split threshold must lie in (0,1)");
  }

  const Matrix unit = normalize_rows(tokens);
  Rng rng(cfg.seed);
  LloydState state = cluster_fixed(unit, cfg.k_min, cfg, rng);
  std::uint64_t split_stream = 1;

  while (state.centroids.rows() < cfg.k_max) {
    const std::size_t k = state.centroids.rows();
    const auto members = collect_members(state.assignments, k);

    // Lowest mean member-centroid cosine among splittable clusters.
    double worst = std::numeric_limits<double>::infinity();
    std::size_t target = k;
    for (std::size_t c = 0; c < k; ++c) {
      if (members[c].size() < 2) continue;
      double mean_sim = 0.0;
      for (std::uint32_t i : members[c]) mean_sim += dot(unit.row(i), state.centroids.row(c));
      mean_sim /= static_cast<double>(members[c].size());
      if (mean_sim < worst) {
        worst = mean_sim;
        target = c;
      }
    }
    if (target == k || worst >= cfg.split_threshold) break;

    // 2-means on the target cluster's members.
    Matrix sub(members[target].size(), unit.cols());
    for (std::size_t r = 0; r < members[target].size(); ++r) {
      const auto row = unit.row(members[target][r]);
      std::copy(row.begin(), row.end(), sub.row(r).begin());
    }
    Rng sub_rng = rng.fork(split_stream++);
    LloydState split = cluster_fixed(sub, 2, cfg, sub_rng);

    Matrix centroids(k + 1, unit.cols());
    for (std::size_t c = 0; c < k; ++c) {
      const auto src = state.centroids.row(c);
      std::copy(src.begin(), src.end(), centroids.row(c).begin());
    }
    for (std::size_t c = 0; c < 2; ++c) {
      const auto src = split.centroids.row(c);
      const std::size_t dst = (c == 0) ? target : k;
      std::copy(src.begin(), src.end(), centroids.row(dst).begin());
    }

    LloydState next;
    next.centroids = std::move(centroids);
    next.iterations = state.iterations + split.iterations;
    next.cost_history = std::move(state.cost_history);
    run_lloyd(unit, next, cfg);
    state = std::move(next);
  }

  return finalize(unit, std::move(state));
}

double assignment_cost(const Matrix& tokens, const ClusterAssignment& assignment) {
  validate_assignment(assignment, tokens.rows());
  const Matrix unit = normalize_rows(tokens);
  Matrix centroids(assignment.cluster_count, tokens.cols());
  for (std::size_t k = 0; k < assignment.cluster_count; ++k)
    recompute_centroid(unit, assignment.member_sets[k], centroids, k);
  return partition_cost(unit, assignment.assignments, centroids);
}

std::vector<double> cluster_cohesions(const Matrix& tokens,
                                      const ClusterAssignment& assignment) {
  validate_assignment(assignment, tokens.rows());
  const Matrix unit = normalize_rows(tokens);
  Matrix centroids(assignment.cluster_count, tokens.cols());
  std::vector<double> cohesions(assignment.cluster_count, 0.0);
  for (std::size_t k = 0; k < assignment.cluster_count; ++k) {
    recompute_centroid(unit, assignment.member_sets[k], centroids, k);
    double mean_sim = 0.0;
    for (std::uint32_t i : assignment.member_sets[k])
      mean_sim += dot(unit.row(i), centroids.row(k));
    cohesions[k] = mean_sim / static_cast<double>(assignment.member_sets[k].size());
  }
  return cohesions;
}

void validate_assignment(const ClusterAssignment& assignment, std::size_t token_count) {
  if (assignment.assignments.size() != token_count) {
    throw ContractError("assignment: token count mismatch");
  }
  if (assignment.member_sets.size() != assignment.cluster_count) {
    throw ContractError("assignment: member set count mismatch");
  }
  std::vector<bool> seen(token_count, false);
  for (std::size_t k = 0; k < assignment.cluster_count; ++k) {
    if (assignment.member_sets[k].empty()) {
      throw ContractError("assignment: empty cluster " + std::to_string(k));
    }
    for (std::uint32_t i : assignment.member_sets[k]) {
      if (i >= token_count || seen[i] || assignment.assignments[i] != k) {
        throw ContractError("assignment: member sets are not a partition");
      }
      seen[i] = true;
    }
  }
  for (bool s : seen) {
    if (!s) throw ContractError("assignment: member sets do not cover all tokens");
  }
}

}  // namespace vqtoken
