#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "vqtoken/matrix.hpp"

namespace vqtoken {

struct QuantizerConfig {
  enum class Mode { kFixed, kAdaptive };

  Mode mode = Mode::kFixed;
  std::size_t cluster_count = 32;  // K (fixed mode)
  std::size_t k_min = 4;           // adaptive mode bounds
  std::size_t k_max = 256;
  double split_threshold = 0.92;   // tau in (0,1)
  std::size_t max_iters = 100;
  double tol = 1e-6;
  std::uint64_t seed = 0;
};

/// Result of clustering N tokens into K groups. member_sets partition
/// {0..N-1}; no returned cluster is empty; assignments[i] == k iff i is in
/// member_sets[k].
struct ClusterAssignment {
  std::vector<std::uint32_t> assignments;
  std::vector<std::vector<std::uint32_t>> member_sets;
  std::size_t cluster_count = 0;
  std::size_t iterations = 0;
  double final_cost = 0.0;
  /// Cost after each completed Lloyd iteration (non-increasing).
  std::vector<double> cost_history;
};

/// a.b / (|a||b|) with the zero-vector guard: 0 if either norm vanishes.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

/// Spherical K-means (Lloyd on unit-normalized tokens, centroids are
/// renormalized member means) with K-means++-style seeding under distance
/// 1 - cosine. Empty clusters are repaired by moving in the worst-assigned
/// token. Deterministic in cfg.seed.
ClusterAssignment kmeans_fixed(const Matrix& tokens, const QuantizerConfig& cfg);

/// Adaptive variant: starts from kmeans_fixed with K = k_min, then
/// repeatedly 2-means-splits the cluster with the lowest mean
/// member-centroid cosine while that mean is below split_threshold and
/// K < k_max, running Lloyd refinement to convergence after each split.
ClusterAssignment kmeans_adaptive(const Matrix& tokens, const QuantizerConfig& cfg);

/// Mean over tokens of (1 - cosine(t_i, centroid(c_i))), with centroids the
/// renormalized means of the unit-normalized members (the quantity Lloyd
/// minimizes, and what brute-force oracles should recompute).
double assignment_cost(const Matrix& tokens, const ClusterAssignment& assignment);

/// Per-cluster mean member-centroid cosine (1 - per-cluster cost share).
std::vector<double> cluster_cohesions(const Matrix& tokens,
                                      const ClusterAssignment& assignment);

/// Checks the partition invariants; throws ContractError on violation.
void validate_assignment(const ClusterAssignment& assignment, std::size_t token_count);

/// Unit-normalized copy of each row; zero rows are left unchanged.
Matrix normalize_rows(const Matrix& m);

}  // namespace vqtoken
