#pragma once

#include "occlust/linalg.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace occlust::cluster {

using linalg::RealMatrix;

inline constexpr int kNoise = -1;

enum class Algorithm { kmeans, kmedoids, dbscan, spectral };

/// Display names: k-means, k-medoids, dbScan, spectral.
std::string_view to_string(Algorithm a) noexcept;
std::optional<Algorithm> parse_algorithm(std::string_view name);

struct ClusterAssignment {
  std::vector<int> labels;  // 0..k-1, or kNoise
  int k = 0;
  std::optional<double> inertia;  // k-means / k-medoids cost
  std::vector<int> medoids;       // k-medoids only, sorted

  int size() const noexcept { return static_cast<int>(labels.size()); }
  int noise_count() const noexcept;
};

/// Renumbers non-noise labels 0..k-1 in order of first appearance.
ClusterAssignment canonicalize(std::span<const int> labels);

struct KMeansOptions {
  int restarts = 10;
  int max_iterations = 300;
};

/// One seeded Lloyd run; `inertia_history` receives the cost after every
/// assignment step.
ClusterAssignment kmeans_single(const RealMatrix& x, int k, std::uint64_t seed, int max_iterations,
                                std::vector<double>* inertia_history = nullptr);

/// Best of options.restarts runs seeded seed, seed+1, ... by inertia.
ClusterAssignment kmeans(const RealMatrix& x, int k, std::uint64_t seed, const KMeansOptions& options = {});

/// PAM: seeded greedy build followed by best-improvement swaps.
ClusterAssignment kmedoids(const RealMatrix& distances, int k, std::uint64_t seed);

ClusterAssignment dbscan(const RealMatrix& distances, double eps, int min_pts);

/// Core-point flags used by dbscan (at least min_pts points within eps, self included).
std::vector<bool> core_points(const RealMatrix& distances, double eps, int min_pts);

struct SweepResult {
  double eps = 0.0;
  ClusterAssignment assignment;
};

/// Grid value whose cluster count is closest to `target_k`; ties keep the smaller eps.
SweepResult dbscan_sweep(const RealMatrix& distances, int min_pts, std::span<const double> eps_grid,
                         int target_k = 23);

/// start, start+step, ... up to stop inclusive.
std::vector<double> eps_grid(double start, double stop, double step);

/// Normalised spectral clustering on the binary kNN affinity of `x`.
ClusterAssignment spectral(const RealMatrix& x, int k, int k_nn, std::uint64_t seed);

/// Same algorithm on a precomputed distance matrix.
ClusterAssignment spectral_from_distances(const RealMatrix& distances, int k, int k_nn, std::uint64_t seed);

}  // namespace occlust::cluster
