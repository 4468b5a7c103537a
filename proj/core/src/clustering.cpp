#include "occlust/clustering.hpp"

#include "occlust/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <random>
#include <string>

namespace occlust::cluster {

using linalg::RealVector;

namespace {

void require_cluster_count(int k, int n) {
  if (k < 1 || k > n) {
    fail(ErrorKind::parameter,
         "cluster count k=" + std::to_string(k) + " must satisfy 1 <= k <= n=" + std::to_string(n));
  }
}

void require_distance_matrix(const RealMatrix& d) {
  if (d.rows() < 1 || d.rows() != d.cols()) fail(ErrorKind::validation, "distance matrix must be square");
  linalg::require_finite(d, "distance matrix");
}

// Squared distances from every row of x to every row of centers.
RealMatrix squared_distances(const RealMatrix& x, const RealVector& x_sq, const RealMatrix& centers) {
  RealMatrix d = -2.0 * (x * centers.transpose());
  d.colwise() += x_sq;
  d.rowwise() += centers.rowwise().squaredNorm().transpose();
  return d;
}

int sample_by_weight(const RealVector& weights, double total, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double target = unit(rng) * total;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    acc += weights(i);
    if (acc > target) return static_cast<int>(i);
  }
  return static_cast<int>(weights.size()) - 1;
}

// Greedy k-means++: each step draws several D^2-weighted candidates and keeps
// the one that lowers the potential most.
RealMatrix kmeanspp_seed(const RealMatrix& x, int k, std::mt19937_64& rng) {
  const int n = static_cast<int>(x.rows());
  const int trials = 2 + static_cast<int>(std::log(static_cast<double>(k)));
  RealMatrix centers(k, x.cols());
  std::uniform_int_distribution<int> pick(0, n - 1);
  centers.row(0) = x.row(pick(rng));
  RealVector nearest = (x.rowwise() - centers.row(0)).rowwise().squaredNorm();
  for (int c = 1; c < k; ++c) {
    const double total = nearest.sum();
    if (!(total > 0.0)) {
      centers.row(c) = x.row(pick(rng));
      continue;
    }
    int best = -1;
    double best_potential = std::numeric_limits<double>::infinity();
    RealVector best_nearest;
    for (int t = 0; t < trials; ++t) {
      const int candidate = sample_by_weight(nearest, total, rng);
      RealVector updated = nearest.cwiseMin((x.rowwise() - x.row(candidate)).rowwise().squaredNorm());
      const double potential = updated.sum();
      if (potential < best_potential) {
        best = candidate;
        best_potential = potential;
        best_nearest = std::move(updated);
      }
    }
    centers.row(c) = x.row(best);
    nearest = std::move(best_nearest);
  }
  return centers;
}

double assignment_cost(const RealMatrix& x, const RealMatrix& centers, const std::vector<int>& labels) {
  double cost = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) cost += (x.row(i) - centers.row(labels[i])).squaredNorm();
  return cost;
}

RealMatrix cluster_means(const RealMatrix& x, const std::vector<int>& labels, int k,
                         std::vector<int>& counts) {
  RealMatrix centers = RealMatrix::Zero(k, x.cols());
  counts.assign(static_cast<std::size_t>(k), 0);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    centers.row(labels[i]) += x.row(i);
    ++counts[labels[i]];
  }
  for (int c = 0; c < k; ++c) {
    if (counts[c] > 0) centers.row(c) /= counts[c];
  }
  return centers;
}

}  // namespace

std::string_view to_string(Algorithm a) noexcept {
  switch (a) {
    case Algorithm::kmeans: return "k-means";
    case Algorithm::kmedoids: return "k-medoids";
    case Algorithm::dbscan: return "dbScan";
    case Algorithm::spectral: return "spectral";
  }
  return "?";
}

std::optional<Algorithm> parse_algorithm(std::string_view name) {
  if (name == "k-means" || name == "kmeans") return Algorithm::kmeans;
  if (name == "k-medoids" || name == "kmedoids") return Algorithm::kmedoids;
  if (name == "dbScan" || name == "dbscan" || name == "DBSCAN") return Algorithm::dbscan;
  if (name == "spectral") return Algorithm::spectral;
  return std::nullopt;
}

int ClusterAssignment::noise_count() const noexcept {
  return static_cast<int>(std::count(labels.begin(), labels.end(), kNoise));
}

ClusterAssignment canonicalize(std::span<const int> labels) {
  ClusterAssignment out;
  out.labels.reserve(labels.size());
  std::vector<std::pair<int, int>> seen;  // original -> canonical
  for (int label : labels) {
    if (label < 0) {
      out.labels.push_back(kNoise);
      continue;
    }
    auto it = std::find_if(seen.begin(), seen.end(), [&](const auto& p) { return p.first == label; });
    if (it == seen.end()) {
      seen.emplace_back(label, static_cast<int>(seen.size()));
      it = seen.end() - 1;
    }
    out.labels.push_back(it->second);
  }
  out.k = static_cast<int>(seen.size());
  return out;
}

ClusterAssignment kmeans_single(const RealMatrix& x, int k, std::uint64_t seed, int max_iterations,
                                std::vector<double>* inertia_history) {
  const int n = static_cast<int>(x.rows());
  require_cluster_count(k, n);
  linalg::require_finite(x, "k-means input");

  std::mt19937_64 rng(seed);
  RealMatrix centers = kmeanspp_seed(x, k, rng);
  const RealVector x_sq = x.rowwise().squaredNorm();
  std::vector<int> labels(static_cast<std::size_t>(n), -1);
  std::vector<int> counts;
  if (inertia_history != nullptr) inertia_history->clear();

  for (int it = 0; it < max_iterations; ++it) {
    const RealMatrix d = squared_distances(x, x_sq, centers);
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      Eigen::Index best = 0;
      d.row(i).minCoeff(&best);
      if (labels[i] != static_cast<int>(best)) {
        labels[i] = static_cast<int>(best);
        changed = true;
      }
    }
    if (inertia_history != nullptr) inertia_history->push_back(assignment_cost(x, centers, labels));
    if (!changed) break;

    centers = cluster_means(x, labels, k, counts);
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0) continue;
      // Empty cluster: restart it at the point farthest from its centroid.
      int far = 0;
      double far_d = -1.0;
      for (int i = 0; i < n; ++i) {
        const double di = (x.row(i) - centers.row(labels[i])).squaredNorm();
        if (counts[labels[i]] > 1 && di > far_d) {
          far_d = di;
          far = i;
        }
      }
      --counts[labels[far]];
      labels[far] = c;
      counts[c] = 1;
      centers = cluster_means(x, labels, k, counts);
    }
  }

  centers = cluster_means(x, labels, k, counts);
  ClusterAssignment out = canonicalize(labels);
  out.inertia = assignment_cost(x, centers, labels);
  return out;
}

ClusterAssignment kmeans(const RealMatrix& x, int k, std::uint64_t seed, const KMeansOptions& options) {
  require_cluster_count(k, static_cast<int>(x.rows()));
  if (options.restarts < 1) fail(ErrorKind::parameter, "k-means needs at least one restart");
  ClusterAssignment best;
  for (int r = 0; r < options.restarts; ++r) {
    auto run = kmeans_single(x, k, seed + static_cast<std::uint64_t>(r), options.max_iterations);
    if (r == 0 || *run.inertia < *best.inertia) best = std::move(run);
  }
  return best;
}

ClusterAssignment kmedoids(const RealMatrix& d, int k, std::uint64_t seed) {
  require_distance_matrix(d);
  const int n = static_cast<int>(d.rows());
  require_cluster_count(k, n);

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  // Build: first medoid minimises total distance, the rest maximise the gain.
  std::vector<int> medoids;
  std::vector<bool> is_medoid(static_cast<std::size_t>(n), false);
  {
    int first = order[0];
    double best = std::numeric_limits<double>::infinity();
    for (int c : order) {
      const double total = d.row(c).sum();
      if (total < best) {
        best = total;
        first = c;
      }
    }
    medoids.push_back(first);
    is_medoid[first] = true;
  }
  RealVector nearest = d.col(medoids[0]);
  while (static_cast<int>(medoids.size()) < k) {
    int chosen = -1;
    double best_gain = -1.0;
    for (int c : order) {
      if (is_medoid[c]) continue;
      double gain = 0.0;
      for (int j = 0; j < n; ++j) gain += std::max(0.0, nearest(j) - d(c, j));
      if (gain > best_gain) {
        best_gain = gain;
        chosen = c;
      }
    }
    medoids.push_back(chosen);
    is_medoid[chosen] = true;
    nearest = nearest.cwiseMin(d.col(chosen));
  }

  // Swap phase (best improvement, evaluated in O(n) per candidate).
  std::vector<int> near_slot(static_cast<std::size_t>(n));
  std::vector<double> near_d(static_cast<std::size_t>(n));
  std::vector<double> second_d(static_cast<std::size_t>(n));
  std::vector<double> delta(static_cast<std::size_t>(k));
  const int max_swaps = 100 * n + 100;
  for (int swap = 0; swap < max_swaps; ++swap) {
    double cost = 0.0;
    for (int j = 0; j < n; ++j) {
      near_slot[j] = 0;
      near_d[j] = std::numeric_limits<double>::infinity();
      second_d[j] = std::numeric_limits<double>::infinity();
      for (int s = 0; s < k; ++s) {
        const double dj = d(j, medoids[s]);
        if (dj < near_d[j]) {
          second_d[j] = near_d[j];
          near_d[j] = dj;
          near_slot[j] = s;
        } else if (dj < second_d[j]) {
          second_d[j] = dj;
        }
      }
      cost += near_d[j];
    }
    double best_delta = 0.0;
    int best_slot = -1;
    int best_candidate = -1;
    for (int h = 0; h < n; ++h) {
      if (is_medoid[h]) continue;
      std::fill(delta.begin(), delta.end(), 0.0);
      double shared = 0.0;
      for (int j = 0; j < n; ++j) {
        const double dh = d(j, h);
        const double keep = std::min(near_d[j], dh) - near_d[j];
        shared += keep;
        delta[near_slot[j]] += std::min(second_d[j], dh) - near_d[j] - keep;
      }
      for (int s = 0; s < k; ++s) {
        const double total = shared + delta[s];
        if (total < best_delta) {
          best_delta = total;
          best_slot = s;
          best_candidate = h;
        }
      }
    }
    if (best_slot < 0 || best_delta >= -1e-12 * std::max(1.0, cost)) break;
    is_medoid[medoids[best_slot]] = false;
    medoids[best_slot] = best_candidate;
    is_medoid[best_candidate] = true;
  }

  std::sort(medoids.begin(), medoids.end());
  std::vector<int> labels(static_cast<std::size_t>(n));
  double cost = 0.0;
  for (int j = 0; j < n; ++j) {
    int slot = 0;
    for (int s = 1; s < k; ++s) {
      if (d(j, medoids[s]) < d(j, medoids[slot])) slot = s;
    }
    labels[j] = slot;
    cost += d(j, medoids[slot]);
  }
  ClusterAssignment out = canonicalize(labels);
  out.inertia = cost;
  out.medoids = medoids;
  return out;
}

namespace {

// Rows of the distance matrix sorted once so that eps queries are prefixes.
class RadiusIndex {
 public:
  explicit RadiusIndex(const RealMatrix& d) : n_(static_cast<int>(d.rows())), sorted_(n_) {
    for (int i = 0; i < n_; ++i) {
      auto& row = sorted_[i];
      row.reserve(static_cast<std::size_t>(n_));
      for (int j = 0; j < n_; ++j) row.emplace_back(d(i, j), j);
      std::sort(row.begin(), row.end());
    }
  }

  int size() const noexcept { return n_; }

  int count_within(int i, double eps) const { return static_cast<int>(end_of(i, eps) - sorted_[i].begin()); }

  template <typename Fn>
  void for_each_within(int i, double eps, Fn&& fn) const {
    for (auto it = sorted_[i].begin(); it != end_of(i, eps); ++it) fn(it->second);
  }

 private:
  std::vector<std::pair<double, int>>::const_iterator end_of(int i, double eps) const {
    const auto& row = sorted_[i];
    return std::upper_bound(row.begin(), row.end(), std::make_pair(eps, std::numeric_limits<int>::max()));
  }

  int n_;
  std::vector<std::vector<std::pair<double, int>>> sorted_;
};

void check_dbscan_params(double eps, int min_pts) {
  if (!(eps > 0.0)) fail(ErrorKind::parameter, "dbScan eps must be positive");
  if (min_pts < 1) fail(ErrorKind::parameter, "dbScan min_pts must be at least 1");
}

ClusterAssignment dbscan_indexed(const RadiusIndex& index, double eps, int min_pts) {
  const int n = index.size();
  std::vector<bool> core(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) core[i] = index.count_within(i, eps) >= min_pts;

  std::vector<int> labels(static_cast<std::size_t>(n), kNoise);
  int next = 0;
  std::queue<int> frontier;
  for (int i = 0; i < n; ++i) {
    if (labels[i] != kNoise || !core[i]) continue;
    labels[i] = next;
    frontier.push(i);
    while (!frontier.empty()) {
      const int u = frontier.front();
      frontier.pop();
      index.for_each_within(u, eps, [&](int v) {
        if (labels[v] != kNoise) return;
        labels[v] = next;
        if (core[v]) frontier.push(v);
      });
    }
    ++next;
  }
  ClusterAssignment out;
  out.labels = std::move(labels);
  out.k = next;
  return out;
}

}  // namespace

std::vector<bool> core_points(const RealMatrix& d, double eps, int min_pts) {
  require_distance_matrix(d);
  check_dbscan_params(eps, min_pts);
  const RadiusIndex index(d);
  std::vector<bool> core(static_cast<std::size_t>(index.size()));
  for (int i = 0; i < index.size(); ++i) core[i] = index.count_within(i, eps) >= min_pts;
  return core;
}

ClusterAssignment dbscan(const RealMatrix& d, double eps, int min_pts) {
  require_distance_matrix(d);
  check_dbscan_params(eps, min_pts);
  return dbscan_indexed(RadiusIndex(d), eps, min_pts);
}

SweepResult dbscan_sweep(const RealMatrix& d, int min_pts, std::span<const double> grid, int target_k) {
  require_distance_matrix(d);
  if (grid.empty()) fail(ErrorKind::parameter, "dbScan epsilon grid is empty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    check_dbscan_params(grid[i], min_pts);
    if (i > 0 && !(grid[i] > grid[i - 1])) {
      fail(ErrorKind::parameter, "dbScan epsilon grid must be strictly increasing");
    }
  }
  const RadiusIndex index(d);
  SweepResult best;
  int best_gap = std::numeric_limits<int>::max();
  for (double eps : grid) {
    auto run = dbscan_indexed(index, eps, min_pts);
    const int gap = std::abs(run.k - target_k);
    if (gap < best_gap) {
      best_gap = gap;
      best.eps = eps;
      best.assignment = std::move(run);
    }
  }
  return best;
}

std::vector<double> eps_grid(double start, double stop, double step) {
  if (!(step > 0.0) || !(start > 0.0) || stop < start) {
    fail(ErrorKind::parameter, "epsilon grid needs 0 < start <= stop and step > 0");
  }
  std::vector<double> grid;
  const double inv = std::round(1.0 / step);
  const bool decimal = std::abs(inv * step - 1.0) < 1e-12;
  const double base = std::round(start * inv);
  for (long i = 0;; ++i) {
    const double v = decimal ? (base + static_cast<double>(i)) / inv : start + static_cast<double>(i) * step;
    if (v > stop + 1e-9 * step) break;
    grid.push_back(v);
  }
  return grid;
}

ClusterAssignment spectral_from_distances(const RealMatrix& d, int k, int k_nn, std::uint64_t seed) {
  require_distance_matrix(d);
  const int n = static_cast<int>(d.rows());
  require_cluster_count(k, n);
  const auto graph = linalg::knn_graph(d, k_nn);
  const RealMatrix w = graph.adjacency(true);
  const RealVector deg = w.rowwise().sum();
  for (int i = 0; i < n; ++i) {
    if (deg(i) == 0.0) {
      fail(ErrorKind::degeneracy, "spectral: vertex " + std::to_string(i) + " is isolated; increase k_nn");
    }
  }
  if (k == 1) {
    ClusterAssignment out;
    out.labels.assign(static_cast<std::size_t>(n), 0);
    out.k = 1;
    return out;
  }
  const RealVector inv_sqrt = deg.cwiseSqrt().cwiseInverse();
  RealMatrix lap = -(inv_sqrt.asDiagonal() * w * inv_sqrt.asDiagonal());
  lap.diagonal().array() += 1.0;
  lap = 0.5 * (lap + lap.transpose());
  RealMatrix rows = linalg::sym_eig(lap, linalg::EigenOrder::smallest, k).vectors;
  for (int i = 0; i < n; ++i) {
    const double norm = rows.row(i).norm();
    if (norm > 0.0) rows.row(i) /= norm;
  }
  ClusterAssignment out = kmeans(rows, k, seed);
  out.inertia.reset();
  return out;
}

ClusterAssignment spectral(const RealMatrix& x, int k, int k_nn, std::uint64_t seed) {
  return spectral_from_distances(linalg::pairwise_distances(x), k, k_nn, seed);
}

}  // namespace occlust::cluster
