#pragma once

#include "occlust/clustering.hpp"
#include "occlust/embedding_io.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

namespace occlust::metrics {

using linalg::RealMatrix;

/// Pair counts against the ground truth. A pair is "same cluster" only when
/// both points carry the same non-noise label; dbScan noise points therefore
/// behave as singleton clusters.
struct PairConfusion {
  std::uint64_t tp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;

  std::uint64_t total() const noexcept { return tp + tn + fp + fn; }
  friend bool operator==(const PairConfusion&, const PairConfusion&) = default;
};

/// Cluster-by-class counts. Noise points get one private row each.
struct Contingency {
  std::vector<std::vector<std::int64_t>> counts;  // [cluster][class]
  std::vector<std::int64_t> cluster_sizes;
  std::vector<std::int64_t> class_sizes;
  std::int64_t n = 0;
};

Contingency contingency(std::span<const int> pred, std::span<const int> truth);

PairConfusion pair_confusion(std::span<const int> pred, std::span<const int> truth);
PairConfusion pair_confusion(const cluster::ClusterAssignment& pred, const io::GroundTruth& truth);

/// Rand accuracy (TP + TN) / total.
double accuracy(const PairConfusion& pc);

struct Youden {
  double sensitivity = 0.0;
  double specificity = 0.0;
  double index = 0.0;
};
Youden youden(const PairConfusion& pc);

/// Natural-log mutual information of the two labelings.
double mutual_information(std::span<const int> pred, std::span<const int> truth);

/// Entropy (nats) of a labeling, noise points counted as singletons.
double entropy(std::span<const int> labels);

/// Chance-corrected score; `degenerate` marks a zero denominator, in which
/// case value is 0.
struct AdjustedScore {
  double value = 0.0;
  bool degenerate = false;
};

AdjustedScore adjusted_rand_index(std::span<const int> pred, std::span<const int> truth);

/// Exact expected mutual information under the hypergeometric model.
double expected_mutual_information(const Contingency& table);

AdjustedScore adjusted_mutual_information(std::span<const int> pred, std::span<const int> truth);

/// Per-point silhouette on `distances`. Noise points hold NaN; points in a
/// singleton cluster hold 0.
std::vector<double> silhouette_values(const RealMatrix& distances, std::span<const int> pred);

/// Mean over non-noise points.
double silhouette_mean(const RealMatrix& distances, std::span<const int> pred);

struct MetricReport {
  double ac = 0.0;
  double ari = 0.0;
  double yi = 0.0;
  double mi = 0.0;
  double ami = 0.0;
  double silhouette_mean = 0.0;  // NaN when undefined
  bool ari_degenerate = false;
  bool ami_degenerate = false;
};

/// All supervised scores plus mean silhouette on `distances`. Undefined
/// scores are reported as NaN instead of aborting.
MetricReport evaluate(const RealMatrix& distances, std::span<const int> pred, std::span<const int> truth);

struct SilhouetteSelection {
  int k = 0;           // cluster count of the selected run
  double param = 0.0;  // requested k, or eps for dbScan
  cluster::ClusterAssignment assignment;
  double mean_silhouette = 0.0;
};

/// Runs `clusterer` for every value of `params` and keeps the highest mean
/// silhouette on `distances`; ties keep the earlier parameter.
SilhouetteSelection select_by_silhouette(
    const RealMatrix& distances, std::span<const double> params,
    const std::function<cluster::ClusterAssignment(double)>& clusterer);

/// Cluster-count selection for k-based algorithms over k_range.
SilhouetteSelection select_k_by_silhouette(
    const RealMatrix& distances, std::span<const int> k_range,
    const std::function<cluster::ClusterAssignment(int)>& clusterer);

}  // namespace occlust::metrics
