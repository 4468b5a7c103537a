#include "occlust/metrics.hpp"

#include "occlust/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

namespace occlust::metrics {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void require_same_length(std::span<const int> pred, std::span<const int> truth) {
  if (pred.size() != truth.size()) {
    fail(ErrorKind::contract, "labelings differ in length (" + std::to_string(pred.size()) + " vs " +
                                  std::to_string(truth.size()) + ")");
  }
}

double choose2(std::int64_t m) { return 0.5 * static_cast<double>(m) * static_cast<double>(m - 1); }

std::uint64_t choose2_exact(std::int64_t m) {
  return m < 2 ? 0 : static_cast<std::uint64_t>(m) * static_cast<std::uint64_t>(m - 1) / 2;
}

double entropy_of(const std::vector<std::int64_t>& sizes, std::int64_t n) {
  double h = 0.0;
  for (auto s : sizes) {
    if (s > 0) {
      const double p = static_cast<double>(s) / static_cast<double>(n);
      h -= p * std::log(p);
    }
  }
  return h;
}

}  // namespace

Contingency contingency(std::span<const int> pred, std::span<const int> truth) {
  require_same_length(pred, truth);
  std::map<int, int> cluster_index;
  std::map<int, int> class_index;
  for (int t : truth) {
    if (t < 0) fail(ErrorKind::contract, "ground-truth labels must be non-negative");
    class_index.emplace(t, 0);
  }
  int next = 0;
  for (auto& [label, idx] : class_index) idx = next++;
  const int classes = next;

  std::vector<int> rows(pred.size());
  next = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] < 0) {
      rows[i] = next++;  // noise: private singleton row
    } else {
      const auto [it, inserted] = cluster_index.emplace(pred[i], next);
      if (inserted) ++next;
      rows[i] = it->second;
    }
  }

  Contingency table;
  table.n = static_cast<std::int64_t>(pred.size());
  table.counts.assign(static_cast<std::size_t>(next), std::vector<std::int64_t>(classes, 0));
  table.cluster_sizes.assign(static_cast<std::size_t>(next), 0);
  table.class_sizes.assign(static_cast<std::size_t>(classes), 0);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const int c = class_index.at(truth[i]);
    ++table.counts[rows[i]][c];
    ++table.cluster_sizes[rows[i]];
    ++table.class_sizes[c];
  }
  return table;
}

PairConfusion pair_confusion(std::span<const int> pred, std::span<const int> truth) {
  const auto table = contingency(pred, truth);
  std::uint64_t same_both = 0;
  for (const auto& row : table.counts) {
    for (auto v : row) same_both += choose2_exact(v);
  }
  std::uint64_t same_cluster = 0;
  for (auto a : table.cluster_sizes) same_cluster += choose2_exact(a);
  std::uint64_t same_class = 0;
  for (auto b : table.class_sizes) same_class += choose2_exact(b);

  PairConfusion pc;
  pc.tp = same_both;
  pc.fp = same_cluster - same_both;
  pc.fn = same_class - same_both;
  pc.tn = choose2_exact(table.n) - pc.tp - pc.fp - pc.fn;
  return pc;
}

PairConfusion pair_confusion(const cluster::ClusterAssignment& pred, const io::GroundTruth& truth) {
  return pair_confusion(pred.labels, truth.labels);
}

double accuracy(const PairConfusion& pc) {
  if (pc.total() == 0) fail(ErrorKind::undefined_metric, "accuracy needs at least one pair");
  return static_cast<double>(pc.tp + pc.tn) / static_cast<double>(pc.total());
}

Youden youden(const PairConfusion& pc) {
  if (pc.tp + pc.fn == 0) fail(ErrorKind::undefined_metric, "Youden index: no same-class pairs");
  if (pc.tn + pc.fp == 0) fail(ErrorKind::undefined_metric, "Youden index: no different-class pairs");
  Youden y;
  y.sensitivity = static_cast<double>(pc.tp) / static_cast<double>(pc.tp + pc.fn);
  y.specificity = static_cast<double>(pc.tn) / static_cast<double>(pc.tn + pc.fp);
  y.index = y.sensitivity + y.specificity - 1.0;
  return y;
}

double mutual_information(std::span<const int> pred, std::span<const int> truth) {
  const auto table = contingency(pred, truth);
  const auto n = static_cast<double>(table.n);
  double mi = 0.0;
  for (std::size_t i = 0; i < table.counts.size(); ++i) {
    for (std::size_t j = 0; j < table.class_sizes.size(); ++j) {
      const auto nij = table.counts[i][j];
      if (nij == 0) continue;
      const double a = static_cast<double>(table.cluster_sizes[i]);
      const double b = static_cast<double>(table.class_sizes[j]);
      mi += static_cast<double>(nij) / n * std::log(n * static_cast<double>(nij) / (a * b));
    }
  }
  return std::max(mi, 0.0);
}

double entropy(std::span<const int> labels) {
  const std::vector<int> zeros(labels.size(), 0);
  const auto table = contingency(labels, zeros);
  return entropy_of(table.cluster_sizes, table.n);
}

AdjustedScore adjusted_rand_index(std::span<const int> pred, std::span<const int> truth) {
  const auto table = contingency(pred, truth);
  double index = 0.0;
  for (const auto& row : table.counts) {
    for (auto v : row) index += choose2(v);
  }
  double sum_a = 0.0;
  for (auto a : table.cluster_sizes) sum_a += choose2(a);
  double sum_b = 0.0;
  for (auto b : table.class_sizes) sum_b += choose2(b);
  const double pairs = choose2(table.n);
  if (pairs <= 0.0) return {0.0, true};
  const double expected = sum_a * sum_b / pairs;
  const double max_index = 0.5 * (sum_a + sum_b);
  const double denom = max_index - expected;
  if (denom == 0.0) return {0.0, true};
  return {(index - expected) / denom, false};
}

double expected_mutual_information(const Contingency& table) {
  const std::int64_t n = table.n;
  if (n == 0) return 0.0;
  std::vector<double> log_fact(static_cast<std::size_t>(n + 1));
  for (std::int64_t v = 0; v <= n; ++v) log_fact[v] = std::lgamma(static_cast<double>(v) + 1.0);
  const auto nd = static_cast<double>(n);
  double emi = 0.0;
  for (auto a : table.cluster_sizes) {
    for (auto b : table.class_sizes) {
      const std::int64_t lo = std::max<std::int64_t>(1, a + b - n);
      const std::int64_t hi = std::min(a, b);
      const double fixed = log_fact[a] + log_fact[b] + log_fact[n - a] + log_fact[n - b] - log_fact[n];
      for (std::int64_t nij = lo; nij <= hi; ++nij) {
        const double log_p =
            fixed - log_fact[nij] - log_fact[a - nij] - log_fact[b - nij] - log_fact[n - a - b + nij];
        const double x = static_cast<double>(nij);
        emi += x / nd * std::log(nd * x / (static_cast<double>(a) * static_cast<double>(b))) * std::exp(log_p);
      }
    }
  }
  return emi;
}

AdjustedScore adjusted_mutual_information(std::span<const int> pred, std::span<const int> truth) {
  const auto table = contingency(pred, truth);
  const double mi = mutual_information(pred, truth);
  const double emi = expected_mutual_information(table);
  const double h_pred = entropy_of(table.cluster_sizes, table.n);
  const double h_truth = entropy_of(table.class_sizes, table.n);
  const double denom = 0.5 * (h_pred + h_truth) - emi;
  if (std::abs(denom) < 1e-12) return {0.0, true};
  return {(mi - emi) / denom, false};
}

std::vector<double> silhouette_values(const RealMatrix& d, std::span<const int> pred) {
  const auto n = static_cast<Eigen::Index>(pred.size());
  if (d.rows() != n || d.cols() != n) {
    fail(ErrorKind::contract, "distance matrix does not match the labeling length");
  }
  std::map<int, int> index;
  for (int label : pred) {
    if (label >= 0) index.emplace(label, static_cast<int>(index.size()));
  }
  const int k = static_cast<int>(index.size());
  if (k < 2) fail(ErrorKind::undefined_metric, "silhouette needs at least two clusters");

  std::vector<int> cls(pred.size(), -1);
  std::vector<double> size(static_cast<std::size_t>(k), 0.0);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] >= 0) {
      cls[i] = index.at(pred[i]);
      size[cls[i]] += 1.0;
    }
  }
  std::vector<double> out(pred.size(), kNaN);
  std::vector<double> sums(static_cast<std::size_t>(k));
  for (Eigen::Index i = 0; i < n; ++i) {
    const int own = cls[i];
    if (own < 0) continue;
    if (size[own] <= 1.0) {
      out[i] = 0.0;
      continue;
    }
    std::fill(sums.begin(), sums.end(), 0.0);
    for (Eigen::Index j = 0; j < n; ++j) {
      if (cls[j] >= 0) sums[cls[j]] += d(i, j);
    }
    const double a = sums[own] / (size[own] - 1.0);
    double b = std::numeric_limits<double>::infinity();
    for (int c = 0; c < k; ++c) {
      if (c != own) b = std::min(b, sums[c] / size[c]);
    }
    const double m = std::max(a, b);
    out[i] = m > 0.0 ? (b - a) / m : 0.0;
  }
  return out;
}

double silhouette_mean(const RealMatrix& d, std::span<const int> pred) {
  const auto values = silhouette_values(d, pred);
  double sum = 0.0;
  int count = 0;
  for (double v : values) {
    if (!std::isnan(v)) {
      sum += v;
      ++count;
    }
  }
  return sum / count;
}

MetricReport evaluate(const RealMatrix& d, std::span<const int> pred, std::span<const int> truth) {
  MetricReport r;
  const auto pc = pair_confusion(pred, truth);
  r.ac = pc.total() > 0 ? accuracy(pc) : kNaN;
  r.yi = (pc.tp + pc.fn > 0 && pc.tn + pc.fp > 0) ? youden(pc).index : kNaN;
  r.mi = mutual_information(pred, truth);
  const auto ari = adjusted_rand_index(pred, truth);
  r.ari = ari.value;
  r.ari_degenerate = ari.degenerate;
  const auto ami = adjusted_mutual_information(pred, truth);
  r.ami = ami.value;
  r.ami_degenerate = ami.degenerate;
  try {
    r.silhouette_mean = silhouette_mean(d, pred);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::undefined_metric) throw;
    r.silhouette_mean = kNaN;
  }
  return r;
}

SilhouetteSelection select_by_silhouette(const RealMatrix& d, std::span<const double> params,
                                         const std::function<cluster::ClusterAssignment(double)>& clusterer) {
  if (params.empty()) fail(ErrorKind::parameter, "silhouette selection needs at least one candidate");
  SilhouetteSelection best;
  bool found = false;
  for (double p : params) {
    cluster::ClusterAssignment run;
    try {
      run = clusterer(p);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::parameter) throw;
      continue;
    }
    if (run.k < 2) continue;
    const double mean = silhouette_mean(d, run.labels);
    if (!found || mean > best.mean_silhouette) {
      found = true;
      best.k = run.k;
      best.param = p;
      best.mean_silhouette = mean;
      best.assignment = std::move(run);
    }
  }
  if (!found) fail(ErrorKind::selection, "silhouette is undefined for every candidate");
  return best;
}

SilhouetteSelection select_k_by_silhouette(const RealMatrix& d, std::span<const int> k_range,
                                           const std::function<cluster::ClusterAssignment(int)>& clusterer) {
  const auto n = static_cast<int>(d.rows());
  std::vector<double> params;
  params.reserve(k_range.size());
  for (int k : k_range) {
    if (k < 2 || k > n - 1) {
      fail(ErrorKind::parameter, "candidate k=" + std::to_string(k) + " outside [2, n-1]");
    }
    params.push_back(static_cast<double>(k));
  }
  std::sort(params.begin(), params.end());
  params.erase(std::unique(params.begin(), params.end()), params.end());
  return select_by_silhouette(d, params, [&](double k) { return clusterer(static_cast<int>(k)); });
}

}  // namespace occlust::metrics
