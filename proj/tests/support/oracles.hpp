#pragma once

// Brute-force reference implementations. Deliberately naive: every quantity
// is recomputed from its definition without sharing code with the library.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <utility>
#include <vector>

namespace oracle {

struct Pairs {
  std::uint64_t tp = 0, tn = 0, fp = 0, fn = 0;
};

// Same predicted cluster only if both labels are equal and not noise (-1).
inline Pairs pair_counts(const std::vector<int>& pred, const std::vector<int>& truth) {
  Pairs p;
  const std::size_t n = pred.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool same_pred = pred[i] == pred[j] && pred[i] >= 0;
      const bool same_truth = truth[i] == truth[j];
      if (same_pred && same_truth) ++p.tp;
      else if (same_pred) ++p.fp;
      else if (same_truth) ++p.fn;
      else ++p.tn;
    }
  }
  return p;
}

inline double accuracy(const Pairs& p) {
  return static_cast<double>(p.tp + p.tn) / static_cast<double>(p.tp + p.tn + p.fp + p.fn);
}

inline double youden(const Pairs& p) {
  return static_cast<double>(p.tp) / static_cast<double>(p.tp + p.fn) +
         static_cast<double>(p.tn) / static_cast<double>(p.tn + p.fp) - 1.0;
}

// Pair-count form of ARI (Hubert and Arabie), zero when the denominator vanishes.
inline double ari(const Pairs& p) {
  const long double tp = p.tp, tn = p.tn, fp = p.fp, fn = p.fn;
  const long double den = (tp + fn) * (fn + tn) + (tp + fp) * (fp + tn);
  if (den == 0) return 0.0;
  return static_cast<double>(2.0L * (tp * tn - fn * fp) / den);
}

// Noise points become private clusters.
inline std::vector<int> expand_noise(const std::vector<int>& labels) {
  std::vector<int> out(labels);
  int next = 1 + *std::max_element(labels.begin(), labels.end());
  for (auto& l : out) {
    if (l < 0) l = next++;
  }
  return out;
}

inline double entropy(const std::vector<int>& labels) {
  std::map<int, double> count;
  for (int l : labels) count[l] += 1.0;
  const double n = static_cast<double>(labels.size());
  double h = 0.0;
  for (const auto& [l, c] : count) h -= (c / n) * std::log(c / n);
  return h;
}

inline double mutual_information(const std::vector<int>& a, const std::vector<int>& b) {
  const double n = static_cast<double>(a.size());
  std::map<int, double> pa, pb;
  std::map<std::pair<int, int>, double> pab;
  for (std::size_t i = 0; i < a.size(); ++i) {
    pa[a[i]] += 1.0 / n;
    pb[b[i]] += 1.0 / n;
    pab[{a[i], b[i]}] += 1.0 / n;
  }
  double mi = 0.0;
  for (const auto& [key, p] : pab) mi += p * std::log(p / (pa[key.first] * pb[key.second]));
  return std::max(0.0, mi);
}

// E[MI] by summing the hypergeometric law cell by cell; probabilities come
// from running products instead of log-gamma.
inline double expected_mi(const std::vector<int>& a, const std::vector<int>& b) {
  std::map<int, int> ca, cb;
  for (int l : a) ++ca[l];
  for (int l : b) ++cb[l];
  const int n = static_cast<int>(a.size());
  const auto choose = [](int m, int r) {
    long double v = 1.0L;
    for (int i = 1; i <= r; ++i) v = v * (m - r + i) / i;
    return v;
  };
  long double emi = 0.0L;
  for (const auto& [la, ai] : ca) {
    for (const auto& [lb, bj] : cb) {
      const int lo = std::max(1, ai + bj - n);
      const int hi = std::min(ai, bj);
      for (int nij = lo; nij <= hi; ++nij) {
        const long double prob = choose(ai, nij) * choose(n - ai, bj - nij) / choose(n, bj);
        const long double term = static_cast<long double>(nij) / n *
                                 std::log(static_cast<long double>(n) * nij / (static_cast<long double>(ai) * bj));
        emi += prob * term;
      }
    }
  }
  return static_cast<double>(emi);
}

inline double ami(const std::vector<int>& a, const std::vector<int>& b) {
  const double mi = mutual_information(a, b);
  const double emi = expected_mi(a, b);
  const double den = 0.5 * (entropy(a) + entropy(b)) - emi;
  if (std::abs(den) < 1e-12) return 0.0;
  return (mi - emi) / den;
}

// Triple loop over points, clusters and members. Noise points yield NaN.
inline std::vector<double> silhouette(const Eigen::MatrixXd& d, const std::vector<int>& labels) {
  const int n = static_cast<int>(labels.size());
  std::set<int> clusters;
  for (int l : labels) {
    if (l >= 0) clusters.insert(l);
  }
  std::vector<double> s(n, std::numeric_limits<double>::quiet_NaN());
  for (int i = 0; i < n; ++i) {
    if (labels[i] < 0) continue;
    double a = 0.0;
    int own = 0;
    double b = std::numeric_limits<double>::infinity();
    for (int c : clusters) {
      double sum = 0.0;
      int members = 0;
      for (int j = 0; j < n; ++j) {
        if (labels[j] != c || j == i) continue;
        sum += d(i, j);
        ++members;
      }
      if (c == labels[i]) {
        a = sum;
        own = members;
      } else {
        b = std::min(b, sum / members);
      }
    }
    if (own == 0) {
      s[i] = 0.0;
      continue;
    }
    a /= own;
    s[i] = std::max(a, b) > 0.0 ? (b - a) / std::max(a, b) : 0.0;
  }
  return s;
}

inline Eigen::MatrixXd distances(const Eigen::MatrixXd& x) {
  const auto n = x.rows();
  Eigen::MatrixXd d(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      double acc = 0.0;
      for (Eigen::Index c = 0; c < x.cols(); ++c) acc += (x(i, c) - x(j, c)) * (x(i, c) - x(j, c));
      d(i, j) = std::sqrt(acc);
    }
  }
  return d;
}

inline std::vector<int> random_labels(int n, int classes, std::mt19937_64& rng, bool allow_noise = false) {
  std::uniform_int_distribution<int> pick(allow_noise ? -1 : 0, classes - 1);
  std::vector<int> out(static_cast<std::size_t>(n));
  for (auto& l : out) l = pick(rng);
  return out;
}

inline Eigen::MatrixXd random_matrix(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  return m;
}

inline Eigen::MatrixXd random_symmetric(int n, std::mt19937_64& rng) {
  const Eigen::MatrixXd a = random_matrix(n, n, rng);
  return 0.5 * (a + a.transpose());
}

inline Eigen::MatrixXd random_spd(int n, std::mt19937_64& rng) {
  const Eigen::MatrixXd a = random_matrix(n, n, rng);
  return a * a.transpose() + static_cast<double>(n) * Eigen::MatrixXd::Identity(n, n);
}

}  // namespace oracle
