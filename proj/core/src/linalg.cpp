#include "occlust/linalg.hpp"

#include "occlust/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <string>

namespace occlust::linalg {

namespace {

void require_square(const RealMatrix& a, const char* what) {
  if (a.rows() < 1 || a.rows() != a.cols()) {
    fail(ErrorKind::validation, std::string(what) + " must be a non-empty square matrix");
  }
}

void normalize_signs(RealMatrix& vectors) {
  for (Eigen::Index c = 0; c < vectors.cols(); ++c) {
    Eigen::Index pivot = 0;
    vectors.col(c).cwiseAbs().maxCoeff(&pivot);
    if (vectors(pivot, c) < 0.0) vectors.col(c) *= -1.0;
  }
}

EigenPairs select_pairs(const RealVector& ascending_values, const RealMatrix& ascending_vectors,
                        EigenOrder order, int count) {
  const auto n = ascending_values.size();
  EigenPairs out;
  out.values.resize(count);
  out.vectors.resize(ascending_vectors.rows(), count);
  for (int c = 0; c < count; ++c) {
    const Eigen::Index src = order == EigenOrder::smallest ? c : n - 1 - c;
    out.values(c) = ascending_values(src);
    out.vectors.col(c) = ascending_vectors.col(src);
  }
  return out;
}

void require_count(int count, Eigen::Index n) {
  if (count < 1 || count > n) {
    fail(ErrorKind::parameter, "eigenpair count " + std::to_string(count) + " outside [1, " +
                                   std::to_string(n) + "]");
  }
}

}  // namespace

bool NeighborGraph::has_edge(int i, int j) const {
  const auto adj = neighbors(i);
  const auto it = std::lower_bound(adj.begin(), adj.end(), j,
                                   [](const Neighbor& nb, int idx) { return nb.index < idx; });
  return it != adj.end() && it->index == j;
}

std::vector<Edge> NeighborGraph::edges() const {
  std::vector<Edge> out;
  for (int i = 0; i < size(); ++i) {
    for (const auto& nb : neighbors(i)) {
      if (nb.index > i) out.push_back({i, nb.index, nb.weight});
    }
  }
  return out;
}

RealMatrix NeighborGraph::adjacency(bool binary) const {
  RealMatrix w = RealMatrix::Zero(size(), size());
  for (int i = 0; i < size(); ++i) {
    for (const auto& nb : neighbors(i)) w(i, nb.index) = binary ? 1.0 : nb.weight;
  }
  return w;
}

std::vector<int> NeighborGraph::components(int* count) const {
  std::vector<int> label(static_cast<std::size_t>(size()), -1);
  int next = 0;
  for (int start = 0; start < size(); ++start) {
    if (label[start] != -1) continue;
    std::queue<int> frontier;
    frontier.push(start);
    label[start] = next;
    while (!frontier.empty()) {
      const int u = frontier.front();
      frontier.pop();
      for (const auto& nb : neighbors(u)) {
        if (label[nb.index] == -1) {
          label[nb.index] = next;
          frontier.push(nb.index);
        }
      }
    }
    ++next;
  }
  if (count != nullptr) *count = next;
  return label;
}

void require_finite(const RealMatrix& m, const char* what) {
  if (!m.allFinite()) fail(ErrorKind::validation, std::string(what) + " contains non-finite entries");
}

bool is_symmetric(const RealMatrix& a, double tol) {
  if (a.rows() != a.cols()) return false;
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  return (a - a.transpose()).cwiseAbs().maxCoeff() <= tol * scale;
}

RealMatrix pairwise_distances(const RealMatrix& x) {
  if (x.rows() < 1 || x.cols() < 1) fail(ErrorKind::validation, "data matrix is empty");
  require_finite(x, "data matrix");
  // Columns of the transpose are contiguous points.
  const RealMatrix points = x.transpose();
  const Eigen::Index n = points.cols();
  RealMatrix d = RealMatrix::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const double dist = (points.col(i) - points.col(j)).norm();
      d(i, j) = dist;
      d(j, i) = dist;
    }
  }
  return d;
}

std::vector<std::vector<int>> nearest_neighbors(const RealMatrix& distances, int k) {
  require_square(distances, "distance matrix");
  const int n = static_cast<int>(distances.rows());
  if (k < 1 || k >= n) {
    fail(ErrorKind::parameter,
         "neighbour count k=" + std::to_string(k) + " must satisfy 1 <= k < n=" + std::to_string(n));
  }
  std::vector<std::vector<int>> out(static_cast<std::size_t>(n));
  std::vector<int> order(static_cast<std::size_t>(n - 1));
  for (int i = 0; i < n; ++i) {
    int pos = 0;
    for (int j = 0; j < n; ++j) {
      if (j != i) order[pos++] = j;
    }
    const auto closer = [&](int a, int b) {
      const double da = distances(i, a);
      const double db = distances(i, b);
      return da < db || (da == db && a < b);
    };
    std::partial_sort(order.begin(), order.begin() + k, order.end(), closer);
    out[i].assign(order.begin(), order.begin() + k);
  }
  return out;
}

NeighborGraph knn_graph(const RealMatrix& distances, int k) {
  const auto nearest = nearest_neighbors(distances, k);
  const int n = static_cast<int>(distances.rows());
  NeighborGraph graph(n, k);
  for (int i = 0; i < n; ++i) {
    for (int j : nearest[i]) {
      graph.adjacency_[i].push_back({j, distances(i, j)});
      graph.adjacency_[j].push_back({i, distances(i, j)});
    }
  }
  for (auto& adj : graph.adjacency_) {
    std::sort(adj.begin(), adj.end(),
              [](const auto& a, const auto& b) { return a.index < b.index; });
    adj.erase(std::unique(adj.begin(), adj.end(),
                          [](const auto& a, const auto& b) { return a.index == b.index; }),
              adj.end());
  }
  return graph;
}

EigenPairs sym_eig(const RealMatrix& a, EigenOrder order, int count) {
  require_square(a, "eigenproblem matrix");
  require_finite(a, "eigenproblem matrix");
  if (!is_symmetric(a)) fail(ErrorKind::validation, "eigenproblem matrix is not symmetric");
  require_count(count, a.rows());

  const RealMatrix sym = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<RealMatrix> solver(sym, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) fail(ErrorKind::numerical, "symmetric eigensolver did not converge");
  auto pairs = select_pairs(solver.eigenvalues(), solver.eigenvectors(), order, count);
  normalize_signs(pairs.vectors);
  return pairs;
}

EigenPairs gen_eig(const RealMatrix& a, const RealMatrix& b, EigenOrder order, int count) {
  require_square(a, "eigenproblem matrix");
  require_square(b, "metric matrix");
  if (a.rows() != b.rows()) fail(ErrorKind::validation, "generalized eigenproblem size mismatch");
  require_finite(a, "eigenproblem matrix");
  require_finite(b, "metric matrix");
  if (!is_symmetric(a)) fail(ErrorKind::validation, "eigenproblem matrix is not symmetric");
  if (!is_symmetric(b)) fail(ErrorKind::validation, "metric matrix is not symmetric");
  require_count(count, a.rows());

  const RealMatrix b_sym = 0.5 * (b + b.transpose());
  Eigen::LLT<RealMatrix> chol(b_sym);
  if (chol.info() != Eigen::Success) {
    fail(ErrorKind::numerical, "metric matrix is not positive definite (Cholesky failed)");
  }
  const auto lower = chol.matrixL();
  // C = L^-1 A L^-T
  const RealMatrix a_sym = 0.5 * (a + a.transpose());
  const RealMatrix left = lower.solve(a_sym);
  RealMatrix reduced = lower.solve(left.transpose()).transpose();
  reduced = 0.5 * (reduced + reduced.transpose());

  Eigen::SelfAdjointEigenSolver<RealMatrix> solver(reduced, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) fail(ErrorKind::numerical, "symmetric eigensolver did not converge");
  auto pairs = select_pairs(solver.eigenvalues(), solver.eigenvectors(), order, count);
  pairs.vectors = chol.matrixU().solve(pairs.vectors);
  normalize_signs(pairs.vectors);
  return pairs;
}

}  // namespace occlust::linalg
