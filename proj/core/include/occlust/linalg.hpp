#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

namespace occlust::linalg {

using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

enum class EigenOrder { smallest, largest };

struct Edge {
  int i = 0;
  int j = 0;
  double weight = 0.0;
};

/// Symmetric k-nearest-neighbour graph. Adjacency lists are sorted by
/// neighbour index and never contain the node itself.
class NeighborGraph {
 public:
  struct Neighbor {
    int index = 0;
    double weight = 0.0;
  };

  NeighborGraph(int n, int k) : k_(k), adjacency_(static_cast<std::size_t>(n)) {}

  int size() const noexcept { return static_cast<int>(adjacency_.size()); }
  int k() const noexcept { return k_; }

  std::span<const Neighbor> neighbors(int node) const {
    return adjacency_[static_cast<std::size_t>(node)];
  }
  int degree(int node) const { return static_cast<int>(neighbors(node).size()); }
  bool has_edge(int i, int j) const;

  /// Undirected edges with i < j, ordered lexicographically.
  std::vector<Edge> edges() const;

  /// Dense adjacency. With binary = true every edge has weight 1.
  RealMatrix adjacency(bool binary) const;

  /// Labels of connected components (0-based, in order of lowest member).
  std::vector<int> components(int* count = nullptr) const;

 private:
  friend NeighborGraph knn_graph(const RealMatrix& distances, int k);

  int k_;
  std::vector<std::vector<Neighbor>> adjacency_;
};

struct EigenPairs {
  RealVector values;
  RealMatrix vectors;  // one column per value
};

/// Throws ErrorKind::validation if any entry is NaN or infinite.
void require_finite(const RealMatrix& m, const char* what);

/// Symmetric within `tol` scaled by max(1, max |a_ij|).
bool is_symmetric(const RealMatrix& a, double tol = 1e-10);

/// Euclidean distances between the rows of `x`.
RealMatrix pairwise_distances(const RealMatrix& x);

/// For every point, its k nearest other points ordered by (distance, index).
std::vector<std::vector<int>> nearest_neighbors(const RealMatrix& distances, int k);

/// kNN graph symmetrised by edge union; edge weight is the distance.
NeighborGraph knn_graph(const RealMatrix& distances, int k);

/// Dense symmetric eigensolver. Eigenvectors are sign-normalised so that the
/// entry of largest magnitude is positive.
EigenPairs sym_eig(const RealMatrix& a, EigenOrder order, int count);

/// A v = lambda B v with B symmetric positive definite, reduced to a standard
/// problem through the Cholesky factor of B. Vectors are B-orthonormal.
EigenPairs gen_eig(const RealMatrix& a, const RealMatrix& b, EigenOrder order, int count);

}  // namespace occlust::linalg
