#include "occlust/error.hpp"
#include "occlust/linalg.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

using namespace occlust;
using namespace occlust::linalg;

namespace {

RealMatrix points_1d(std::initializer_list<double> xs) {
  RealMatrix x(static_cast<Eigen::Index>(xs.size()), 1);
  Eigen::Index i = 0;
  for (double v : xs) x(i++, 0) = v;
  return x;
}

template <typename F>
ErrorKind kind_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no occlust::Error thrown";
  return ErrorKind::io;
}

}  // namespace

TEST(PairwiseDistances, ThreeFourFive) {
  RealMatrix x(2, 2);
  x << 0, 0, 3, 4;
  const auto d = pairwise_distances(x);
  EXPECT_DOUBLE_EQ(d(0, 1), 5.0);
  EXPECT_DOUBLE_EQ(d(1, 0), 5.0);
  EXPECT_EQ(d(0, 0), 0.0);
}

TEST(PairwiseDistances, CoincidentRows) {
  RealMatrix x(2, 3);
  x << 1, 2, 3, 1, 2, 3;
  EXPECT_EQ(pairwise_distances(x)(0, 1), 0.0);
}

TEST(PairwiseDistances, UnitRowsMatchDotProduct) {
  std::mt19937_64 rng(3);
  RealMatrix x = oracle::random_matrix(25, 16, rng);
  x.rowwise().normalize();
  const auto d = pairwise_distances(x);
  for (int i = 0; i < 25; ++i) {
    for (int j = 0; j < 25; ++j) {
      EXPECT_NEAR(d(i, j) * d(i, j), 2.0 - 2.0 * x.row(i).dot(x.row(j)), 1e-12);
    }
  }
}

TEST(PairwiseDistances, TriangleInequalityAndSymmetry) {
  std::mt19937_64 rng(4);
  const auto d = pairwise_distances(oracle::random_matrix(30, 5, rng));
  for (int i = 0; i < 30; ++i) {
    EXPECT_EQ(d(i, i), 0.0);
    for (int j = 0; j < 30; ++j) {
      EXPECT_EQ(d(i, j), d(j, i));
      for (int k = 0; k < 30; ++k) EXPECT_LE(d(i, k), d(i, j) + d(j, k) + 1e-9);
    }
  }
}

TEST(PairwiseDistances, RejectsNonFinite) {
  RealMatrix x = RealMatrix::Zero(2, 2);
  x(1, 1) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_EQ(kind_of([&] { pairwise_distances(x); }), ErrorKind::validation);
}

TEST(KnnGraph, UnionSymmetrization) {
  const auto g = knn_graph(pairwise_distances(points_1d({0, 1, 3})), 1);
  const auto edges = g.edges();
  ASSERT_EQ(edges.size(), 2u);
  EXPECT_EQ(edges[0].i, 0);
  EXPECT_EQ(edges[0].j, 1);
  EXPECT_EQ(edges[1].i, 1);
  EXPECT_EQ(edges[1].j, 2);
  EXPECT_DOUBLE_EQ(edges[1].weight, 2.0);
  EXPECT_TRUE(g.has_edge(2, 1));
}

TEST(KnnGraph, FullNeighbourhoodIsComplete) {
  std::mt19937_64 rng(5);
  const int n = 7;
  const auto g = knn_graph(pairwise_distances(oracle::random_matrix(n, 2, rng)), n - 1);
  EXPECT_EQ(g.edges().size(), static_cast<std::size_t>(n * (n - 1) / 2));
}

TEST(KnnGraph, ContainsExhaustiveNearestNeighbours) {
  std::mt19937_64 rng(6);
  const int n = 20;
  const int k = 4;
  const auto d = oracle::distances(oracle::random_matrix(n, 3, rng));
  const auto g = knn_graph(d, k);
  for (int i = 0; i < n; ++i) {
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::erase(order, i);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return d(i, a) < d(i, b); });
    for (int r = 0; r < k; ++r) EXPECT_TRUE(g.has_edge(i, order[r])) << i << " -> " << order[r];
    EXPECT_GE(g.degree(i), k);
    EXPECT_FALSE(g.has_edge(i, i));
  }
}

TEST(KnnGraph, TiesPreferLowerIndex) {
  // Points 1 and 2 are both at distance 1 from point 0.
  const auto nn = nearest_neighbors(pairwise_distances(points_1d({0, 1, -1})), 1);
  EXPECT_EQ(nn[0], std::vector<int>{1});
}

TEST(KnnGraph, RejectsKOutOfRange) {
  const auto d = pairwise_distances(points_1d({0, 1, 2}));
  EXPECT_EQ(kind_of([&] { knn_graph(d, 3); }), ErrorKind::parameter);
  EXPECT_EQ(kind_of([&] { knn_graph(d, 0); }), ErrorKind::parameter);
}

TEST(KnnGraph, Components) {
  const auto g = knn_graph(pairwise_distances(points_1d({0, 1, 10, 11})), 1);
  int count = 0;
  const auto labels = g.components(&count);
  EXPECT_EQ(count, 2);
  EXPECT_EQ(labels, (std::vector<int>{0, 0, 1, 1}));
}

TEST(SymEig, Identity) {
  const auto e = sym_eig(RealMatrix::Identity(3, 3), EigenOrder::largest, 3);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(e.values(i), 1.0, 1e-14);
}

TEST(SymEig, DiagonalSmallest) {
  RealMatrix a = RealVector::LinSpaced(3, 1, 3).asDiagonal();
  const auto e = sym_eig(a, EigenOrder::smallest, 2);
  ASSERT_EQ(e.values.size(), 2);
  EXPECT_NEAR(e.values(0), 1.0, 1e-14);
  EXPECT_NEAR(e.values(1), 2.0, 1e-14);
}

TEST(SymEig, TwoByTwo) {
  RealMatrix a(2, 2);
  a << 2, 1, 1, 2;
  const auto e = sym_eig(a, EigenOrder::largest, 2);
  EXPECT_NEAR(e.values(0), 3.0, 1e-13);
  EXPECT_NEAR(e.values(1), 1.0, 1e-13);
}

TEST(SymEig, ResidualOrthogonalityAndTrace) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 5 + trial * 3;
    const RealMatrix a = oracle::random_symmetric(n, rng);
    const auto e = sym_eig(a, EigenOrder::smallest, n);
    EXPECT_NEAR(e.values.sum(), a.trace(), 1e-7);
    for (int c = 0; c < n; ++c) {
      EXPECT_LE((a * e.vectors.col(c) - e.values(c) * e.vectors.col(c)).norm(), 1e-8 * a.norm());
      if (c > 0) EXPECT_LE(e.values(c - 1), e.values(c));
    }
    EXPECT_LE((e.vectors.transpose() * e.vectors - RealMatrix::Identity(n, n)).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(SymEig, RejectsAsymmetric) {
  RealMatrix a(2, 2);
  a << 1, 2, 0, 1;
  EXPECT_EQ(kind_of([&] { sym_eig(a, EigenOrder::largest, 1); }), ErrorKind::validation);
}

TEST(GenEig, DecoupledRatios) {
  RealMatrix a = RealMatrix::Zero(2, 2);
  a.diagonal() << 2, 6;
  RealMatrix b = RealMatrix::Zero(2, 2);
  b.diagonal() << 1, 2;
  const auto e = gen_eig(a, b, EigenOrder::smallest, 2);
  EXPECT_NEAR(e.values(0), 2.0, 1e-13);
  EXPECT_NEAR(e.values(1), 3.0, 1e-13);
}

TEST(GenEig, IdentityMetricMatchesStandardProblem) {
  std::mt19937_64 rng(9);
  const RealMatrix a = oracle::random_symmetric(12, rng);
  const auto g = gen_eig(a, RealMatrix::Identity(12, 12), EigenOrder::largest, 12);
  const auto s = sym_eig(a, EigenOrder::largest, 12);
  EXPECT_LE((g.values - s.values).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(GenEig, ResidualAndMetricOrthonormality) {
  std::mt19937_64 rng(10);
  const int n = 10;
  const RealMatrix a = oracle::random_spd(n, rng);
  const RealMatrix b = oracle::random_spd(n, rng);
  const auto e = gen_eig(a, b, EigenOrder::smallest, n);
  for (int c = 0; c < n; ++c) {
    const RealVector v = e.vectors.col(c);
    EXPECT_LE((a * v - e.values(c) * b * v).norm(), 1e-8 * (a.norm() + b.norm()));
  }
  EXPECT_LE((e.vectors.transpose() * b * e.vectors - RealMatrix::Identity(n, n)).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(GenEig, RejectsIndefiniteMetric) {
  RealMatrix b(2, 2);
  b << 1, 0, 0, -1;
  EXPECT_EQ(kind_of([&] { gen_eig(RealMatrix::Identity(2, 2), b, EigenOrder::smallest, 1); }), ErrorKind::numerical);
}
