#include "occlust/dimred.hpp"

#include "occlust/error.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <string>

namespace occlust::dimred {

using linalg::EigenOrder;
using linalg::RealVector;

namespace {

constexpr double kMetricRidge = 1e-8;
constexpr double kRangeTolerance = 1e-10;
constexpr double kLleGramRidge = 1e-3;
constexpr double kEntropyTolerance = 1e-5;
constexpr int kMaxBisectionSteps = 200;

void require_dim(bool ok, std::string_view method, int target_dim, const std::string& bound) {
  if (!ok) {
    fail(ErrorKind::parameter, std::string(method) + ": target dimension " + std::to_string(target_dim) +
                                   " violates " + bound);
  }
}

RealMatrix centered(const RealMatrix& x) {
  return x.rowwise() - x.colwise().mean();
}

ReducedData wrap(RealMatrix y, Method method, int target_dim, int source_dim, int k_nn = 0) {
  ReducedData out;
  out.y = std::move(y);
  out.spec.method = method;
  out.spec.target_dim = target_dim;
  if (k_nn > 0) out.spec.k_nn = k_nn;
  out.source_dim = source_dim;
  if (!out.y.allFinite()) {
    fail(ErrorKind::numerical, std::string(to_string(method)) + " produced non-finite coordinates");
  }
  return out;
}

void check_input(const RealMatrix& x, const char* what) {
  if (x.rows() < 2 || x.cols() < 1) fail(ErrorKind::validation, std::string(what) + " needs at least two rows");
  linalg::require_finite(x, what);
}

}  // namespace

std::string_view to_string(Method m) noexcept {
  switch (m) {
    case Method::pca: return "PCA";
    case Method::mds: return "MDS";
    case Method::le: return "LE";
    case Method::lle: return "LLE";
    case Method::lpp: return "LPP";
    case Method::npe: return "NPE";
    case Method::tsne: return "TSNE";
  }
  return "?";
}

std::optional<Method> parse_method(std::string_view name) {
  for (Method m : {Method::pca, Method::mds, Method::le, Method::lle, Method::lpp, Method::npe,
                   Method::tsne}) {
    if (name == to_string(m)) return m;
  }
  if (name == "t-SNE" || name == "tSNE") return Method::tsne;
  return std::nullopt;
}

bool is_eigen_based(Method m) noexcept { return m != Method::tsne; }

ReducedData pca(const RealMatrix& x, int target_dim) {
  check_input(x, "PCA input");
  const int n = static_cast<int>(x.rows());
  const int m1 = static_cast<int>(x.cols());
  require_dim(target_dim >= 1 && target_dim <= std::min(n - 1, m1), "PCA", target_dim,
              "1 <= m2 <= min(n-1, m1)");
  const RealMatrix xc = centered(x);
  const RealMatrix cov = (xc.transpose() * xc) / static_cast<double>(n - 1);
  const auto pairs = linalg::sym_eig(cov, EigenOrder::largest, target_dim);
  return wrap(xc * pairs.vectors, Method::pca, target_dim, m1);
}

ReducedData mds(const RealMatrix& distances, int target_dim) {
  check_input(distances, "MDS distance matrix");
  const int n = static_cast<int>(distances.rows());
  if (distances.cols() != n || !linalg::is_symmetric(distances, 1e-9)) {
    fail(ErrorKind::validation, "MDS needs a symmetric distance matrix");
  }
  if (distances.diagonal().cwiseAbs().maxCoeff() > 1e-12) {
    fail(ErrorKind::validation, "MDS distance matrix has a non-zero diagonal");
  }
  require_dim(target_dim >= 1 && target_dim <= n - 1, "MDS", target_dim, "1 <= m2 <= n-1");

  const RealMatrix sq = distances.cwiseProduct(distances);
  const RealVector row_mean = sq.rowwise().mean();
  const double grand_mean = sq.mean();
  RealMatrix gram(n, n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      gram(i, j) = -0.5 * (sq(i, j) - row_mean(i) - row_mean(j) + grand_mean);
    }
  }
  gram = 0.5 * (gram + gram.transpose());
  const auto pairs = linalg::sym_eig(gram, EigenOrder::largest, target_dim);
  const double scale = std::max(1.0, gram.cwiseAbs().maxCoeff());
  if (pairs.values(0) <= 1e-12 * scale) {
    fail(ErrorKind::degeneracy, "MDS: double-centred matrix has no positive eigenvalue");
  }
  RealMatrix y = pairs.vectors;
  for (int c = 0; c < target_dim; ++c) y.col(c) *= std::sqrt(std::max(pairs.values(c), 0.0));
  return wrap(std::move(y), Method::mds, target_dim, n);
}

namespace detail {

GraphLaplacian binary_laplacian(const RealMatrix& distances, int k_nn) {
  const auto graph = linalg::knn_graph(distances, k_nn);
  GraphLaplacian out;
  const RealMatrix w = graph.adjacency(true);
  const RealVector deg = w.rowwise().sum();
  out.degree = deg.asDiagonal();
  out.laplacian = out.degree - w;
  return out;
}

RealMatrix lle_weights(const RealMatrix& x, int k_nn) {
  check_input(x, "LLE input");
  if (k_nn < 2) fail(ErrorKind::parameter, "LLE needs k_nn >= 2");
  const int n = static_cast<int>(x.rows());
  const int m1 = static_cast<int>(x.cols());
  const auto nearest = linalg::nearest_neighbors(linalg::pairwise_distances(x), k_nn);

  RealMatrix weights = RealMatrix::Zero(n, n);
  RealMatrix z(k_nn, m1);
  RealMatrix kkt(k_nn + 1, k_nn + 1);
  RealVector rhs = RealVector::Zero(k_nn + 1);
  rhs(k_nn) = 1.0;
  for (int i = 0; i < n; ++i) {
    for (int a = 0; a < k_nn; ++a) z.row(a) = x.row(nearest[i][a]) - x.row(i);
    RealMatrix gram = z * z.transpose();
    const double trace = gram.trace();
    if (k_nn > m1) gram.diagonal().array() += kLleGramRidge * trace / k_nn;
    // Sum-to-one constrained least squares through its KKT system; the
    // solution is scale invariant so the Gram matrix is normalised first.
    if (trace > 0.0) gram /= trace / k_nn;
    kkt.topLeftCorner(k_nn, k_nn) = gram;
    kkt.topRightCorner(k_nn, 1).setOnes();
    kkt.bottomLeftCorner(1, k_nn).setOnes();
    kkt(k_nn, k_nn) = 0.0;
    Eigen::FullPivLU<RealMatrix> lu(kkt);
    lu.setThreshold(1e-12);
    if (!lu.isInvertible()) {
      fail(ErrorKind::numerical, "LLE: singular regularised Gram matrix at point " + std::to_string(i));
    }
    const RealVector sol = lu.solve(rhs);
    for (int a = 0; a < k_nn; ++a) weights(i, nearest[i][a]) = sol(a);
  }
  return weights;
}

RealMatrix lle_cost_matrix(const RealMatrix& weights) {
  const RealMatrix r = RealMatrix::Identity(weights.rows(), weights.cols()) - weights;
  RealMatrix m = r.transpose() * r;
  return 0.5 * (m + m.transpose());
}

RealMatrix regularize_metric(const RealMatrix& b) {
  const double trace = b.trace();
  RealMatrix out = 0.5 * (b + b.transpose());
  out.diagonal().array() += kMetricRidge * (trace > 0.0 ? trace : 1.0);
  return out;
}

// Solves Xc^T A Xc a = lambda Xc^T B Xc a for the smallest pairs. When the
// data spans fewer than m1 directions but at least target_dim, the problem is
// solved inside that span so the null space cannot produce spurious zeros.
RealMatrix projected_directions(const RealMatrix& xc, const RealMatrix& a_mat, const RealMatrix& b_mat,
                                int target_dim) {
  const Eigen::SelfAdjointEigenSolver<RealMatrix> gram(xc.transpose() * xc);
  const auto& values = gram.eigenvalues();
  const double top = values.size() > 0 ? values.maxCoeff() : 0.0;
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (top > 0.0 && values(i) > kRangeTolerance * top) ++rank;
  }
  RealMatrix basis;
  const bool project = rank >= target_dim && rank < xc.cols();
  if (project) basis = gram.eigenvectors().rightCols(rank);
  const RealMatrix z = project ? RealMatrix(xc * basis) : xc;
  RealMatrix a = z.transpose() * a_mat * z;
  a = 0.5 * (a + a.transpose());
  const RealMatrix b = regularize_metric(z.transpose() * b_mat * z);
  const RealMatrix directions = linalg::gen_eig(a, b, EigenOrder::smallest, target_dim).vectors;
  return project ? RealMatrix(basis * directions) : directions;
}

RealMatrix lpp_directions(const RealMatrix& xc, int target_dim, int k_nn) {
  const auto graph = binary_laplacian(linalg::pairwise_distances(xc), k_nn);
  return projected_directions(xc, graph.laplacian, graph.degree, target_dim);
}

RealMatrix npe_directions(const RealMatrix& xc, int target_dim, int k_nn) {
  const RealMatrix cost = lle_cost_matrix(lle_weights(xc, k_nn));
  const Eigen::Index n = xc.rows();
  return projected_directions(xc, cost, RealMatrix::Identity(n, n), target_dim);
}

}  // namespace detail

ReducedData le(const RealMatrix& distances, int target_dim, int k_nn) {
  check_input(distances, "LE distance matrix");
  const int n = static_cast<int>(distances.rows());
  require_dim(target_dim >= 1 && target_dim <= n - 1, "LE", target_dim, "1 <= m2 <= n-1");

  const auto graph = linalg::knn_graph(distances, k_nn);
  int components = 0;
  graph.components(&components);
  if (components > target_dim + 1) {
    fail(ErrorKind::degeneracy, "LE: kNN graph has " + std::to_string(components) +
                                    " connected components, more than m2+1=" +
                                    std::to_string(target_dim + 1));
  }
  const RealMatrix w = graph.adjacency(true);
  const RealVector deg = w.rowwise().sum();
  const RealMatrix degree = deg.asDiagonal();
  RealMatrix lap = degree - w;
  // The constant vector is an exact 0-eigenvector; shifting it above the
  // spectrum (generalised eigenvalues lie in [0, 2]) discards it.
  lap += (3.0 / deg.sum()) * (deg * deg.transpose());
  const auto pairs = linalg::gen_eig(lap, degree, EigenOrder::smallest, target_dim);
  return wrap(pairs.vectors, Method::le, target_dim, n, k_nn);
}

ReducedData lle(const RealMatrix& x, int target_dim, int k_nn) {
  check_input(x, "LLE input");
  const int n = static_cast<int>(x.rows());
  require_dim(target_dim >= 1 && target_dim <= n - 1, "LLE", target_dim, "1 <= m2 <= n-1");
  RealMatrix cost = detail::lle_cost_matrix(detail::lle_weights(x, k_nn));
  // Same deflation of the constant null vector as in LE; trace bounds the spectrum.
  const double shift = cost.trace() + 1.0;
  cost.array() += shift / n;
  const auto pairs = linalg::sym_eig(cost, EigenOrder::smallest, target_dim);
  return wrap(pairs.vectors, Method::lle, target_dim, static_cast<int>(x.cols()), k_nn);
}

ReducedData lpp(const RealMatrix& x, int target_dim, int k_nn) {
  check_input(x, "LPP input");
  const int n = static_cast<int>(x.rows());
  const int m1 = static_cast<int>(x.cols());
  require_dim(target_dim >= 1 && target_dim <= m1 && target_dim < n, "LPP", target_dim,
              "1 <= m2 <= m1 and m2 < n");
  const RealMatrix xc = centered(x);
  return wrap(xc * detail::lpp_directions(xc, target_dim, k_nn), Method::lpp, target_dim, m1, k_nn);
}

ReducedData npe(const RealMatrix& x, int target_dim, int k_nn) {
  check_input(x, "NPE input");
  const int n = static_cast<int>(x.rows());
  const int m1 = static_cast<int>(x.cols());
  require_dim(target_dim >= 1 && target_dim <= m1 && target_dim < n, "NPE", target_dim,
              "1 <= m2 <= m1 and m2 < n");
  const RealMatrix xc = centered(x);
  return wrap(xc * detail::npe_directions(xc, target_dim, k_nn), Method::npe, target_dim, m1, k_nn);
}

namespace detail {

ConditionalAffinities conditional_affinities(const RealMatrix& sq, double perplexity) {
  const int n = static_cast<int>(sq.rows());
  if (!(perplexity >= 1.0) || perplexity >= n) {
    fail(ErrorKind::parameter, "perplexity " + std::to_string(perplexity) + " must lie in [1, n)");
  }
  const double target = std::log2(perplexity);
  ConditionalAffinities out;
  out.p = RealMatrix::Zero(n, n);
  out.perplexity.assign(static_cast<std::size_t>(n), 0.0);
  RealVector row(n);

  for (int i = 0; i < n; ++i) {
    double min_d = std::numeric_limits<double>::infinity();
    for (int j = 0; j < n; ++j) {
      if (j != i) min_d = std::min(min_d, sq(i, j));
    }
    double beta = 1.0;
    double lo = 0.0;
    double hi = std::numeric_limits<double>::infinity();
    double entropy = 0.0;
    bool converged = false;
    for (int step = 0; step < kMaxBisectionSteps; ++step) {
      double total = 0.0;
      for (int j = 0; j < n; ++j) {
        row(j) = j == i ? 0.0 : std::exp(-beta * (sq(i, j) - min_d));
        total += row(j);
      }
      row /= total;
      entropy = 0.0;
      for (int j = 0; j < n; ++j) {
        if (row(j) > 0.0) entropy -= row(j) * std::log2(row(j));
      }
      const double diff = entropy - target;
      if (std::abs(diff) < kEntropyTolerance) {
        converged = true;
        break;
      }
      if (diff > 0.0) {
        lo = beta;
        beta = std::isinf(hi) ? beta * 2.0 : 0.5 * (beta + hi);
      } else {
        hi = beta;
        beta = 0.5 * (beta + lo);
      }
    }
    if (!converged) {
      fail(ErrorKind::affinity, "t-SNE: bandwidth search for point " + std::to_string(i) +
                                    " did not reach the target perplexity");
    }
    out.p.row(i) = row.transpose();
    out.perplexity[i] = std::exp2(entropy);
  }
  return out;
}

RealMatrix joint_affinities(const RealMatrix& x, double perplexity) {
  const RealMatrix d = linalg::pairwise_distances(x);
  const auto cond = conditional_affinities(d.cwiseProduct(d), perplexity);
  const auto n = static_cast<double>(x.rows());
  return (cond.p + cond.p.transpose()) / (2.0 * n);
}

namespace {

// Student-t kernel 1 / (1 + |y_i - y_j|^2) with a zero diagonal.
RealMatrix student_kernel(const RealMatrix& y) {
  const RealVector sq = y.rowwise().squaredNorm();
  RealMatrix num = -2.0 * (y * y.transpose());
  num.colwise() += sq;
  num.rowwise() += sq.transpose();
  num = (1.0 + num.array().max(0.0)).inverse().matrix();
  num.diagonal().setZero();
  return num;
}

}  // namespace

double tsne_kl(const RealMatrix& p, const RealMatrix& y) {
  const RealMatrix num = student_kernel(y);
  const double z = num.sum();
  double kl = 0.0;
  for (Eigen::Index j = 0; j < p.cols(); ++j) {
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
      if (i != j && p(i, j) > 0.0) kl += p(i, j) * std::log(p(i, j) * z / num(i, j));
    }
  }
  return kl;
}

RealMatrix tsne_gradient(const RealMatrix& p, const RealMatrix& y) {
  const RealMatrix num = student_kernel(y);
  const double z = num.sum();
  const RealMatrix w = ((p.array() - num.array() / z) * num.array()).matrix();
  const RealVector row_sum = w.rowwise().sum();
  return 4.0 * (row_sum.asDiagonal() * y - w * y);
}

}  // namespace detail

ReducedData tsne(const RealMatrix& x, int target_dim, const TsneOptions& options, TsneTrace* trace) {
  check_input(x, "t-SNE input");
  const int n = static_cast<int>(x.rows());
  require_dim(target_dim >= 1, "TSNE", target_dim, "m2 >= 1");
  if (options.iterations < 1) fail(ErrorKind::parameter, "t-SNE needs at least one iteration");

  const RealMatrix p = detail::joint_affinities(x, options.perplexity);
  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal(0.0, options.init_sigma);
  RealMatrix y(n, target_dim);
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < target_dim; ++c) y(i, c) = normal(rng);
  }

  const double rate = options.learning_rate > 0.0 ? options.learning_rate : n / 12.0;
  RealMatrix velocity = RealMatrix::Zero(n, target_dim);
  const RealMatrix p_exaggerated = options.exaggeration * p;
  if (trace != nullptr) trace->kl.clear();

  for (int it = 0; it < options.iterations; ++it) {
    const bool early = it < options.exaggeration_iterations;
    const RealMatrix grad = detail::tsne_gradient(early ? p_exaggerated : p, y);
    if (!grad.allFinite()) {
      fail(ErrorKind::divergence, "t-SNE gradient became non-finite at iteration " + std::to_string(it));
    }
    const double momentum = early ? options.initial_momentum : options.final_momentum;
    velocity = momentum * velocity - rate * grad;
    y += velocity;
    if (trace != nullptr) trace->kl.push_back(detail::tsne_kl(p, y));
  }

  ReducedData out = wrap(std::move(y), Method::tsne, target_dim, static_cast<int>(x.cols()));
  out.spec.perplexity = options.perplexity;
  out.spec.iterations = options.iterations;
  out.spec.seed = options.seed;
  return out;
}

ReducedData reduce(const ReductionSpec& spec, const RealMatrix& x, const RealMatrix& distances) {
  switch (spec.method) {
    case Method::pca: return pca(x, spec.target_dim);
    case Method::mds: {
      auto out = mds(distances, spec.target_dim);
      out.source_dim = static_cast<int>(x.cols());
      return out;
    }
    case Method::le: {
      auto out = le(distances, spec.target_dim, spec.k_nn);
      out.source_dim = static_cast<int>(x.cols());
      return out;
    }
    case Method::lle: return lle(x, spec.target_dim, spec.k_nn);
    case Method::lpp: return lpp(x, spec.target_dim, spec.k_nn);
    case Method::npe: return npe(x, spec.target_dim, spec.k_nn);
    case Method::tsne: {
      TsneOptions opts;
      opts.perplexity = spec.perplexity;
      opts.iterations = spec.iterations;
      opts.seed = spec.seed;
      return tsne(x, spec.target_dim, opts);
    }
  }
  fail(ErrorKind::parameter, "unknown reduction method");
}

}  // namespace occlust::dimred
