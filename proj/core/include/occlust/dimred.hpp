#pragma once

#include "occlust/linalg.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace occlust::dimred {

using linalg::RealMatrix;

enum class Method { pca, mds, le, lle, lpp, npe, tsne };

std::string_view to_string(Method m) noexcept;  // PCA, MDS, LE, ...
std::optional<Method> parse_method(std::string_view name);

/// True for methods whose output dimension is bounded by an eigenproblem.
bool is_eigen_based(Method m) noexcept;

struct ReductionSpec {
  Method method = Method::pca;
  int target_dim = 2;
  int k_nn = 10;
  double perplexity = 30.0;
  int iterations = 1000;
  std::uint64_t seed = 0;
};

struct ReducedData {
  RealMatrix y;
  ReductionSpec spec;
  int source_dim = 0;
};

/// Rows projected on the leading covariance eigenvectors.
ReducedData pca(const RealMatrix& x, int target_dim);

/// Classical scaling of a distance matrix; negative eigenvalues are truncated.
ReducedData mds(const RealMatrix& distances, int target_dim);

/// Laplacian eigenmaps on the binary kNN graph of `distances`.
ReducedData le(const RealMatrix& distances, int target_dim, int k_nn);

ReducedData lle(const RealMatrix& x, int target_dim, int k_nn);
ReducedData lpp(const RealMatrix& x, int target_dim, int k_nn);
ReducedData npe(const RealMatrix& x, int target_dim, int k_nn);

struct TsneOptions {
  double perplexity = 30.0;
  int iterations = 1000;
  std::uint64_t seed = 0;
  double exaggeration = 12.0;
  int exaggeration_iterations = 250;
  double initial_momentum = 0.5;
  double final_momentum = 0.8;
  double init_sigma = 1e-4;
  /// <= 0 selects n / 12.
  double learning_rate = 0.0;
};

struct TsneTrace {
  std::vector<double> kl;  // KL(P || Q) after each iteration
};

ReducedData tsne(const RealMatrix& x, int target_dim, const TsneOptions& options,
                 TsneTrace* trace = nullptr);

/// Dispatches on spec.method. MDS and LE read `distances`; the others read `x`.
ReducedData reduce(const ReductionSpec& spec, const RealMatrix& x, const RealMatrix& distances);

/// Pieces of the algorithms exposed for verification.
namespace detail {

/// Row i holds the reconstruction weights of point i over its k nearest
/// neighbours; each row sums to one.
RealMatrix lle_weights(const RealMatrix& x, int k_nn);

/// (I - W)^T (I - W)
RealMatrix lle_cost_matrix(const RealMatrix& weights);

/// Laplacian L = Delta - W and degree matrix Delta of the binary kNN graph.
struct GraphLaplacian {
  RealMatrix laplacian;
  RealMatrix degree;
};
GraphLaplacian binary_laplacian(const RealMatrix& distances, int k_nn);

/// Projection directions (one per column) found by LPP / NPE.
RealMatrix lpp_directions(const RealMatrix& centered, int target_dim, int k_nn);
RealMatrix npe_directions(const RealMatrix& centered, int target_dim, int k_nn);

/// Right-hand matrix regularisation used by LPP and NPE.
RealMatrix regularize_metric(const RealMatrix& b);

struct ConditionalAffinities {
  RealMatrix p;                  // row-stochastic, zero diagonal
  std::vector<double> perplexity;  // achieved 2^H per row
};
ConditionalAffinities conditional_affinities(const RealMatrix& squared_distances, double perplexity);

/// Symmetrised joint affinities (P_cond + P_cond^T) / (2n).
RealMatrix joint_affinities(const RealMatrix& x, double perplexity);

double tsne_kl(const RealMatrix& p, const RealMatrix& y);
RealMatrix tsne_gradient(const RealMatrix& p, const RealMatrix& y);

}  // namespace detail

}  // namespace occlust::dimred
