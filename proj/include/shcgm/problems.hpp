#pragma once

#include <optional>
#include <string>
#include <vector>

#include "shcgm/solvers.hpp"

namespace shcgm {

// min (x - 0.6)^2 over [0, 1] subject to x <= 0.5. Closed-form optimum
// x* = 0.5, f* = 0.01, dual multiplier norm 0.2; used for rate checks.
struct Analytic1d {
  ProblemSpec spec;
  double x_star = 0.5;
  double f_star = 0.01;
  double dual_norm = 0.2;
};
Analytic1d build_analytic_1d(double noise_sigma);

// min E||x - c - w||^2 + l1_weight ||x||_1 over the box [-1, 1]^d,
// w ~ N(0, sigma^2 I). Coordinatewise closed form:
// x*_i = clip(soft(c_i, l1_weight / 2), -1, 1).
struct LassoProblem {
  ProblemSpec spec;
  Eigen::VectorXd x_star;
};
LassoProblem build_lasso(const Eigen::VectorXd& center, double l1_weight,
                         double noise_sigma);

// Cluster-count-regularized k-means relaxation: min <D, X> over the
// spectrahedron {X psd, tr X = clusters} against X 1 = 1, X >= 0
// entrywise, where D holds squared Euclidean distances between point rows.
// The stochastic oracle rescales the principal submatrix of a uniform
// point minibatch by n(n-1) / (batch (batch-1)).
struct ClusteringProblem {
  ProblemSpec spec;
  Eigen::MatrixXd dist;
  Eigen::Index n = 0;
  Eigen::Index batch = 0;
};
ClusteringProblem build_clustering_sdp(const Eigen::MatrixXd& points,
                                       Eigen::Index clusters, Eigen::Index batch);

// Streaming covariance estimation: min E||X - w w^T||_F^2 over
// {X psd, tr X <= trace_bound} against ||vec X||_1 <= l1_bound, with
// w = F z, z ~ N(0, I), so Sigma = F F^T. Defaults trace_bound = tr Sigma
// and l1_bound = ||vec Sigma||_1 put the population optimum X = Sigma on
// both boundaries; the objective is the population risk
// ||X - Sigma||_F^2 + (tr Sigma)^2 + ||Sigma||_F^2.
struct CovarianceProblem {
  ProblemSpec spec;
  Eigen::MatrixXd sigma;
  double trace_bound = 0.0;
  double l1_bound = 0.0;
  Eigen::Index batch = 0;
};
CovarianceProblem build_covariance_stream(const Eigen::MatrixXd& factors,
                                          Eigen::Index batch,
                                          std::optional<double> trace_bound = {},
                                          std::optional<double> l1_bound = {});

struct Rating {
  Eigen::Index row = 0;
  Eigen::Index col = 0;
  double value = 0.0;
};

struct RatingsData {
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  std::vector<Rating> train;
  std::vector<Rating> test;
};

// Matrix completion: min sum_train (X_ij - y_ij)^2 over a nuclear-norm ball,
// against vec X in [1, 5]^{rows cols}. Minibatches of observed entries are
// rescaled by |train| / batch. Metrics report train and test RMSE.
struct CompletionProblem {
  ProblemSpec spec;
  Eigen::Index train_size = 0;
  Eigen::Index batch = 0;
};
CompletionProblem build_matrix_completion(const RatingsData& data,
                                          double nuclear_radius, Eigen::Index batch);

// Synthetic data. Points are rows; clusters sit on a scaled simplex so the
// planted partition is recoverable.
Eigen::MatrixXd generate_blobs(Eigen::Index n, Eigen::Index clusters,
                               Eigen::Index dim, double spread, Rng& rng);

// Factor matrix with one column per block, supported on disjoint index
// ranges, so F F^T is block diagonal with rank-1 blocks. dim must be a
// multiple of blocks; factor norms vary in [0.5, 1.5].
Eigen::MatrixXd generate_covariance_factors(Eigen::Index dim, Eigen::Index blocks,
                                            Rng& rng);

// Low-rank ratings with values clipped to [1, 5]; observed entries are
// sampled without replacement and split train/test.
RatingsData generate_ratings(Eigen::Index rows, Eigen::Index cols, Eigen::Index rank,
                             Eigen::Index observed, double test_fraction, Rng& rng);

void save_ratings(const RatingsData& data, const std::string& path);
RatingsData load_ratings(const std::string& path);

// Tab- or space-separated "user item rating [timestamp]" lines with 1-based
// ids, ratings in [1, 5]. Ids are compacted to dense 0-based indices over
// everything seen. With an empty test_path, rows are split at random with
// the given fraction and seed; otherwise the second file is the test set.
RatingsData load_movielens(const std::string& data_path,
                           const std::string& test_path = "",
                           double test_fraction = 0.2, std::uint64_t seed = 0);

}  // namespace shcgm
