#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <string>

#include "shcgm/problems.hpp"
#include "shcgm/reference.hpp"

using namespace shcgm;

namespace {

// Empirical mean of N sampled gradients against the full gradient, with a
// 3-sigma band from the empirical scatter.
void check_unbiased(const ProblemSpec& spec, const DecisionVar& x, int n_draws,
                    std::uint64_t seed) {
  Rng rng(seed);
  DecisionVar mean = x.zeros_like();
  double scatter = 0.0;
  const DecisionVar full = spec.oracle.full_gradient(x);
  for (int i = 0; i < n_draws; ++i) {
    const DecisionVar g = spec.oracle.sample_gradient(x, rng);
    mean.axpy(1.0 / n_draws, g);
    DecisionVar diff = g;
    diff.axpy(-1.0, full);
    scatter += diff.squared_norm() / n_draws;
  }
  DecisionVar err = mean;
  err.axpy(-1.0, full);
  CHECK(err.squared_norm() <= 9.0 * scatter / n_draws + 1e-18);
}

void check_gradient(const ProblemSpec& spec, const DecisionVar& x) {
  const DecisionVar grad = spec.oracle.full_gradient(x);
  const auto rep = reference::finite_diff_check(spec.objective, grad, x, 1e-6);
  CHECK(rep.max_rel_error <= 1e-5);
}

}  // namespace

TEST_CASE("analytic 1-d problem carries its closed form") {
  Analytic1d p = build_analytic_1d(0.0);
  CHECK(p.x_star == 0.5);
  CHECK(p.f_star == 0.01);
  CHECK(p.dual_norm == 0.2);
  CHECK(*p.spec.reference_objective == 0.01);
  CHECK(p.spec.objective(DecisionVar::vector(Eigen::VectorXd::Constant(1, 0.5))) ==
        doctest::Approx(0.01));
  check_gradient(p.spec, DecisionVar::vector(Eigen::VectorXd::Constant(1, 0.3)));

  // Zero noise collapses the sample oracle onto the full gradient.
  Rng rng(1);
  const DecisionVar x = DecisionVar::vector(Eigen::VectorXd::Constant(1, 0.8));
  CHECK(p.spec.oracle.sample_gradient(x, rng).vec() ==
        p.spec.oracle.full_gradient(x).vec());

  Analytic1d noisy = build_analytic_1d(0.5);
  check_unbiased(noisy.spec, x, 4000, 2);
}

TEST_CASE("lasso closed form and oracle") {
  Eigen::VectorXd c(5);
  c << 2.0, -0.6, 0.1, 0.0, -3.0;
  LassoProblem p = build_lasso(c, 0.4, 0.3);

  Eigen::VectorXd expect(5);
  expect << 1.0, -0.4, 0.0, 0.0, -1.0;  // soft(c, 0.2) clipped to [-1, 1]
  CHECK((p.x_star - expect).norm() <= 1e-15);

  // The reference value is attained at x_star and undercuts other points.
  const double f_star = *p.spec.reference_objective;
  CHECK(p.spec.objective(DecisionVar::vector(p.x_star)) == doctest::Approx(f_star));
  Rng rng(3);
  for (int rep = 0; rep < 200; ++rep) {
    Eigen::VectorXd y(5);
    for (Eigen::Index i = 0; i < 5; ++i) y[i] = rng.uniform(-1.0, 1.0);
    CHECK(p.spec.objective(DecisionVar::vector(y)) >= f_star - 1e-12);
  }

  // Objective = smooth part + l1 part; the oracle differentiates the smooth
  // part only.
  const DecisionVar at = DecisionVar::vector(Eigen::VectorXd(0.5 * c));
  const DecisionVar grad = p.spec.oracle.full_gradient(at);
  const auto smooth = [&](const DecisionVar& x) {
    return p.spec.objective(x) - 0.4 * x.vec().cwiseAbs().sum();
  };
  const auto repd = reference::finite_diff_check(smooth, grad, at, 1e-6);
  CHECK(repd.max_rel_error <= 1e-5);

  check_unbiased(p.spec, at, 4000, 4);
  CHECK(p.spec.oracle.variance_bound == doctest::Approx(4.0 * 0.09 * 5.0));
}

TEST_CASE("lasso solver run approaches the closed-form optimum") {
  Eigen::VectorXd c(4);
  c << 0.9, -0.5, 0.05, 1.8;
  LassoProblem p = build_lasso(c, 0.3, 0.2);
  SolverConfig cfg;
  cfg.iterations = 60000;
  cfg.seed = 9;
  RunResult r = run_solver(p.spec, cfg);
  REQUIRE(!r.error.has_value());
  CHECK((r.x.vec() - p.x_star).norm() <= 0.05);
  CHECK(std::abs(r.trace.back().objective - *p.spec.reference_objective) <= 0.01);
}

TEST_CASE("clustering distances, map adjoint, and operator norm") {
  Rng rng(5);
  Eigen::MatrixXd pts = generate_blobs(12, 3, 2, 0.3, rng);
  ClusteringProblem p = build_clustering_sdp(pts, 3, 4);
  const Eigen::Index n = 12;

  CHECK(p.dist.diagonal().norm() == 0.0);
  CHECK((p.dist - p.dist.transpose()).norm() == 0.0);
  CHECK(p.dist(0, 1) ==
        doctest::Approx((pts.row(0) - pts.row(1)).squaredNorm()));

  // <A x, y> == <x, A^T y> on random pairs.
  for (int rep = 0; rep < 20; ++rep) {
    DecisionVar x = DecisionVar::matrix(n, n);
    x.fill_normal(rng);
    Eigen::VectorXd y(n + n * n);
    for (Eigen::Index i = 0; i < y.size(); ++i) y[i] = rng.normal();
    const double lhs = p.spec.a_map->apply(x).dot(y);
    const double rhs = x.dot(p.spec.a_map->adjoint(y));
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
  }
  CHECK(operator_norm_estimate(*p.spec.a_map) ==
        doctest::Approx(std::sqrt(n + 1.0)).epsilon(1e-4));

  check_unbiased(p.spec, init_point(p.spec.domain), 4000, 6);
  check_gradient(p.spec, init_point(p.spec.domain));
}

TEST_CASE("clustering full-batch sampling equals the full gradient") {
  Rng rng(7);
  Eigen::MatrixXd pts = generate_blobs(10, 2, 2, 0.5, rng);
  ClusteringProblem p = build_clustering_sdp(pts, 2, 10);
  Rng draw(8);
  const DecisionVar x = init_point(p.spec.domain);
  CHECK(p.spec.oracle.sample_gradient(x, draw).mat() ==
        p.spec.oracle.full_gradient(x).mat());
}

TEST_CASE("clustering stochastic run tracks the deterministic one") {
  Rng rng(9);
  Eigen::MatrixXd pts = generate_blobs(10, 2, 2, 0.4, rng);
  // Full batch makes every sampled gradient the exact one, so the stochastic
  // run can only drift from the deterministic run by estimator round-off.
  ClusteringProblem p = build_clustering_sdp(pts, 2, 10);
  SolverConfig cfg;
  cfg.iterations = 200;
  cfg.seed = 1;
  RunResult sto = run_solver(p.spec, cfg);
  cfg.algorithm = Algorithm::Hcgm;
  RunResult det = run_solver(p.spec, cfg);
  REQUIRE(!sto.error.has_value());
  REQUIRE(!det.error.has_value());
  REQUIRE(sto.trace.size() == det.trace.size());
  for (size_t i = 0; i < sto.trace.size(); ++i) {
    const double scale = 1.0 + std::abs(det.trace[i].objective);
    CHECK(std::abs(sto.trace[i].objective - det.trace[i].objective) <= 1e-9 * scale);
    CHECK(std::abs(sto.trace[i].feasibility - det.trace[i].feasibility) <= 1e-9);
  }
}

TEST_CASE("clustering homotopy drives the row-sum violation down") {
  Rng rng(9);
  Eigen::MatrixXd pts = generate_blobs(10, 2, 2, 0.4, rng);
  ClusteringProblem p = build_clustering_sdp(pts, 2, 4);
  SolverConfig cfg;
  cfg.iterations = 20000;
  cfg.seed = 1;
  cfg.schedules.beta0 = 0.5;
  RunResult r = run_solver(p.spec, cfg);
  REQUIRE(!r.error.has_value());
  // The objective pull makes iterates more infeasible at first; the decisive
  // property is the late-stage decay toward the constraint set.
  CHECK(r.trace.back().feasibility < 0.1 * r.trace.front().feasibility);
}

TEST_CASE("covariance problem: structure, bounds, variance") {
  Rng rng(11);
  Eigen::MatrixXd f = generate_covariance_factors(10, 5, rng);
  CovarianceProblem p = build_covariance_stream(f, 2);
  const Eigen::MatrixXd& sigma = p.sigma;

  // Block diagonal with 2x2 blocks: everything off the block pattern is 0.
  for (Eigen::Index i = 0; i < 10; ++i)
    for (Eigen::Index j = 0; j < 10; ++j)
      if (i / 2 != j / 2) CHECK(sigma(i, j) == 0.0);
  CHECK((sigma - f * f.transpose()).norm() == 0.0);
  CHECK(p.trace_bound == doctest::Approx(sigma.trace()));
  CHECK(p.l1_bound == doctest::Approx(sigma.cwiseAbs().sum()));
  const double floor = sigma.trace() * sigma.trace() + sigma.squaredNorm();
  CHECK(*p.spec.reference_objective == doctest::Approx(floor));
  CHECK(p.spec.objective(DecisionVar::matrix(sigma)) == doctest::Approx(floor));

  DecisionVar x = DecisionVar::matrix(Eigen::MatrixXd(0.5 * sigma));
  check_gradient(p.spec, x);
  check_unbiased(p.spec, x, 3000, 12);

  // The declared per-call variance bound matches the empirical second moment
  // of the gradient noise.
  Rng draw(13);
  const DecisionVar full = p.spec.oracle.full_gradient(x);
  double second = 0.0;
  const int n_draws = 3000;
  for (int i = 0; i < n_draws; ++i) {
    DecisionVar g = p.spec.oracle.sample_gradient(x, draw);
    g.axpy(-1.0, full);
    second += g.squared_norm() / n_draws;
  }
  CHECK(second == doctest::Approx(p.spec.oracle.variance_bound).epsilon(0.25));
}

TEST_CASE("covariance run contracts toward the planted matrix") {
  Rng rng(14);
  Eigen::MatrixXd f = generate_covariance_factors(10, 5, rng);
  CovarianceProblem p = build_covariance_stream(f, 1);
  SolverConfig cfg;
  cfg.iterations = 3000;
  cfg.seed = 15;
  RunResult r = run_solver(p.spec, cfg);
  REQUIRE(!r.error.has_value());
  const double first = r.trace.front().objective - *p.spec.reference_objective;
  const double last = r.trace.back().objective - *p.spec.reference_objective;
  CHECK(last >= 0.0);
  CHECK(last < 0.2 * first);
}

TEST_CASE("ratings generator: ranges, uniqueness, split") {
  Rng rng(21);
  RatingsData data = generate_ratings(30, 20, 3, 200, 0.25, rng);
  CHECK(data.rows == 30);
  CHECK(data.cols == 20);
  CHECK(data.train.size() + data.test.size() == 200);
  CHECK(data.test.size() > 20);
  CHECK(data.test.size() < 80);
  std::set<std::pair<Eigen::Index, Eigen::Index>> seen;
  for (const auto* set : {&data.train, &data.test})
    for (const auto& e : *set) {
      CHECK(e.value >= 1.0);
      CHECK(e.value <= 5.0);
      CHECK(e.row >= 0);
      CHECK(e.row < 30);
      CHECK(e.col >= 0);
      CHECK(e.col < 20);
      CHECK(seen.insert({e.row, e.col}).second);
    }
}

TEST_CASE("ratings save/load round trip") {
  Rng rng(22);
  RatingsData data = generate_ratings(8, 6, 2, 30, 0.3, rng);
  const std::string path = "ratings_roundtrip.tmp";
  save_ratings(data, path);
  RatingsData back = load_ratings(path);
  std::remove(path.c_str());
  REQUIRE(back.train.size() == data.train.size());
  REQUIRE(back.test.size() == data.test.size());
  CHECK(back.rows == data.rows);
  CHECK(back.cols == data.cols);
  for (size_t i = 0; i < data.train.size(); ++i) {
    CHECK(back.train[i].row == data.train[i].row);
    CHECK(back.train[i].col == data.train[i].col);
    CHECK(back.train[i].value == data.train[i].value);
  }
  CHECK_THROWS_AS(load_ratings("no_such_file.tmp"), std::invalid_argument);
}

TEST_CASE("completion problem: gradient, metrics, unbiasedness") {
  Rng rng(23);
  RatingsData data = generate_ratings(8, 6, 2, 30, 0.3, rng);
  CompletionProblem p = build_matrix_completion(data, 10.0, 4);

  DecisionVar x = DecisionVar::matrix(8, 6);
  x.fill_normal(rng);
  check_gradient(p.spec, x);
  check_unbiased(p.spec, x, 4000, 24);

  // train_rmse^2 * |train| is the objective.
  double train_rmse = 0.0;
  for (const auto& m : p.spec.metrics)
    if (m.first == "train_rmse") train_rmse = m.second(x);
  CHECK(train_rmse * train_rmse * static_cast<double>(p.train_size) ==
        doctest::Approx(p.spec.objective(x)));

  CHECK_THROWS_AS(build_matrix_completion(data, 10.0, 1000), std::invalid_argument);
  CHECK_THROWS_AS(build_matrix_completion(data, -1.0, 4), std::invalid_argument);
}

TEST_CASE("blob generator separates planted groups") {
  Rng rng(25);
  const Eigen::Index n = 30;
  Eigen::MatrixXd pts = generate_blobs(n, 3, 2, 0.3, rng);
  REQUIRE(pts.rows() == n);
  double within = 0.0, between = 0.0;
  int nw = 0, nb = 0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double d = (pts.row(i) - pts.row(j)).squaredNorm();
      if (i * 3 / n == j * 3 / n) {
        within += d;
        ++nw;
      } else {
        between += d;
        ++nb;
      }
    }
  CHECK(within / nw < 0.2 * (between / nb));
  CHECK_THROWS_AS(generate_blobs(10, 5, 2, 0.1, rng), std::invalid_argument);
}

TEST_CASE("movielens loader compacts ids and validates lines") {
  const std::string path = "movielens_test.tmp";
  {
    std::ofstream out(path);
    out << "1\t10\t5\t874965758\n";
    out << "1\t30\t3\t876893171\n";
    out << "7\t10\t4\t878542960\n";
    out << "7\t20\t1\t876893119\n";
    out << "9\t30\t2\t889751712\n";
  }
  RatingsData data = load_movielens(path, "", 0.0, 0);
  CHECK(data.rows == 3);   // users {1, 7, 9}
  CHECK(data.cols == 3);   // items {10, 20, 30}
  CHECK(data.test.empty());
  REQUIRE(data.train.size() == 5);
  CHECK(data.train[0].row == 0);
  CHECK(data.train[0].col == 0);
  CHECK(data.train[0].value == 5.0);
  CHECK(data.train[4].row == 2);
  CHECK(data.train[4].col == 2);

  // Random split keeps every rating exactly once.
  RatingsData split = load_movielens(path, "", 0.4, 3);
  CHECK(split.train.size() + split.test.size() == 5);
  CHECK(!split.train.empty());

  // Paired files share one id space.
  const std::string test_path = "movielens_test2.tmp";
  {
    std::ofstream out(test_path);
    out << "9\t40\t4\t889751712\n";
  }
  RatingsData pair = load_movielens(path, test_path);
  CHECK(pair.cols == 4);
  REQUIRE(pair.test.size() == 1);
  CHECK(pair.test[0].col == 3);

  {
    std::ofstream out(test_path);
    out << "9\tbroken\t4\n";
  }
  CHECK_THROWS_WITH_AS(load_movielens(test_path),
                       doctest::Contains("malformed line 1"),
                       std::invalid_argument);
  {
    std::ofstream out(test_path);
    out << "9\t40\t6\t889751712\n";
  }
  CHECK_THROWS_AS(load_movielens(test_path), std::invalid_argument);
  std::remove(path.c_str());
  std::remove(test_path.c_str());
}
