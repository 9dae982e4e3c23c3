#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "shcgm/problems.hpp"
#include "shcgm/reference_solve.hpp"

using namespace shcgm;

namespace {

struct TempDir {
  std::string path;
  explicit TempDir(const char* name) : path(std::string("./") + name) {
    std::filesystem::remove_all(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace

TEST_CASE("1-d analytic reference is the closed form") {
  const auto prob = build_analytic_1d(0.5);
  const auto r = reference_solve(prob.spec, 10);
  CHECK(r.x_star.vec()[0] == 0.5);
  CHECK(r.f_star == 0.01);
  CHECK(r.feasibility == 0.0);
  REQUIRE(r.dual_norm_estimate.has_value());
  CHECK(*r.dual_norm_estimate == 0.2);
  CHECK_FALSE(r.low_confidence);
}

TEST_CASE("all-observed constant ratings drive the reference objective to zero") {
  RatingsData data;
  data.rows = 5;
  data.cols = 5;
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) data.train.push_back({i, j, 3.0});
  const auto prob = build_matrix_completion(data, 20.0, 25);

  const auto r = reference_solve(prob.spec, 5000, 10.0);
  CHECK(r.f_star <= 1e-3);
  CHECK(r.feasibility <= 1e-4);
  CHECK_FALSE(r.low_confidence);
  CHECK(r.dual_norm_estimate == std::nullopt);
  CHECK(r.provenance == "hcgm iterations=5000 beta0=10 seed=0");
}

TEST_CASE("clustering reference is stable across budgets and beta0") {
  Rng rng(4);
  const auto pts = generate_blobs(12, 3, 2, 0.3, rng);
  const auto prob = build_clustering_sdp(pts, 3, 4);

  const auto a = reference_solve(prob.spec, 20000, 1.0);
  const auto b = reference_solve(prob.spec, 8000, 0.5);

  // Both long runs round to the same partition matrix, so the objectives
  // agree exactly, far inside the 1e-3 relative band asked of them.
  CHECK(a.f_star == b.f_star);
  CHECK(a.feasibility <= 1e-6);
  CHECK_FALSE(a.low_confidence);

  const Eigen::MatrixXd& x = a.x_star.mat();
  CHECK(x.trace() == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(x.minCoeff() >= 0.0);
  const Eigen::VectorXd rowsum = x * Eigen::VectorXd::Ones(12);
  CHECK((rowsum - Eigen::VectorXd::Ones(12)).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(a.f_star == prob.spec.objective(a.x_star));
}

TEST_CASE("clustering rounding recovers a noisy partition and rejects garbage") {
  Rng rng(4);
  const auto pts = generate_blobs(12, 3, 2, 0.3, rng);
  const auto prob = build_clustering_sdp(pts, 3, 4);
  REQUIRE(prob.spec.round_feasible != nullptr);

  Eigen::MatrixXd part = Eigen::MatrixXd::Zero(12, 12);
  for (int i = 0; i < 12; ++i)
    for (int j = 0; j < 12; ++j)
      if (i / 4 == j / 4) part(i, j) = 0.25;
  Eigen::MatrixXd noisy = part;
  for (int i = 0; i < 12; ++i)
    for (int j = 0; j < 12; ++j) noisy(i, j) += 0.01 * ((i * 7 + j * 3) % 5 - 2);
  const auto rounded = prob.spec.round_feasible(DecisionVar::matrix(noisy));
  CHECK((rounded.mat() - part).cwiseAbs().maxCoeff() == 0.0);

  // The identity has 12 scattered leaders, not 3; no confident rounding.
  const auto id = DecisionVar::matrix(Eigen::MatrixXd::Identity(12, 12));
  CHECK(prob.spec.round_feasible(id).mat() == Eigen::MatrixXd::Identity(12, 12));
}

TEST_CASE("1-d rounding clips into the constraint set only from above") {
  const auto prob = build_analytic_1d(0.0);
  const auto hi = prob.spec.round_feasible(
      DecisionVar::vector(Eigen::VectorXd::Constant(1, 0.7)));
  CHECK(hi.vec()[0] == 0.5);
  const auto lo = prob.spec.round_feasible(
      DecisionVar::vector(Eigen::VectorXd::Constant(1, 0.3)));
  CHECK(lo.vec()[0] == 0.3);
}

TEST_CASE("a budget too small to reach feasibility is flagged low confidence") {
  Rng rng(4);
  const auto pts = generate_blobs(12, 3, 2, 0.3, rng);
  const auto prob = build_clustering_sdp(pts, 3, 4);
  const auto r = reference_solve(prob.spec, 0, 1.0);
  CHECK(r.low_confidence);
  CHECK(r.feasibility > 1e-4);
}

TEST_CASE("reference_solve validates its inputs") {
  Rng rng(4);
  const auto pts = generate_blobs(6, 2, 2, 0.3, rng);
  auto prob = build_clustering_sdp(pts, 2, 3);
  CHECK_THROWS_AS(reference_solve(prob.spec, -1), std::invalid_argument);
  prob.spec.oracle.full_gradient = nullptr;
  CHECK_THROWS_AS(reference_solve(prob.spec, 10), std::invalid_argument);
}

TEST_CASE("reference cache round-trips exactly and guards its descriptor") {
  TempDir dir("refcache_test");
  ReferenceCacheEntry e;
  e.descriptor = "clustering n=12 k=3 seed=4";
  e.f_star = 93.191465130434352;
  e.feasibility = 2.7e-16;
  e.low_confidence = false;
  e.provenance = "hcgm iterations=20000 beta0=1 seed=0";

  CHECK(load_reference_cache(dir.path, e.descriptor) == std::nullopt);
  store_reference_cache(dir.path, e);

  const auto back = load_reference_cache(dir.path, e.descriptor);
  REQUIRE(back.has_value());
  CHECK(back->descriptor == e.descriptor);
  CHECK(back->f_star == e.f_star);
  CHECK(back->feasibility == e.feasibility);
  CHECK(back->low_confidence == e.low_confidence);
  CHECK(back->provenance == e.provenance);

  // No temp litter once the rename landed.
  int files = 0;
  for (const auto& p : std::filesystem::directory_iterator(dir.path)) {
    ++files;
    CHECK(p.path().extension() == ".txt");
  }
  CHECK(files == 1);

  CHECK(load_reference_cache(dir.path, "some other descriptor") == std::nullopt);

  // A file whose body names a different descriptor is a hash collision, not
  // a hit.
  const auto path = reference_cache_path(dir.path, e.descriptor);
  {
    std::ofstream out(path, std::ios::trunc);
    out << "shcgm reference cache v1\n";
    out << "descriptor something else\n";
    out << "f_star 1\n";
  }
  CHECK(load_reference_cache(dir.path, e.descriptor) == std::nullopt);

  // Malformed files are misses, not errors.
  {
    std::ofstream out(path, std::ios::trunc);
    out << "not a cache file\n";
  }
  CHECK(load_reference_cache(dir.path, e.descriptor) == std::nullopt);

  ReferenceCacheEntry bad = e;
  bad.descriptor = "two\nlines";
  CHECK_THROWS_AS(store_reference_cache(dir.path, bad), std::invalid_argument);
}

TEST_CASE("cached_reference computes once and reuses the stored record") {
  TempDir dir("refcache_reuse");
  int calls = 0;
  const auto compute = [&] {
    ++calls;
    ReferenceCacheEntry e;
    e.descriptor = "toy";
    e.f_star = 0.25;
    e.provenance = "hcgm iterations=1 beta0=1 seed=0";
    return e;
  };
  const auto first = cached_reference(dir.path, "toy", compute);
  const auto second = cached_reference(dir.path, "toy", compute);
  CHECK(calls == 1);
  CHECK(first.f_star == 0.25);
  CHECK(second.f_star == 0.25);

  const auto mismatched = [] {
    ReferenceCacheEntry e;
    e.descriptor = "not what was asked";
    return e;
  };
  CHECK_THROWS_AS(cached_reference(dir.path, "other", mismatched),
                  std::invalid_argument);
}
