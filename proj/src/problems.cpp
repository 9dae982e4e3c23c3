#include "shcgm/problems.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <memory>
#include <sstream>

namespace shcgm {

namespace {

double clip(double t, double lo, double hi) { return std::min(std::max(t, lo), hi); }

}  // namespace

Analytic1d build_analytic_1d(double noise_sigma) {
  require(noise_sigma >= 0.0, "build_analytic_1d: negative noise");
  BoxDomain box{Eigen::VectorXd::Zero(1), Eigen::VectorXd::Ones(1)};
  ProblemSpec spec{Domain(box)};
  spec.name = "analytic1d";
  spec.oracle.full_gradient = [](const DecisionVar& x) {
    return DecisionVar::vector(Eigen::VectorXd::Constant(1, 2.0 * (x.vec()[0] - 0.6)));
  };
  spec.oracle.sample_gradient = [noise_sigma](const DecisionVar& x, Rng& rng) {
    const double g = 2.0 * (x.vec()[0] - 0.6) + noise_sigma * rng.normal();
    return DecisionVar::vector(Eigen::VectorXd::Constant(1, g));
  };
  spec.oracle.variance_bound = noise_sigma * noise_sigma;
  spec.a_map = make_vectorize_map(DecisionVar::vector(1));
  const double inf = std::numeric_limits<double>::infinity();
  spec.g = indicator_box(Eigen::VectorXd::Constant(1, -inf),
                         Eigen::VectorXd::Constant(1, 0.5));
  spec.l_f = 2.0;
  spec.a_norm = 1.0;
  spec.reference_objective = 0.01;
  spec.objective = [](const DecisionVar& x) {
    const double t = x.vec()[0] - 0.6;
    return t * t;
  };
  spec.round_feasible = [](const DecisionVar& x) {
    return DecisionVar::vector(
        Eigen::VectorXd::Constant(1, std::min(x.vec()[0], 0.5)));
  };
  return {std::move(spec), 0.5, 0.01, 0.2};
}

LassoProblem build_lasso(const Eigen::VectorXd& center, double l1_weight,
                         double noise_sigma) {
  const Eigen::Index d = center.size();
  require(d > 0, "build_lasso: empty center");
  require(l1_weight > 0.0, "build_lasso: l1 weight must be positive");
  require(noise_sigma >= 0.0, "build_lasso: negative noise");

  ProblemSpec spec{Domain(BoxDomain{Eigen::VectorXd::Constant(d, -1.0),
                                    Eigen::VectorXd::Constant(d, 1.0)})};
  spec.name = "lasso";
  spec.oracle.full_gradient = [center](const DecisionVar& x) {
    return DecisionVar::vector(Eigen::VectorXd(2.0 * (x.vec() - center)));
  };
  spec.oracle.sample_gradient = [center, noise_sigma, d](const DecisionVar& x,
                                                         Rng& rng) {
    Eigen::VectorXd g = 2.0 * (x.vec() - center);
    for (Eigen::Index i = 0; i < d; ++i) g[i] -= 2.0 * noise_sigma * rng.normal();
    return DecisionVar::vector(std::move(g));
  };
  spec.oracle.variance_bound =
      4.0 * noise_sigma * noise_sigma * static_cast<double>(d);
  spec.a_map = make_vectorize_map(DecisionVar::vector(d));
  spec.g = l1_norm(d, l1_weight);
  spec.l_f = 2.0;
  spec.a_norm = 1.0;

  Eigen::VectorXd x_star(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const double soft = std::max(std::abs(center[i]) - l1_weight / 2.0, 0.0);
    x_star[i] = clip(center[i] < 0.0 ? -soft : soft, -1.0, 1.0);
  }
  const double var_floor = noise_sigma * noise_sigma * static_cast<double>(d);
  spec.reference_objective = (x_star - center).squaredNorm() + var_floor +
                             l1_weight * x_star.cwiseAbs().sum();
  spec.objective = [center, l1_weight, var_floor](const DecisionVar& x) {
    return (x.vec() - center).squaredNorm() + var_floor +
           l1_weight * x.vec().cwiseAbs().sum();
  };
  return {std::move(spec), std::move(x_star)};
}

ClusteringProblem build_clustering_sdp(const Eigen::MatrixXd& points,
                                       Eigen::Index clusters, Eigen::Index batch) {
  const Eigen::Index n = points.rows();
  require(n >= 2, "build_clustering_sdp: need at least two points");
  require(clusters >= 1 && clusters <= n, "build_clustering_sdp: bad cluster count");
  require(batch >= 2 && batch <= n,
          "build_clustering_sdp: batch must cover at least one pair");

  Eigen::MatrixXd dist(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    dist(i, i) = 0.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double d2 = (points.row(i) - points.row(j)).squaredNorm();
      dist(i, j) = d2;
      dist(j, i) = d2;
    }
  }

  ProblemSpec spec{
      Domain(PsdTraceBall{n, static_cast<double>(clusters), TraceBound::Eq})};
  spec.name = "clustering";
  spec.objective = [dist](const DecisionVar& x) {
    return dist.cwiseProduct(x.mat()).sum();
  };
  spec.oracle.full_gradient = [dist](const DecisionVar&) {
    return DecisionVar::matrix(dist);
  };
  const double pair_scale = static_cast<double>(n) * static_cast<double>(n - 1) /
                            (static_cast<double>(batch) * static_cast<double>(batch - 1));
  spec.oracle.sample_gradient = [dist, n, batch, pair_scale](const DecisionVar&,
                                                             Rng& rng) {
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n, n);
    const auto idx = sample_minibatch(n, batch, rng);
    for (size_t a = 0; a < idx.size(); ++a)
      for (size_t b = a + 1; b < idx.size(); ++b) {
        const double v = pair_scale * dist(idx[a], idx[b]);
        g(idx[a], idx[b]) = v;
        g(idx[b], idx[a]) = v;
      }
    return DecisionVar::matrix(std::move(g));
  };

  // A X = (X 1, vec X); the row-sum block contributes the rank-1 part u 1^T
  // to the adjoint. ||A|| = sqrt(n + 1), attained at X = 1 1^T / n.
  LinearMap a;
  a.input_shape = DecisionVar::matrix(n, n);
  a.output_dim = n + n * n;
  a.apply = [n](const DecisionVar& x) {
    Eigen::VectorXd out(n + n * n);
    out.head(n) = x.mat() * Eigen::VectorXd::Ones(n);
    out.tail(n * n) = Eigen::Map<const Eigen::VectorXd>(x.mat().data(), n * n);
    return out;
  };
  a.adjoint = [n](const Eigen::VectorXd& y) {
    Eigen::MatrixXd m =
        Eigen::Map<const Eigen::MatrixXd>(y.tail(n * n).data(), n, n);
    m += y.head(n) * Eigen::RowVectorXd::Ones(n);
    return DecisionVar::matrix(std::move(m));
  };
  spec.a_map = std::move(a);
  spec.a_norm = std::sqrt(static_cast<double>(n) + 1.0);
  spec.g = indicator_rowsum_nonneg(n);
  spec.l_f = 0.0;

  // Near-converged iterates are close to a partition matrix sum_c 1_c 1_c^T
  // / |c|; greedy leader grouping at half the leader's diagonal recovers it.
  // An ambiguous iterate (group count off) is returned unchanged.
  spec.round_feasible = [n, clusters](const DecisionVar& x) {
    const Eigen::MatrixXd& m = x.mat();
    std::vector<Eigen::Index> group(static_cast<size_t>(n), -1);
    Eigen::Index ngroups = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (group[static_cast<size_t>(i)] >= 0) continue;
      const double thresh = 0.5 * m(i, i);
      if (!(thresh > 0.0)) return x;
      group[static_cast<size_t>(i)] = ngroups;
      for (Eigen::Index j = i + 1; j < n; ++j)
        if (group[static_cast<size_t>(j)] < 0 && m(i, j) > thresh)
          group[static_cast<size_t>(j)] = ngroups;
      ++ngroups;
    }
    if (ngroups != clusters) return x;
    Eigen::VectorXd size = Eigen::VectorXd::Zero(ngroups);
    for (Eigen::Index i = 0; i < n; ++i) size[group[static_cast<size_t>(i)]] += 1.0;
    Eigen::MatrixXd r = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        if (group[static_cast<size_t>(i)] == group[static_cast<size_t>(j)])
          r(i, j) = 1.0 / size[group[static_cast<size_t>(i)]];
    return DecisionVar::matrix(std::move(r));
  };

  return {std::move(spec), std::move(dist), n, batch};
}

CovarianceProblem build_covariance_stream(const Eigen::MatrixXd& factors,
                                          Eigen::Index batch,
                                          std::optional<double> trace_bound,
                                          std::optional<double> l1_bound) {
  const Eigen::Index n = factors.rows();
  require(n > 0 && factors.cols() > 0, "build_covariance_stream: empty factors");
  require(batch >= 1, "build_covariance_stream: batch must be positive");

  Eigen::MatrixXd sigma = factors * factors.transpose();
  const double tr = sigma.trace();
  const double fro2 = sigma.squaredNorm();
  const double risk_floor = tr * tr + fro2;
  const double tb = trace_bound.value_or(tr);
  const double l1b = l1_bound.value_or(sigma.cwiseAbs().sum());
  require(tb > 0.0 && l1b > 0.0, "build_covariance_stream: bounds must be positive");

  ProblemSpec spec{Domain(PsdTraceBall{n, tb, TraceBound::Le})};
  spec.name = "covariance";
  spec.objective = [sigma, risk_floor](const DecisionVar& x) {
    return (x.mat() - sigma).squaredNorm() + risk_floor;
  };
  if (tr <= tb + 1e-12 && sigma.cwiseAbs().sum() <= l1b + 1e-12)
    spec.reference_objective = risk_floor;
  spec.oracle.full_gradient = [sigma](const DecisionVar& x) {
    return DecisionVar::matrix(Eigen::MatrixXd(2.0 * (x.mat() - sigma)));
  };
  const Eigen::Index m = factors.cols();
  spec.oracle.sample_gradient = [factors, n, m, batch](const DecisionVar& x,
                                                       Rng& rng) {
    Eigen::MatrixXd g = 2.0 * x.mat();
    const double w = 2.0 / static_cast<double>(batch);
    for (Eigen::Index s = 0; s < batch; ++s) {
      Eigen::VectorXd z(m);
      for (Eigen::Index i = 0; i < m; ++i) z[i] = rng.normal();
      const Eigen::VectorXd omega = factors * z;
      g.noalias() -= w * omega * omega.transpose();
    }
    return DecisionVar::matrix(std::move(g));
  };
  spec.oracle.variance_bound = 4.0 * risk_floor / static_cast<double>(batch);
  spec.a_map = make_vectorize_map(DecisionVar::matrix(n, n));
  spec.a_norm = 1.0;
  spec.g = indicator_l1ball(n * n, l1b);
  spec.l_f = 2.0;
  spec.metrics.emplace_back("sigma_dist", [sigma](const DecisionVar& x) {
    return (x.mat() - sigma).norm();
  });

  return {std::move(spec), std::move(sigma), tb, l1b, batch};
}

CompletionProblem build_matrix_completion(const RatingsData& data,
                                          double nuclear_radius,
                                          Eigen::Index batch) {
  require(data.rows > 0 && data.cols > 0, "build_matrix_completion: empty shape");
  require(!data.train.empty(), "build_matrix_completion: no training entries");
  require(nuclear_radius > 0.0, "build_matrix_completion: radius must be positive");
  const Eigen::Index train_size = static_cast<Eigen::Index>(data.train.size());
  require(batch >= 1 && batch <= train_size, "build_matrix_completion: bad batch");
  for (const auto& e : data.train)
    require(e.row >= 0 && e.row < data.rows && e.col >= 0 && e.col < data.cols,
            "build_matrix_completion: train entry out of range");
  for (const auto& e : data.test)
    require(e.row >= 0 && e.row < data.rows && e.col >= 0 && e.col < data.cols,
            "build_matrix_completion: test entry out of range");

  auto held = std::make_shared<const RatingsData>(data);
  const Eigen::Index rows = data.rows, cols = data.cols;

  ProblemSpec spec{Domain(NuclearBall{rows, cols, nuclear_radius})};
  spec.name = "completion";
  spec.objective = [held](const DecisionVar& x) {
    double s = 0.0;
    for (const auto& e : held->train) {
      const double r = x.mat()(e.row, e.col) - e.value;
      s += r * r;
    }
    return s;
  };
  spec.oracle.full_gradient = [held, rows, cols](const DecisionVar& x) {
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(rows, cols);
    for (const auto& e : held->train)
      g(e.row, e.col) += 2.0 * (x.mat()(e.row, e.col) - e.value);
    return DecisionVar::matrix(std::move(g));
  };
  const double scale = static_cast<double>(train_size) / static_cast<double>(batch);
  spec.oracle.sample_gradient = [held, rows, cols, train_size, batch, scale](
                                    const DecisionVar& x, Rng& rng) {
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(rows, cols);
    for (Eigen::Index i : sample_minibatch(train_size, batch, rng)) {
      const Rating& e = held->train[static_cast<size_t>(i)];
      g(e.row, e.col) += 2.0 * scale * (x.mat()(e.row, e.col) - e.value);
    }
    return DecisionVar::matrix(std::move(g));
  };
  spec.a_map = make_vectorize_map(DecisionVar::matrix(rows, cols));
  spec.a_norm = 1.0;
  spec.g = indicator_box(Eigen::VectorXd::Constant(rows * cols, 1.0),
                         Eigen::VectorXd::Constant(rows * cols, 5.0));
  spec.l_f = 2.0;

  const auto rmse = [](const std::vector<Rating>& set, const DecisionVar& x) {
    if (set.empty()) return 0.0;
    double s = 0.0;
    for (const auto& e : set) {
      const double r = x.mat()(e.row, e.col) - e.value;
      s += r * r;
    }
    return std::sqrt(s / static_cast<double>(set.size()));
  };
  spec.metrics.emplace_back(
      "train_rmse", [held, rmse](const DecisionVar& x) { return rmse(held->train, x); });
  spec.metrics.emplace_back(
      "test_rmse", [held, rmse](const DecisionVar& x) { return rmse(held->test, x); });

  return {std::move(spec), train_size, batch};
}

Eigen::MatrixXd generate_blobs(Eigen::Index n, Eigen::Index clusters,
                               Eigen::Index dim, double spread, Rng& rng) {
  require(n > 0 && dim > 0, "generate_blobs: empty shape");
  require(clusters >= 1 && clusters <= n, "generate_blobs: bad cluster count");
  require(spread >= 0.0, "generate_blobs: negative spread");
  require(dim >= 63 || clusters <= (Eigen::Index{1} << std::min<Eigen::Index>(dim, 62)),
          "generate_blobs: too many clusters for the dimension");

  // Centers on distinct hypercube corners of side 5; points split into
  // contiguous, near-equal groups.
  Eigen::MatrixXd points(n, dim);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index c = i * clusters / n;
    for (Eigen::Index j = 0; j < dim; ++j) {
      const double corner = j < 62 && ((c >> j) & 1) ? 5.0 : 0.0;
      points(i, j) = corner + spread * rng.normal();
    }
  }
  return points;
}

Eigen::MatrixXd generate_covariance_factors(Eigen::Index dim, Eigen::Index blocks,
                                            Rng& rng) {
  require(dim > 0 && blocks > 0 && dim % blocks == 0,
          "generate_covariance_factors: dim must be a positive multiple of blocks");
  const Eigen::Index s = dim / blocks;
  Eigen::MatrixXd f = Eigen::MatrixXd::Zero(dim, blocks);
  for (Eigen::Index b = 0; b < blocks; ++b) {
    Eigen::VectorXd phi(s);
    for (Eigen::Index i = 0; i < s; ++i) phi[i] = rng.normal();
    phi.normalize();
    f.block(b * s, b, s, 1) = (0.5 + rng.uniform()) * phi;
  }
  return f;
}

RatingsData generate_ratings(Eigen::Index rows, Eigen::Index cols, Eigen::Index rank,
                             Eigen::Index observed, double test_fraction, Rng& rng) {
  require(rows > 0 && cols > 0 && rank > 0, "generate_ratings: empty shape");
  require(observed >= 1 && observed <= rows * cols, "generate_ratings: bad count");
  require(test_fraction >= 0.0 && test_fraction < 1.0,
          "generate_ratings: fraction outside [0, 1)");

  Eigen::MatrixXd u(rows, rank), v(cols, rank);
  for (Eigen::Index j = 0; j < rank; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) u(i, j) = rng.normal();
    for (Eigen::Index i = 0; i < cols; ++i) v(i, j) = rng.normal();
  }
  const double gain = 1.0 / std::sqrt(static_cast<double>(rank));

  RatingsData data;
  data.rows = rows;
  data.cols = cols;
  for (Eigen::Index flat : sample_minibatch(rows * cols, observed, rng)) {
    Rating e;
    e.row = flat % rows;
    e.col = flat / rows;
    e.value = clip(3.0 + gain * u.row(e.row).dot(v.row(e.col)), 1.0, 5.0);
    if (rng.uniform() < test_fraction)
      data.test.push_back(e);
    else
      data.train.push_back(e);
  }
  if (data.train.empty()) {
    data.train.push_back(data.test.back());
    data.test.pop_back();
  }
  return data;
}

void save_ratings(const RatingsData& data, const std::string& path) {
  std::ofstream out(path);
  require(out.good(), "save_ratings: cannot open " + path);
  out << "ratings " << data.rows << " " << data.cols << " " << data.train.size()
      << " " << data.test.size() << "\n";
  out.precision(17);
  for (const auto& e : data.train)
    out << e.row << " " << e.col << " " << e.value << " 0\n";
  for (const auto& e : data.test)
    out << e.row << " " << e.col << " " << e.value << " 1\n";
  require(out.good(), "save_ratings: write failed for " + path);
}

RatingsData load_ratings(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "load_ratings: cannot open " + path);
  std::string magic;
  size_t ntrain = 0, ntest = 0;
  RatingsData data;
  in >> magic >> data.rows >> data.cols >> ntrain >> ntest;
  require(in.good() && magic == "ratings", "load_ratings: bad header in " + path);
  for (size_t i = 0; i < ntrain + ntest; ++i) {
    Rating e;
    int split = 0;
    in >> e.row >> e.col >> e.value >> split;
    require(!in.fail(), "load_ratings: truncated file " + path);
    require(e.row >= 0 && e.row < data.rows && e.col >= 0 && e.col < data.cols,
            "load_ratings: entry out of range in " + path);
    (split == 0 ? data.train : data.test).push_back(e);
  }
  require(data.train.size() == ntrain && data.test.size() == ntest,
          "load_ratings: split counts do not match header in " + path);
  return data;
}

namespace {

struct RawRating {
  long user;
  long item;
  double value;
};

std::vector<RawRating> parse_movielens_file(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "load_movielens: cannot open " + path);
  std::vector<RawRating> out;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    RawRating r{};
    if (!(fields >> r.user >> r.item >> r.value) || r.user < 1 || r.item < 1 ||
        r.value < 1.0 || r.value > 5.0)
      fail("load_movielens: malformed line " + std::to_string(line_no) + " in " +
           path);
    out.push_back(r);
  }
  return out;
}

Eigen::Index dense_id(const std::vector<long>& sorted_ids, long id) {
  const auto it = std::lower_bound(sorted_ids.begin(), sorted_ids.end(), id);
  return static_cast<Eigen::Index>(it - sorted_ids.begin());
}

}  // namespace

RatingsData load_movielens(const std::string& data_path, const std::string& test_path,
                           double test_fraction, std::uint64_t seed) {
  require(test_fraction >= 0.0 && test_fraction < 1.0,
          "load_movielens: fraction outside [0, 1)");
  std::vector<RawRating> base = parse_movielens_file(data_path);
  std::vector<RawRating> extra;
  if (!test_path.empty()) extra = parse_movielens_file(test_path);
  require(!base.empty(), "load_movielens: no ratings in " + data_path);

  std::vector<long> users, items;
  for (const auto* set : {&base, &extra})
    for (const auto& r : *set) {
      users.push_back(r.user);
      items.push_back(r.item);
    }
  std::sort(users.begin(), users.end());
  users.erase(std::unique(users.begin(), users.end()), users.end());
  std::sort(items.begin(), items.end());
  items.erase(std::unique(items.begin(), items.end()), items.end());

  RatingsData data;
  data.rows = static_cast<Eigen::Index>(users.size());
  data.cols = static_cast<Eigen::Index>(items.size());
  const auto densify = [&](const RawRating& r) {
    return Rating{dense_id(users, r.user), dense_id(items, r.item), r.value};
  };
  if (!test_path.empty()) {
    for (const auto& r : base) data.train.push_back(densify(r));
    for (const auto& r : extra) data.test.push_back(densify(r));
  } else {
    Rng rng(seed);
    for (const auto& r : base)
      (rng.uniform() < test_fraction ? data.test : data.train).push_back(densify(r));
    if (data.train.empty()) {
      data.train.push_back(data.test.back());
      data.test.pop_back();
    }
  }
  return data;
}

}  // namespace shcgm
