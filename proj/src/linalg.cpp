#include "shcgm/linalg.hpp"

#include <cmath>
#include <limits>

namespace shcgm {

namespace {

Eigen::VectorXd start_vector(Eigen::Index n, const EigConfig& cfg) {
  if (cfg.warm_start != nullptr && cfg.warm_start->size() == n) {
    const double nrm = cfg.warm_start->norm();
    if (nrm > 0.0 && cfg.warm_start->allFinite()) return *cfg.warm_start / nrm;
  }
  Rng rng(0x5eed0000u ^ cfg.seed);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.normal();
  const double nrm = v.norm();
  // A vector of normals vanishes with probability zero; the fallback keeps
  // the function total.
  if (nrm == 0.0) {
    v.setZero();
    v[0] = 1.0;
    return v;
  }
  return v / nrm;
}

}  // namespace

EigResult extreme_eigpair(const Eigen::MatrixXd& m, EigWhich which,
                          const EigConfig& cfg) {
  require(m.rows() == m.cols(), "extreme_eigpair: matrix not square");
  require(m.rows() > 0, "extreme_eigpair: empty matrix");
  const Eigen::Index n = m.rows();
  const double fro = m.norm();

  EigResult out;
  out.vector = start_vector(n, cfg);
  if (fro == 0.0) {
    out.value = 0.0;
    out.residual = 0.0;
    out.converged = true;
    return out;
  }

  // Shift keeps the power step strictly positive definite: the dominant
  // eigenvalue of c I -/+ M is c -/+ lambda_extreme >= 1.
  const double c = fro + 1.0;
  const double sgn = (which == EigWhich::Min) ? -1.0 : 1.0;
  const double tol = cfg.tol * fro;

  Eigen::VectorXd v = out.vector;
  Eigen::VectorXd u = m * v;  // u tracks M v; one matvec per iteration
  double best_resid = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= cfg.max_iter; ++it) {
    const double lambda = v.dot(u);
    const double resid = (u - lambda * v).norm();
    if (resid < best_resid) {
      best_resid = resid;
      out.value = lambda;
      out.vector = v;
      out.residual = resid;
    }
    out.iterations = it;
    if (resid <= tol) {
      out.converged = true;
      return out;
    }
    Eigen::VectorXd w = c * v + sgn * u;
    const double wn = w.norm();
    if (wn == 0.0) break;  // unreachable for PD shift, kept for totality
    v = w / wn;
    u.noalias() = m * v;
  }
  return out;
}

EigResult extreme_eigpair(const SymMatrix& m, EigWhich which, const EigConfig& cfg) {
  return extreme_eigpair(m.dense(), which, cfg);
}

SvdResult top_singular_pair(const Eigen::MatrixXd& m, const EigConfig& cfg) {
  require(m.rows() > 0 && m.cols() > 0, "top_singular_pair: empty matrix");
  const double fro = m.norm();
  const bool tall = m.rows() >= m.cols();  // iterate on the narrower side

  SvdResult out;
  out.v = start_vector(tall ? m.cols() : m.rows(), cfg);
  if (fro == 0.0) {
    out.u = Eigen::VectorXd::Zero(tall ? m.rows() : m.cols());
    out.u[0] = 1.0;
    if (!tall) std::swap(out.u, out.v);
    out.converged = true;
    return out;
  }

  const double tol = cfg.tol * fro;
  // For a wide matrix run the same loop on M^T and swap sides at the end.
  const Eigen::MatrixXd& a = m;
  auto apply = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    return tall ? Eigen::VectorXd(a * x) : Eigen::VectorXd(a.transpose() * x);
  };
  auto apply_t = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    return tall ? Eigen::VectorXd(a.transpose() * x) : Eigen::VectorXd(a * x);
  };

  Eigen::VectorXd v = out.v;
  double best_resid = std::numeric_limits<double>::infinity();
  Eigen::VectorXd p = apply(v);
  for (int it = 1; it <= cfg.max_iter; ++it) {
    const double sigma = p.norm();
    out.iterations = it;
    if (sigma == 0.0) {
      // v landed in the null space; restart from a fresh seeded vector.
      EigConfig re = cfg;
      re.seed = cfg.seed + static_cast<std::uint64_t>(it);
      re.warm_start = nullptr;
      v = start_vector(v.size(), re);
      p = apply(v);
      continue;
    }
    const Eigen::VectorXd u = p / sigma;
    const Eigen::VectorXd z = apply_t(u);
    const double resid = (z - sigma * v).norm();
    if (resid < best_resid) {
      best_resid = resid;
      out.value = sigma;
      out.u = u;
      out.v = v;
      out.residual = resid;
    }
    if (resid <= tol) {
      out.converged = true;
      break;
    }
    const double zn = z.norm();
    if (zn == 0.0) break;
    v = z / zn;
    p = apply(v);
  }
  if (!tall) std::swap(out.u, out.v);
  return out;
}

LinearMap make_vectorize_map(const DecisionVar& shape) {
  LinearMap map;
  map.input_shape = shape.zeros_like();
  map.output_dim = shape.flat_size();
  map.apply = [](const DecisionVar& x) { return x.to_flat(); };
  DecisionVar proto = shape.zeros_like();
  map.adjoint = [proto](const Eigen::VectorXd& y) {
    return DecisionVar::from_flat(y, proto);
  };
  return map;
}

double operator_norm_estimate(const LinearMap& a, int probes, std::uint64_t seed) {
  require(static_cast<bool>(a.apply) && static_cast<bool>(a.adjoint),
          "operator_norm_estimate: map not fully specified");
  Rng rng(0xa0a0u ^ seed);
  DecisionVar x = a.input_shape.zeros_like();
  x.fill_normal(rng);
  const double n0 = x.norm();
  if (n0 == 0.0) return 0.0;
  x.scale(1.0 / n0);

  double lambda = 0.0;
  for (int it = 0; it < probes; ++it) {
    DecisionVar z = a.adjoint(a.apply(x));
    lambda = x.dot(z);  // Rayleigh quotient of A^T A
    const double zn = z.norm();
    if (zn == 0.0) return 0.0;
    z.scale(1.0 / zn);
    x = std::move(z);
  }
  return std::sqrt(std::max(lambda, 0.0));
}

}  // namespace shcgm
