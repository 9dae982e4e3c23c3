#include "shcgm/solvers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include <Eigen/Cholesky>

#include "shcgm/reference.hpp"

namespace shcgm {

StepParams schedules_at(const Schedules& s, std::int64_t k) {
  require(k >= 1, "schedules_at: k is 1-based");
  require(s.beta0 > 0.0, "schedules_at: beta0 must be positive");
  const double kk = static_cast<double>(k);
  StepParams p{};
  if (s.mode == OracleMode::Multiplicative) {
    require(s.delta > 0.0 && s.delta <= 1.0,
            "schedules_at: multiplicative delta outside (0, 1]");
    p.eta = 9.0 / (s.delta * (kk - 1.0) + 9.0);
    p.beta = s.beta0 / std::sqrt(s.delta * (kk - 1.0) + 9.0);
    p.rho = 4.0 / std::pow(s.delta * (kk - 2.0) + 9.0, 2.0 / 3.0);
  } else {
    if (s.mode == OracleMode::Additive)
      require(s.delta >= 0.0, "schedules_at: additive delta must be >= 0");
    p.eta = 9.0 / (kk + 8.0);
    p.beta = s.beta0 / std::sqrt(kk + 8.0);
    p.rho = 4.0 / std::pow(kk + 7.0, 2.0 / 3.0);
  }
  // rho <= 1 holds mathematically for every k >= 1; the clamp only absorbs
  // floating-point excess in pow at the k = 1 boundary.
  p.rho = std::min(p.rho, 1.0);
  return p;
}

namespace {

bool has_spectral_part(const Domain& d) {
  if (d.as<PsdTraceBall>() || d.as<NuclearBall>()) return true;
  if (const auto* list = d.as<DomainList>())
    for (const auto& sub : *list)
      if (has_spectral_part(sub)) return true;
  return false;
}

bool llt_psd(const Eigen::MatrixXd& m) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  return llt.info() == Eigen::Success;
}

// Sound proof that lambda_min(sym(V)) >= t.
bool certify_lambda_min_at_least(const Eigen::MatrixXd& v, double t) {
  if (v.rows() > 400) return false;
  Eigen::MatrixXd shifted = 0.5 * (v + v.transpose());
  shifted.diagonal().array() -= t;
  return llt_psd(shifted);
}

// Sound proof that sigma_max(V) <= u, via the Schur-complement embedding
// [[u I, V], [V^T, u I]] >= 0.
bool certify_sigma_max_at_most(const Eigen::MatrixXd& v, double u) {
  const Eigen::Index r = v.rows();
  const Eigen::Index c = v.cols();
  if (r + c > 400 || u < 0.0) return false;
  Eigen::MatrixXd emb = Eigen::MatrixXd::Zero(r + c, r + c);
  emb.topRightCorner(r, c) = v;
  emb.bottomLeftCorner(c, r) = v.transpose();
  emb.diagonal().array() += u;
  return llt_psd(emb);
}

LmoResult reference_quality_lmo(const Domain& domain, const DecisionVar& dir) {
  bool dense_ok = true;
  if (const auto* d = domain.as<PsdTraceBall>()) dense_ok = d->n <= 200;
  if (const auto* d = domain.as<NuclearBall>()) dense_ok = d->rows + d->cols <= 400;
  if (dense_ok) return reference::exact_lmo_dense(domain, dir);
  EigConfig tight;
  tight.tol = 1e-12;
  tight.max_iter = 100000;
  return lmo(domain, dir, tight);
}

// Certified value gap for a candidate lmo value on a spectral domain, or
// nothing if no sound bound within budget exists at this quality.
std::optional<double> certify_gap(const Domain& domain, const DecisionVar& dir,
                                  double value, double budget) {
  double beta = 0.0;
  if (const auto* d = domain.as<PsdTraceBall>())
    beta = d->beta;
  else if (const auto* d = domain.as<NuclearBall>())
    beta = d->beta;
  else
    return 0.0;  // closed-form domains are exact
  const double fro = dir.mat().norm();
  // Crude tier: every optimal value is >= -beta ||V||_F.
  const double crude = value + beta * fro;
  if (crude <= budget) return crude;
  // Cholesky tier.
  if (const auto* d = domain.as<PsdTraceBall>()) {
    // For the <= ball the candidate value is never positive, so a lower
    // bound on lambda_min certifies both atom branches.
    const double t = (value - budget) / d->beta;
    if (certify_lambda_min_at_least(dir.mat(), t)) return budget;
    return std::nullopt;
  }
  const auto* d = domain.as<NuclearBall>();
  const double u = (budget - value) / d->beta;  // value = -beta s~
  if (certify_sigma_max_at_most(dir.mat(), u)) return budget;
  return std::nullopt;
}

}  // namespace

InexactLmoResult lmo_additive(const Domain& domain, const DecisionVar& direction,
                              double delta, const LmoContext& ctx,
                              const EigConfig& base) {
  require(delta >= 0.0, "lmo_additive: delta must be >= 0");
  InexactLmoResult out;
  if (delta == 0.0) {
    LmoResult r = lmo(domain, direction, base);
    out.atom = std::move(r.atom);
    out.warm = std::move(r.warm);
    out.value = r.value;
    return out;
  }
  require(ctx.beta > 0.0 && ctx.eta > 0.0, "lmo_additive: schedule context missing");
  out.budget = delta * 0.5 * ctx.eta * ctx.diameter * ctx.diameter *
               (ctx.l_f + ctx.a_norm * ctx.a_norm / ctx.beta);

  if (!has_spectral_part(domain)) {
    LmoResult r = lmo(domain, direction, base);
    out.atom = std::move(r.atom);
    out.warm = std::move(r.warm);
    out.value = r.value;
    out.certified_gap = 0.0;
    out.loose_accepted = true;
    return out;
  }
  if (domain.as<DomainList>()) {
    // Mixed products with spectral parts skip the loose tier; the dense
    // route is exact, so the budget holds with gap 0.
    LmoResult r = reference_quality_lmo(domain, direction);
    out.atom = std::move(r.atom);
    out.warm = std::move(r.warm);
    out.value = r.value;
    return out;
  }

  const double tol_tiers[3] = {std::max(base.tol, 1e-3), std::max(base.tol, 1e-6),
                               std::min(base.tol, 1e-9)};
  for (int tier = 0; tier < 3; ++tier) {
    EigConfig cfg = base;
    cfg.tol = tol_tiers[tier];
    LmoResult r = lmo(domain, direction, cfg);
    const auto gap = certify_gap(domain, direction, r.value, out.budget);
    if (gap.has_value()) {
      out.atom = std::move(r.atom);
      out.warm = std::move(r.warm);
      out.value = r.value;
      out.certified_gap = *gap;
      out.loose_accepted = tier == 0;
      out.refinements = tier;
      return out;
    }
    out.refinements = tier + 1;
  }
  LmoResult r = reference_quality_lmo(domain, direction);
  out.atom = std::move(r.atom);
  out.warm = std::move(r.warm);
  out.value = r.value;
  out.certified_gap = 0.0;
  out.fell_back = true;
  return out;
}

InexactLmoResult lmo_multiplicative(const Domain& domain, const DecisionVar& direction,
                                    double delta, const LmoContext& ctx,
                                    const EigConfig& base, const InnerLmo& inner) {
  require(delta > 0.0 && delta <= 1.0, "lmo_multiplicative: delta outside (0, 1]");
  InexactLmoResult out;
  LmoResult std_r = lmo(domain, direction, base);
  out.warm = std_r.warm;
  if (delta == 1.0) {
    // Exact oracle required at delta = 1; pass its atom through untouched.
    out.atom = std::move(std_r.atom);
    out.value = std_r.value;
    return out;
  }
  require(ctx.x != nullptr, "lmo_multiplicative: context iterate missing");

  Atom cand;
  if (inner) {
    cand = inner(direction);
  } else {
    // Worst admissible oracle: the boundary blend x + delta (s - x).
    DecisionVar blended = *ctx.x;
    blended.blend(delta, materialize(std_r.atom));
    cand.node = Atom::DensePoint{std::move(blended)};
  }

  const LmoResult ref = reference_quality_lmo(domain, direction);
  const double at_x = direction.dot(*ctx.x);
  const double lhs = atom_dot(direction, cand) - at_x;
  const double rhs = delta * (ref.value - at_x);
  const double slack =
      1e-9 * (1.0 + std::abs(at_x) + std::abs(ref.value) + std::abs(lhs));
  if (lhs <= rhs + slack) {
    out.atom = std::move(cand);
    out.value = lhs + at_x;
    return out;
  }
  out.atom = ref.atom;
  out.value = ref.value;
  out.fell_back = true;
  return out;
}

void solver_iterate(SolverState& st, const ProblemSpec& p, const SolverConfig& cfg,
                    std::int64_t k, Rng& root, double* mse_out) {
  const StepParams sp = schedules_at(cfg.schedules, k);
  Rng iter_rng = root.child(static_cast<std::uint64_t>(k));

  DecisionVar grad;
  if (cfg.algorithm == Algorithm::Hcgm) {
    grad = p.oracle.full_gradient(st.x);
    update_estimator(st.est, grad, 1.0);
  } else {
    grad = p.oracle.sample_gradient(st.x, iter_rng);
    update_estimator(st.est, grad, sp.rho);
  }

  if (mse_out != nullptr && p.oracle.full_gradient) {
    DecisionVar diff = p.oracle.full_gradient(st.x);
    diff.axpy(-1.0, st.est.d);
    *mse_out = diff.squared_norm();
  }

  const bool smooth = cfg.algorithm != Algorithm::Sfw && p.g.has_value();
  DecisionVar v = st.est.d;
  if (smooth) v.axpy(1.0, smoothed_grad_term(*p.g, *p.a_map, st.x, sp.beta));

  EigConfig ecfg = cfg.eig;
  if (st.eig_warm.size() > 0) ecfg.warm_start = &st.eig_warm;
  LmoContext ctx{sp.eta, sp.beta, diameter(p.domain), p.l_f, p.a_norm, &st.x};

  Atom atom;
  Eigen::VectorXd warm;
  switch (cfg.schedules.mode) {
    case OracleMode::Exact: {
      LmoResult r = lmo(p.domain, v, ecfg);
      if (!r.exact) ++st.stats.eig_early_stops;
      atom = std::move(r.atom);
      warm = std::move(r.warm);
      break;
    }
    case OracleMode::Additive: {
      InexactLmoResult r = lmo_additive(p.domain, v, cfg.schedules.delta, ctx, ecfg);
      st.stats.additive_loose_accepts += r.loose_accepted ? 1 : 0;
      st.stats.additive_refinements += r.refinements;
      st.stats.additive_fallbacks += r.fell_back ? 1 : 0;
      atom = std::move(r.atom);
      warm = std::move(r.warm);
      break;
    }
    case OracleMode::Multiplicative: {
      InexactLmoResult r =
          lmo_multiplicative(p.domain, v, cfg.schedules.delta, ctx, ecfg);
      st.stats.mult_cert_failures += r.fell_back ? 1 : 0;
      atom = std::move(r.atom);
      warm = std::move(r.warm);
      break;
    }
  }
  ++st.stats.lmo_calls;
  if (warm.size() > 0) st.eig_warm = std::move(warm);

  cgm_step(st.x, atom, sp.eta);
}

RunResult run_solver(const ProblemSpec& p, const SolverConfig& cfg,
                     const IterateObserver& observer) {
  require(cfg.iterations >= 0, "run_solver: negative iteration budget");
  require(static_cast<bool>(p.objective), "run_solver: problem lacks an objective");
  require(cfg.schedules.beta0 > 0.0, "run_solver: beta0 must be positive");
  if (cfg.algorithm == Algorithm::Hcgm)
    require(static_cast<bool>(p.oracle.full_gradient),
            "run_solver: hcgm needs a full gradient");
  else
    require(static_cast<bool>(p.oracle.sample_gradient),
            "run_solver: missing sample oracle");
  if (p.g.has_value()) {
    require(p.a_map.has_value(), "run_solver: nonsmooth term without a map");
    require(p.a_map->output_dim == p.g->dim,
            "run_solver: map/term dimension mismatch");
  }
  if (cfg.schedules.mode == OracleMode::Multiplicative)
    require(cfg.schedules.delta > 0.0 && cfg.schedules.delta <= 1.0,
            "run_solver: multiplicative delta outside (0, 1]");
  if (cfg.schedules.mode == OracleMode::Additive)
    require(cfg.schedules.delta >= 0.0, "run_solver: additive delta must be >= 0");

  SolverState st;
  st.x = init_point(p.domain);
  st.est.d = domain_shape(p.domain);
  Rng root(cfg.seed);

  RunResult out;
  const auto t0 = std::chrono::steady_clock::now();
  const auto elapsed_ms = [&t0]() {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                     t0)
        .count();
  };

  const bool mse_on = cfg.record_estimator_mse && p.oracle.full_gradient != nullptr;
  bool aborted = false;
  const auto record = [&](std::int64_t k, std::optional<double> mse) {
    TraceRecord r;
    r.k = k;
    r.objective = p.objective(st.x);
    if (p.reference_objective.has_value())
      r.residual = std::abs(r.objective - *p.reference_objective);
    if (p.g.has_value() && p.g->kind == NonsmoothTerm::Kind::IndicatorSet)
      r.feasibility = distance_to_set(*p.g, p.a_map->apply(st.x));
    r.estimator_mse = mse;
    r.beta = k == 0 ? cfg.schedules.beta0 : schedules_at(cfg.schedules, k).beta;
    r.wall_ms = elapsed_ms();
    const bool ok = std::isfinite(r.objective) && st.x.all_finite();
    out.trace.push_back(std::move(r));
    if (observer) observer(k, st.x);
    if (!ok) {
      out.error = "non-finite iterate at k=" + std::to_string(k);
      aborted = true;
    }
  };

  std::optional<double> mse0;
  if (mse_on) mse0 = p.oracle.full_gradient(st.x).squared_norm();  // d_0 = 0
  record(0, mse0);

  std::int64_t next_record = 1;
  for (std::int64_t k = 1; k <= cfg.iterations && !aborted; ++k) {
    const bool rec = k == next_record || k == cfg.iterations;
    double mse = 0.0;
    double* mse_ptr = rec && mse_on ? &mse : nullptr;
    solver_iterate(st, p, cfg, k, root, mse_ptr);
    if (rec) {
      record(k, mse_ptr != nullptr ? std::optional<double>(mse) : std::nullopt);
      if (k == next_record)
        next_record =
            k < cfg.trace_dense_until
                ? k + 1
                : std::max(k + 1, static_cast<std::int64_t>(std::llround(
                                      static_cast<double>(k) * cfg.trace_thin_factor)));
    }
  }

  out.x = std::move(st.x);
  out.estimator = std::move(st.est);
  out.stats = st.stats;
  return out;
}

}  // namespace shcgm
