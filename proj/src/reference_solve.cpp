#include "shcgm/reference_solve.hpp"

#include <unistd.h>

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <system_error>
#include <utility>

namespace shcgm {
namespace {

constexpr double kFeasibleTol = 1e-4;

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

double feasibility_of(const ProblemSpec& p, const DecisionVar& x) {
  if (!p.g.has_value() || p.g->kind != NonsmoothTerm::Kind::IndicatorSet)
    return 0.0;
  return distance_to_set(*p.g, p.a_map->apply(x));
}

std::string fmt_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

bool parse_double(const std::string& s, double& out) {
  const char* b = s.data();
  const char* e = b + s.size();
  const auto res = std::from_chars(b, e, out);
  return res.ec == std::errc() && res.ptr == e;
}

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace

ReferenceSolution reference_solve(const ProblemSpec& p, std::int64_t budget,
                                  double beta0) {
  require(budget >= 0, "reference_solve: negative budget");

  if (p.name == "analytic1d") {
    ReferenceSolution r;
    r.x_star = DecisionVar::vector(Eigen::VectorXd::Constant(1, 0.5));
    r.f_star = 0.01;
    r.feasibility = 0.0;
    r.dual_norm_estimate = 0.2;
    r.provenance = "closed form";
    return r;
  }

  require(p.oracle.full_gradient != nullptr,
          "reference_solve: problem has no full gradient");

  SolverConfig cfg;
  cfg.algorithm = Algorithm::Hcgm;
  cfg.iterations = budget;
  cfg.schedules.beta0 = beta0;
  cfg.record_estimator_mse = false;

  DecisionVar best_x;
  double best_obj = 0.0;
  double best_feas = 0.0;
  bool have_any = false;
  bool have_feasible = false;
  const auto observer = [&](std::int64_t, const DecisionVar& x) {
    DecisionVar cand = p.round_feasible ? p.round_feasible(x) : x;
    const double feas = feasibility_of(p, cand);
    const double obj = p.objective(cand);
    if (!std::isfinite(obj) || !std::isfinite(feas)) return;
    const bool feasible = feas <= kFeasibleTol;
    const bool take = !have_any ||
                      (feasible && (!have_feasible || obj < best_obj)) ||
                      (!have_feasible && feas < best_feas);
    if (take) {
      best_x = std::move(cand);
      best_obj = obj;
      best_feas = feas;
      have_any = true;
      have_feasible = have_feasible || feasible;
    }
  };

  const RunResult out = run_solver(p, cfg, observer);
  if (out.error.has_value())
    throw std::runtime_error("reference_solve: " + *out.error);
  if (!have_any) throw std::runtime_error("reference_solve: no finite iterate");

  ReferenceSolution r;
  r.x_star = std::move(best_x);
  r.f_star = best_obj;
  r.feasibility = best_feas;
  r.low_confidence = !have_feasible;
  r.provenance = "hcgm iterations=" + std::to_string(budget) +
                 " beta0=" + fmt_double(beta0) + " seed=0";
  return r;
}

std::string reference_cache_path(const std::string& dir,
                                 const std::string& descriptor) {
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx",
                static_cast<unsigned long long>(fnv1a64(descriptor)));
  return dir + "/ref_" + hex + ".txt";
}

std::optional<ReferenceCacheEntry> load_reference_cache(
    const std::string& dir, const std::string& descriptor) {
  std::ifstream in(reference_cache_path(dir, descriptor));
  if (!in) return std::nullopt;
  std::string line;
  if (!std::getline(in, line) || line != "shcgm reference cache v1")
    return std::nullopt;

  ReferenceCacheEntry e;
  bool saw_f = false;
  bool saw_desc = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto sp = line.find(' ');
    if (sp == std::string::npos) return std::nullopt;
    const std::string key = line.substr(0, sp);
    const std::string val = line.substr(sp + 1);
    if (key == "descriptor") {
      e.descriptor = val;
      saw_desc = true;
    } else if (key == "provenance") {
      e.provenance = val;
    } else if (key == "f_star") {
      if (!parse_double(val, e.f_star)) return std::nullopt;
      saw_f = true;
    } else if (key == "feasibility") {
      if (!parse_double(val, e.feasibility)) return std::nullopt;
    } else if (key == "low_confidence") {
      e.low_confidence = val == "1";
    }
    // Unknown keys are forward-compatible noise.
  }
  if (!saw_f || !saw_desc) return std::nullopt;
  if (e.descriptor != descriptor) return std::nullopt;  // hash collision
  return e;
}

void store_reference_cache(const std::string& dir,
                           const ReferenceCacheEntry& entry) {
  require(entry.descriptor.find('\n') == std::string::npos,
          "store_reference_cache: descriptor must be single-line");
  require(entry.provenance.find('\n') == std::string::npos,
          "store_reference_cache: provenance must be single-line");
  std::filesystem::create_directories(dir);
  const std::string path = reference_cache_path(dir, entry.descriptor);
  const std::string tmp = path + ".tmp" + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw std::runtime_error("store_reference_cache: cannot write " + tmp);
    out << "shcgm reference cache v1\n";
    out << "descriptor " << entry.descriptor << "\n";
    out << "provenance " << entry.provenance << "\n";
    out << "f_star " << fmt_double(entry.f_star) << "\n";
    out << "feasibility " << fmt_double(entry.feasibility) << "\n";
    out << "low_confidence " << (entry.low_confidence ? 1 : 0) << "\n";
    if (!out.flush())
      throw std::runtime_error("store_reference_cache: write failed for " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw std::runtime_error("store_reference_cache: rename failed: " + ec.message());
  }
}

ReferenceCacheEntry cached_reference(
    const std::string& dir, const std::string& descriptor,
    const std::function<ReferenceCacheEntry()>& compute) {
  if (auto hit = load_reference_cache(dir, descriptor)) return *hit;
  ReferenceCacheEntry fresh = compute();
  require(fresh.descriptor == descriptor,
          "cached_reference: compute returned a mismatched descriptor");
  store_reference_cache(dir, fresh);
  return fresh;
}

}  // namespace shcgm
