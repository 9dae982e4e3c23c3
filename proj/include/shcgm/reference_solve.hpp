#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "shcgm/solvers.hpp"

namespace shcgm {

struct ReferenceSolution {
  DecisionVar x_star;
  double f_star = 0.0;
  double feasibility = 0.0;  // dist(A x_star, K); 0 when g is absent or Lipschitz
  std::optional<double> dual_norm_estimate;
  bool low_confidence = false;  // no recorded iterate reached feasibility 1e-4
  std::string provenance;       // method plus iteration budget, beta0, seed
};

// Long deterministic full-gradient run. Each recorded iterate is first passed
// through ProblemSpec::round_feasible when present; among candidates with
// feasibility <= 1e-4 the lowest objective wins, otherwise the least
// infeasible one wins and the result is flagged low confidence. The 1-d
// analytic problem short-circuits to its closed form, the only case with a
// dual norm estimate.
ReferenceSolution reference_solve(const ProblemSpec& p,
                                  std::int64_t budget = 1000000,
                                  double beta0 = 1.0);

// Scalar reference record persisted as a small self-describing text file.
// descriptor must identify the problem instance; the file name is keyed by
// its hash and the stored copy guards against collisions on load.
struct ReferenceCacheEntry {
  std::string descriptor;
  double f_star = 0.0;
  double feasibility = 0.0;
  bool low_confidence = false;
  std::string provenance;
};

std::string reference_cache_path(const std::string& dir,
                                 const std::string& descriptor);
std::optional<ReferenceCacheEntry> load_reference_cache(
    const std::string& dir, const std::string& descriptor);
// Write-temp-then-rename; concurrent writers of the same entry both land a
// complete file.
void store_reference_cache(const std::string& dir,
                           const ReferenceCacheEntry& entry);

// Returns the cached record, or computes, stores, and returns it.
ReferenceCacheEntry cached_reference(
    const std::string& dir, const std::string& descriptor,
    const std::function<ReferenceCacheEntry()>& compute);

}  // namespace shcgm
