#include "shcgm/stochastic.hpp"

#include <algorithm>
#include <unordered_set>

namespace shcgm {

void update_estimator(EstimatorState& st, const DecisionVar& g, double rho) {
  require(rho > 0.0 && rho <= 1.0, "update_estimator: rho outside (0, 1]");
  if (st.k == 0 && st.d.flat_size() == 0) st.d = g.zeros_like();
  st.d.blend(rho, g);
  ++st.k;
}

std::vector<Eigen::Index> sample_minibatch(Eigen::Index population,
                                           Eigen::Index batch, Rng& rng) {
  require(population > 0, "sample_minibatch: empty population");
  require(batch > 0 && batch <= population, "sample_minibatch: batch out of range");
  std::vector<Eigen::Index> out;
  out.reserve(static_cast<size_t>(batch));
  std::unordered_set<Eigen::Index> seen;
  seen.reserve(static_cast<size_t>(batch) * 2);
  // Floyd: for j in [population - batch, population), keep a uniform draw
  // from [0, j], replacing collisions with j itself. The set is only for
  // membership; output order is canonicalized by the final sort.
  for (Eigen::Index j = population - batch; j < population; ++j) {
    const Eigen::Index t =
        static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::uint64_t>(j) + 1));
    const Eigen::Index pick = seen.count(t) ? j : t;
    seen.insert(pick);
    out.push_back(pick);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace shcgm
