#ifndef LCJM_RELABEL_HPP
#define LCJM_RELABEL_HPP

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "lcjm/error.hpp"
#include "lcjm/model.hpp"
#include "lcjm/sampler.hpp"

namespace lcjm {

enum class RelabelStatistic { intercept, alpha };

inline RelabelStatistic parse_relabel_statistic(const std::string& s) {
  if (s == "intercept" || s == "beta0") return RelabelStatistic::intercept;
  if (s == "alpha") return RelabelStatistic::alpha;
  throw DataError("unknown relabel statistic '" + s + "' (expected intercept or alpha)");
}

/// Class order for one state: perm[new] = old, ascending in the statistic,
/// ties kept in original label order. `tied` reports whether any tie occurred.
inline std::vector<int> relabel_permutation(const ParameterState& state, RelabelStatistic stat, bool* tied = nullptr) {
  const int G = state.G();
  std::vector<double> key(static_cast<std::size_t>(G));
  for (int g = 0; g < G; ++g) {
    const auto gi = static_cast<std::size_t>(g);
    key[gi] = stat == RelabelStatistic::intercept ? state.beta[gi](0) : state.alpha[gi];
  }
  std::vector<int> perm(static_cast<std::size_t>(G));
  std::iota(perm.begin(), perm.end(), 0);
  std::stable_sort(perm.begin(), perm.end(),
                   [&](int a, int b) { return key[static_cast<std::size_t>(a)] < key[static_cast<std::size_t>(b)]; });
  if (tied) {
    *tied = false;
    for (std::size_t k = 1; k < perm.size(); ++k) {
      if (key[static_cast<std::size_t>(perm[k])] == key[static_cast<std::size_t>(perm[k - 1])]) *tied = true;
    }
  }
  return perm;
}

/// Applies perm[new] = old to every class-indexed block, the indicators and the random effects.
inline ParameterState permute_classes(const ParameterState& state, const std::vector<int>& perm) {
  const auto G = perm.size();
  if (G != static_cast<std::size_t>(state.G())) throw DataError("permutation length does not match G");
  std::vector<int> inverse(G);
  for (std::size_t k = 0; k < G; ++k) inverse[static_cast<std::size_t>(perm[k])] = static_cast<int>(k);
  ParameterState out = state;
  for (std::size_t k = 0; k < G; ++k) {
    const auto old = static_cast<std::size_t>(perm[k]);
    out.beta[k] = state.beta[old];
    out.Sigma_b[k] = state.Sigma_b[old];
    out.gamma[k] = state.gamma[old];
    out.alpha[k] = state.alpha[old];
    out.gamma_h0[k] = state.gamma_h0[old];
    out.pi(static_cast<Eigen::Index>(k)) = state.pi(static_cast<Eigen::Index>(old));
  }
  for (std::size_t i = 0; i < state.v.size(); ++i) out.v[i] = inverse[static_cast<std::size_t>(state.v[i])];
  for (std::size_t i = 0; i < state.b.size(); ++i) {
    for (std::size_t k = 0; k < G; ++k) out.b[i][k] = state.b[i][static_cast<std::size_t>(perm[k])];
  }
  return out;
}

struct RelabelResult {
  ChainOutput output;
  std::vector<std::vector<int>> permutations;  // per retained draw, perm[new] = old
  std::vector<std::size_t> tied_draws;         // indices of draws with a tied statistic
};

/// Orders the classes of every retained draw by the statistic. Occupancy rows
/// (recorded every iteration) are left in sampler labels.
inline RelabelResult relabel_draws(const ChainOutput& output, RelabelStatistic stat = RelabelStatistic::intercept) {
  RelabelResult r;
  r.output = output;
  for (std::size_t k = 0; k < output.draws.size(); ++k) {
    bool tied = false;
    auto perm = relabel_permutation(output.draws[k], stat, &tied);
    r.output.draws[k] = permute_classes(output.draws[k], perm);
    if (tied) r.tied_draws.push_back(k);
    r.permutations.push_back(std::move(perm));
  }
  return r;
}

}  // namespace lcjm

#endif  // LCJM_RELABEL_HPP
