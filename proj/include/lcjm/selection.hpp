#ifndef LCJM_SELECTION_HPP
#define LCJM_SELECTION_HPP

#include <cstddef>
#include <map>
#include <vector>

#include "lcjm/error.hpp"
#include "lcjm/model.hpp"
#include "lcjm/sampler.hpp"

namespace lcjm {

/// Number of class-specific parameters d: fixed effects, survival covariates,
/// hazard intercept plus the free spline coefficients, the free entries of
/// Sigma_b and the association.
inline std::size_t class_specific_parameter_count(const ModelSpec& spec) {
  const std::size_t q = spec.random_dim();
  return spec.fixed_dim() + spec.surv_dim() + spec.hazard_dim() + q * (q + 1) / 2 + 1;
}

/// g_opt = G - #{g : n_g / n <= psi}.
inline int nonempty_count(const std::vector<int>& occupancy, long n, double psi) {
  int empty = 0;
  for (int count : occupancy) {
    if (static_cast<double>(count) / static_cast<double>(n) <= psi) ++empty;
  }
  return static_cast<int>(occupancy.size()) - empty;
}

/// Most frequent value; ties go to the smaller class count.
inline int posterior_mode_classes(const std::map<int, long>& counts) {
  if (counts.empty()) throw DataError("posterior_mode_classes needs at least one count");
  int best = counts.begin()->first;
  long best_count = -1;
  for (const auto& [g, c] : counts) {
    if (c > best_count) {
      best = g;
      best_count = c;
    }
  }
  return best;
}

inline const std::vector<double>& default_psi_sweep() {
  static const std::vector<double> sweep{0.01, 0.02, 0.05, 0.08, 0.10, 0.12, 0.15};
  return sweep;
}

struct SelectionConfig {
  int G_max = 6;
  double psi = 0.10;
  double a = 0.0;  // 0: 0.45 * d
  std::vector<double> psi_sweep = default_psi_sweep();

  double dirichlet_a(const ModelSpec& spec) const {
    return a > 0.0 ? a : 0.45 * static_cast<double>(class_specific_parameter_count(spec));
  }

  void validate(const ModelSpec& spec) const {
    if (G_max < 1) throw DataError("G_max must be at least 1");
    if (!(psi >= 0.0 && psi < 1.0)) throw DataError("psi must lie in [0, 1)");
    for (double p : psi_sweep) {
      if (!(p >= 0.0 && p < 1.0)) throw DataError("psi sweep values must lie in [0, 1)");
    }
    const double d = static_cast<double>(class_specific_parameter_count(spec));
    if (!(dirichlet_a(spec) > 0.0 && dirichlet_a(spec) < 0.5 * d)) {
      throw DataError("Dirichlet parameter a must satisfy 0 < a < d/2 (d = " +
                      std::to_string(class_specific_parameter_count(spec)) + ")");
    }
  }
};

struct PsiSummary {
  double psi = 0.0;
  int mode = 0;
  std::map<int, long> distribution;  // g_opt -> number of post-burn-in iterations
};

struct SelectionResult {
  int G_opt = 0;
  double psi = 0.0;
  double a = 0.0;
  std::size_t d = 0;
  std::vector<PsiSummary> sweep;
  ChainOutput chain;
};

/// g_opt distribution and mode from post-burn-in occupancy.
inline PsiSummary summarize_occupancy(const std::vector<std::vector<int>>& occupancy, long burn_in, long n,
                                      double psi) {
  PsiSummary s;
  s.psi = psi;
  for (std::size_t k = static_cast<std::size_t>(burn_in); k < occupancy.size(); ++k) {
    ++s.distribution[nonempty_count(occupancy[k], n, psi)];
  }
  s.mode = posterior_mode_classes(s.distribution);
  return s;
}

/// The spec of the overfitted fit: G = G_max with a symmetric Dirichlet(a) prior.
inline ModelSpec overfitted_spec(ModelSpec spec, const SelectionConfig& sel) {
  const double a = sel.dirichlet_a(spec);
  spec.G = sel.G_max;
  spec.priors.dirichlet_a.assign(static_cast<std::size_t>(sel.G_max), a);
  return spec;
}

/// Fits one overfitted chain and reports the posterior mode of the number of
/// non-empty classes at `sel.psi` and over the sweep. Does not refit.
inline SelectionResult select_num_classes(const ModelSpec& spec, const Dataset& data, const ChainConfig& chain,
                                          const SelectionConfig& sel,
                                          const QuadratureRule& rule = gauss_radau(15)) {
  sel.validate(spec);
  const JointModel model(overfitted_spec(spec, sel), data, rule);
  SelectionResult out;
  out.psi = sel.psi;
  out.a = sel.dirichlet_a(spec);
  out.d = class_specific_parameter_count(spec);
  out.chain = run_chain(model, chain);
  const auto n = static_cast<long>(model.n());
  out.G_opt = summarize_occupancy(out.chain.occupancy, chain.burn_in, n, sel.psi).mode;
  for (double psi : sel.psi_sweep) out.sweep.push_back(summarize_occupancy(out.chain.occupancy, chain.burn_in, n, psi));
  return out;
}

}  // namespace lcjm

#endif  // LCJM_SELECTION_HPP
