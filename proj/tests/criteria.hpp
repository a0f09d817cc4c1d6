#ifndef LCJM_TESTS_CRITERIA_HPP
#define LCJM_TESTS_CRITERIA_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "support.hpp"

namespace lcjm::test {

struct CriterionResult {
  bool pass = true;
  std::string detail;

  void fail(const std::string& why) {
    pass = false;
    note(why);
  }
  void note(const std::string& s) { detail += (detail.empty() ? "" : "; ") + s; }
};

inline std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// 1. Kernel oracles --------------------------------------------------------------------

inline CriterionResult kernel_oracles() {
  CriterionResult r;
  double worst_long = 0, worst_surv = 0, worst_re = 0;
  int configs = 0;
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    std::mt19937_64 rng(seed);
    const Dataset data = random_dataset(rng, 12);
    const ModelSpec spec = test_spec(data, 1 + static_cast<int>(seed % 3));
    const ParameterState st = random_state(spec, data.n(), rng);
    const JointModel model(spec, data);
    ++configs;
    for (std::size_t i = 0; i < data.n(); ++i) {
      for (int g = 0; g < spec.G; ++g) {
        const auto gi = static_cast<std::size_t>(g);
        const Subject& s = data.subjects[i];
        worst_long = std::max(worst_long, std::abs(longitudinal_logdensity(model, i, g, st) -
                                                   long_oracle(s, st.beta[gi], st.b[i][gi], st.sigma_y2)));
        worst_surv = std::max(worst_surv, std::abs(survival_logdensity(model, i, g, st) -
                                                   survival_oracle(s, spec.hazard_basis, st, i, g, model.rule())));
        worst_re = std::max(worst_re, std::abs(random_effects_logdensity(st.b[i][gi], st.Sigma_b[gi]) -
                                               re_oracle(st.b[i][gi], st.Sigma_b[gi])));
      }
    }
  }
  const double worst = std::max({worst_long, worst_surv, worst_re});
  r.note(std::to_string(configs) + " configs, max |diff| " + fmt("%.2e", worst));
  if (!(worst <= 1e-10)) r.fail("kernel mismatch above 1e-10");

  const QuadratureRule rule = QuadratureConfig{}.rule();
  double worst_rel = 0.0;
  for (double xi : {1.4, 1.8}) {
    for (int k = 1; k <= 200; ++k) {
      const double T = 0.1 * k;
      const double H = integrate_exp(rule, T, [&](double s) { return std::log(xi) + (xi - 1.0) * std::log(s); });
      worst_rel = std::max(worst_rel, std::abs(H / std::pow(T, xi) - 1.0));
    }
  }
  r.note("Weibull max rel err " + fmt("%.2e", worst_rel) + " at " + std::to_string(rule.size()) + " nodes");
  if (!(worst_rel <= 1e-6)) r.fail("Weibull cumulative hazard error above 1e-6");
  return r;
}

// 2. Conjugate updates -------------------------------------------------------------------

struct MomentCheck {
  double mean_z = 0.0, var_z = 0.0;
};

/// z-scores of the sample mean and sample variance of iid draws against analytic values.
inline MomentCheck moment_z(const std::vector<double>& x, double mean, double var, bool check_var) {
  const double n = static_cast<double>(x.size());
  double m = 0.0;
  for (double v : x) m += v;
  m /= n;
  double s2 = 0.0, m4 = 0.0;
  for (double v : x) {
    s2 += (v - m) * (v - m);
    m4 += std::pow(v - m, 4);
  }
  s2 /= n - 1.0;
  m4 /= n;
  MomentCheck c;
  c.mean_z = std::abs(m - mean) / std::sqrt(var / n);
  if (check_var) c.var_z = std::abs(s2 - var) / std::sqrt((m4 - s2 * s2) / n);
  return c;
}

inline CriterionResult conjugate_updates(int draws = 100000) {
  CriterionResult r;
  std::mt19937_64 rng(2024);
  const Dataset data = random_dataset(rng, 30);
  ModelSpec spec = test_spec(data, 3);
  spec.priors.dirichlet_a = {0.5, 1.0, 2.0};
  const JointModel model(spec, data);
  ParameterState st = random_state(spec, data.n(), rng);
  for (std::size_t i = 0; i < data.n(); ++i) st.v[i] = i < 5 ? 0 : (i < 15 ? 1 : 2);
  ChainConfig cfg;
  cfg.seed = 99;
  Sampler sampler(model, cfg);

  double worst = 0.0;
  const auto check = [&](const std::vector<double>& x, double mean, double var, bool with_var, const std::string& what) {
    const auto c = moment_z(x, mean, var, with_var);
    worst = std::max({worst, c.mean_z, c.var_z});
    if (c.mean_z > 3.0 || c.var_z > 3.0) r.fail(what + " off by " + fmt("%.2f", std::max(c.mean_z, c.var_z)) + " SE");
  };

  // Dirichlet(a + n)
  {
    const std::vector<double> a{5.5, 11.0, 17.0};
    const double A = 33.5;
    std::vector<std::vector<double>> pis(3);
    ParameterState s = st;
    for (int k = 0; k < draws; ++k) {
      sampler.update_mixture_weights(s);
      for (int g = 0; g < 3; ++g) pis[static_cast<std::size_t>(g)].push_back(s.pi(g));
    }
    for (std::size_t g = 0; g < 3; ++g) {
      check(pis[g], a[g] / A, a[g] * (A - a[g]) / (A * A * (A + 1.0)), true, "Dirichlet pi[" + std::to_string(g + 1) + "]");
    }
  }
  // inverse gamma(shape + N/2, rate + SSR/2), residuals from the raw records
  {
    double ssr = 0.0, N = 0.0;
    for (std::size_t i = 0; i < data.n(); ++i) {
      const Subject& s = data.subjects[i];
      const auto gi = static_cast<std::size_t>(st.v[i]);
      const auto& beta = st.beta[gi];
      const auto& b = st.b[i][gi];
      for (std::size_t j = 0; j < s.n_obs(); ++j) {
        const double t = s.times[j];
        const double e = s.y[j] - (beta(0) + beta(1) * t + beta(2) * s.x[j][0] + b(0) + b(1) * t);
        ssr += e * e;
        N += 1.0;
      }
    }
    const double shape = spec.priors.sigma_y2_shape + 0.5 * N;
    const double rate = spec.priors.sigma_y2_rate + 0.5 * ssr;
    const double mean = rate / (shape - 1.0);
    std::vector<double> x;
    ParameterState s = st;
    for (int k = 0; k < draws; ++k) {
      sampler.update_error_variance(s);
      x.push_back(s.sigma_y2);
    }
    check(x, mean, mean * mean / (shape - 2.0), true, "inverse-gamma sigma_y2");
  }
  // inverse-Wishart(df + n_g, M + sum b b')
  {
    std::vector<std::array<std::vector<double>, 3>> entries(3);
    ParameterState s = st;
    for (int k = 0; k < draws; ++k) {
      sampler.update_re_covariance(s);
      for (std::size_t g = 0; g < 3; ++g) {
        entries[g][0].push_back(s.Sigma_b[g](0, 0));
        entries[g][1].push_back(s.Sigma_b[g](1, 0));
        entries[g][2].push_back(s.Sigma_b[g](1, 1));
      }
    }
    for (std::size_t g = 0; g < 3; ++g) {
      Eigen::Matrix2d psi = spec.priors.wishart_scale_diag * Eigen::Matrix2d::Identity();
      double n_g = 0.0;
      for (std::size_t i = 0; i < data.n(); ++i) {
        if (static_cast<std::size_t>(st.v[i]) != g) continue;
        psi += st.b[i][g] * st.b[i][g].transpose();
        n_g += 1.0;
      }
      const double nu = 2.0 + n_g, p = 2.0;
      const auto var = [&](int a, int b) {
        return ((nu - p + 1) * psi(a, b) * psi(a, b) + (nu - p - 1) * psi(a, a) * psi(b, b)) /
               ((nu - p) * (nu - p - 1) * (nu - p - 1) * (nu - p - 3));
      };
      // the fourth moment of the variance estimate needs nu - p > 7
      const bool with_var = nu - p > 7.0;
      const std::string tag = "inverse-Wishart class " + std::to_string(g + 1);
      check(entries[g][0], psi(0, 0) / (nu - p - 1), var(0, 0), with_var, tag + " [1][1]");
      check(entries[g][1], psi(1, 0) / (nu - p - 1), var(1, 0), with_var, tag + " [2][1]");
      check(entries[g][2], psi(1, 1) / (nu - p - 1), var(1, 1), with_var, tag + " [2][2]");
    }
  }
  r.note(std::to_string(draws) + " draws per update, max |z| " + fmt("%.2f", worst));
  return r;
}

// 3. Prior recovery ---------------------------------------------------------------------------

inline CriterionResult prior_recovery(long sweeps = 100000) {
  CriterionResult r;
  std::mt19937_64 rng(77);
  const Dataset data = random_dataset(rng, 30);
  const ModelSpec spec = test_spec(data, 1);
  const JointModel model(spec, data);
  ChainConfig cfg;
  cfg.seed = 5;
  cfg.use_likelihood = false;
  cfg.burn_in = 10000;
  cfg.adapt_until = 5000;
  cfg.iterations = cfg.burn_in + sweeps;
  Sampler sampler(model, cfg);
  ParameterState st = sampler.initialize();

  std::vector<std::vector<double>> beta(3);
  std::vector<double> alpha, gamma, h0;
  for (long k = 1; k <= cfg.iterations; ++k) {
    sampler.set_iteration(k);
    sampler.update_longitudinal_fixed_effects(st);
    sampler.update_survival_parameters(st);
    if (k <= cfg.burn_in) continue;
    for (std::size_t j = 0; j < 3; ++j) beta[j].push_back(st.beta[0](static_cast<Eigen::Index>(j)));
    alpha.push_back(st.alpha[0]);
    gamma.push_back(st.gamma[0](0));
    h0.push_back(st.gamma_h0[0](0));
  }
  const auto variance = [](const std::vector<double>& x) {
    const double m = mean_of(x);
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return s / static_cast<double>(x.size() - 1);
  };
  const auto gate = [&](const std::vector<double>& x, double target, const std::string& name) {
    const double v = variance(x);
    r.note(name + " var " + fmt("%.1f", v) + " (prior " + fmt("%.0f", target) + ")");
    if (std::abs(v / target - 1.0) > 0.10) r.fail(name + " variance off by more than 10%");
  };
  for (std::size_t j = 0; j < 3; ++j) gate(beta[j], spec.priors.beta_var, "beta" + std::to_string(j + 1));
  gate(alpha, spec.priors.alpha_var, "alpha");
  r.note("gamma var " + fmt("%.1f", variance(gamma)) + ", hazard intercept var " + fmt("%.1f", variance(h0)) +
         " (prior 1000, informational)");
  return r;
}

// 4. Selection formula ----------------------------------------------------------------------------

inline CriterionResult selection_formula(const std::vector<std::vector<std::vector<int>>>& chains = {},
                                         const std::vector<long>& burn_ins = {},
                                         const std::vector<std::vector<PsiSummary>>& sweeps = {}) {
  CriterionResult r;
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> Gd(1, 8), nd(1, 500);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  int mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int G = Gd(rng), n = nd(rng);
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (auto& l : labels) l = static_cast<int>(U(rng) * G) % G;
    std::vector<int> occ(static_cast<std::size_t>(G), 0);
    for (int l : labels) ++occ[static_cast<std::size_t>(l)];
    const auto& sweep = default_psi_sweep();
    const double psi = trial % 2 == 0 ? sweep[static_cast<std::size_t>(trial / 2) % sweep.size()] : 0.5 * U(rng);
    int brute = 0;
    for (int g = 0; g < G; ++g) {
      int members = 0;
      for (int l : labels) members += l == g ? 1 : 0;
      if (!(static_cast<double>(members) / static_cast<double>(n) <= psi)) ++brute;
    }
    if (nonempty_count(occ, n, psi) != brute) ++mismatches;
  }
  r.note("1000 random occupancy vectors, " + std::to_string(mismatches) + " mismatches");
  if (mismatches > 0) r.fail("nonempty_count disagrees with brute force");

  auto psis = default_psi_sweep();
  std::sort(psis.begin(), psis.end());
  long violations = 0;
  for (std::size_t c = 0; c < chains.size(); ++c) {
    for (std::size_t k = static_cast<std::size_t>(burn_ins[c]); k < chains[c].size(); ++k) {
      const auto& occ = chains[c][k];
      long n = 0;
      for (int x : occ) n += x;
      int previous = static_cast<int>(occ.size()) + 1;
      for (double psi : psis) {
        const int now = nonempty_count(occ, n, psi);
        if (now > previous) ++violations;
        previous = now;
      }
    }
  }
  int mode_violations = 0;
  for (const auto& sweep : sweeps) {
    std::vector<PsiSummary> sorted = sweep;
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.psi < b.psi; });
    for (std::size_t k = 1; k < sorted.size(); ++k) {
      if (sorted[k].mode > sorted[k - 1].mode) ++mode_violations;
    }
  }
  r.note(std::to_string(chains.size()) + " chains checked per iteration, " + std::to_string(sweeps.size()) +
         " chains checked on posterior modes");
  if (violations > 0) r.fail(std::to_string(violations) + " per-iteration monotonicity violations");
  if (mode_violations > 0) r.fail(std::to_string(mode_violations) + " posterior-mode monotonicity violations");
  return r;
}

// 7. Simulator --------------------------------------------------------------------------------------

/// Kolmogorov-Smirnov statistic of `x` against the cdf F.
template <class Cdf>
double ks_statistic(std::vector<double> x, Cdf&& F) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = F(x[i]);
    d = std::max({d, std::abs(f - static_cast<double>(i) / n), std::abs(static_cast<double>(i + 1) / n - f)});
  }
  return d;
}

inline CriterionResult simulator_check() {
  CriterionResult r;
  const int n = 10000;
  const double critical = 1.6276 / std::sqrt(static_cast<double>(n));  // asymptotic, level 0.01
  const QuadratureRule rule = gauss_legendre(32);
  for (double xi : {1.4, 1.8}) {
    ComponentParams c;
    c.xi = xi;
    c.alpha = 0.0;
    c.gamma_intercept = 0.0;
    c.gamma_age = 0.0;
    Rng rng = make_rng(31, {static_cast<std::uint64_t>(xi * 10)});
    std::vector<double> times;
    for (int k = 0; k < n; ++k) {
      SubjectCovariates s;
      s.age = 45.0 + 15.7 * draw_normal(rng);
      s.male = draw_uniform(rng) < 0.5 ? 1.0 : 0.0;
      times.push_back(simulate_event_time(c, s, 19.5, rule, rng));
    }
    const double D = ks_statistic(times, [&](double t) { return 1.0 - std::exp(-std::pow(t, xi)); });
    r.note("KS xi=" + fmt("%.1f", xi) + " D=" + fmt("%.4f", D) + " (crit " + fmt("%.4f", critical) + ")");
    if (!(D < critical)) r.fail("KS test rejects at level 0.01 for xi = " + fmt("%.1f", xi));
  }
  for (Scenario s : {Scenario::I, Scenario::II, Scenario::III}) {
    for (int per : {200, 0}) {
      try {
        const auto sim = simulate_scenario(s, 101, per);
        r.note("censoring " + to_string(s) + (per ? " N=200" : " design") + " " + fmt("%.3f", sim.censoring_rate));
        if (!(sim.censoring_rate > 0.40 && sim.censoring_rate < 0.60)) r.fail("censoring outside (0.40, 0.60)");
      } catch (const NumericalError& e) {
        r.fail(std::string("simulation failed: ") + e.what());
      }
    }
  }
  return r;
}

// 8. Label symmetry --------------------------------------------------------------------------------

inline CriterionResult label_symmetry() {
  CriterionResult r;
  const auto sim = simulate_scenario(Scenario::II, 8, 40);
  RunConfig run = RunConfig::simulation_defaults();
  run.model.G = 3;
  const ModelSpec spec = run.resolve(sim.data);
  const JointModel model(spec, sim.data, run.quadrature.rule());
  ChainConfig cfg;
  cfg.iterations = 1500;
  cfg.burn_in = 500;
  cfg.thin = 1;
  cfg.seed = 12;
  cfg.store_random_effects = true;
  const ChainOutput out = run_chain(model, cfg);
  const RelabelResult rel = relabel_draws(out);
  double worst = 0.0;
  std::size_t moved = 0;
  for (std::size_t k = 0; k < out.draws.size(); ++k) {
    const double again = log_posterior(model, rel.output.draws[k]);
    worst = std::max(worst, std::abs(again - out.draw_log_posterior[k]));
    if (rel.permutations[k] != std::vector<int>{0, 1, 2}) ++moved;
  }
  r.note(std::to_string(out.draws.size()) + " draws, " + std::to_string(moved) + " relabeled, max |diff| " +
         fmt("%.2e", worst));
  if (out.draws.size() != 1000) r.fail("expected 1000 retained draws");
  if (!(worst <= 1e-10)) r.fail("log posterior changed under relabeling");
  const RelabelResult twice = relabel_draws(rel.output);
  for (const auto& p : twice.permutations) {
    if (p != std::vector<int>{0, 1, 2}) {
      r.fail("relabel_draws is not idempotent");
      break;
    }
  }
  return r;
}

}  // namespace lcjm::test

#endif  // LCJM_TESTS_CRITERIA_HPP
