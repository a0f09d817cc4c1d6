#ifndef LCJM_SIMULATOR_HPP
#define LCJM_SIMULATOR_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/tools/roots.hpp>

#include "lcjm/data.hpp"
#include "lcjm/error.hpp"
#include "lcjm/quadrature.hpp"
#include "lcjm/random.hpp"

namespace lcjm {

/// Generating parameters of one latent component:
///   y(t)  = beta0 + beta_male male + beta_time t + b0 + b1 t + eps,  eps ~ N(0, sigma_y^2)
///   h(t)  = xi t^(xi-1) exp(gamma0 + gamma_age age + alpha eta(t))
///   C     ~ Exponential(mean mu_c)
struct ComponentParams {
  double beta_intercept = 0.0;
  double beta_male = 0.0;
  double beta_time = 0.0;
  double sigma_y = 1.0;
  std::array<double, 2> Sigma_b_diag{1.0, 1.0};
  double xi = 1.0;
  double mu_c = 10.0;
  double gamma_intercept = 0.0;
  double gamma_age = 0.0;
  double alpha = 0.0;
  int N = 100;
};

struct ScenarioConfig {
  std::string name;
  std::vector<ComponentParams> components;
  int max_obs = 10;
  double time_horizon = 19.5;
  double age_mean = 45.0;
  double age_sd = 15.7;
  double male_prob = 0.5;
  double censoring_low = 0.40;
  double censoring_high = 0.60;
  int quadrature_nodes = 32;

  int true_classes() const { return static_cast<int>(components.size()); }
  int n() const {
    int total = 0;
    for (const auto& c : components) total += c.N;
    return total;
  }

  void validate() const {
    if (components.empty()) throw DataError("scenario has no components");
    for (const auto& c : components) {
      if (!(c.sigma_y > 0 && c.Sigma_b_diag[0] > 0 && c.Sigma_b_diag[1] > 0 && c.xi > 0 && c.mu_c > 0)) {
        throw DataError("scenario parameters must be positive (sigma_y, Sigma_b, xi, mu_c)");
      }
      if (c.N < 1) throw DataError("component size must be positive");
    }
    if (max_obs < 0 || !(time_horizon > 0)) throw DataError("invalid measurement design");
  }
};

/// The three generating data sets of the simulation design.
inline ComponentParams design_component(int which) {
  ComponentParams c;
  c.sigma_y = 0.69;
  c.mu_c = 10.0;
  c.gamma_intercept = -4.85;
  switch (which) {
    case 1:
      c.beta_intercept = 8.03, c.beta_male = -5.86, c.beta_time = -0.16;
      c.Sigma_b_diag = {0.87, 0.02};
      c.xi = 1.8, c.gamma_age = -0.02, c.alpha = 0.38;
      break;
    case 2:
      c.beta_intercept = -8.03, c.beta_male = 12.20, c.beta_time = 0.46;
      c.Sigma_b_diag = {0.02, 0.91};
      c.xi = 1.4, c.gamma_age = 0.09, c.alpha = 0.08;
      break;
    case 3:
      c.beta_intercept = 0.03, c.beta_male = -1.96, c.beta_time = -0.01;
      c.Sigma_b_diag = {0.28, 0.31};
      c.xi = 1.8, c.gamma_intercept = 2.85, c.gamma_age = -0.12, c.alpha = 0.58;
      break;
    default:
      throw DataError("data set must be 1, 2 or 3");
  }
  return c;
}

enum class Scenario { I, II, III };

inline Scenario parse_scenario(const std::string& s) {
  if (s == "I" || s == "1") return Scenario::I;
  if (s == "II" || s == "2") return Scenario::II;
  if (s == "III" || s == "3") return Scenario::III;
  throw DataError("unknown scenario '" + s + "' (expected I, II or III)");
}

inline std::string to_string(Scenario s) {
  switch (s) {
    case Scenario::I: return "I";
    case Scenario::II: return "II";
    case Scenario::III: return "III";
  }
  return "?";
}

/// Scenario I: data sets 1+2+3 (350 each); II: 1+2 (525 each); III: 1 (1050).
/// A positive `per_component` overrides the component sizes.
inline ScenarioConfig scenario_config(Scenario which, int per_component = 0) {
  ScenarioConfig cfg;
  cfg.name = to_string(which);
  std::vector<int> sets;
  int N = 0;
  switch (which) {
    case Scenario::I: sets = {1, 2, 3}, N = 350; break;
    case Scenario::II: sets = {1, 2}, N = 525; break;
    case Scenario::III: sets = {1}, N = 1050; break;
  }
  if (per_component > 0) N = per_component;
  for (int s : sets) {
    auto c = design_component(s);
    c.N = N;
    cfg.components.push_back(c);
  }
  return cfg;
}

/// Subject-level draws that do not depend on the censoring distribution.
struct SubjectCovariates {
  double age = 0.0;
  double male = 0.0;
  std::array<double, 2> b{0.0, 0.0};
};

/// H(T) for the generating hazard; eta(t) = eta0 + eta1 t.
inline double generating_cumulative_hazard(double T, const ComponentParams& c, const SubjectCovariates& s,
                                           const QuadratureRule& rule) {
  if (T <= 0.0) return 0.0;
  const double eta0 = c.beta_intercept + c.beta_male * s.male + s.b[0];
  const double eta1 = c.beta_time + s.b[1];
  const double lin = c.gamma_intercept + c.gamma_age * s.age;
  return integrate_exp(rule, T, [&](double t) {
    return std::log(c.xi) + (c.xi - 1.0) * std::log(t) + lin + c.alpha * (eta0 + eta1 * t);
  });
}

/// Inverse-transform event time for a given U: the root of H(T) + log U = 0 on
/// (0, horizon], or +infinity when H(horizon) < -log U.
inline double event_time_from_uniform(double U, const ComponentParams& c, const SubjectCovariates& s,
                                      double horizon, const QuadratureRule& rule) {
  const double target = -std::log(U);
  const auto f = [&](double T) { return generating_cumulative_hazard(T, c, s, rule) - target; };
  const double at_horizon = f(horizon);
  if (at_horizon < 0.0) return std::numeric_limits<double>::infinity();
  if (at_horizon == 0.0) return horizon;
  std::uintmax_t max_iter = 200;
  const auto tol = [](double a, double b) { return std::abs(b - a) <= 1e-14 * std::max(1.0, std::abs(a)); };
  const auto [lo, hi] = boost::math::tools::toms748_solve(f, 0.0, horizon, -target, at_horizon, tol, max_iter);
  const double flo = f(lo), fhi = f(hi);
  return std::abs(flo) <= std::abs(fhi) ? lo : hi;
}

inline double simulate_event_time(const ComponentParams& c, const SubjectCovariates& s, double horizon,
                                  const QuadratureRule& rule, Rng& rng) {
  double U = draw_uniform(rng);
  while (U <= 0.0) U = draw_uniform(rng);
  return event_time_from_uniform(U, c, s, horizon, rule);
}

/// All random draws for one subject; `realize` applies a censoring scale.
struct LatentSubject {
  int component = 0;
  SubjectCovariates cov;
  std::vector<double> visit_times;  // sorted, excluding the baseline visit
  std::vector<double> noise;        // standard normal errors, baseline first
  double event_time = 0.0;          // may be +inf
  double censor_unit = 0.0;         // Exponential(1) draw; censoring time = mu_c * scale * censor_unit
};

inline LatentSubject draw_latent_subject(const ScenarioConfig& cfg, int component, Rng& rng,
                                         const QuadratureRule& rule) {
  const ComponentParams& c = cfg.components[static_cast<std::size_t>(component)];
  LatentSubject s;
  s.component = component;
  s.cov.age = cfg.age_mean + cfg.age_sd * draw_normal(rng);
  s.cov.male = draw_uniform(rng) < cfg.male_prob ? 1.0 : 0.0;
  s.cov.b = {std::sqrt(c.Sigma_b_diag[0]) * draw_normal(rng), std::sqrt(c.Sigma_b_diag[1]) * draw_normal(rng)};
  for (int j = 0; j < cfg.max_obs; ++j) s.visit_times.push_back(cfg.time_horizon * draw_uniform(rng));
  std::sort(s.visit_times.begin(), s.visit_times.end());
  for (int j = 0; j <= cfg.max_obs; ++j) s.noise.push_back(draw_normal(rng));
  s.event_time = simulate_event_time(c, s.cov, cfg.time_horizon, rule, rng);
  s.censor_unit = std::exponential_distribution<double>(1.0)(rng);
  return s;
}

struct SimulatedSubject {
  std::vector<LongRecord> longitudinal;
  SurvRecord survival;
  int component = 0;
};

/// Applies follow-up truncation: T = min(event, censoring, horizon); keeps the
/// baseline visit plus every visit at or before T.
inline SimulatedSubject realize_subject(const ScenarioConfig& cfg, const LatentSubject& s, const std::string& id,
                                        double censoring_scale) {
  const ComponentParams& c = cfg.components[static_cast<std::size_t>(s.component)];
  const double censor = c.mu_c * censoring_scale * s.censor_unit;
  const double T = std::min({s.event_time, censor, cfg.time_horizon});
  SimulatedSubject out;
  out.component = s.component;
  out.survival = {id, T, (s.event_time <= censor && s.event_time <= cfg.time_horizon) ? 1 : 0, {s.cov.age}};
  const auto add = [&](double t, double e) {
    const double mean = c.beta_intercept + c.beta_male * s.cov.male + c.beta_time * t + s.cov.b[0] + s.cov.b[1] * t;
    out.longitudinal.push_back({id, t, mean + c.sigma_y * e, {s.cov.male}});
  };
  add(0.0, s.noise[0]);
  for (std::size_t j = 0; j < s.visit_times.size(); ++j) {
    if (s.visit_times[j] <= T) add(s.visit_times[j], s.noise[j + 1]);
  }
  return out;
}

inline SimulatedSubject simulate_subject(const ScenarioConfig& cfg, int component, Rng& rng) {
  const QuadratureRule rule = gauss_legendre(cfg.quadrature_nodes);
  return realize_subject(cfg, draw_latent_subject(cfg, component, rng, rule), "1", 1.0);
}

struct SimulatedData {
  Dataset data;
  ScenarioConfig config;
  std::vector<int> true_class;  // 0-based component per subject
  double censoring_rate = 0.0;
  double censoring_scale = 1.0;
  std::uint64_t seed = 0;
};

/// Simulates every component with per-subject random streams, then rescales the
/// censoring means (common factor, bisection on its log) until the overall
/// censoring fraction lies inside the configured band.
inline SimulatedData simulate(const ScenarioConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const QuadratureRule rule = gauss_legendre(cfg.quadrature_nodes);
  std::vector<LatentSubject> latent;
  for (std::size_t c = 0; c < cfg.components.size(); ++c) {
    for (int k = 0; k < cfg.components[c].N; ++k) {
      Rng rng = make_rng(seed, {c, static_cast<std::uint64_t>(k)});
      latent.push_back(draw_latent_subject(cfg, static_cast<int>(c), rng, rule));
    }
  }

  const auto censored_fraction = [&](double scale) {
    std::size_t censored = 0;
    for (const auto& s : latent) {
      const double censor = cfg.components[static_cast<std::size_t>(s.component)].mu_c * scale * s.censor_unit;
      if (!(s.event_time <= censor && s.event_time <= cfg.time_horizon)) ++censored;
    }
    return static_cast<double>(censored) / static_cast<double>(latent.size());
  };
  const auto in_band = [&](double rate) { return rate > cfg.censoring_low && rate < cfg.censoring_high; };

  double scale = 1.0;
  double rate = censored_fraction(scale);
  if (!in_band(rate)) {
    // censoring fraction decreases in the scale
    double lo = std::log(scale), hi = std::log(scale);
    const double step = rate >= cfg.censoring_high ? 1.0 : -1.0;
    int steps = 0;
    while (steps < 50) {
      ++steps;
      const double next = (step > 0 ? hi : lo) + step;
      const double r = censored_fraction(std::exp(next));
      if (in_band(r)) {
        scale = std::exp(next), rate = r;
        break;
      }
      if (step > 0) {
        lo = hi, hi = next;
        if (r <= cfg.censoring_low) break;
      } else {
        hi = lo, lo = next;
        if (r >= cfg.censoring_high) break;
      }
    }
    while (!in_band(rate) && steps < 50) {
      ++steps;
      const double mid = 0.5 * (lo + hi);
      const double r = censored_fraction(std::exp(mid));
      scale = std::exp(mid), rate = r;
      if (in_band(r)) break;
      if (r >= cfg.censoring_high) lo = mid;
      else hi = mid;
    }
    if (!in_band(rate)) {
      throw NumericalError("censoring rescaling failed: realized censoring fraction " + std::to_string(rate));
    }
  }

  SimulatedData out;
  out.config = cfg;
  out.seed = seed;
  out.censoring_rate = rate;
  out.censoring_scale = scale;
  std::vector<LongRecord> longitudinal;
  std::vector<SurvRecord> survival;
  for (std::size_t i = 0; i < latent.size(); ++i) {
    auto subject = realize_subject(cfg, latent[i], std::to_string(i + 1), scale);
    longitudinal.insert(longitudinal.end(), subject.longitudinal.begin(), subject.longitudinal.end());
    survival.push_back(std::move(subject.survival));
    out.true_class.push_back(subject.component);
  }
  out.data = validate_dataset(longitudinal, survival, {"male"}, {"age"});
  return out;
}

inline SimulatedData simulate_scenario(Scenario which, std::uint64_t seed, int per_component = 0) {
  return simulate(scenario_config(which, per_component), seed);
}

}  // namespace lcjm

#endif  // LCJM_SIMULATOR_HPP
