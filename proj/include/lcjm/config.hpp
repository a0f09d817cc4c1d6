#ifndef LCJM_CONFIG_HPP
#define LCJM_CONFIG_HPP

#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "lcjm/data.hpp"
#include "lcjm/error.hpp"
#include "lcjm/io.hpp"
#include "lcjm/model.hpp"
#include "lcjm/quadrature.hpp"
#include "lcjm/relabel.hpp"
#include "lcjm/sampler.hpp"
#include "lcjm/selection.hpp"

namespace lcjm {

struct QuadratureConfig {
  enum class Kind { radau, legendre };
  Kind kind = Kind::radau;
  int nodes = 15;
  double grading = 3.0;

  QuadratureRule rule() const { return kind == Kind::radau ? gauss_radau(nodes, grading) : gauss_legendre(nodes, grading); }
};

/// Everything a run needs besides data: model layout, priors, chain, selection.
/// The hazard basis is resolved against the data at fit time.
struct RunConfig {
  ModelSpec model;  // hazard_basis unresolved
  HazardKnotConfig hazard;
  QuadratureConfig quadrature;
  ChainConfig chain;
  SelectionConfig selection;
  bool standardize_outcome = false;
  bool standardize_covariates = false;
  RelabelStatistic relabel = RelabelStatistic::intercept;
  int per_component = 200;  // simulated subjects per component in `replicate`

  /// Simulation-study defaults: linear time, male in the fixed effects, age in the hazard,
  /// desk-scale chain (10,000 iterations, 5,000 burn-in, thin 5).
  static RunConfig simulation_defaults() {
    RunConfig c;
    c.model.fixed.covariates = {"male"};
    c.model.surv_covariates = {"age"};
    c.chain.iterations = 10000;
    c.chain.burn_in = 5000;
    c.chain.thin = 5;
    c.chain.store_random_effects = false;
    return c;
  }

  /// ModelSpec bound to `data` (hazard knots resolved).
  ModelSpec resolve(const Dataset& data) const {
    ModelSpec spec = model;
    spec.hazard_basis = resolve_hazard_basis(hazard, data);
    return spec;
  }
};

namespace detail {

inline std::string placement_name(HazardKnotConfig::Placement p) {
  return p == HazardKnotConfig::Placement::percentile ? "percentile" : "equidistant";
}

inline void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw DataError("config: '" + where + "' must be an object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) throw DataError("config: unknown key '" + key + "' in '" + where + "'");
  }
}

template <class T>
void read_if(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key) || j.at(key).is_null()) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw DataError("config: wrong type for '" + where + "." + key + "'");
  }
}

}  // namespace detail

inline json to_json(const RunConfig& c) {
  const auto& m = c.model;
  json time = {{"kind", m.time_basis.kind == TimeBasis::Kind::linear ? "linear" : "natural_cubic"}};
  if (m.time_basis.kind == TimeBasis::Kind::natural_cubic) {
    time["internal_knots"] = m.time_basis.spline.internal_knots;
    time["boundary_knots"] = {m.time_basis.spline.boundary_knots.first, m.time_basis.spline.boundary_knots.second};
  }
  json hazard = {{"degree", c.hazard.degree},
                 {"internal_knots", c.hazard.internal_knots},
                 {"placement", detail::placement_name(c.hazard.placement)},
                 {"upper", c.hazard.upper ? json(*c.hazard.upper) : json(nullptr)}};
  json model = {{"G", m.G},
                {"time_basis", time},
                {"fixed", {{"intercept", m.fixed.intercept},
                           {"time", m.fixed.time},
                           {"covariates", m.fixed.covariates},
                           {"time_interactions", m.fixed.time_interactions}}},
                {"random", {{"intercept", m.random.intercept}, {"time", m.random.time}}},
                {"surv_covariates", m.surv_covariates},
                {"hazard", hazard},
                {"quadrature", {{"kind", c.quadrature.kind == QuadratureConfig::Kind::radau ? "radau" : "legendre"},
                                {"nodes", c.quadrature.nodes},
                                {"grading", c.quadrature.grading}}}};
  const auto& p = m.priors;
  json priors = {{"beta_var", p.beta_var},
                 {"gamma_var", p.gamma_var},
                 {"gamma_h0_var", p.gamma_h0_var},
                 {"alpha_var", p.alpha_var},
                 {"sigma_y2_shape", p.sigma_y2_shape},
                 {"sigma_y2_rate", p.sigma_y2_rate},
                 {"wishart_scale_diag", p.wishart_scale_diag},
                 {"wishart_df", p.wishart_df},
                 {"dirichlet_a", p.dirichlet_a}};
  const auto& ch = c.chain;
  json steps = json::object();
  for (const auto& [k, v] : ch.initial_step_sizes) steps[k] = v;
  json chain = {{"iterations", ch.iterations},
                {"burn_in", ch.burn_in},
                {"thin", ch.thin},
                {"seed", ch.seed},
                {"adapt_until", ch.adapt_until},
                {"initial_step_sizes", steps},
                {"target_acceptance", ch.target_acceptance},
                {"inactive_effects", ch.inactive_effects == InactiveEffects::conditional ? "conditional" : "prior"},
                {"joint_survival_block", ch.joint_survival_block},
                {"store_random_effects", ch.store_random_effects}};
  json selection = {{"G_max", c.selection.G_max},
                    {"psi", c.selection.psi},
                    {"a", c.selection.a > 0.0 ? json(c.selection.a) : json(nullptr)},
                    {"psi_sweep", c.selection.psi_sweep}};
  return {{"model", model},
          {"priors", priors},
          {"chain", chain},
          {"selection", selection},
          {"standardize", {{"outcome", c.standardize_outcome}, {"covariates", c.standardize_covariates}}},
          {"relabel", c.relabel == RelabelStatistic::intercept ? "intercept" : "alpha"},
          {"simulation", {{"per_component", c.per_component}}}};
}

/// Overlays a JSON document on `base`. Unknown keys and wrong types are DataErrors.
inline RunConfig parse_config(const json& j, RunConfig c = RunConfig::simulation_defaults()) {
  using detail::read_if;
  detail::reject_unknown(j, {"model", "priors", "chain", "selection", "standardize", "relabel", "simulation"}, "");
  if (j.contains("model")) {
    const json& m = j.at("model");
    detail::reject_unknown(m, {"G", "time_basis", "fixed", "random", "surv_covariates", "hazard", "quadrature"}, "model");
    read_if(m, "G", c.model.G, "model");
    read_if(m, "surv_covariates", c.model.surv_covariates, "model");
    if (m.contains("time_basis")) {
      const json& t = m.at("time_basis");
      detail::reject_unknown(t, {"kind", "internal_knots", "boundary_knots"}, "model.time_basis");
      std::string kind = "linear";
      read_if(t, "kind", kind, "model.time_basis");
      if (kind == "linear") {
        c.model.time_basis.kind = TimeBasis::Kind::linear;
      } else if (kind == "natural_cubic") {
        c.model.time_basis.kind = TimeBasis::Kind::natural_cubic;
        read_if(t, "internal_knots", c.model.time_basis.spline.internal_knots, "model.time_basis");
        std::vector<double> boundary;
        read_if(t, "boundary_knots", boundary, "model.time_basis");
        if (boundary.size() != 2) throw DataError("config: model.time_basis.boundary_knots needs two values");
        c.model.time_basis.spline.boundary_knots = {boundary[0], boundary[1]};
        detail::check_knots(c.model.time_basis.spline.internal_knots, {boundary[0], boundary[1]}, "time basis");
      } else {
        throw DataError("config: model.time_basis.kind must be linear or natural_cubic");
      }
    }
    if (m.contains("fixed")) {
      const json& f = m.at("fixed");
      detail::reject_unknown(f, {"intercept", "time", "covariates", "time_interactions"}, "model.fixed");
      read_if(f, "intercept", c.model.fixed.intercept, "model.fixed");
      read_if(f, "time", c.model.fixed.time, "model.fixed");
      read_if(f, "covariates", c.model.fixed.covariates, "model.fixed");
      read_if(f, "time_interactions", c.model.fixed.time_interactions, "model.fixed");
    }
    if (m.contains("random")) {
      const json& r = m.at("random");
      detail::reject_unknown(r, {"intercept", "time"}, "model.random");
      read_if(r, "intercept", c.model.random.intercept, "model.random");
      read_if(r, "time", c.model.random.time, "model.random");
    }
    if (m.contains("hazard")) {
      const json& h = m.at("hazard");
      detail::reject_unknown(h, {"degree", "internal_knots", "placement", "upper"}, "model.hazard");
      read_if(h, "degree", c.hazard.degree, "model.hazard");
      read_if(h, "internal_knots", c.hazard.internal_knots, "model.hazard");
      std::string placement = detail::placement_name(c.hazard.placement);
      read_if(h, "placement", placement, "model.hazard");
      if (placement == "percentile") c.hazard.placement = HazardKnotConfig::Placement::percentile;
      else if (placement == "equidistant") c.hazard.placement = HazardKnotConfig::Placement::equidistant;
      else throw DataError("config: model.hazard.placement must be percentile or equidistant");
      if (h.contains("upper") && !h.at("upper").is_null()) {
        double upper = 0.0;
        read_if(h, "upper", upper, "model.hazard");
        c.hazard.upper = upper;
      }
      if (c.hazard.degree < 0 || c.hazard.internal_knots < 0) throw DataError("config: hazard degree and knots must be >= 0");
    }
    if (m.contains("quadrature")) {
      const json& q = m.at("quadrature");
      detail::reject_unknown(q, {"kind", "nodes", "grading"}, "model.quadrature");
      std::string kind = "radau";
      read_if(q, "kind", kind, "model.quadrature");
      if (kind == "radau") c.quadrature.kind = QuadratureConfig::Kind::radau;
      else if (kind == "legendre") c.quadrature.kind = QuadratureConfig::Kind::legendre;
      else throw DataError("config: model.quadrature.kind must be radau or legendre");
      read_if(q, "nodes", c.quadrature.nodes, "model.quadrature");
      read_if(q, "grading", c.quadrature.grading, "model.quadrature");
      if (c.quadrature.nodes < 1 || !(c.quadrature.grading >= 1.0)) {
        throw DataError("config: quadrature needs nodes >= 1 and grading >= 1");
      }
    }
  }
  if (j.contains("priors")) {
    const json& p = j.at("priors");
    detail::reject_unknown(p, {"beta_var", "gamma_var", "gamma_h0_var", "alpha_var", "sigma_y2_shape", "sigma_y2_rate",
                               "wishart_scale_diag", "wishart_df", "dirichlet_a"},
                           "priors");
    auto& pr = c.model.priors;
    read_if(p, "beta_var", pr.beta_var, "priors");
    read_if(p, "gamma_var", pr.gamma_var, "priors");
    read_if(p, "gamma_h0_var", pr.gamma_h0_var, "priors");
    read_if(p, "alpha_var", pr.alpha_var, "priors");
    read_if(p, "sigma_y2_shape", pr.sigma_y2_shape, "priors");
    read_if(p, "sigma_y2_rate", pr.sigma_y2_rate, "priors");
    read_if(p, "wishart_scale_diag", pr.wishart_scale_diag, "priors");
    read_if(p, "wishart_df", pr.wishart_df, "priors");
    read_if(p, "dirichlet_a", pr.dirichlet_a, "priors");
  }
  if (j.contains("chain")) {
    const json& ch = j.at("chain");
    detail::reject_unknown(ch, {"iterations", "burn_in", "thin", "seed", "adapt_until", "initial_step_sizes",
                                "target_acceptance", "inactive_effects", "joint_survival_block", "store_random_effects"},
                           "chain");
    auto& cc = c.chain;
    read_if(ch, "iterations", cc.iterations, "chain");
    read_if(ch, "burn_in", cc.burn_in, "chain");
    read_if(ch, "thin", cc.thin, "chain");
    read_if(ch, "seed", cc.seed, "chain");
    read_if(ch, "adapt_until", cc.adapt_until, "chain");
    read_if(ch, "initial_step_sizes", cc.initial_step_sizes, "chain");
    read_if(ch, "target_acceptance", cc.target_acceptance, "chain");
    read_if(ch, "joint_survival_block", cc.joint_survival_block, "chain");
    read_if(ch, "store_random_effects", cc.store_random_effects, "chain");
    std::string inactive = cc.inactive_effects == InactiveEffects::conditional ? "conditional" : "prior";
    read_if(ch, "inactive_effects", inactive, "chain");
    if (inactive == "conditional") cc.inactive_effects = InactiveEffects::conditional;
    else if (inactive == "prior") cc.inactive_effects = InactiveEffects::prior;
    else throw DataError("config: chain.inactive_effects must be conditional or prior");
    cc.validate();
  }
  if (j.contains("selection")) {
    const json& s = j.at("selection");
    detail::reject_unknown(s, {"G_max", "psi", "a", "psi_sweep"}, "selection");
    read_if(s, "G_max", c.selection.G_max, "selection");
    read_if(s, "psi", c.selection.psi, "selection");
    read_if(s, "a", c.selection.a, "selection");
    read_if(s, "psi_sweep", c.selection.psi_sweep, "selection");
  }
  if (j.contains("standardize")) {
    const json& s = j.at("standardize");
    detail::reject_unknown(s, {"outcome", "covariates"}, "standardize");
    read_if(s, "outcome", c.standardize_outcome, "standardize");
    read_if(s, "covariates", c.standardize_covariates, "standardize");
  }
  if (j.contains("relabel")) {
    std::string r;
    read_if(j, "relabel", r, "");
    c.relabel = parse_relabel_statistic(r);
  }
  if (j.contains("simulation")) {
    const json& s = j.at("simulation");
    detail::reject_unknown(s, {"per_component"}, "simulation");
    read_if(s, "per_component", c.per_component, "simulation");
    if (c.per_component < 1) throw DataError("config: simulation.per_component must be positive");
  }
  return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError("config '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

/// Default configuration with a description beside every entry.
inline json config_schema() {
  const json defaults = to_json(RunConfig::simulation_defaults());
  const json docs = {
      {"model",
       {{"G", "number of latent classes for `fit`"},
        {"time_basis", "time effect: {kind: linear} or {kind: natural_cubic, internal_knots, boundary_knots}"},
        {"fixed", "fixed effects x(t): intercept, time basis, longitudinal covariates, covariate-by-time interactions"},
        {"random", "random effects z(t): intercept and/or time basis"},
        {"surv_covariates", "baseline survival covariates w"},
        {"hazard", "log baseline hazard B-spline: degree, internal knot count, percentile|equidistant placement, optional upper boundary"},
        {"quadrature", "cumulative hazard rule: radau (node at T) or legendre, node count, grading exponent of the map s = T u^g"}}},
      {"priors",
       {{"beta_var", "prior variance of fixed effects"},
        {"gamma_var", "prior variance of survival coefficients"},
        {"gamma_h0_var", "prior variance of baseline hazard coefficients"},
        {"alpha_var", "prior variance of association parameters"},
        {"sigma_y2_shape", "inverse-gamma shape of the error variance"},
        {"sigma_y2_rate", "inverse-gamma rate of the error variance"},
        {"wishart_scale_diag", "diagonal of the inverse-Wishart scale matrix"},
        {"wishart_df", "inverse-Wishart degrees of freedom; 0 means the number of random effects"},
        {"dirichlet_a", "Dirichlet parameters for `fit`; empty means all ones"}}},
      {"chain",
       {{"iterations", "total iterations"},
        {"burn_in", "discarded iterations"},
        {"thin", "keep every thin-th post burn-in iteration"},
        {"seed", "master seed"},
        {"adapt_until", "last adapting iteration; -1 means burn_in/2"},
        {"initial_step_sizes", "per-block proposal scales (random_effects, beta, gamma, alpha, gamma_h0, survival_joint)"},
        {"target_acceptance", "Robbins-Monro acceptance target"},
        {"inactive_effects", "pseudo-prior for random effects of non-member classes: conditional or prior"},
        {"joint_survival_block", "add a joint (gamma, alpha, gamma_h0) Metropolis block"},
        {"store_random_effects", "keep b in retained draws (memory heavy)"}}},
      {"selection",
       {{"G_max", "classes of the overfitted fit"},
        {"psi", "emptiness threshold"},
        {"a", "symmetric Dirichlet parameter; null means 0.45 d"},
        {"psi_sweep", "thresholds reported alongside psi"}}},
      {"standardize", {{"outcome", "standardize y"}, {"covariates", "standardize continuous covariates"}}},
      {"relabel", "label-switching statistic: intercept or alpha"},
      {"simulation", {{"per_component", "subjects per simulated component in `replicate`"}}}};
  return {{"defaults", defaults}, {"descriptions", docs}};
}

}  // namespace lcjm

#endif  // LCJM_CONFIG_HPP
