#ifndef LCJM_MODEL_HPP
#define LCJM_MODEL_HPP

#include <algorithm>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "lcjm/basis.hpp"
#include "lcjm/data.hpp"
#include "lcjm/error.hpp"
#include "lcjm/quadrature.hpp"

namespace lcjm {

/// Time effect in the longitudinal design: plain linear time or a natural cubic spline.
struct TimeBasis {
  enum class Kind { linear, natural_cubic };
  Kind kind = Kind::linear;
  NaturalSplineSpec spline;

  std::size_t dimension() const { return kind == Kind::linear ? 1 : spline.dimension(); }

  std::vector<std::string> column_names() const {
    if (kind == Kind::linear) return {"time"};
    std::vector<std::string> names;
    for (std::size_t k = 1; k <= dimension(); ++k) names.push_back("ns(time," + std::to_string(k) + ")");
    return names;
  }

  bool operator==(const TimeBasis&) const = default;
};

/// x_i(t) = [1] [time basis] [covariates] [covariate x time basis]
struct FixedEffectLayout {
  bool intercept = true;
  bool time = true;
  std::vector<std::string> covariates;
  std::vector<std::string> time_interactions;

  bool operator==(const FixedEffectLayout&) const = default;
};

/// z_i(t) = [1] [time basis]
struct RandomEffectLayout {
  bool intercept = true;
  bool time = true;

  bool operator==(const RandomEffectLayout&) const = default;
};

/// Where the log-baseline-hazard knots go; resolved against data into a BSplineSpec.
struct HazardKnotConfig {
  enum class Placement { percentile, equidistant };
  int degree = 2;
  int internal_knots = 3;
  Placement placement = Placement::percentile;
  std::optional<double> upper;  // defaults to the largest observed time

  bool operator==(const HazardKnotConfig&) const = default;
};

struct PriorConfig {
  double beta_var = 1000.0;
  double gamma_var = 1000.0;
  double gamma_h0_var = 1000.0;
  double alpha_var = 100.0;
  double sigma_y2_shape = 0.01;
  double sigma_y2_rate = 0.01;
  double wishart_scale_diag = 0.01;
  int wishart_df = 0;  // 0: number of random effects
  std::vector<double> dirichlet_a;  // empty: all ones

  bool operator==(const PriorConfig&) const = default;
};

struct ModelSpec {
  int G = 1;
  TimeBasis time_basis;
  BSplineSpec hazard_basis;
  FixedEffectLayout fixed;
  RandomEffectLayout random;
  std::vector<std::string> surv_covariates;
  PriorConfig priors;

  bool operator==(const ModelSpec&) const = default;

  std::size_t fixed_dim() const {
    return (fixed.intercept ? 1 : 0) + (fixed.time ? time_basis.dimension() : 0) + fixed.covariates.size() +
           fixed.time_interactions.size() * time_basis.dimension();
  }
  std::size_t random_dim() const { return (random.intercept ? 1 : 0) + (random.time ? time_basis.dimension() : 0); }
  std::size_t surv_dim() const { return surv_covariates.size(); }
  std::size_t hazard_dim() const { return hazard_basis.dimension(); }
  int wishart_df() const { return priors.wishart_df > 0 ? priors.wishart_df : static_cast<int>(random_dim()); }

  std::vector<double> dirichlet_a() const {
    if (priors.dirichlet_a.empty()) return std::vector<double>(static_cast<std::size_t>(G), 1.0);
    return priors.dirichlet_a;
  }

  std::vector<std::string> fixed_names() const {
    std::vector<std::string> names;
    if (fixed.intercept) names.push_back("(Intercept)");
    const auto tnames = time_basis.column_names();
    if (fixed.time) names.insert(names.end(), tnames.begin(), tnames.end());
    names.insert(names.end(), fixed.covariates.begin(), fixed.covariates.end());
    for (const auto& c : fixed.time_interactions) {
      for (const auto& t : tnames) names.push_back(c + ":" + t);
    }
    return names;
  }

  std::vector<std::string> random_names() const {
    std::vector<std::string> names;
    if (random.intercept) names.push_back("(Intercept)");
    if (random.time) {
      const auto tnames = time_basis.column_names();
      names.insert(names.end(), tnames.begin(), tnames.end());
    }
    return names;
  }
};

/// Checks a spec against itself and against the covariates present in `data`.
inline void validate_spec(const ModelSpec& spec, const Dataset& data) {
  if (spec.G < 1) throw DataError("number of classes G must be at least 1");
  const auto a = spec.dirichlet_a();
  if (a.size() != static_cast<std::size_t>(spec.G)) throw DataError("dirichlet_a must have length G");
  for (double v : a) {
    if (!(v > 0.0)) throw DataError("dirichlet_a entries must be positive");
  }
  if (spec.random.intercept && !spec.fixed.intercept) {
    throw DataError("random intercept requires a fixed intercept");
  }
  if (spec.random.time && !spec.fixed.time) throw DataError("random time effects require fixed time effects");
  if (spec.random_dim() == 0) throw DataError("at least one random effect is required");
  if (spec.fixed_dim() == 0) throw DataError("at least one fixed effect is required");
  for (const auto& c : spec.fixed.covariates) {
    if (covariate_index(data.long_covariates, c) < 0) throw DataError("unknown longitudinal covariate '" + c + "'");
  }
  for (const auto& c : spec.fixed.time_interactions) {
    if (covariate_index(data.long_covariates, c) < 0) throw DataError("unknown longitudinal covariate '" + c + "'");
  }
  for (const auto& c : spec.surv_covariates) {
    if (covariate_index(data.surv_covariates, c) < 0) throw DataError("unknown survival covariate '" + c + "'");
  }
  const auto& p = spec.priors;
  if (!(p.beta_var > 0 && p.gamma_var > 0 && p.gamma_h0_var > 0 && p.alpha_var > 0 && p.sigma_y2_shape > 0 &&
        p.sigma_y2_rate > 0 && p.wishart_scale_diag > 0)) {
    throw DataError("prior variances and scales must be positive");
  }
  if (spec.wishart_df() < static_cast<int>(spec.random_dim())) {
    throw DataError("wishart_df must be at least the number of random effects");
  }
}

inline BSplineSpec resolve_hazard_basis(const HazardKnotConfig& config, const Dataset& data) {
  double upper = 0.0;
  std::vector<double> event_times;
  for (const auto& s : data.subjects) {
    upper = std::max(upper, s.event_time);
    if (s.event == 1) event_times.push_back(s.event_time);
  }
  if (config.upper) upper = *config.upper;
  BSplineSpec spec;
  spec.degree = config.degree;
  spec.boundary = {0.0, upper};
  if (config.internal_knots > 0) {
    if (config.placement == HazardKnotConfig::Placement::equidistant) {
      spec.internal_knots = equidistant_knots(0.0, upper, config.internal_knots);
    } else {
      if (event_times.empty()) throw DataError("percentile hazard knots need at least one observed event");
      spec.internal_knots = knots_from_quantiles(event_times, config.internal_knots);
    }
  }
  return spec;
}

/// All parameters of one MCMC state. Classes are 0-based here (v[i] in 0..G-1);
/// exported files use 1-based labels.
struct ParameterState {
  std::vector<Eigen::VectorXd> beta;
  double sigma_y2 = 1.0;
  std::vector<Eigen::MatrixXd> Sigma_b;
  std::vector<Eigen::VectorXd> gamma;
  std::vector<double> alpha;
  std::vector<Eigen::VectorXd> gamma_h0;  // [0] intercept, then spline coefficients summing to zero
  Eigen::VectorXd pi;
  std::vector<int> v;
  std::vector<std::vector<Eigen::VectorXd>> b;  // b[i][g]; may be empty when not stored

  int G() const { return static_cast<int>(beta.size()); }
  std::size_t n() const { return v.size(); }
  bool has_random_effects() const { return !b.empty(); }

  std::vector<int> occupancy() const {
    std::vector<int> counts(static_cast<std::size_t>(G()), 0);
    for (int g : v) ++counts[static_cast<std::size_t>(g)];
    return counts;
  }

  /// Zero-initialized state with the dimensions implied by `spec`.
  static ParameterState zeros(const ModelSpec& spec, std::size_t n) {
    ParameterState s;
    const auto G = static_cast<std::size_t>(spec.G);
    const auto p = static_cast<Eigen::Index>(spec.fixed_dim());
    const auto q = static_cast<Eigen::Index>(spec.random_dim());
    s.beta.assign(G, Eigen::VectorXd::Zero(p));
    s.Sigma_b.assign(G, Eigen::MatrixXd::Identity(q, q));
    s.gamma.assign(G, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(spec.surv_dim())));
    s.alpha.assign(G, 0.0);
    s.gamma_h0.assign(G, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(spec.hazard_dim()) + 1));
    s.pi = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(G), 1.0 / static_cast<double>(G));
    s.v.assign(n, 0);
    s.b.assign(n, std::vector<Eigen::VectorXd>(G, Eigen::VectorXd::Zero(q)));
    return s;
  }
};

/// Per-subject design matrices, precomputed once per (spec, data, rule).
struct SubjectDesign {
  Eigen::MatrixXd X;  // n_i x p
  Eigen::MatrixXd Z;  // n_i x q
  Eigen::VectorXd y;
  Eigen::MatrixXd ZtZ;
  Eigen::VectorXd w;
  double T = 0.0;
  int delta = 0;
  // quadrature on (0, T)
  Eigen::VectorXd node_weights;
  Eigen::MatrixXd Xq, Zq, Bq;
  // at T
  Eigen::RowVectorXd xT, zT, bT;
};

/// A model specification bound to a dataset: owns the design cache used by the
/// likelihood kernels. Immutable after construction.
class JointModel {
 public:
  JointModel(ModelSpec spec, Dataset data, QuadratureRule rule = gauss_radau(15))
      : spec_(std::move(spec)), data_(std::move(data)), rule_(std::move(rule)), hazard_(spec_.hazard_basis) {
    validate_spec(spec_, data_);
    if (spec_.time_basis.kind == TimeBasis::Kind::natural_cubic) time_spline_.emplace(spec_.time_basis.spline);
    for (const auto& c : spec_.fixed.covariates) fixed_cov_.push_back(covariate_index(data_.long_covariates, c));
    for (const auto& c : spec_.fixed.time_interactions) {
      inter_cov_.push_back(covariate_index(data_.long_covariates, c));
    }
    for (const auto& c : spec_.surv_covariates) surv_cov_.push_back(covariate_index(data_.surv_covariates, c));

    design_.reserve(data_.n());
    for (std::size_t i = 0; i < data_.n(); ++i) design_.push_back(build_design(i));
  }

  const ModelSpec& spec() const { return spec_; }
  const Dataset& data() const { return data_; }
  const QuadratureRule& rule() const { return rule_; }
  const SubjectDesign& design(std::size_t i) const { return design_[i]; }
  std::size_t n() const { return data_.n(); }
  int G() const { return spec_.G; }

  Eigen::VectorXd time_row(double t) const {
    if (time_spline_) return (*time_spline_)(t);
    return Eigen::VectorXd::Constant(1, t);
  }

  /// Fixed-effect design row x_i(t); covariates carried forward from the last visit at or before t.
  Eigen::RowVectorXd fixed_row(std::size_t i, double t) const {
    return fixed_row(data_.subjects[i].covariates_at(t), time_row(t));
  }

  Eigen::RowVectorXd random_row(double t) const { return random_row_from(time_row(t)); }

  Eigen::RowVectorXd hazard_row(double t) const { return hazard_.clamped(t).transpose(); }

  Eigen::VectorXd surv_covariates(std::size_t i) const {
    Eigen::VectorXd w(static_cast<Eigen::Index>(surv_cov_.size()));
    for (std::size_t k = 0; k < surv_cov_.size(); ++k) {
      w(static_cast<Eigen::Index>(k)) = data_.subjects[i].w[static_cast<std::size_t>(surv_cov_[k])];
    }
    return w;
  }

 private:
  Eigen::RowVectorXd fixed_row(const std::vector<double>& cov, const Eigen::VectorXd& f) const {
    Eigen::RowVectorXd row(static_cast<Eigen::Index>(spec_.fixed_dim()));
    Eigen::Index c = 0;
    if (spec_.fixed.intercept) row(c++) = 1.0;
    if (spec_.fixed.time) {
      row.segment(c, f.size()) = f.transpose();
      c += f.size();
    }
    for (auto k : fixed_cov_) row(c++) = cov[static_cast<std::size_t>(k)];
    for (auto k : inter_cov_) {
      row.segment(c, f.size()) = cov[static_cast<std::size_t>(k)] * f.transpose();
      c += f.size();
    }
    return row;
  }

  Eigen::RowVectorXd random_row_from(const Eigen::VectorXd& f) const {
    Eigen::RowVectorXd row(static_cast<Eigen::Index>(spec_.random_dim()));
    Eigen::Index c = 0;
    if (spec_.random.intercept) row(c++) = 1.0;
    if (spec_.random.time) row.segment(c, f.size()) = f.transpose();
    return row;
  }

  SubjectDesign build_design(std::size_t i) const {
    const Subject& s = data_.subjects[i];
    SubjectDesign d;
    const auto ni = static_cast<Eigen::Index>(s.n_obs());
    const auto p = static_cast<Eigen::Index>(spec_.fixed_dim());
    const auto q = static_cast<Eigen::Index>(spec_.random_dim());
    d.X.resize(ni, p);
    d.Z.resize(ni, q);
    d.y.resize(ni);
    for (Eigen::Index j = 0; j < ni; ++j) {
      const auto f = time_row(s.times[static_cast<std::size_t>(j)]);
      d.X.row(j) = fixed_row(s.x[static_cast<std::size_t>(j)], f);
      d.Z.row(j) = random_row_from(f);
      d.y(j) = s.y[static_cast<std::size_t>(j)];
    }
    d.ZtZ = d.Z.transpose() * d.Z;
    d.w = surv_covariates(i);
    d.T = s.event_time;
    d.delta = s.event;

    const MappedNodes mapped = map_to_interval(rule_, d.T);
    d.node_weights = mapped.weights;
    const Eigen::Index K = rule_.size();
    d.Xq.resize(K, p);
    d.Zq.resize(K, q);
    d.Bq.resize(K, static_cast<Eigen::Index>(spec_.hazard_dim()));
    for (Eigen::Index k = 0; k < K; ++k) {
      const double t = mapped.points(k);
      d.Xq.row(k) = fixed_row(i, t);
      d.Zq.row(k) = random_row(t);
      d.Bq.row(k) = hazard_row(t);
    }
    d.xT = fixed_row(i, d.T);
    d.zT = random_row(d.T);
    d.bT = hazard_row(d.T);
    return d;
  }

  ModelSpec spec_;
  Dataset data_;
  QuadratureRule rule_;
  BSplineBasis hazard_;
  std::optional<NaturalCubicBasis> time_spline_;
  std::vector<std::ptrdiff_t> fixed_cov_, inter_cov_, surv_cov_;
  std::vector<SubjectDesign> design_;
};

}  // namespace lcjm

#endif  // LCJM_MODEL_HPP
