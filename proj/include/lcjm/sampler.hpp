#ifndef LCJM_SAMPLER_HPP
#define LCJM_SAMPLER_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "lcjm/error.hpp"
#include "lcjm/likelihood.hpp"
#include "lcjm/model.hpp"
#include "lcjm/random.hpp"

namespace lcjm {

/// How random effects of classes a subject does not currently belong to are
/// regenerated before the class-indicator draw.
///  - prior: b_ig ~ N(0, Sigma_g)
///  - conditional: b_ig ~ N(m_ig, V_ig), the Gaussian conditional of b under the
///    longitudinal submodel alone; its density is divided out of the class weights.
enum class InactiveEffects { prior, conditional };

struct ChainConfig {
  long iterations = 1000;
  long burn_in = 500;
  long thin = 1;
  std::uint64_t seed = 1;
  long adapt_until = -1;  // -1: burn_in / 2
  std::map<std::string, double> initial_step_sizes;
  double target_acceptance = 0.23;
  InactiveEffects inactive_effects = InactiveEffects::conditional;
  bool joint_survival_block = true;
  bool store_draws = true;
  bool store_random_effects = true;
  /// Diagnostic switch: false drops every data term, leaving prior-only targets.
  bool use_likelihood = true;

  long adapt_end() const { return adapt_until < 0 ? burn_in / 2 : adapt_until; }
  long retained() const { return (iterations - burn_in) / thin; }

  void validate() const {
    if (iterations < 1) throw DataError("iterations must be positive");
    if (burn_in < 0 || burn_in >= iterations) throw DataError("burn_in must satisfy 0 <= burn_in < iterations");
    if (thin < 1) throw DataError("thin must be at least 1");
    if (adapt_end() > burn_in) throw DataError("adapt_until must not exceed burn_in");
    if (!(target_acceptance > 0.0 && target_acceptance < 1.0)) throw DataError("target_acceptance must be in (0,1)");
  }

  double step(const std::string& block, double fallback) const {
    auto it = initial_step_sizes.find(block);
    return it == initial_step_sizes.end() ? fallback : it->second;
  }
};

struct BlockAcceptance {
  long proposed = 0;
  long accepted = 0;
  double rate() const { return proposed == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(proposed); }
};

struct ChainOutput {
  std::vector<ParameterState> draws;
  std::vector<long> draw_iterations;        // 1-based iteration of each retained draw
  std::vector<double> draw_log_posterior;   // filled when random effects are stored
  std::vector<std::vector<int>> occupancy;  // every iteration, burn-in included
  std::map<std::string, BlockAcceptance> acceptance;
  std::map<std::string, std::vector<double>> final_step_sizes;  // per block, per class
  ChainConfig config_echo;
};

namespace block {
inline const std::string random_effects = "random_effects";
inline const std::string beta = "beta";
inline const std::string gamma = "gamma";
inline const std::string alpha = "alpha";
inline const std::string gamma_h0 = "gamma_h0";
inline const std::string survival_joint = "survival_joint";
}  // namespace block

/// Random-walk proposal state for one (block, class): Robbins-Monro scale plus
/// an optional empirical covariance shape learned while adapting.
struct AdaptiveProposal {
  double scale = 0.1;
  long count = 0;
  Eigen::VectorXd mean;
  Eigen::MatrixXd m2;
  Eigen::MatrixXd shape;  // lower Cholesky factor; empty means identity

  void record(const Eigen::VectorXd& x) {
    if (count == 0) {
      mean = Eigen::VectorXd::Zero(x.size());
      m2 = Eigen::MatrixXd::Zero(x.size(), x.size());
    }
    ++count;
    const Eigen::VectorXd delta = x - mean;
    mean += delta / static_cast<double>(count);
    m2 += delta * (x - mean).transpose();
  }

  /// Replaces the proposal shape with the empirical covariance (regularized).
  /// Returns true when the shape changed from identity to empirical.
  bool refresh_shape() {
    if (count < 200) return false;
    const auto d = mean.size();
    Eigen::MatrixXd cov = m2 / static_cast<double>(count - 1);
    cov = 0.5 * (cov + cov.transpose());
    cov += 1e-8 * Eigen::MatrixXd::Identity(d, d);
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success) return false;
    const bool first = shape.size() == 0;
    shape = llt.matrixL();
    return first;
  }

  Eigen::VectorXd propose_step(Rng& rng, Eigen::Index d) const {
    const Eigen::VectorXd z = draw_normal_vector(rng, d);
    if (shape.size() == 0) return scale * z;
    return scale * (shape * z);
  }

  void adapt(double acceptance, double target, long iteration) {
    if (scale == 0.0) return;
    const double gain = 1.0 / std::pow(static_cast<double>(iteration) + 1.0, 0.6);
    scale = std::clamp(scale * std::exp(gain * (acceptance - target)), 1e-8, 1e4);
  }
};

/// Metropolis-within-Gibbs sampler over the augmented posterior.
class Sampler {
 public:
  Sampler(const JointModel& model, ChainConfig config)
      : model_(model), config_(std::move(config)), rng_(make_rng(config_.seed, {0x6c636a6d})) {
    config_.validate();
    const auto G = static_cast<std::size_t>(model_.G());
    const auto init = [&](const std::string& name, double fallback) {
      proposals_[name].assign(G, AdaptiveProposal{});
      for (auto& p : proposals_[name]) p.scale = config_.step(name, fallback);
    };
    init(block::random_effects, 1.0);
    init(block::beta, 1.0);
    init(block::gamma, 0.1);
    init(block::alpha, 0.05);
    init(block::gamma_h0, 0.1);
    init(block::survival_joint, 0.05);
  }

  const JointModel& model() const { return model_; }
  const ChainConfig& config() const { return config_; }
  Rng& rng() { return rng_; }
  const std::map<std::string, BlockAcceptance>& acceptance() const { return acceptance_; }
  std::vector<AdaptiveProposal>& proposals(const std::string& name) { return proposals_.at(name); }

  void set_iteration(long k) { iteration_ = k; }

  // Initialization ----------------------------------------------------------------

  /// Classes from the Dirichlet-mean multinomial, class-specific fixed effects
  /// from least squares within k-means clusters of per-subject OLS summaries,
  /// zero survival coefficients, pooled residual variance, Sigma_g = 0.1 I.
  ParameterState initialize() {
    const ModelSpec& spec = model_.spec();
    const std::size_t n = model_.n();
    const int G = spec.G;
    ParameterState state = ParameterState::zeros(spec, n);
    const auto a = spec.dirichlet_a();
    double sum_a = 0.0;
    for (double x : a) sum_a += x;
    for (int g = 0; g < G; ++g) state.pi(g) = a[static_cast<std::size_t>(g)] / sum_a;
    for (std::size_t i = 0; i < n; ++i) state.v[i] = G == 1 ? 0 : draw_categorical(rng_, state.pi);

    const std::vector<int> cluster = kmeans_subject_summaries(G);
    const auto p = static_cast<Eigen::Index>(spec.fixed_dim());
    const auto q = static_cast<Eigen::Index>(spec.random_dim());
    Eigen::MatrixXd pooled_xtx = Eigen::MatrixXd::Zero(p, p);
    Eigen::VectorXd pooled_xty = Eigen::VectorXd::Zero(p);
    std::vector<Eigen::MatrixXd> xtx(static_cast<std::size_t>(G), Eigen::MatrixXd::Zero(p, p));
    std::vector<Eigen::VectorXd> xty(static_cast<std::size_t>(G), Eigen::VectorXd::Zero(p));
    for (std::size_t i = 0; i < n; ++i) {
      const auto& d = model_.design(i);
      const auto c = static_cast<std::size_t>(cluster[i]);
      xtx[c] += d.X.transpose() * d.X;
      xty[c] += d.X.transpose() * d.y;
      pooled_xtx += d.X.transpose() * d.X;
      pooled_xty += d.X.transpose() * d.y;
    }
    const Eigen::MatrixXd ridge = 1e-6 * Eigen::MatrixXd::Identity(p, p);
    const Eigen::VectorXd pooled = (pooled_xtx + ridge).ldlt().solve(pooled_xty);
    for (std::size_t g = 0; g < static_cast<std::size_t>(G); ++g) {
      const double scale = std::max(1.0, xtx[g].diagonal().maxCoeff());
      state.beta[g] = xty[g].isZero() && xtx[g].isZero() ? pooled
                                                          : Eigen::VectorXd((xtx[g] + scale * ridge).ldlt().solve(xty[g]));
      state.Sigma_b[g] = 0.1 * Eigen::MatrixXd::Identity(q, q);
    }
    double ssr = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& d = model_.design(i);
      ssr += (d.y - d.X * state.beta[static_cast<std::size_t>(cluster[i])]).squaredNorm();
    }
    const auto N = static_cast<double>(model_.data().total_obs());
    state.sigma_y2 = ssr > 0.0 ? ssr / N : 1.0;
    return state;
  }

  // Class indicators ---------------------------------------------------------------

  /// Unnormalized log class weights for subject i at the current b[i][*].
  Eigen::VectorXd class_log_weights(const ParameterState& state, std::size_t i) const {
    const int G = state.G();
    Eigen::VectorXd w(G);
    const auto& d = model_.design(i);
    for (int g = 0; g < G; ++g) {
      const auto gi = static_cast<std::size_t>(g);
      const Eigen::VectorXd& b = state.b[i][gi];
      double value = std::log(state.pi(g));
      if (config_.use_likelihood) {
        value += gaussian_residual_logdensity(longitudinal_residual(d, state.beta[gi], b), state.sigma_y2) +
                 survival_logdensity(d, state.beta[gi], b, state.gamma[gi], state.alpha[gi], state.gamma_h0[gi]);
      }
      if (pseudo_is_conditional()) {
        const auto [mean, cov] = conditional_effects(state, i, g);
        value += random_effects_logdensity(b, state.Sigma_b[gi]) - gaussian_logdensity(b, mean, cov);
      }
      w(g) = std::isnan(value) ? -std::numeric_limits<double>::infinity() : value;
    }
    return w;
  }

  Eigen::VectorXd class_probabilities(const ParameterState& state, std::size_t i) const {
    return softmax(class_log_weights(state, i));
  }

  void update_class_indicators(ParameterState& state) {
    if (state.G() == 1) {
      std::fill(state.v.begin(), state.v.end(), 0);
      return;
    }
    refresh_inactive_effects(state);
    for (std::size_t i = 0; i < model_.n(); ++i) {
      const Eigen::VectorXd w = class_log_weights(state, i);
      if (!std::isfinite(w.maxCoeff())) {
        throw NumericalError("subject has no admissible class (subject " + model_.data().subjects[i].id + ")");
      }
      state.v[i] = draw_categorical(rng_, softmax(w));
    }
  }

  /// Regenerates b[i][g] for every g != v_i from the configured pseudo-prior.
  void refresh_inactive_effects(ParameterState& state) {
    for (std::size_t i = 0; i < model_.n(); ++i) {
      for (int g = 0; g < state.G(); ++g) {
        if (g == state.v[i]) continue;
        const auto gi = static_cast<std::size_t>(g);
        if (pseudo_is_conditional()) {
          const auto [mean, cov] = conditional_effects(state, i, g);
          state.b[i][gi] = mean + chol(cov) * draw_normal_vector(rng_, mean.size());
        } else {
          const auto& S = state.Sigma_b[gi];
          state.b[i][gi] = chol(S) * draw_normal_vector(rng_, S.rows());
        }
      }
    }
  }

  // Mixture weights -------------------------------------------------------------

  void update_mixture_weights(ParameterState& state) {
    if (state.G() == 1) {
      state.pi(0) = 1.0;
      return;
    }
    const auto counts = state.occupancy();
    auto a = model_.spec().dirichlet_a();
    for (std::size_t g = 0; g < a.size(); ++g) a[g] += counts[g];
    state.pi = draw_dirichlet(rng_, a);
    // keep log(pi_g) finite for classes whose gamma draw underflowed
    for (Eigen::Index g = 0; g < state.pi.size(); ++g) state.pi(g) = std::max(state.pi(g), 1e-300);
    state.pi /= state.pi.sum();
  }

  // Random effects ------------------------------------------------------------------

  double random_effects_target(const ParameterState& state, std::size_t i, const Eigen::VectorXd& b) const {
    const int g = state.v[i];
    const auto gi = static_cast<std::size_t>(g);
    double value = random_effects_logdensity(b, state.Sigma_b[gi]);
    if (config_.use_likelihood) {
      const auto& d = model_.design(i);
      value += gaussian_residual_logdensity(longitudinal_residual(d, state.beta[gi], b), state.sigma_y2) +
               survival_logdensity(d, state.beta[gi], b, state.gamma[gi], state.alpha[gi], state.gamma_h0[gi]);
    }
    return value;
  }

  /// Random-walk Metropolis on each active b[i][v_i]; the proposal covariance is
  /// the class step size squared times the longitudinal conditional covariance.
  void update_random_effects(ParameterState& state) {
    const int G = state.G();
    std::vector<long> proposed(static_cast<std::size_t>(G), 0), accepted(static_cast<std::size_t>(G), 0);
    auto& props = proposals_.at(block::random_effects);
    for (std::size_t i = 0; i < model_.n(); ++i) {
      const int g = state.v[i];
      const auto gi = static_cast<std::size_t>(g);
      const Eigen::MatrixXd L = chol(effects_proposal_cov(state, i, g));
      Eigen::VectorXd& b = state.b[i][gi];
      const Eigen::VectorXd candidate = b + props[gi].scale * (L * draw_normal_vector(rng_, b.size()));
      const double log_ratio = random_effects_target(state, i, candidate) - random_effects_target(state, i, b);
      ++proposed[gi];
      if (accept(log_ratio)) {
        b = candidate;
        ++accepted[gi];
      }
    }
    for (std::size_t g = 0; g < static_cast<std::size_t>(G); ++g) {
      record_acceptance(block::random_effects, proposed[g], accepted[g]);
      if (adapting() && proposed[g] > 0) {
        props[g].adapt(static_cast<double>(accepted[g]) / static_cast<double>(proposed[g]), config_.target_acceptance,
                       iteration_);
      }
    }
    if (G > 1) refresh_inactive_effects(state);
  }

  // Longitudinal fixed effects ---------------------------------------------------

  /// Sum over members of class g of the class-conditional log likelihood at beta, plus its prior.
  double fixed_effects_target(const ParameterState& state, int g, const Eigen::VectorXd& beta) const {
    const auto gi = static_cast<std::size_t>(g);
    double value = normal_logdensity_iid(beta, model_.spec().priors.beta_var);
    if (!config_.use_likelihood) return value;
    for (std::size_t i = 0; i < model_.n(); ++i) {
      if (state.v[i] != g) continue;
      const auto& d = model_.design(i);
      const auto& b = state.b[i][gi];
      value += gaussian_residual_logdensity(longitudinal_residual(d, beta, b), state.sigma_y2) +
               survival_logdensity(d, beta, b, state.gamma[gi], state.alpha[gi], state.gamma_h0[gi]);
    }
    return value;
  }

  /// Proposal covariance for beta_g: (sum X'X / sigma2 + I / beta_var)^{-1}.
  Eigen::MatrixXd fixed_effects_proposal_cov(const ParameterState& state, int g) const {
    const auto p = static_cast<Eigen::Index>(model_.spec().fixed_dim());
    Eigen::MatrixXd precision = Eigen::MatrixXd::Identity(p, p) / model_.spec().priors.beta_var;
    if (config_.use_likelihood) {
      for (std::size_t i = 0; i < model_.n(); ++i) {
        if (state.v[i] != g) continue;
        const auto& X = model_.design(i).X;
        precision += X.transpose() * X / state.sigma_y2;
      }
    }
    return precision.llt().solve(Eigen::MatrixXd::Identity(p, p));
  }

  void update_longitudinal_fixed_effects(ParameterState& state) {
    auto& props = proposals_.at(block::beta);
    for (int g = 0; g < state.G(); ++g) {
      const auto gi = static_cast<std::size_t>(g);
      const Eigen::MatrixXd L = chol(fixed_effects_proposal_cov(state, g));
      const Eigen::VectorXd candidate =
          state.beta[gi] + props[gi].scale * (L * draw_normal_vector(rng_, state.beta[gi].size()));
      const double log_ratio = fixed_effects_target(state, g, candidate) - fixed_effects_target(state, g, state.beta[gi]);
      const bool ok = accept(log_ratio);
      if (ok) state.beta[gi] = candidate;
      record_acceptance(block::beta, 1, ok ? 1 : 0);
      if (adapting()) props[gi].adapt(ok ? 1.0 : 0.0, config_.target_acceptance, iteration_);
    }
  }

  // Error variance and random-effects covariance (conjugate) ------------------------

  void update_error_variance(ParameterState& state) {
    const auto& pr = model_.spec().priors;
    double shape = pr.sigma_y2_shape;
    double rate = pr.sigma_y2_rate;
    if (config_.use_likelihood) {
      double ssr = 0.0;
      for (std::size_t i = 0; i < model_.n(); ++i) {
        const auto gi = static_cast<std::size_t>(state.v[i]);
        ssr += longitudinal_residual(model_.design(i), state.beta[gi], state.b[i][gi]).squaredNorm();
      }
      shape += 0.5 * static_cast<double>(model_.data().total_obs());
      rate += 0.5 * ssr;
    }
    state.sigma_y2 = draw_inverse_gamma(rng_, shape, rate);
  }

  void update_re_covariance(ParameterState& state) {
    const ModelSpec& spec = model_.spec();
    const Eigen::MatrixXd M = wishart_scale(spec);
    for (int g = 0; g < state.G(); ++g) {
      Eigen::MatrixXd scatter = M;
      long n_g = 0;
      for (std::size_t i = 0; i < model_.n(); ++i) {
        if (state.v[i] != g) continue;
        const auto& b = state.b[i][static_cast<std::size_t>(g)];
        scatter += b * b.transpose();
        ++n_g;
      }
      state.Sigma_b[static_cast<std::size_t>(g)] =
          draw_inverse_wishart(rng_, static_cast<double>(spec.wishart_df() + n_g), scatter);
    }
  }

  // Survival parameters ----------------------------------------------------------------

  /// Linear predictor eta of every subject under its active class, at the
  /// quadrature nodes and at T. Fixed while the survival blocks update.
  struct EtaCache {
    std::vector<Eigen::VectorXd> nodes;
    std::vector<double> at_T;
  };

  EtaCache eta_cache(const ParameterState& state) const {
    EtaCache cache;
    cache.nodes.resize(model_.n());
    cache.at_T.resize(model_.n());
    for (std::size_t i = 0; i < model_.n(); ++i) {
      const auto gi = static_cast<std::size_t>(state.v[i]);
      const auto& d = model_.design(i);
      cache.nodes[i] = d.Xq * state.beta[gi] + d.Zq * state.b[i][gi];
      cache.at_T[i] = d.xT.dot(state.beta[gi]) + d.zT.dot(state.b[i][gi]);
    }
    return cache;
  }

  /// Sum of survival log densities over class g members plus the priors of the three survival blocks.
  double survival_target(const ParameterState& state, const EtaCache& cache, int g, const Eigen::VectorXd& gamma,
                         double alpha, const Eigen::VectorXd& gamma_h0) const {
    const auto& pr = model_.spec().priors;
    double value = normal_logdensity_iid(gamma, pr.gamma_var) +
                   normal_logdensity_iid(Eigen::VectorXd::Constant(1, alpha), pr.alpha_var) +
                   normal_logdensity_iid(gamma_h0, pr.gamma_h0_var);
    if (!config_.use_likelihood) return value;
    for (std::size_t i = 0; i < model_.n(); ++i) {
      if (state.v[i] != g) continue;
      const auto& d = model_.design(i);
      value += survival_terms(d, gamma, alpha, gamma_h0, cache.nodes[i], cache.at_T[i]).logdensity(d.delta);
    }
    return std::isnan(value) ? -std::numeric_limits<double>::infinity() : value;
  }

  double survival_target(const ParameterState& state, int g, const Eigen::VectorXd& gamma, double alpha,
                         const Eigen::VectorXd& gamma_h0) const {
    return survival_target(state, eta_cache(state), g, gamma, alpha, gamma_h0);
  }

  void update_survival_parameters(ParameterState& state) {
    const EtaCache cache = eta_cache(state);
    for (int g = 0; g < state.G(); ++g) {
      const auto gi = static_cast<std::size_t>(g);
      double current = survival_target(state, cache, g, state.gamma[gi], state.alpha[gi], state.gamma_h0[gi]);

      if (state.gamma[gi].size() > 0) {
        const Eigen::VectorXd candidate = state.gamma[gi] + step(block::gamma, gi, state.gamma[gi].size());
        const double proposed = survival_target(state, cache, g, candidate, state.alpha[gi], state.gamma_h0[gi]);
        if (finish(block::gamma, gi, proposed - current)) {
          state.gamma[gi] = candidate;
          current = proposed;
        }
        track(block::gamma, gi, state.gamma[gi]);
      }

      {
        const double candidate = state.alpha[gi] + step(block::alpha, gi, 1)(0);
        const double proposed = survival_target(state, cache, g, state.gamma[gi], candidate, state.gamma_h0[gi]);
        if (finish(block::alpha, gi, proposed - current)) {
          state.alpha[gi] = candidate;
          current = proposed;
        }
        track(block::alpha, gi, Eigen::VectorXd::Constant(1, state.alpha[gi]));
      }

      {
        Eigen::VectorXd delta = step(block::gamma_h0, gi, state.gamma_h0[gi].size());
        project_hazard_step(delta);
        const Eigen::VectorXd candidate = state.gamma_h0[gi] + delta;
        const double proposed = survival_target(state, cache, g, state.gamma[gi], state.alpha[gi], candidate);
        if (finish(block::gamma_h0, gi, proposed - current)) {
          state.gamma_h0[gi] = candidate;
          current = proposed;
        }
        track(block::gamma_h0, gi, state.gamma_h0[gi]);
      }

      if (config_.joint_survival_block) {
        const auto r = state.gamma[gi].size();
        const auto h = state.gamma_h0[gi].size();
        Eigen::VectorXd joint(r + 1 + h);
        joint << state.gamma[gi], state.alpha[gi], state.gamma_h0[gi];
        Eigen::VectorXd delta = step(block::survival_joint, gi, joint.size());
        Eigen::VectorXd hazard_part = delta.tail(h);
        project_hazard_step(hazard_part);
        delta.tail(h) = hazard_part;
        const Eigen::VectorXd candidate = joint + delta;
        const double proposed =
            survival_target(state, cache, g, candidate.head(r), candidate(r), candidate.tail(h));
        if (finish(block::survival_joint, gi, proposed - current)) {
          state.gamma[gi] = candidate.head(r);
          state.alpha[gi] = candidate(r);
          state.gamma_h0[gi] = candidate.tail(h);
          joint = candidate;
        }
        track(block::survival_joint, gi, joint);
      }
    }
  }

  // Driver ----------------------------------------------------------------------------

  void sweep(ParameterState& state) {
    update_class_indicators(state);
    update_mixture_weights(state);
    update_random_effects(state);
    update_longitudinal_fixed_effects(state);
    update_error_variance(state);
    update_re_covariance(state);
    update_survival_parameters(state);
  }

  ChainOutput run() { return run(initialize()); }

  ChainOutput run(ParameterState state) {
    if (config_.use_likelihood) {
      double lp = std::numeric_limits<double>::quiet_NaN();
      try {
        lp = log_posterior(model_, state);
      } catch (const NumericalError&) {
      }
      if (!std::isfinite(lp)) throw NumericalError("bad initialization: non-finite log posterior");
    }
    ChainOutput out;
    out.config_echo = config_;
    out.occupancy.reserve(static_cast<std::size_t>(config_.iterations));
    if (config_.store_draws) out.draws.reserve(static_cast<std::size_t>(config_.retained()));
    for (long k = 1; k <= config_.iterations; ++k) {
      iteration_ = k;
      try {
        sweep(state);
      } catch (const NumericalError& e) {
        throw NumericalError("iteration " + std::to_string(k) + ": " + e.what());
      }
      out.occupancy.push_back(state.occupancy());
      if (k > config_.burn_in && (k - config_.burn_in) % config_.thin == 0) {
        out.draw_iterations.push_back(k);
        if (config_.store_draws) {
          ParameterState snapshot = state;
          if (config_.store_random_effects) {
            out.draw_log_posterior.push_back(config_.use_likelihood ? log_posterior(model_, state)
                                                                    : std::numeric_limits<double>::quiet_NaN());
          } else {
            snapshot.b.clear();
          }
          out.draws.push_back(std::move(snapshot));
        }
      }
    }
    out.acceptance = acceptance_;
    for (const auto& [name, props] : proposals_) {
      for (const auto& p : props) out.final_step_sizes[name].push_back(p.scale);
    }
    return out;
  }

 private:
  bool adapting() const { return iteration_ <= config_.adapt_end(); }
  bool pseudo_is_conditional() const {
    return config_.inactive_effects == InactiveEffects::conditional && config_.use_likelihood;
  }

  bool accept(double log_ratio) {
    if (std::isnan(log_ratio)) return false;
    if (log_ratio >= 0.0) return true;
    return std::log(draw_uniform(rng_)) < log_ratio;
  }

  void record_acceptance(const std::string& name, long proposed, long accepted) {
    auto& a = acceptance_[name];
    a.proposed += proposed;
    a.accepted += accepted;
  }

  Eigen::VectorXd step(const std::string& name, std::size_t g, Eigen::Index d) {
    return proposals_.at(name)[g].propose_step(rng_, d);
  }

  bool finish(const std::string& name, std::size_t g, double log_ratio) {
    const bool ok = accept(log_ratio);
    record_acceptance(name, 1, ok ? 1 : 0);
    if (adapting()) proposals_.at(name)[g].adapt(ok ? 1.0 : 0.0, config_.target_acceptance, iteration_);
    return ok;
  }

  void track(const std::string& name, std::size_t g, const Eigen::VectorXd& value) {
    if (!adapting()) return;
    auto& p = proposals_.at(name)[g];
    p.record(value);
    if (p.count % 100 == 0 && p.refresh_shape()) {
      p.scale = 2.38 / std::sqrt(static_cast<double>(value.size()));
    }
  }

  static void project_hazard_step(Eigen::VectorXd& delta) {
    if (delta.size() <= 1) return;
    auto tail = delta.tail(delta.size() - 1);
    tail.array() -= tail.mean();
  }

  static Eigen::MatrixXd chol(const Eigen::MatrixXd& S) {
    Eigen::LLT<Eigen::MatrixXd> llt(S);
    if (llt.info() != Eigen::Success) throw NumericalError("covariance not positive definite");
    return llt.matrixL();
  }

  static double gaussian_logdensity(const Eigen::VectorXd& x, const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov) {
    return random_effects_logdensity(x - mean, cov);
  }

  Eigen::MatrixXd effects_proposal_cov(const ParameterState& state, std::size_t i, int g) const {
    if (!config_.use_likelihood) return state.Sigma_b[static_cast<std::size_t>(g)];
    return conditional_effects(state, i, g).second;
  }

  /// Mean and covariance of b_ig given y_i under the longitudinal submodel.
  std::pair<Eigen::VectorXd, Eigen::MatrixXd> conditional_effects(const ParameterState& state, std::size_t i,
                                                                   int g) const {
    const auto gi = static_cast<std::size_t>(g);
    const auto& d = model_.design(i);
    const auto q = d.Z.cols();
    const Eigen::MatrixXd Sigma_inv = state.Sigma_b[gi].llt().solve(Eigen::MatrixXd::Identity(q, q));
    const Eigen::MatrixXd precision = d.ZtZ / state.sigma_y2 + Sigma_inv;
    Eigen::LLT<Eigen::MatrixXd> llt(precision);
    if (llt.info() != Eigen::Success) throw NumericalError("random-effects conditional precision not positive definite");
    Eigen::MatrixXd cov = llt.solve(Eigen::MatrixXd::Identity(q, q));
    cov = 0.5 * (cov + cov.transpose());
    const Eigen::VectorXd mean = llt.solve(d.Z.transpose() * (d.y - d.X * state.beta[gi]) / state.sigma_y2);
    return {mean, cov};
  }

  std::vector<int> kmeans_subject_summaries(int G) {
    const std::size_t n = model_.n();
    std::vector<int> label(n, 0);
    if (G == 1) return label;
    std::vector<Eigen::Vector2d> feat(n);
    for (std::size_t i = 0; i < n; ++i) {
      const Subject& s = model_.data().subjects[i];
      const auto m = static_cast<Eigen::Index>(s.n_obs());
      Eigen::MatrixXd A(m, 2);
      Eigen::VectorXd y(m);
      for (Eigen::Index j = 0; j < m; ++j) {
        A(j, 0) = 1.0;
        A(j, 1) = s.times[static_cast<std::size_t>(j)];
        y(j) = s.y[static_cast<std::size_t>(j)];
      }
      const double spread = A.col(1).maxCoeff() - A.col(1).minCoeff();
      if (m >= 2 && spread > 0.0) {
        feat[i] = (A.transpose() * A).ldlt().solve(A.transpose() * y);
      } else {
        feat[i] = Eigen::Vector2d(y.mean(), 0.0);
      }
    }
    Eigen::Vector2d mean = Eigen::Vector2d::Zero(), sd = Eigen::Vector2d::Zero();
    for (const auto& f : feat) mean += f;
    mean /= static_cast<double>(n);
    for (const auto& f : feat) sd += (f - mean).cwiseAbs2();
    sd = (sd / static_cast<double>(std::max<std::size_t>(n, 2) - 1)).cwiseSqrt();
    for (auto& f : feat) {
      for (int k = 0; k < 2; ++k) f(k) = sd(k) > 0.0 ? (f(k) - mean(k)) / sd(k) : 0.0;
    }

    // k-means++ seeding followed by Lloyd iterations
    std::vector<Eigen::Vector2d> centers;
    centers.push_back(feat[std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_)]);
    std::vector<double> dist(n);
    while (centers.size() < static_cast<std::size_t>(G)) {
      double total = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& c : centers) best = std::min(best, (feat[i] - c).squaredNorm());
        dist[i] = best;
        total += best;
      }
      if (!(total > 0.0)) {
        centers.push_back(feat[std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_)]);
        continue;
      }
      double u = draw_uniform(rng_) * total;
      std::size_t pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        u -= dist[i];
        if (u <= 0.0) {
          pick = i;
          break;
        }
      }
      centers.push_back(feat[pick]);
    }
    for (int iter = 0; iter < 25; ++iter) {
      for (std::size_t i = 0; i < n; ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < centers.size(); ++c) {
          const double dd = (feat[i] - centers[c]).squaredNorm();
          if (dd < best) {
            best = dd;
            label[i] = static_cast<int>(c);
          }
        }
      }
      std::vector<Eigen::Vector2d> sum(centers.size(), Eigen::Vector2d::Zero());
      std::vector<int> count(centers.size(), 0);
      for (std::size_t i = 0; i < n; ++i) {
        sum[static_cast<std::size_t>(label[i])] += feat[i];
        ++count[static_cast<std::size_t>(label[i])];
      }
      for (std::size_t c = 0; c < centers.size(); ++c) {
        if (count[c] > 0) centers[c] = sum[c] / count[c];
      }
    }
    return label;
  }

  const JointModel& model_;
  ChainConfig config_;
  Rng rng_;
  long iteration_ = 0;
  std::map<std::string, std::vector<AdaptiveProposal>> proposals_;
  std::map<std::string, BlockAcceptance> acceptance_;
};

inline ChainOutput run_chain(const JointModel& model, const ChainConfig& config) {
  Sampler sampler(model, config);
  return sampler.run();
}

}  // namespace lcjm

#endif  // LCJM_SAMPLER_HPP
