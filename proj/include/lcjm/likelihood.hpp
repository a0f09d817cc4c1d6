#ifndef LCJM_LIKELIHOOD_HPP
#define LCJM_LIKELIHOOD_HPP

#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lcjm/error.hpp"
#include "lcjm/model.hpp"
#include "lcjm/quadrature.hpp"

namespace lcjm {

inline constexpr double kLog2Pi = 1.8378770664093454836;

// Kernels on raw blocks ---------------------------------------------------------
// These take the cached design directly; the sampler calls them in its inner loops.

inline double gaussian_residual_logdensity(const Eigen::VectorXd& residual, double sigma_y2) {
  const auto m = static_cast<double>(residual.size());
  return -0.5 * m * (kLog2Pi + std::log(sigma_y2)) - 0.5 * residual.squaredNorm() / sigma_y2;
}

inline Eigen::VectorXd longitudinal_residual(const SubjectDesign& d, const Eigen::VectorXd& beta,
                                             const Eigen::VectorXd& b) {
  return d.y - d.X * beta - d.Z * b;
}

/// Survival pieces for one subject: log hazard at T and cumulative hazard H(T),
/// given eta at the quadrature nodes and at T. H may be +inf on overflow.
struct SurvivalTerms {
  double log_hazard_T = 0.0;
  double cumulative = 0.0;

  double logdensity(int delta) const { return (delta == 1 ? log_hazard_T : 0.0) - cumulative; }
};

inline SurvivalTerms survival_terms(const SubjectDesign& d, const Eigen::VectorXd& gamma, double alpha,
                                    const Eigen::VectorXd& gamma_h0, const Eigen::VectorXd& eta_nodes,
                                    double eta_T) {
  const auto Q = d.Bq.cols();
  const Eigen::VectorXd spline = gamma_h0.tail(Q);
  const double lin = gamma.size() > 0 ? gamma.dot(d.w) : 0.0;
  SurvivalTerms out;
  out.log_hazard_T = gamma_h0(0) + d.bT.dot(spline) + lin + alpha * eta_T;
  const Eigen::VectorXd log_h0 = (d.Bq * spline).array() + gamma_h0(0) + alpha * eta_nodes.array();
  out.cumulative = std::exp(lin) * d.node_weights.dot(log_h0.array().exp().matrix());
  return out;
}

inline double survival_logdensity(const SubjectDesign& d, const Eigen::VectorXd& beta, const Eigen::VectorXd& b,
                                  const Eigen::VectorXd& gamma, double alpha, const Eigen::VectorXd& gamma_h0) {
  const Eigen::VectorXd eta_nodes = d.Xq * beta + d.Zq * b;
  const double eta_T = d.xT.dot(beta) + d.zT.dot(b);
  return survival_terms(d, gamma, alpha, gamma_h0, eta_nodes, eta_T).logdensity(d.delta);
}

// Public kernels on (model, subject, class, state) -----------------------------------

inline double eta(const JointModel& model, std::size_t i, int g, const ParameterState& state, double t) {
  const auto gi = static_cast<std::size_t>(g);
  return model.fixed_row(i, t).dot(state.beta[gi]) + model.random_row(t).dot(state.b[i][gi]);
}

inline double longitudinal_logdensity(const JointModel& model, std::size_t i, int g, const ParameterState& state) {
  const auto gi = static_cast<std::size_t>(g);
  return gaussian_residual_logdensity(longitudinal_residual(model.design(i), state.beta[gi], state.b[i][gi]),
                                      state.sigma_y2);
}

/// log h_i(t | v_i = g); the spline part is held constant beyond the hazard boundary.
inline double log_hazard(const JointModel& model, std::size_t i, int g, const ParameterState& state, double t) {
  const auto gi = static_cast<std::size_t>(g);
  const Eigen::VectorXd& h0 = state.gamma_h0[gi];
  const Eigen::RowVectorXd B = model.hazard_row(t);
  const Eigen::VectorXd w = model.surv_covariates(i);
  const double lin = state.gamma[gi].size() > 0 ? state.gamma[gi].dot(w) : 0.0;
  return h0(0) + B.dot(h0.tail(B.size())) + lin + state.alpha[gi] * eta(model, i, g, state, t);
}

/// H_i(T | v_i = g) by quadrature. Throws NumericalError on a non-finite integrand.
inline double cumulative_hazard(const JointModel& model, std::size_t i, int g, const ParameterState& state,
                                double T) {
  if (!(T > 0.0)) throw DataError("cumulative_hazard needs T > 0");
  try {
    return integrate_exp(model.rule(), T, [&](double s) { return log_hazard(model, i, g, state, s); });
  } catch (const NumericalError& e) {
    std::ostringstream msg;
    msg << e.what() << " for subject " << i << ", class " << g + 1 << " (alpha = " << state.alpha[static_cast<std::size_t>(g)]
        << ", hazard intercept = " << state.gamma_h0[static_cast<std::size_t>(g)](0) << ")";
    throw NumericalError(msg.str());
  }
}

inline double cumulative_hazard(const JointModel& model, std::size_t i, int g, const ParameterState& state) {
  return cumulative_hazard(model, i, g, state, model.design(i).T);
}

inline double survival_logdensity(const JointModel& model, std::size_t i, int g, const ParameterState& state) {
  const auto gi = static_cast<std::size_t>(g);
  const SubjectDesign& d = model.design(i);
  const double value = survival_logdensity(d, state.beta[gi], state.b[i][gi], state.gamma[gi], state.alpha[gi],
                                           state.gamma_h0[gi]);
  if (!std::isfinite(value)) {
    // recompute through the checked path so the error names the offending node
    (void)cumulative_hazard(model, i, g, state);
    throw NumericalError("non-finite survival log-density for subject " + std::to_string(i));
  }
  return value;
}

/// log N(b; 0, Sigma) through a Cholesky factor.
inline double random_effects_logdensity(const Eigen::VectorXd& b, const Eigen::MatrixXd& Sigma) {
  Eigen::LLT<Eigen::MatrixXd> llt(Sigma);
  if (llt.info() != Eigen::Success) throw NumericalError("covariance not positive definite");
  const Eigen::MatrixXd& L = llt.matrixL();
  double log_det = 0.0;
  for (Eigen::Index k = 0; k < L.rows(); ++k) {
    if (!(L(k, k) > 0.0)) throw NumericalError("covariance not positive definite");
    log_det += 2.0 * std::log(L(k, k));
  }
  const Eigen::VectorXd z = llt.matrixL().solve(b);
  return -0.5 * (static_cast<double>(b.size()) * kLog2Pi + log_det + z.squaredNorm());
}

/// log p(y_i, T_i, delta_i | v_i = g, b_ig, theta); excludes the random-effects density.
inline double class_conditional_loglik(const JointModel& model, std::size_t i, int g, const ParameterState& state) {
  return longitudinal_logdensity(model, i, g, state) + survival_logdensity(model, i, g, state);
}

// Priors ----------------------------------------------------------------------

inline double normal_logdensity_iid(const Eigen::VectorXd& x, double var) {
  const auto m = static_cast<double>(x.size());
  return -0.5 * m * (kLog2Pi + std::log(var)) - 0.5 * x.squaredNorm() / var;
}

inline double inverse_gamma_logdensity(double x, double shape, double rate) {
  return shape * std::log(rate) - std::lgamma(shape) - (shape + 1.0) * std::log(x) - rate / x;
}

inline double log_multivariate_gamma(double a, int p) {
  double out = 0.25 * p * (p - 1) * std::log(std::numbers::pi);
  for (int j = 1; j <= p; ++j) out += std::lgamma(a + 0.5 * (1 - j));
  return out;
}

/// Inverse-Wishart(df, scale) log density, density proportional to
/// |Sigma|^{-(df+p+1)/2} exp(-tr(scale Sigma^{-1})/2).
inline double inverse_wishart_logdensity(const Eigen::MatrixXd& Sigma, double df, const Eigen::MatrixXd& scale) {
  const int p = static_cast<int>(Sigma.rows());
  Eigen::LLT<Eigen::MatrixXd> llt(Sigma);
  if (llt.info() != Eigen::Success) throw NumericalError("covariance not positive definite");
  Eigen::LLT<Eigen::MatrixXd> llt_scale(scale);
  if (llt_scale.info() != Eigen::Success) throw NumericalError("inverse-Wishart scale not positive definite");
  const double log_det_sigma = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  const double log_det_scale = 2.0 * llt_scale.matrixLLT().diagonal().array().log().sum();
  const double trace = (scale * llt.solve(Eigen::MatrixXd::Identity(p, p))).trace();
  return 0.5 * df * log_det_scale - 0.5 * df * p * std::numbers::ln2 - log_multivariate_gamma(0.5 * df, p) -
         0.5 * (df + p + 1) * log_det_sigma - 0.5 * trace;
}

/// Dirichlet(a) log density of pi; zero for G = 1 (point mass).
inline double dirichlet_logdensity(const Eigen::VectorXd& pi, const std::vector<double>& a) {
  if (pi.size() == 1) return 0.0;
  double sum_a = 0.0, out = 0.0;
  for (Eigen::Index g = 0; g < pi.size(); ++g) {
    const double ag = a[static_cast<std::size_t>(g)];
    sum_a += ag;
    out += (ag - 1.0) * std::log(pi(g)) - std::lgamma(ag);
  }
  return out + std::lgamma(sum_a);
}

inline Eigen::MatrixXd wishart_scale(const ModelSpec& spec) {
  const auto q = static_cast<Eigen::Index>(spec.random_dim());
  return spec.priors.wishart_scale_diag * Eigen::MatrixXd::Identity(q, q);
}

/// Sum of the prior log densities of every parameter block.
inline double log_prior(const ModelSpec& spec, const ParameterState& state) {
  const auto& pr = spec.priors;
  const Eigen::MatrixXd M = wishart_scale(spec);
  double out = dirichlet_logdensity(state.pi, spec.dirichlet_a());
  out += inverse_gamma_logdensity(state.sigma_y2, pr.sigma_y2_shape, pr.sigma_y2_rate);
  for (std::size_t g = 0; g < static_cast<std::size_t>(state.G()); ++g) {
    out += normal_logdensity_iid(state.beta[g], pr.beta_var);
    out += normal_logdensity_iid(state.gamma[g], pr.gamma_var);
    out += normal_logdensity_iid(state.gamma_h0[g], pr.gamma_h0_var);
    out += normal_logdensity_iid(Eigen::VectorXd::Constant(1, state.alpha[g]), pr.alpha_var);
    out += inverse_wishart_logdensity(state.Sigma_b[g], spec.wishart_df(), M);
  }
  return out;
}

/// Augmented log posterior: class indicators are part of the state, not summed out.
/// Subjects are reduced in index order so the value is reproducible.
inline double log_posterior(const JointModel& model, const ParameterState& state) {
  if (!state.has_random_effects()) throw DataError("log_posterior needs the random effects in the state");
  double out = 0.0;
  for (std::size_t i = 0; i < model.n(); ++i) {
    const int g = state.v[i];
    const auto gi = static_cast<std::size_t>(g);
    out += std::log(state.pi(g)) + class_conditional_loglik(model, i, g, state) +
           random_effects_logdensity(state.b[i][gi], state.Sigma_b[gi]);
  }
  return out + log_prior(model.spec(), state);
}

/// Diagnostic per-subject mixture log likelihood log sum_g pi_g p(y_i, T_i | g, b_ig).
inline double marginal_mixture_loglik(const JointModel& model, std::size_t i, const ParameterState& state) {
  std::vector<double> terms;
  double top = -std::numeric_limits<double>::infinity();
  for (int g = 0; g < state.G(); ++g) {
    terms.push_back(std::log(state.pi(g)) + class_conditional_loglik(model, i, g, state));
    top = std::max(top, terms.back());
  }
  double sum = 0.0;
  for (double t : terms) sum += std::exp(t - top);
  return top + std::log(sum);
}

}  // namespace lcjm

#endif  // LCJM_LIKELIHOOD_HPP
