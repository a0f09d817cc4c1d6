#ifndef LCJM_RANDOM_HPP
#define LCJM_RANDOM_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "lcjm/error.hpp"

namespace lcjm {

using Rng = std::mt19937_64;

/// Independent generator for (master seed, stream ids...). Streams with
/// different ids do not overlap in practice; identical inputs give identical streams.
inline Rng make_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> stream = {}) {
  std::vector<std::uint32_t> words{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  for (auto s : stream) {
    words.push_back(static_cast<std::uint32_t>(s));
    words.push_back(static_cast<std::uint32_t>(s >> 32));
  }
  std::seed_seq seq(words.begin(), words.end());
  return Rng(seq);
}

inline double draw_normal(Rng& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

inline double draw_uniform(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

inline Eigen::VectorXd draw_normal_vector(Rng& rng, Eigen::Index n) {
  Eigen::VectorXd z(n);
  for (Eigen::Index k = 0; k < n; ++k) z(k) = draw_normal(rng);
  return z;
}

/// Gamma with the given shape and rate.
inline double draw_gamma(Rng& rng, double shape, double rate) {
  return std::gamma_distribution<double>(shape, 1.0 / rate)(rng);
}

inline double draw_inverse_gamma(Rng& rng, double shape, double rate) {
  return 1.0 / draw_gamma(rng, shape, rate);
}

inline Eigen::VectorXd draw_dirichlet(Rng& rng, const std::vector<double>& a) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(a.size()));
  for (std::size_t g = 0; g < a.size(); ++g) x(static_cast<Eigen::Index>(g)) = draw_gamma(rng, a[g], 1.0);
  const double total = x.sum();
  if (!(total > 0.0)) {
    // every gamma draw underflowed (tiny shapes); fall back to a unit vertex
    x.setZero();
    x(static_cast<Eigen::Index>(std::uniform_int_distribution<std::size_t>(0, a.size() - 1)(rng))) = 1.0;
    return x;
  }
  return x / total;
}

/// Wishart(df, scale) by the Bartlett decomposition.
inline Eigen::MatrixXd draw_wishart(Rng& rng, double df, const Eigen::MatrixXd& scale) {
  const Eigen::Index p = scale.rows();
  Eigen::LLT<Eigen::MatrixXd> llt(scale);
  if (llt.info() != Eigen::Success) throw NumericalError("Wishart scale matrix not positive definite");
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index r = 0; r < p; ++r) {
    const double chi2 = 2.0 * draw_gamma(rng, 0.5 * (df - static_cast<double>(r)), 1.0);
    A(r, r) = std::sqrt(chi2);
    for (Eigen::Index c = 0; c < r; ++c) A(r, c) = draw_normal(rng);
  }
  const Eigen::MatrixXd LA = llt.matrixL() * A;
  return LA * LA.transpose();
}

/// Inverse-Wishart(df, scale): Sigma^{-1} ~ Wishart(df, scale^{-1}).
inline Eigen::MatrixXd draw_inverse_wishart(Rng& rng, double df, const Eigen::MatrixXd& scale) {
  const Eigen::Index p = scale.rows();
  Eigen::LLT<Eigen::MatrixXd> llt(scale);
  if (llt.info() != Eigen::Success) throw NumericalError("inverse-Wishart scale matrix not positive definite");
  const Eigen::MatrixXd scale_inv = llt.solve(Eigen::MatrixXd::Identity(p, p));
  const Eigen::MatrixXd W = draw_wishart(rng, df, 0.5 * (scale_inv + scale_inv.transpose()));
  Eigen::LLT<Eigen::MatrixXd> wllt(W);
  if (wllt.info() != Eigen::Success) throw NumericalError("singular Wishart draw");
  Eigen::MatrixXd out = wllt.solve(Eigen::MatrixXd::Identity(p, p));
  return 0.5 * (out + out.transpose());
}

/// Normalized probabilities from unnormalized log weights (log-sum-exp).
inline Eigen::VectorXd softmax(const Eigen::VectorXd& log_weights) {
  const double top = log_weights.maxCoeff();
  if (!std::isfinite(top)) {
    return Eigen::VectorXd::Constant(log_weights.size(), std::numeric_limits<double>::quiet_NaN());
  }
  Eigen::VectorXd p = (log_weights.array() - top).exp();
  return p / p.sum();
}

inline int draw_categorical(Rng& rng, const Eigen::VectorXd& probabilities) {
  const double u = draw_uniform(rng);
  double cumulative = 0.0;
  for (Eigen::Index g = 0; g < probabilities.size(); ++g) {
    cumulative += probabilities(g);
    if (u < cumulative) return static_cast<int>(g);
  }
  for (Eigen::Index g = probabilities.size() - 1; g >= 0; --g) {
    if (probabilities(g) > 0.0) return static_cast<int>(g);
  }
  return 0;
}

}  // namespace lcjm

#endif  // LCJM_RANDOM_HPP
