#ifndef LCJM_TESTS_SUPPORT_HPP
#define LCJM_TESTS_SUPPORT_HPP

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "lcjm/lcjm.hpp"

namespace lcjm::test {

/// Scalar Cox-de Boor recursion, i-th basis function of degree p on `knots`;
/// the last function is closed at the right end.
inline double cox_de_boor(const std::vector<double>& knots, int i, int p, double t) {
  const auto k = [&](int j) { return knots[static_cast<std::size_t>(j)]; };
  if (p == 0) {
    const double right_end = knots.back();
    if (t == right_end) {
      // the last non-degenerate interval owns the right end
      int last = static_cast<int>(knots.size()) - 2;
      while (last > 0 && k(last) == k(last + 1)) --last;
      return i == last ? 1.0 : 0.0;
    }
    return (k(i) <= t && t < k(i + 1)) ? 1.0 : 0.0;
  }
  double out = 0.0;
  if (k(i + p) > k(i)) out += (t - k(i)) / (k(i + p) - k(i)) * cox_de_boor(knots, i, p - 1, t);
  if (k(i + p + 1) > k(i + 1)) out += (k(i + p + 1) - t) / (k(i + p + 1) - k(i + 1)) * cox_de_boor(knots, i + 1, p - 1, t);
  return out;
}

inline std::vector<double> clamped_knots(const BSplineSpec& s) {
  std::vector<double> knots(static_cast<std::size_t>(s.degree) + 1, s.boundary.first);
  knots.insert(knots.end(), s.internal_knots.begin(), s.internal_knots.end());
  knots.insert(knots.end(), static_cast<std::size_t>(s.degree) + 1, s.boundary.second);
  return knots;
}

inline double normal_logpdf(double x, double mean, double var) {
  return -0.5 * std::log(2.0 * std::numbers::pi * var) - 0.5 * (x - mean) * (x - mean) / var;
}

// Brute-force oracles written against the raw subject records -------------------------

inline double long_oracle(const Subject& s, const Eigen::VectorXd& beta, const Eigen::VectorXd& b, double sigma2) {
  double out = 0.0;
  for (std::size_t j = 0; j < s.n_obs(); ++j) {
    const double t = s.times[j];
    const double mean = beta(0) + beta(1) * t + beta(2) * s.x[j][0] + b(0) + b(1) * t;
    out += normal_logpdf(s.y[j], mean, sigma2);
  }
  return out;
}

inline double male_at(const Subject& s, double t) {
  double best_time = -1.0, value = s.x[0][0];
  for (std::size_t j = 0; j < s.n_obs(); ++j) {
    if (s.times[j] <= t && s.times[j] >= best_time) best_time = s.times[j], value = s.x[j][0];
  }
  return value;
}

inline double log_hazard_oracle(const Subject& s, const BSplineSpec& hz, const ParameterState& st, int g, double t) {
  const auto gi = static_cast<std::size_t>(g);
  const auto knots = clamped_knots(hz);
  const double tc = std::min(std::max(t, hz.boundary.first), hz.boundary.second);
  double spline = 0.0;
  for (std::size_t q = 0; q < hz.dimension(); ++q) {
    spline += st.gamma_h0[gi](static_cast<Eigen::Index>(q) + 1) * test::cox_de_boor(knots, static_cast<int>(q), hz.degree, tc);
  }
  const auto& beta = st.beta[gi];
  // fixed part of eta only; callers add the random effects
  const double eta = beta(0) + beta(1) * t + beta(2) * male_at(s, t);
  return st.gamma_h0[gi](0) + spline + st.gamma[gi](0) * s.w[0] + st.alpha[gi] * eta;
}

inline double survival_oracle(const Subject& s, const BSplineSpec& hz, const ParameterState& st, std::size_t i, int g,
                       const QuadratureRule& rule) {
  const auto gi = static_cast<std::size_t>(g);
  const Eigen::VectorXd& b = st.b[i][gi];
  const auto lh = [&](double t) { return log_hazard_oracle(s, hz, st, g, t) + st.alpha[gi] * (b(0) + b(1) * t); };
  double H = 0.0;
  for (Eigen::Index k = 0; k < rule.size(); ++k) {
    const double u = 0.5 * (rule.nodes(k) + 1.0);
    const double point = s.event_time * u * u * u;
    const double weight = 0.5 * rule.weights(k) * 3.0 * s.event_time * u * u;
    H += weight * std::exp(lh(point));
  }
  return (s.event == 1 ? lh(s.event_time) : 0.0) - H;
}

inline double re_oracle(const Eigen::VectorXd& b, const Eigen::MatrixXd& S) {
  const double det = S(0, 0) * S(1, 1) - S(0, 1) * S(1, 0);
  const double quad = (S(1, 1) * b(0) * b(0) - 2.0 * S(0, 1) * b(0) * b(1) + S(0, 0) * b(1) * b(1)) / det;
  return -std::log(2.0 * std::numbers::pi) - 0.5 * std::log(det) - 0.5 * quad;
}

/// Small random dataset: one longitudinal covariate "male", one survival covariate "age".
inline Dataset random_dataset(std::mt19937_64& rng, int n, int max_obs = 6) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::normal_distribution<double> N(0.0, 1.0);
  std::vector<LongRecord> lr;
  std::vector<SurvRecord> sr;
  for (int i = 0; i < n; ++i) {
    const std::string id = "s" + std::to_string(i + 1);
    const double T = 0.5 + 9.5 * U(rng);
    const int event = U(rng) < 0.6 ? 1 : 0;
    const double male = U(rng) < 0.5 ? 1.0 : 0.0;
    const double age = 40.0 + 10.0 * N(rng);
    sr.push_back({id, T, event, {age}});
    const int m = 1 + static_cast<int>(U(rng) * max_obs);
    std::vector<double> times{0.0};
    for (int j = 1; j < m; ++j) times.push_back(T * U(rng));
    std::sort(times.begin(), times.end());
    for (double t : times) lr.push_back({id, t, 3.0 + 0.4 * t - male + N(rng), {male}});
  }
  return validate_dataset(lr, sr, {"male"}, {"age"});
}

inline ModelSpec test_spec(const Dataset& data, int G = 1) {
  ModelSpec spec;
  spec.G = G;
  spec.fixed.covariates = {"male"};
  spec.surv_covariates = {"age"};
  HazardKnotConfig h;
  h.internal_knots = 2;
  spec.hazard_basis = resolve_hazard_basis(h, data);
  return spec;
}

/// Random parameter state with moderate values and positive-definite covariances.
inline ParameterState random_state(const ModelSpec& spec, std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> N(0.0, 1.0);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  ParameterState s = ParameterState::zeros(spec, n);
  for (int g = 0; g < spec.G; ++g) {
    const auto gi = static_cast<std::size_t>(g);
    for (Eigen::Index k = 0; k < s.beta[gi].size(); ++k) s.beta[gi](k) = N(rng);
    for (Eigen::Index k = 0; k < s.gamma[gi].size(); ++k) s.gamma[gi](k) = 0.02 * N(rng);
    s.alpha[gi] = 0.3 * N(rng);
    for (Eigen::Index k = 0; k < s.gamma_h0[gi].size(); ++k) s.gamma_h0[gi](k) = 0.3 * N(rng);
    s.gamma_h0[gi](0) -= 3.0;
    auto tail = s.gamma_h0[gi].tail(s.gamma_h0[gi].size() - 1);
    tail.array() -= tail.mean();
    const auto q = static_cast<Eigen::Index>(spec.random_dim());
    Eigen::MatrixXd A(q, q);
    for (Eigen::Index r = 0; r < q; ++r) {
      for (Eigen::Index c = 0; c < q; ++c) A(r, c) = 0.5 * N(rng);
    }
    s.Sigma_b[gi] = A * A.transpose() + 0.2 * Eigen::MatrixXd::Identity(q, q);
  }
  s.sigma_y2 = 0.3 + U(rng);
  Eigen::VectorXd pi(spec.G);
  for (int g = 0; g < spec.G; ++g) pi(g) = 0.2 + U(rng);
  s.pi = pi / pi.sum();
  for (std::size_t i = 0; i < n; ++i) {
    s.v[i] = static_cast<int>(U(rng) * spec.G);
    for (auto& b : s.b[i]) {
      for (Eigen::Index k = 0; k < b.size(); ++k) b(k) = 0.3 * N(rng);
    }
  }
  return s;
}

/// Batch-means Monte Carlo standard error of the mean of a correlated series.
inline double batch_means_se(const std::vector<double>& x, int batches = 50) {
  const std::size_t size = x.size() / static_cast<std::size_t>(batches);
  std::vector<double> means;
  for (int b = 0; b < batches; ++b) {
    double s = 0.0;
    for (std::size_t k = 0; k < size; ++k) s += x[static_cast<std::size_t>(b) * size + k];
    means.push_back(s / static_cast<double>(size));
  }
  double m = 0.0;
  for (double v : means) m += v;
  m /= batches;
  double ss = 0.0;
  for (double v : means) ss += (v - m) * (v - m);
  return std::sqrt(ss / (batches - 1) / batches);
}

inline double mean_of(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

}  // namespace lcjm::test

#endif  // LCJM_TESTS_SUPPORT_HPP
