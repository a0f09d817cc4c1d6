#ifndef LCJM_QUADRATURE_HPP
#define LCJM_QUADRATURE_HPP

#include <cmath>
#include <numbers>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "lcjm/error.hpp"

namespace lcjm {

/// Quadrature rule on [-1, 1] plus the map used to carry it onto (0, T).
///
/// With grading g the node u in (0, 1] lands at s = T * u^g, so g = 1 is the
/// plain affine map and g > 1 clusters nodes near zero, where Weibull-type
/// hazards t^(xi - 1) are not smooth.
struct QuadratureRule {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
  double grading = 3.0;

  Eigen::Index size() const { return nodes.size(); }
};

inline QuadratureRule gauss_legendre(int n, double grading = 3.0) {
  if (n < 1) throw DataError("quadrature needs at least one node");
  if (!(grading >= 1.0)) throw DataError("quadrature grading must be >= 1");
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  rule.grading = grading;
  // Newton iteration on P_n from the Chebyshev-like initial guess; nodes are mirrored.
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes(i) = -x;
    rule.nodes(n - 1 - i) = x;
    rule.weights(i) = w;
    rule.weights(n - 1 - i) = w;
  }
  if (n % 2 == 1) rule.nodes(n / 2) = 0.0;
  return rule;
}

namespace detail {

/// P_{n-1}(x) and P_n(x) by the three-term recurrence.
inline std::pair<double, double> legendre_pair(int n, double x) {
  double p0 = 1.0, p1 = x;
  if (n == 0) return {0.0, 1.0};
  for (int k = 2; k <= n; ++k) {
    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  return {p0, p1};
}

}  // namespace detail

/// Gauss-Radau rule with the fixed node at +1 (the right end T after mapping).
/// Interior nodes are the roots of P_{n-1} - P_n other than x = 1.
inline QuadratureRule gauss_radau(int n, double grading = 3.0) {
  if (n < 1) throw DataError("quadrature needs at least one node");
  if (!(grading >= 1.0)) throw DataError("quadrature grading must be >= 1");
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  rule.grading = grading;
  const auto f = [n](double x) {
    const auto [pm, pn] = detail::legendre_pair(n, x);
    return pm - pn;
  };
  const double nn = static_cast<double>(n) * n;
  Eigen::Index found = 0;
  const int grid = 200 * n;
  double a = -1.0, fa = f(a);
  for (int k = 1; k <= grid && found < n - 1; ++k) {
    const double b = -1.0 + 2.0 * k / grid;
    const double fb = f(b);
    if (k < grid && fa * fb < 0.0) {
      double lo = a, hi = b, flo = fa;
      for (int iter = 0; iter < 200 && hi - lo > 1e-16; ++iter) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if (fm == 0.0) lo = hi = mid;
        else if ((fm < 0.0) == (flo < 0.0)) lo = mid, flo = fm;
        else hi = mid;
      }
      const double x = 0.5 * (lo + hi);
      const double pm = detail::legendre_pair(n, x).first;
      rule.nodes(found) = x;
      rule.weights(found) = (1.0 + x) / (nn * pm * pm);
      ++found;
    }
    a = b;
    fa = fb;
  }
  if (found != n - 1) throw NumericalError("Gauss-Radau node search failed");
  rule.nodes(n - 1) = 1.0;
  rule.weights(n - 1) = 2.0 / nn;
  return rule;
}

/// Nodes and weights of `rule` carried onto (0, T).
struct MappedNodes {
  Eigen::VectorXd points;
  Eigen::VectorXd weights;
};

inline MappedNodes map_to_interval(const QuadratureRule& rule, double T) {
  MappedNodes out;
  out.points.resize(rule.size());
  out.weights.resize(rule.size());
  const double g = rule.grading;
  for (Eigen::Index k = 0; k < rule.size(); ++k) {
    const double u = 0.5 * (rule.nodes(k) + 1.0);
    out.points(k) = T * std::pow(u, g);
    out.weights(k) = 0.5 * rule.weights(k) * T * g * std::pow(u, g - 1.0);
  }
  return out;
}

/// Approximates the integral over (0, T) of exp(log_integrand(s)).
template <class LogIntegrand>
double integrate_exp(const QuadratureRule& rule, double T, LogIntegrand&& log_integrand) {
  const MappedNodes mapped = map_to_interval(rule, T);
  double total = 0.0;
  for (Eigen::Index k = 0; k < rule.size(); ++k) {
    const double value = std::exp(log_integrand(mapped.points(k)));
    if (!std::isfinite(value)) {
      throw NumericalError("non-finite hazard at quadrature node s = " + std::to_string(mapped.points(k)) +
                           " (T = " + std::to_string(T) + ")");
    }
    total += mapped.weights(k) * value;
  }
  return total;
}

}  // namespace lcjm

#endif  // LCJM_QUADRATURE_HPP
