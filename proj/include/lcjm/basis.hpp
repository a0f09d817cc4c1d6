#ifndef LCJM_BASIS_HPP
#define LCJM_BASIS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "lcjm/error.hpp"

namespace lcjm {

struct NaturalSplineSpec {
  std::vector<double> internal_knots;
  std::pair<double, double> boundary_knots{0.0, 1.0};

  std::size_t dimension() const { return internal_knots.size() + 1; }
  bool operator==(const NaturalSplineSpec&) const = default;
};

struct BSplineSpec {
  int degree = 2;
  std::vector<double> internal_knots;
  std::pair<double, double> boundary{0.0, 1.0};

  std::size_t dimension() const { return internal_knots.size() + static_cast<std::size_t>(degree) + 1; }
  bool operator==(const BSplineSpec&) const = default;
};

namespace detail {

inline void check_knots(const std::vector<double>& internal, std::pair<double, double> boundary,
                        const char* what) {
  if (!(boundary.first < boundary.second)) {
    throw DataError(std::string(what) + ": boundary knots must satisfy lower < upper");
  }
  for (std::size_t k = 0; k < internal.size(); ++k) {
    if (!(internal[k] > boundary.first && internal[k] < boundary.second)) {
      throw DataError(std::string(what) + ": internal knot outside the boundary");
    }
    if (k > 0 && !(internal[k] > internal[k - 1])) {
      throw DataError(std::string(what) + ": internal knots must be strictly increasing");
    }
  }
}

}  // namespace detail

/// Natural cubic spline basis in cardinal form: basis function j interpolates
/// the unit vector e_j at the knots {lower, internal..., upper} with zero
/// second derivative at both boundaries. The lower-boundary function is
/// dropped so the row carries no implicit intercept. Outside the boundary the
/// functions continue linearly.
class NaturalCubicBasis {
 public:
  explicit NaturalCubicBasis(const NaturalSplineSpec& spec) : spec_(spec) {
    detail::check_knots(spec.internal_knots, spec.boundary_knots, "natural spline");
    knots_.push_back(spec.boundary_knots.first);
    knots_.insert(knots_.end(), spec.internal_knots.begin(), spec.internal_knots.end());
    knots_.push_back(spec.boundary_knots.second);

    const auto K = static_cast<Eigen::Index>(knots_.size());
    // Second derivatives M = curvature_ * f for knot values f.
    curvature_ = Eigen::MatrixXd::Zero(K, K);
    if (K > 2) {
      const Eigen::Index m = K - 2;
      Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, m);
      Eigen::MatrixXd R = Eigen::MatrixXd::Zero(m, K);
      for (Eigen::Index i = 1; i <= m; ++i) {
        const double h0 = knots_[i] - knots_[i - 1];
        const double h1 = knots_[i + 1] - knots_[i];
        A(i - 1, i - 1) = 2.0 * (h0 + h1);
        if (i > 1) A(i - 1, i - 2) = h0;
        if (i < m) A(i - 1, i) = h1;
        R(i - 1, i - 1) += 6.0 / h0;
        R(i - 1, i) -= 6.0 / h0 + 6.0 / h1;
        R(i - 1, i + 1) += 6.0 / h1;
      }
      curvature_.middleRows(1, m) = A.partialPivLu().solve(R);
    }
  }

  std::size_t dimension() const { return spec_.dimension(); }
  const NaturalSplineSpec& spec() const { return spec_; }

  Eigen::VectorXd operator()(double t) const {
    const auto K = static_cast<Eigen::Index>(knots_.size());
    Eigen::RowVectorXd full(K);
    if (t < knots_.front()) {
      full = value_row(0, knots_.front()) + (t - knots_.front()) * slope_row(0, knots_.front());
    } else if (t > knots_.back()) {
      full = value_row(K - 2, knots_.back()) + (t - knots_.back()) * slope_row(K - 2, knots_.back());
    } else {
      auto upper = std::upper_bound(knots_.begin(), knots_.end(), t);
      Eigen::Index i = std::clamp<Eigen::Index>((upper - knots_.begin()) - 1, 0, K - 2);
      full = value_row(i, t);
    }
    return full.tail(K - 1).transpose();
  }

 private:
  Eigen::RowVectorXd value_row(Eigen::Index i, double t) const {
    const double h = knots_[i + 1] - knots_[i];
    const double left = knots_[i + 1] - t;
    const double right = t - knots_[i];
    Eigen::RowVectorXd row = (left * left * left / (6.0 * h) - h * left / 6.0) * curvature_.row(i) +
                             (right * right * right / (6.0 * h) - h * right / 6.0) * curvature_.row(i + 1);
    row(i) += left / h;
    row(i + 1) += right / h;
    return row;
  }

  Eigen::RowVectorXd slope_row(Eigen::Index i, double t) const {
    const double h = knots_[i + 1] - knots_[i];
    const double left = knots_[i + 1] - t;
    const double right = t - knots_[i];
    Eigen::RowVectorXd row = (-left * left / (2.0 * h) + h / 6.0) * curvature_.row(i) +
                             (right * right / (2.0 * h) - h / 6.0) * curvature_.row(i + 1);
    row(i) -= 1.0 / h;
    row(i + 1) += 1.0 / h;
    return row;
  }

  NaturalSplineSpec spec_;
  std::vector<double> knots_;
  Eigen::MatrixXd curvature_;
};

inline Eigen::VectorXd natural_cubic_basis(double t, const NaturalSplineSpec& spec) {
  return NaturalCubicBasis(spec)(t);
}

/// B-spline basis of arbitrary degree on a clamped knot vector.
class BSplineBasis {
 public:
  explicit BSplineBasis(const BSplineSpec& spec) : spec_(spec) {
    if (spec.degree < 0) throw DataError("B-spline degree must be non-negative");
    detail::check_knots(spec.internal_knots, spec.boundary, "B-spline");
    knots_.assign(static_cast<std::size_t>(spec.degree) + 1, spec.boundary.first);
    knots_.insert(knots_.end(), spec.internal_knots.begin(), spec.internal_knots.end());
    knots_.insert(knots_.end(), static_cast<std::size_t>(spec.degree) + 1, spec.boundary.second);
  }

  std::size_t dimension() const { return spec_.dimension(); }
  const BSplineSpec& spec() const { return spec_; }
  const std::vector<double>& knot_vector() const { return knots_; }

  /// Throws DataError if t lies outside the boundary.
  Eigen::VectorXd operator()(double t) const {
    if (!(t >= spec_.boundary.first && t <= spec_.boundary.second)) {
      throw DataError("B-spline evaluated outside its boundary at t = " + std::to_string(t));
    }
    const int p = spec_.degree;
    const std::size_t span = find_span(t);
    // Nonzero functions on the span, built by the triangular Cox-de Boor scheme.
    std::vector<double> local(static_cast<std::size_t>(p) + 1, 0.0);
    std::vector<double> left(static_cast<std::size_t>(p) + 1), right(static_cast<std::size_t>(p) + 1);
    local[0] = 1.0;
    for (int j = 1; j <= p; ++j) {
      left[j] = t - knots_[span + 1 - j];
      right[j] = knots_[span + j] - t;
      double saved = 0.0;
      for (int r = 0; r < j; ++r) {
        const double denom = right[r + 1] + left[j - r];
        const double temp = denom > 0.0 ? local[r] / denom : 0.0;
        local[r] = saved + right[r + 1] * temp;
        saved = left[j - r] * temp;
      }
      local[j] = saved;
    }
    Eigen::VectorXd row = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dimension()));
    for (int r = 0; r <= p; ++r) {
      row(static_cast<Eigen::Index>(span) - p + r) = local[r];
    }
    return row;
  }

  /// Evaluates at t after clamping to the boundary.
  Eigen::VectorXd clamped(double t) const {
    return (*this)(std::clamp(t, spec_.boundary.first, spec_.boundary.second));
  }

 private:
  std::size_t find_span(double t) const {
    const std::size_t p = static_cast<std::size_t>(spec_.degree);
    const std::size_t last = knots_.size() - p - 2;  // last non-degenerate span
    if (t >= knots_[last + 1]) return last;
    auto upper = std::upper_bound(knots_.begin() + p, knots_.begin() + last + 1, t);
    return static_cast<std::size_t>(upper - knots_.begin()) - 1;
  }

  BSplineSpec spec_;
  std::vector<double> knots_;
};

inline Eigen::VectorXd bspline_basis(double t, const BSplineSpec& spec) { return BSplineBasis(spec)(t); }

/// Knots at probabilities j/(count+1) of the empirical distribution, using
/// linear interpolation between order statistics.
inline std::vector<double> knots_from_quantiles(std::vector<double> values, int count) {
  if (values.empty()) throw DataError("knots_from_quantiles: no values");
  if (count < 1) throw DataError("knots_from_quantiles: count must be at least 1");
  std::sort(values.begin(), values.end());
  const std::set<double> distinct(values.begin(), values.end());
  if (static_cast<std::size_t>(count) >= distinct.size()) throw DataError("degenerate knot sequence");

  std::vector<double> knots;
  const double last = static_cast<double>(values.size() - 1);
  for (int j = 1; j <= count; ++j) {
    const double h = last * static_cast<double>(j) / static_cast<double>(count + 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    knots.push_back(values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]));
  }
  for (std::size_t k = 1; k < knots.size(); ++k) {
    if (!(knots[k] > knots[k - 1])) throw DataError("degenerate knot sequence");
  }
  return knots;
}

inline std::vector<double> equidistant_knots(double lower, double upper, int count) {
  if (count < 0 || !(lower < upper)) throw DataError("equidistant_knots: invalid range");
  std::vector<double> knots;
  for (int j = 1; j <= count; ++j) {
    knots.push_back(lower + (upper - lower) * static_cast<double>(j) / static_cast<double>(count + 1));
  }
  return knots;
}

}  // namespace lcjm

#endif  // LCJM_BASIS_HPP
