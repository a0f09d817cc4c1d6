#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"

using namespace lcjm;

namespace {

double monomial_integral(int k) { return k % 2 == 1 ? 0.0 : 2.0 / (k + 1); }

// 40-digit roots of P_15, weights 2 / ((1 - x^2) P_15'(x)^2)
TEST(GaussLegendre, MatchesReferenceNodes) {
  const auto r = gauss_legendre(15);
  EXPECT_NEAR(r.nodes(0), -0.98799251802048542849, 1e-15);
  EXPECT_NEAR(r.weights(0), 0.03075324199611726835, 1e-15);
  EXPECT_NEAR(r.nodes(7), 0.0, 1e-15);
  EXPECT_NEAR(r.weights(7), 0.20257824192556127288, 1e-15);
}

TEST(GaussLegendre, ExactForDegreeUpTo2nMinus1) {
  for (int n : {1, 2, 5, 15, 32}) {
    const auto r = gauss_legendre(n);
    for (int k = 0; k <= 2 * n - 1; ++k) {
      double s = 0.0;
      for (Eigen::Index j = 0; j < r.size(); ++j) s += r.weights(j) * std::pow(r.nodes(j), k);
      EXPECT_NEAR(s, monomial_integral(k), 1e-13) << "n=" << n << " k=" << k;
    }
  }
}

// Interior nodes from numpy roots of P_14 - P_15; weights (1 + x) / (n^2 P_14(x)^2).
TEST(GaussRadau, MatchesReferenceNodes) {
  const auto r = gauss_radau(15);
  EXPECT_NEAR(r.nodes(0), -0.9871664784143622, 1e-13);
  EXPECT_NEAR(r.weights(0), 0.03286439158465993, 1e-13);
  EXPECT_NEAR(r.nodes(13), 0.9675504681972014, 1e-13);
  EXPECT_NEAR(r.weights(13), 0.05420278004864516, 1e-13);
  EXPECT_EQ(r.nodes(14), 1.0);
  EXPECT_NEAR(r.weights(14), 2.0 / 225.0, 1e-16);
}

TEST(GaussRadau, ExactForDegreeUpTo2nMinus2) {
  for (int n : {1, 2, 3, 7, 15, 20}) {
    const auto r = gauss_radau(n);
    for (int k = 0; k <= 2 * n - 2; ++k) {
      double s = 0.0;
      for (Eigen::Index j = 0; j < r.size(); ++j) s += r.weights(j) * std::pow(r.nodes(j), k);
      EXPECT_NEAR(s, monomial_integral(k), 1e-13) << "n=" << n << " k=" << k;
    }
    for (Eigen::Index j = 1; j < r.size(); ++j) EXPECT_LT(r.nodes(j - 1), r.nodes(j));
  }
}

TEST(Quadrature, InvalidArguments) {
  EXPECT_THROW(gauss_legendre(0), DataError);
  EXPECT_THROW(gauss_radau(0), DataError);
  EXPECT_THROW(gauss_legendre(5, 0.5), DataError);
}

TEST(Quadrature, MappedWeightsIntegrateConstants) {
  for (double g : {1.0, 2.0, 3.0}) {
    const auto m = map_to_interval(gauss_legendre(15, g), 7.5);
    EXPECT_NEAR(m.weights.sum(), 7.5, 1e-12);
    EXPECT_GT(m.points.minCoeff(), 0.0);
    EXPECT_LT(m.points.maxCoeff(), 7.5);
  }
  const auto radau = map_to_interval(gauss_radau(15), 7.5);
  EXPECT_DOUBLE_EQ(radau.points(14), 7.5);
}

// Weibull hazard xi t^(xi-1) has cumulative hazard T^xi.
TEST(Quadrature, WeibullCumulativeHazard) {
  for (const auto& rule : {gauss_legendre(15), gauss_radau(15)}) {
    for (double xi = 1.0; xi <= 2.0 + 1e-12; xi += 0.1) {
      for (double T = 0.05; T <= 20.0; T += 0.35) {
        const double H = integrate_exp(rule, T, [&](double s) { return std::log(xi) + (xi - 1.0) * std::log(s); });
        EXPECT_NEAR(H / std::pow(T, xi), 1.0, 1e-8) << "xi=" << xi << " T=" << T;
      }
    }
  }
}

TEST(Quadrature, OverflowIsNumericalError) {
  EXPECT_THROW(integrate_exp(gauss_radau(15), 5.0, [](double s) { return 800.0 * s; }), NumericalError);
}

}  // namespace
