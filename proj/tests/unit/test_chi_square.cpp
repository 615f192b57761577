#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>

#include "causaldq/chi_square.hpp"
#include "causaldq/monitor.hpp"

using namespace causaldq;

TEST(ChiSquare, RegularizedGammaMatchesBoost) {
  for (double a : {0.5, 1.0, 2.5, 5.0, 10.0, 25.0, 50.0}) {
    for (double x : {0.0, 0.01, 0.5, 1.0, 3.0, 7.5, 20.0, 60.0, 120.0}) {
      const double want = boost::math::gamma_p(a, x);
      EXPECT_NEAR(stats::regularized_gamma_p(a, x), want, 1e-13) << "a=" << a << " x=" << x;
    }
  }
}

TEST(ChiSquare, CdfAndPdfMatchBoost) {
  for (double k : {1.0, 2.0, 3.0, 10.0, 50.0, 100.0}) {
    boost::math::chi_squared d(k);
    for (double x : {0.1, 1.0, 5.0, 18.3, 60.0, 130.0}) {
      EXPECT_NEAR(stats::chi_square_cdf(x, k), boost::math::cdf(d, x), 1e-13);
      EXPECT_NEAR(stats::chi_square_pdf(x, k), boost::math::pdf(d, x), 1e-13);
    }
  }
}

TEST(ChiSquare, QuantileMatchesBoostAcrossGrid) {
  for (int k = 1; k <= 120; ++k) {
    boost::math::chi_squared d(k);
    for (double prob : {0.01, 0.05, 0.5, 0.9, 0.95, 0.99, 0.999}) {
      const double want = boost::math::quantile(d, prob);
      EXPECT_NEAR(stats::chi_square_quantile(k, prob), want, 1e-9 * std::max(1.0, want)) << "k=" << k;
    }
  }
}

TEST(ChiSquare, TenDofUpperFivePercent) {
  EXPECT_NEAR(monitor::alarm_threshold(10, 0.05), 18.3, 0.05);
}

TEST(ChiSquare, OneDofIsSquaredNormalQuantile) {
  // The 0.975 standard normal quantile is 1.959963984540054.
  const double z = 1.959963984540054;
  EXPECT_NEAR(monitor::alarm_threshold(1, 0.05), z * z, 1e-9);
  EXPECT_NEAR(monitor::alarm_threshold(1, 0.05), 3.841, 0.01);
}

TEST(ChiSquare, QuantileInvertsCdf) {
  for (double k : {1.0, 4.0, 12.0, 50.0})
    for (double prob : {0.001, 0.2, 0.7, 0.99})
      EXPECT_NEAR(stats::chi_square_cdf(stats::chi_square_quantile(k, prob), k), prob, 1e-12);
}

TEST(ChiSquare, RejectsBadArguments) {
  EXPECT_THROW(stats::chi_square_quantile(0.0, 0.5), std::invalid_argument);
  EXPECT_THROW(stats::chi_square_quantile(3.0, 0.0), std::invalid_argument);
  EXPECT_THROW(stats::chi_square_quantile(3.0, 1.0), std::invalid_argument);
  EXPECT_THROW(stats::regularized_gamma_p(-1.0, 1.0), std::invalid_argument);
}

TEST(Alarm, ThresholdAndMonotone) {
  EXPECT_TRUE(monitor::alarm_check(19.0, 10, 0.05));
  EXPECT_FALSE(monitor::alarm_check(18.0, 10, 0.05));
  for (int p : {1, 5, 10, 50})
    for (double z : {0.01, 0.05, 0.2}) EXPECT_FALSE(monitor::alarm_check(0.0, p, z));
  const double th = monitor::alarm_threshold(7, 0.1);
  double prev = 0.0;
  bool seen = false;
  for (double v = 0.0; v < 40.0; v += 0.37) {
    const bool a = monitor::alarm_check(v, 7, 0.1);
    if (seen) EXPECT_TRUE(a);
    seen = seen || a;
    EXPECT_EQ(a, v > th);
    prev = v;
  }
  EXPECT_GT(prev, th);
}
