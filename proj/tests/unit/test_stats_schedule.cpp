#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fpplab/schedule.hpp"
#include "fpplab/stats.hpp"

using namespace fpplab;

TEST(Stats, NormalQuantile) {
  EXPECT_NEAR(normal_quantile(0.975), 1.959963984540054, 1e-13);
  EXPECT_NEAR(z_value(0.95), 1.959963984540054, 1e-13);
  EXPECT_NEAR(z_value(0.99), 2.5758293035489004, 1e-13);
  EXPECT_THROW(z_value(1.0), std::invalid_argument);
}

TEST(Stats, Summaries) {
  const auto s = summarize({1, 2, 3, 4});
  EXPECT_DOUBLE_EQ(s.mean, 2.5);
  EXPECT_DOUBLE_EQ(s.variance, 5.0 / 3.0);
  EXPECT_DOUBLE_EQ(s.std_error(), std::sqrt(5.0 / 12.0));
  const auto ci = confidence_interval({1, 2, 3, 4});
  EXPECT_NEAR(ci.half_width, 1.959963984540054 * std::sqrt(5.0 / 12.0), 1e-12);
  EXPECT_THROW(confidence_interval({1.0}), std::invalid_argument);
}

TEST(Stats, StableSumOfManySmallTerms) {
  std::vector<double> x(1 << 20, 0.1);
  EXPECT_NEAR(stable_sum(x), 0.1 * (1 << 20), 1e-8);
}

TEST(Stats, WilsonInterval) {
  const auto w = wilson_interval(50, 100, 0.95);
  EXPECT_NEAR(w.low, 0.4038, 5e-5);
  EXPECT_NEAR(w.high, 0.5962, 5e-5);
  const auto z = wilson_interval(0, 20, 0.95);
  EXPECT_NEAR(z.low, 0.0, 1e-15);
  EXPECT_NEAR(z.high, 0.1611, 5e-5);
}

TEST(Stats, LeastSquares) {
  const auto f = least_squares({0, 1, 2, 3}, {1, 3, 5, 7});
  EXPECT_NEAR(f.slope, 2.0, 1e-14);
  EXPECT_NEAR(f.intercept, 1.0, 1e-14);
  EXPECT_NEAR(f.slope_se, 0.0, 1e-12);
  // Textbook example with noise: x = 1..5, y = {2, 4, 5, 4, 5}.
  const auto g = least_squares({1, 2, 3, 4, 5}, {2, 4, 5, 4, 5});
  EXPECT_NEAR(g.slope, 0.6, 1e-14);
  EXPECT_NEAR(g.intercept, 2.2, 1e-13);
  EXPECT_NEAR(g.slope_se, std::sqrt(2.4 / 3 / 10), 1e-13);
}

TEST(Zeta, MatchesHighPrecisionValues) {
  // Reference values from mpmath.zeta(s, a) at 40 digits.
  struct Case {
    double s, a, value;
  } cases[] = {{2, 6, 0.1813229557371153253613041},
               {1.5, 6, 0.8519291492623477384553955},
               {3.7, 26, 0.00005897935036547705894965191},
               {1.1, 46, 6.826496925023686892123326},
               {4, 7, 0.001199699760520907565386413},
               {1.25, 12, 2.171915070485665059861323}};
  for (const auto& c : cases) EXPECT_NEAR(hurwitz_zeta(c.s, c.a), c.value, 1e-13 * c.value) << c.s << " " << c.a;
  EXPECT_THROW(hurwitz_zeta(1.0, 2.0), std::domain_error);
}

TEST(Schedule, FirstSteps) {
  const auto s = build_scale_schedule(2.0, 1.0, 0, 10.0, 20);
  EXPECT_DOUBLE_EQ(s.L[0], 10.0);
  EXPECT_NEAR(s.L[1], 20.0 * (1 + 1.0 / 36), 1e-12);
  EXPECT_NEAR(s.a[1], 2.0 * (1 - 1.0 / 36), 1e-14);
  EXPECT_NEAR(s.L[2], s.L[1] * 2 * (1 + 1.0 / 49), 1e-12);
  const auto eps = s.epsilon(1.0);
  EXPECT_NEAR(eps[0], 0.1813229557371153, 1e-14);
  EXPECT_NEAR(eps[1], 0.1813229557371153 - 1.0 / 36, 1e-14);
}

TEST(Schedule, RhoSwitchesAtK) {
  const auto s = build_scale_schedule(1.5, 3.0, 4, 1.0, 10);
  for (int k = 0; k <= 10; ++k) EXPECT_EQ(s.rho_k[k], k < 4 ? 3.0 : 1.0);
}

TEST(Schedule, RejectsDivergentDelta) {
  EXPECT_THROW(build_scale_schedule(1.0, 1.0, 0, 1.0, 5), std::invalid_argument);
  EXPECT_THROW(build_scale_schedule(2.0, 1.0, 0, -1.0, 5), std::invalid_argument);
}

TEST(Schedule, InvariantsOnRandomParameters) {
  std::mt19937_64 gen(10);
  std::uniform_real_distribution<double> delta(1.0, 4.0), rho(0.1, 5.0), L0(1.0, 100.0);
  for (int t = 0; t < 100; ++t) {
    const double dl = std::nextafter(delta(gen), 5.0);
    const auto s = build_scale_schedule(dl, rho(gen), int(gen() % 10), L0(gen), 40);
    for (int k = 0; k <= 40; ++k) {
      EXPECT_GE(s.L[k], std::ldexp(s.L0, k) * (1 - 1e-15));
      if (k) EXPECT_GE(s.normalized(k), s.normalized(k - 1));
      EXPECT_LE(s.normalized(k), s.product_bound * (1 + 1e-12));
    }
  }
}
