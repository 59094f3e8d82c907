#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "fpplab/rng.hpp"

using namespace fpplab;

// Known-answer vectors published with the Random123 distribution (kat_vectors).
TEST(Philox, KnownAnswers) {
  {
    const auto out = Philox4x32::encrypt({0u, 0u, 0u, 0u}, {0u, 0u});
    EXPECT_EQ(out[0], 0x6627e8d5u);
    EXPECT_EQ(out[1], 0xe169c58du);
    EXPECT_EQ(out[2], 0xbc57ac4cu);
    EXPECT_EQ(out[3], 0x9b00dbd8u);
  }
  {
    const auto out = Philox4x32::encrypt({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                                         {0xffffffffu, 0xffffffffu});
    EXPECT_EQ(out[0], 0x408f276du);
    EXPECT_EQ(out[1], 0x41c83b0eu);
    EXPECT_EQ(out[2], 0xa20bc7c6u);
    EXPECT_EQ(out[3], 0x6d5451fdu);
  }
}

TEST(RandomSource, Reproducible) {
  RandomSource a({42, 3, 1}), b({42, 3, 1});
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(a.uniform(), b.uniform());
}

TEST(RandomSource, StreamsDiffer) {
  std::set<double> first;
  for (std::uint64_t r = 0; r < 50; ++r)
    for (std::uint64_t s = 0; s < 4; ++s) first.insert(RandomSource({7, r, s}).uniform());
  EXPECT_EQ(first.size(), 200u);
  EXPECT_NE(RandomSource({1, 0, 0}).uniform(), RandomSource({2, 0, 0}).uniform());
}

TEST(RandomSource, NormalMoments) {
  RandomSource rng({9, 0, 0});
  const int n = 200000;
  double s1 = 0, s2 = 0, s4 = 0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    s1 += z;
    s2 += z * z;
    s4 += z * z * z * z;
  }
  EXPECT_NEAR(s1 / n, 0.0, 4.0 / std::sqrt(n));
  EXPECT_NEAR(s2 / n, 1.0, 4.0 * std::sqrt(2.0 / n));
  EXPECT_NEAR(s4 / n, 3.0, 4.0 * std::sqrt(96.0 / n));
}

TEST(RandomSource, UniformRange) {
  RandomSource rng({0, 0, 0});
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    const double v = rng.uniform_pos();
    ASSERT_GT(v, 0.0);
    ASSERT_LE(v, 1.0);
  }
}

TEST(RandomSource, ExponentialMean) {
  RandomSource rng({3, 0, 0});
  const int n = 100000;
  double s = 0;
  for (int i = 0; i < n; ++i) s += rng.exponential(2.0);
  EXPECT_NEAR(s / n, 0.5, 4 * 0.5 / std::sqrt(n));
}
