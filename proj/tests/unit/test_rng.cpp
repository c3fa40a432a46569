#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <vector>

#include "qdetect/rng.hpp"

using namespace qdetect;

TEST(Rng, Mix64IsSplitMixReference) {
  // First outputs of the SplitMix64 generator seeded with 0 (state advanced by the golden gamma).
  EXPECT_EQ(mix64(0), 0xe220a8397b1dcdafULL);
  EXPECT_EQ(mix64(0x9e3779b97f4a7c15ULL), 0x6e789e6aa1b965f4ULL);
}

TEST(Rng, StreamKeysDifferAcrossEveryCoordinate) {
  std::set<std::uint64_t> keys;
  for (std::uint64_t seed : {0ULL, 1ULL}) {
    for (auto purpose : {StreamPurpose::PathNoise, StreamPurpose::Bridge}) {
      for (std::uint64_t rep = 0; rep < 4; ++rep) {
        for (std::uint64_t sensor = 0; sensor < 4; ++sensor) keys.insert(stream_key(seed, purpose, rep, sensor));
      }
    }
  }
  EXPECT_EQ(keys.size(), 2u * 2u * 4u * 4u);
}

TEST(Rng, CounterUniformIsOpenUnitIntervalAndPure) {
  const auto key = stream_key(9, StreamPurpose::Bridge, 3, 1);
  double sum = 0.0;
  const int n = 200000;
  for (int c = 0; c < n; ++c) {
    const double u = counter_uniform(key, static_cast<std::uint64_t>(c));
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / n, 0.5, 4.0 * std::sqrt(1.0 / 12.0 / n));
  EXPECT_EQ(counter_uniform(key, 17), counter_uniform(key, 17));
}

TEST(Rng, GaussianStreamsAreReproducibleAndStandard) {
  GaussianStreams a(5, 2, 3), b(5, 2, 3);
  std::vector<double> x(3), y(3);
  double s = 0.0, ss = 0.0;
  const int n = 100000;
  for (int k = 0; k < n; ++k) {
    a.draw(x);
    b.draw(y);
    ASSERT_EQ(x, y);
    s += x[1];
    ss += x[1] * x[1];
  }
  EXPECT_NEAR(s / n, 0.0, 4.0 / std::sqrt(n));
  EXPECT_NEAR(ss / n, 1.0, 4.0 * std::sqrt(2.0 / n));
}

TEST(Rng, SensorStreamsDoNotDependOnSensorCount) {
  GaussianStreams two(5, 0, 2), four(5, 0, 4);
  std::vector<double> x(2), y(4);
  for (int k = 0; k < 100; ++k) {
    two.draw(x);
    four.draw(y);
    ASSERT_EQ(x[0], y[0]);
    ASSERT_EQ(x[1], y[1]);
  }
}
