#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <numeric>
#include <vector>

#include "qdetect/stats.hpp"

using namespace qdetect;

TEST(Stats, PairwiseSumIsExactOnRepresentableValues) {
  std::vector<double> v(1000);
  std::iota(v.begin(), v.end(), 1.0);
  EXPECT_EQ(pairwise_sum(v), 500500.0);
  EXPECT_EQ(pairwise_sum({}), 0.0);
}

TEST(Stats, SummarizeMatchesDirectFormulas) {
  const std::vector<double> v{1.0, 2.0, 4.0, 7.0};
  const auto s = summarize(v);
  EXPECT_DOUBLE_EQ(s.mean, 3.5);
  EXPECT_DOUBLE_EQ(s.variance, 7.0);
  EXPECT_DOUBLE_EQ(s.std_error, std::sqrt(7.0 / 4.0));
  EXPECT_EQ(s.count, 4u);
}

TEST(Stats, WelchTestOnIdenticalAndSeparatedSamples) {
  SampleSummary a{1.0, 4.0, 0.2, 100};
  const auto same = welch_test(a, a);
  EXPECT_EQ(same.difference, 0.0);
  EXPECT_NEAR(same.p_value, 1.0, 1e-12);
  SampleSummary b{2.0, 4.0, 0.2, 100};
  const auto apart = welch_test(b, a);
  EXPECT_DOUBLE_EQ(apart.pooled_se, std::sqrt(0.08));
  EXPECT_NEAR(apart.t_statistic, 1.0 / std::sqrt(0.08), 1e-12);
  EXPECT_NEAR(apart.dof, 198.0, 1e-9);
  EXPECT_LT(apart.p_value, 0.001);
}

TEST(Stats, ParallelForVisitsEachIndexOnce) {
  std::vector<std::atomic<int>> hits(1000);
  parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i]++; });
  for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
  EXPECT_GE(resolve_threads(0), 1u);
  EXPECT_EQ(resolve_threads(3), 3u);
}
