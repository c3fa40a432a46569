#pragma once

#include <cstddef>
#include <functional>
#include <span>

namespace qdetect {

/// Pairwise (cascade) summation in a fixed order, so results do not depend on how the inputs
/// were produced.
double pairwise_sum(std::span<const double> values);

struct SampleSummary {
  double mean = 0.0;
  double variance = 0.0;  ///< unbiased sample variance
  double std_error = 0.0;
  std::size_t count = 0;
};

SampleSummary summarize(std::span<const double> values);

struct WelchResult {
  double difference = 0.0;  ///< mean_a - mean_b
  double pooled_se = 0.0;   ///< sqrt(se_a^2 + se_b^2)
  double t_statistic = 0.0;
  double dof = 0.0;
  double p_value = 1.0;     ///< two-sided
};

/// Welch two-sample t test from summary statistics.
WelchResult welch_test(const SampleSummary& a, const SampleSummary& b);

/// Runs body(i) for i in [0, count) on up to `threads` workers (0 = hardware concurrency).
/// Each index runs exactly once; callers store results by index.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body);

unsigned resolve_threads(unsigned requested);

}  // namespace qdetect
