#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "qdetect/calibration.hpp"
#include "qdetect/errors.hpp"
#include "qdetect/experiments.hpp"
#include "qdetect/montecarlo.hpp"

using namespace qdetect;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Scenario tuned(Scenario s, std::size_t reps, double dt, std::uint64_t seed) {
  s.replications = reps;
  s.dt = dt;
  s.seed = seed;
  return s;
}

}  // namespace

TEST(EstimateDelay, OneSensorMatchesWorstCaseFormula) {
  const auto est = estimate_delay(tuned(delay_scenario(1, 0, 2.0), 20000, 0.005, 4));
  EXPECT_NEAR(est.mean, f_cusum(-2.0), 3.0 * est.std_error);
  EXPECT_EQ(est.censored_count, 0u);
  EXPECT_EQ(est.replications_used, 20000u);
}

TEST(EstimateDelay, SmallThresholdFollowsTaylorExpansion) {
  // f(-nu) = nu^2/2 - nu^3/6 + ...; at nu = 1e-3 the quadratic term is accurate to 0.04%.
  const double nu = 1e-3;
  const auto est = estimate_delay(tuned(delay_scenario(1, 0, nu), 80000, 1e-9, 5));
  EXPECT_NEAR(est.mean / (0.5 * nu * nu), 1.0, 0.01);
  EXPECT_LT(3.0 * est.std_error, 0.01 * est.mean);
}

TEST(EstimateFalseAlarm, OneSensorMatchesFormula) {
  const auto est = estimate_false_alarm(tuned(false_alarm_scenario(1, 2.0), 20000, 0.01, 6));
  EXPECT_NEAR(est.mean, f_cusum(2.0), 3.0 * est.std_error);
}

TEST(EstimateFalseAlarm, TwoSensorsAtAsymptoticThreshold) {
  // Constant drift makes bridge monitoring exact, so a coarse step only shifts the stop by dt/2.
  const auto est = estimate_false_alarm(tuned(false_alarm_scenario(2, asymptotic_h(1000.0, 2)), 1500, 0.05, 7));
  EXPECT_NEAR(est.mean, 1000.0, std::max(3.0 * est.std_error, 100.0));
}

TEST(EstimateFalseAlarm, MoreSensorsAlarmSooner) {
  const auto one = estimate_false_alarm(tuned(false_alarm_scenario(1, 3.0), 4000, 0.01, 8));
  const auto two = estimate_false_alarm(tuned(false_alarm_scenario(2, 3.0), 4000, 0.01, 8));
  EXPECT_LT(two.mean, one.mean);
}

TEST(EstimateDelay, RejectsScenarioWithoutChange) {
  EXPECT_THROW(estimate_delay(false_alarm_scenario(2, 3.0)), InvalidArgument);
  EXPECT_THROW(estimate_false_alarm(delay_scenario(2, 0, 3.0)), InvalidArgument);
  EXPECT_THROW(delay_scenario(2, 2, 3.0), InvalidArgument);
}

TEST(EstimateDelay, ReproducibleBitsAndThreadInvariant) {
  auto s = tuned(delay_scenario(3, 1, 3.0), 2000, 0.01, 9);
  s.threads = 1;
  const auto a = estimate_delay(s);
  const auto b = estimate_delay(s);
  s.threads = 4;
  const auto c = estimate_delay(s);
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_EQ(a.std_error, b.std_error);
  EXPECT_EQ(a.mean, c.mean);
  EXPECT_EQ(a.std_error, c.std_error);
}

TEST(EstimateFalseAlarm, CensoringRaisesBudgetError) {
  auto s = tuned(false_alarm_scenario(1, 8.0), 200, 0.01, 10);
  s.horizon.initial = 1.0;
  s.horizon.max_doublings = 0;
  EXPECT_THROW(estimate_false_alarm(s), BudgetExceeded);
  s.horizon.max_doublings = 20;
  const auto est = estimate_false_alarm(s);
  EXPECT_EQ(est.censored_count, 0u);
}

TEST(EstimateDelay, AlarmsBeforeTheChangeAreExcluded) {
  auto s = tuned(delay_scenario(2, 0, 1.0), 2000, 0.01, 11);
  s.change_points = {5.0, kInf};
  const auto est = estimate_delay(s);
  EXPECT_GT(est.excluded_count, 0u);
  EXPECT_EQ(est.excluded_count + est.replications_used, 2000u);
}

TEST(CompareDtHalving, DifferenceIsSmall) {
  const auto cmp = compare_dt_halving(tuned(delay_scenario(1, 0, 2.0), 4000, 0.01, 12));
  EXPECT_LT(std::abs(cmp.difference), cmp.coarse.std_error);
  EXPECT_DOUBLE_EQ(cmp.difference, cmp.fine.mean - cmp.coarse.mean);
}

TEST(EnergyCurve, AgreesWithDirectEstimates) {
  auto s = tuned(false_alarm_scenario(2, 1.0), 4000, 0.01, 13);
  const auto curve = energy_curve(s, level_grid(1.0, 4.0, 31), CurveCriterion::FalseAlarm);
  for (std::size_t j = 1; j < curve.mean.size(); ++j) EXPECT_GE(curve.mean[j], curve.mean[j - 1]);
  s.thresholds = {3.0};
  const auto direct = estimate_false_alarm(s);
  EXPECT_NEAR(curve.value_at(3.0), direct.mean, 3.0 * std::hypot(direct.std_error, curve.se_at(3.0)));
  EXPECT_NEAR(curve.level_for(curve.value_at(2.5)), 2.5, 1e-9);
}

TEST(Equalizer, SymmetricSensorsHaveEqualDelays) {
  for (std::size_t n : {2u, 3u}) {
    auto base = tuned(delay_scenario(n, 0, 4.0), 6000, 0.01, 14);
    const auto report = equalizer_test(base);
    EXPECT_TRUE(report.equalized) << "N=" << n << " max |t| " << report.max_abs_t;
    EXPECT_EQ(report.pairs.size(), n * (n - 1) / 2);
  }
}

TEST(Equalizer, AsymmetricThresholdsAreDetected) {
  auto base = tuned(delay_scenario(2, 0, 4.0), 6000, 0.01, 15);
  base.thresholds = {4.0, 3.0};
  const auto report = equalizer_test(base);
  EXPECT_FALSE(report.equalized);
  EXPECT_GT(report.per_sensor[0].mean, report.per_sensor[1].mean);
}

TEST(TheoremGap, OneSensorGapVanishes) {
  GapParams p;
  p.calibration.replications = 4000;
  p.calibration.relative_se_target = 0.03;
  p.calibration.dt = 0.01;
  p.delay_dt = 0.005;
  p.delay_replications = 20000;
  const double gammas[] = {10.0};
  const auto rows = theorem1_gap(gammas, 1, DriftModel::constant(1.0), p);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_NEAR(rows[0].gap, 0.0, 3.0 * rows[0].gap_se);
  EXPECT_EQ(rows[0].log_n, 0.0);
}

TEST(TheoremGap, DelayIncreasesWithGammaAndDominatesLowerBound) {
  GapParams p;
  p.calibration.replications = 2000;
  p.calibration.relative_se_target = 0.05;
  p.calibration.dt = 0.02;
  p.delay_dt = 0.01;
  p.delay_replications = 8000;
  const double gammas[] = {10.0, 30.0, 100.0};
  const auto rows = theorem1_gap(gammas, 2, DriftModel::constant(1.0), p);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_GE(rows[i].delay.mean, rows[i].lower_bound - 3.0 * rows[i].gap_se);
    if (i > 0) {
      const double slack = 3.0 * std::hypot(rows[i].gap_se, rows[i - 1].gap_se);
      EXPECT_GE(rows[i].delay.mean, rows[i - 1].delay.mean - slack);
    }
  }
}
