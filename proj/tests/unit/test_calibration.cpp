#include <gtest/gtest.h>

#include <cmath>

#include "qdetect/calibration.hpp"

using namespace qdetect;

TEST(FCusum, Examples) {
  EXPECT_EQ(f_cusum(0.0), 0.0);
  EXPECT_NEAR(f_cusum(1.0), std::exp(1.0) - 2.0, 1e-15);
  EXPECT_NEAR(f_cusum(-2.0), std::exp(-2.0) + 1.0, 1e-15);
  EXPECT_NEAR(f_cusum(1e-6) / 5e-13, 1.0, 1e-6);
  EXPECT_THROW(f_cusum(NAN), InvalidArgument);
}

TEST(FCusum, PositiveConvexFlatAtZero) {
  for (double nu = -10.0; nu <= 10.0; nu += 0.37) {
    if (nu != 0.0) {
      EXPECT_GT(f_cusum(nu), 0.0);
    }
    const double h = 1e-3;
    EXPECT_GT(f_cusum(nu + h) - 2.0 * f_cusum(nu) + f_cusum(nu - h), 0.0);
  }
  EXPECT_NEAR((f_cusum(1e-5) - f_cusum(-1e-5)) / 2e-5, 0.0, 1e-9);
}

TEST(SolveNu, Examples) {
  EXPECT_NEAR(solve_nu(std::exp(1.0) - 2.0).threshold, 1.0, 1e-9);
  // Fixed-point iteration nu <- log(gamma + nu + 1) as the large-gamma oracle.
  double nu = std::log(1e6);
  for (int k = 0; k < 50; ++k) nu = std::log(1e6 + nu + 1.0);
  EXPECT_LT(std::abs(solve_nu(1e6).threshold - nu), 1e-6);
  EXPECT_NEAR(solve_nu(1e-8).threshold / std::sqrt(2e-8), 1.0, 0.01);
  EXPECT_THROW(solve_nu(0.0), InvalidArgument);
  EXPECT_THROW(solve_nu(-1.0), InvalidArgument);
}

TEST(SolveNu, InvertsF) {
  for (double nu = 0.01; nu < 20.0; nu *= 1.3) {
    const auto r = solve_nu(f_cusum(nu));
    EXPECT_NEAR(r.threshold, nu, 1e-8 * std::max(1.0, nu));
    EXPECT_EQ(r.method, CalibrationMethod::ExactOneSensor);
    EXPECT_LE(std::abs(r.gamma_achieved - r.gamma_target), 1e-10 * std::max(1.0, r.gamma_target));
  }
}

TEST(AsymptoticH, Examples) {
  EXPECT_NEAR(asymptotic_h(std::exp(3.0), 1), 3.0, 1e-12);
  EXPECT_NEAR(asymptotic_h(1000.0, 2), 7.6009, 1e-4);
  EXPECT_NEAR(asymptotic_h(1000.0, 4), 8.294, 1e-3);
}

TEST(AsymptoticH, ApproachesExactOneSensorThreshold) {
  double previous = 1.0;
  for (double gamma : {1e3, 1e4, 1e5}) {
    const double diff = std::abs(asymptotic_h(gamma, 1) - solve_nu(gamma).threshold);
    EXPECT_LT(diff, previous);
    previous = diff;
  }
  EXPECT_LT(previous, 0.01);
}

namespace {

McCalibrationParams quick_params() {
  McCalibrationParams p;
  p.replications = 4000;
  p.max_replications = 16000;
  p.relative_se_target = 0.03;
  p.dt = 0.01;
  p.seed = 3;
  return p;
}

}  // namespace

TEST(CalibrateMc, OneSensorRecoversExactThreshold) {
  const double gamma = f_cusum(2.0);
  const auto r = calibrate_h_mc(gamma, 1, DriftModel::constant(1.0), quick_params());
  EXPECT_EQ(r.method, CalibrationMethod::MonteCarloRootFind);
  EXPECT_GT(r.threshold_se, 0.0);
  EXPECT_NEAR(r.threshold, 2.0, 3.0 * r.threshold_se);
  EXPECT_NEAR(r.threshold, solve_nu(gamma).threshold, 3.0 * r.threshold_se);
}

TEST(CalibrateMc, MeanEnergyIncreasesWithThreshold) {
  auto s = false_alarm_scenario(2, 3.0);
  s.dt = 0.01;
  s.replications = 4000;
  const auto lo = estimate_false_alarm(s);
  s.thresholds = {3.5};
  const auto hi = estimate_false_alarm(s);
  EXPECT_GT(hi.mean, lo.mean);
}

TEST(CalibrateMc, BudgetExceededCarriesPartialResult) {
  auto p = quick_params();
  p.replications = 200;
  p.max_replications = 400;
  p.relative_se_target = 1e-4;
  try {
    calibrate_h_mc(10.0, 1, DriftModel::constant(1.0), p);
    FAIL() << "expected a budget error";
  } catch (const BudgetExceededError& e) {
    EXPECT_GT(e.partial().threshold, 0.0);
    EXPECT_EQ(e.partial().gamma_target, 10.0);
  }
}

TEST(CalibrateMc, IsReproducible) {
  auto p = quick_params();
  p.replications = 1000;
  p.relative_se_target = 0.1;
  const auto a = calibrate_h_mc(20.0, 2, DriftModel::constant(1.0), p);
  const auto b = calibrate_h_mc(20.0, 2, DriftModel::constant(1.0), p);
  EXPECT_EQ(a.threshold, b.threshold);
  EXPECT_EQ(a.gamma_achieved, b.gamma_achieved);
}
