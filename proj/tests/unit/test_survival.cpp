#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "qdetect/errors.hpp"
#include "qdetect/pde_verifier.hpp"

using namespace qdetect;

TEST(Survival, TailRateMatchesExponentialLaw) {
  const auto curve = survival_1d(0.2, -1, {});
  const double expected = 5.0 * std::exp(-5.0);
  EXPECT_NEAR(curve.tail_rate / expected, 1.0, 0.1);
}

TEST(Survival, DriftTowardAbsorbingWallIsStepLike) {
  const double eps = 0.1;
  const double spread = 2.0 * std::sqrt(eps);
  const std::vector<double> t{0.1, 1.0 - spread, 1.0, 1.0 + spread, 2.5};
  const auto curve = survival_1d(eps, +1, t);
  ASSERT_EQ(curve.g.size(), t.size());
  EXPECT_GT(curve.g[0], 0.999);
  EXPECT_GT(curve.g[1], 0.9);
  EXPECT_LT(curve.g[3], 0.1);
  EXPECT_LT(curve.g[4], 1e-2);
  for (std::size_t i = 1; i < t.size(); ++i) EXPECT_LE(curve.g[i], curve.g[i - 1]);
  EXPECT_NEAR(curve.integral / 0.9, 1.0, 0.05);
}

TEST(Survival, IntegralOfSingleCurveMatchesOneDimensionalExitEnergy) {
  // Mean exit energy of eps*u'' - u' = -1, u'(0) = 0, u(1) = 0:
  // u(0) = eps (e^{1/eps} - 1) - 1.
  const double eps = 0.25;
  const auto curve = survival_1d(eps, -1, {});
  const double exact = eps * std::expm1(1.0 / eps) - 1.0;
  EXPECT_NEAR(curve.integral / exact, 1.0, 1e-3);
}

TEST(Survival, FitTailRateRecoversExponential) {
  std::vector<double> t, g;
  for (int i = 0; i < 200; ++i) {
    t.push_back(0.5 * i);
    g.push_back(std::exp(-0.3 * 0.5 * i));
  }
  EXPECT_NEAR(fit_tail_rate(t, g), 0.3, 1e-12);
  EXPECT_TRUE(std::isnan(fit_tail_rate(std::vector<double>{1.0}, std::vector<double>{0.4})));
}

TEST(Survival, RejectsBadArguments) {
  EXPECT_THROW(survival_1d(0.0, -1, {}), InvalidArgument);
  EXPECT_THROW(survival_1d(0.2, 0, {}), InvalidArgument);
  const std::vector<double> unsorted{1.0, 0.5};
  EXPECT_THROW(survival_1d(0.2, -1, unsorted), InvalidArgument);
}

TEST(ProductCheck, AgreesWithCornerValues) {
  for (double eps : {0.2, 0.15}) {
    const auto r = product_check(eps);
    EXPECT_LT(std::abs(r.t_rel_err), 0.05) << eps;
    EXPECT_LT(std::abs(r.s_rel_err), 0.05) << eps;
    EXPECT_TRUE(r.asymptotic_regime);
  }
}

TEST(ProductCheck, CoarseEpsilonIsFlagged) {
  const auto r = product_check(0.5);
  EXPECT_FALSE(r.asymptotic_regime);
  EXPECT_GT(r.t_corner, 0.0);
  EXPECT_GT(r.s_corner, 0.0);
}
