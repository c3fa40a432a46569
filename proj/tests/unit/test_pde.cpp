#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "qdetect/errors.hpp"
#include "qdetect/pde_verifier.hpp"

using namespace qdetect;

namespace {

double half_asymptote(double eps) { return 0.5 * eps * std::exp(1.0 / eps); }

}  // namespace

TEST(SolveT, CornerNearAsymptoteAtEpsilonOneFifth) {
  const auto sol = solve_T({0.2, 256});
  const double ratio = sol.corner_value / half_asymptote(0.2);
  EXPECT_GE(ratio, 0.8);
  EXPECT_LE(ratio, 1.2);
  EXPECT_EQ(sol.problem, ExitProblem::MeanExitNoChange);
  EXPECT_LT(sol.residual_norm, 1e-8 * 256.0 * 256.0);
}

TEST(SolveT, RelativeErrorShrinksAsEpsilonDecreases) {
  double previous = INFINITY;
  for (double eps : {0.25, 0.2, 0.15, 0.125}) {
    const auto sol = solve_T(Grid2D::resolved(eps));
    const double err = std::abs(sol.corner_value / half_asymptote(eps) - 1.0);
    EXPECT_LT(err, previous) << "eps=" << eps;
    previous = err;
  }
  EXPECT_LE(previous, 0.2);
}

TEST(SolveT, RichardsonDifferencesShrink) {
  const double c128 = solve_T({0.25, 128}).corner_value;
  const double c256 = solve_T({0.25, 256}).corner_value;
  const double c512 = solve_T({0.25, 512}).corner_value;
  EXPECT_GE(std::abs(c256 - c128) / std::abs(c512 - c256), 1.8);
}

TEST(SolveT, FieldSatisfiesMaximumPrincipleAndMonotonicity) {
  const auto sol = solve_T({0.2, 64});
  EXPECT_TRUE(satisfies_maximum_principle(sol));
  EXPECT_TRUE(is_monotone_toward_absorbing(sol));
  // Mirrored ghost nodes make the one-sided normal difference second order small at the wall.
  const std::size_t n = sol.grid.n_cells;
  for (std::size_t j = 0; j < n; j += 8) {
    EXPECT_LT(std::abs(sol.at(1, j) - sol.at(0, j)), 1e-2 * sol.at(0, j));
  }
  EXPECT_EQ(sol.at(n, 3), 0.0);
  EXPECT_EQ(sol.at(3, n), 0.0);
}

TEST(SolveT, FlippedDriftExitsMuchFaster) {
  const auto toward = solve_exit_energy({0.2, 128}, 1.0, 1.0);
  const auto away = solve_T({0.2, 128});
  EXPECT_LT(toward.corner_value, 0.05 * away.corner_value);
  EXPECT_TRUE(satisfies_maximum_principle(toward));
}

TEST(SolveS, CornerNearOneMinusEpsilon) {
  const auto s = solve_S({0.1, 512});
  EXPECT_GE(s.corner_value, 0.85);
  EXPECT_LE(s.corner_value, 0.95);
  double previous = INFINITY;
  for (double eps : {0.25, 0.2, 0.15, 0.1}) {
    const double gap = std::abs(solve_S(Grid2D::resolved(eps)).corner_value - asymptote_S(eps));
    EXPECT_LT(gap, previous) << "eps=" << eps;
    previous = gap;
  }
}

TEST(SolveExitEnergy, UpwindIsAlsoAnMMatrixButLessAccurate) {
  PdeOptions upwind;
  upwind.scheme = AdvectionScheme::Upwind;
  const auto u = solve_T({0.2, 128}, upwind);
  const auto f = solve_T({0.2, 128});
  EXPECT_TRUE(satisfies_maximum_principle(u));
  EXPECT_GT(std::abs(u.corner_value / half_asymptote(0.2) - 1.0), std::abs(f.corner_value / half_asymptote(0.2) - 1.0));
}

TEST(SolveExitEnergy, IterativeAndDirectSolversAgree) {
  PdeOptions iterative;
  iterative.direct_limit = 0;
  const double a = solve_T({0.25, 96}, iterative).corner_value;
  const double b = solve_T({0.25, 96}).corner_value;
  EXPECT_NEAR(a, b, 1e-8 * b);
}

TEST(Grid2D, ValidationAndResolution) {
  EXPECT_THROW(solve_T({0.2, 16}), InvalidArgument);
  EXPECT_THROW(solve_T({0.1, 40}), InvalidArgument);
  EXPECT_THROW(solve_T({1.5, 256}), InvalidArgument);
  EXPECT_THROW(solve_T({0.0, 256}), InvalidArgument);
  EXPECT_EQ(Grid2D::resolved(0.25).n_cells, 256u);
  EXPECT_EQ(Grid2D::resolved(0.01).n_cells, 800u);
  EXPECT_LE(Grid2D::resolved(0.125).spacing(), 0.125 / 8.0);
}

TEST(Asymptotes, ClosedForms) {
  EXPECT_NEAR(asymptote_T(0.2, 2), 0.1 * std::exp(5.0), 1e-12);
  EXPECT_NEAR(asymptote_T(0.2, 2), 14.841, 1e-3);
  for (double eps : {0.1, 0.3}) EXPECT_DOUBLE_EQ(asymptote_T(eps, 1), 2.0 * asymptote_T(eps, 2));
  EXPECT_DOUBLE_EQ(asymptote_S(0.1), 0.9);
  const double eps = epsilon_for_gamma(1000.0, 2);
  EXPECT_NEAR(1.0 / eps, std::log(2000.0), 1e-12);
  EXPECT_NEAR(1.0 / eps, 7.601, 1e-3);
  EXPECT_NEAR(asymptote_T(eps, 2) / eps, 1000.0, 1e-9);
}

TEST(SweepCsv, HeaderAndRow) {
  std::ostringstream out;
  write_sweep_header(out);
  write_sweep_row(out, {"T", 0.25, 256, 6.5, 6.8, -0.04});
  EXPECT_EQ(out.str(), "problem,epsilon,n_cells,corner,asymptote,rel_err\r\nT,0.25,256,6.5,6.7999999999999998,-0.040000000000000001\r\n");
}

TEST(FieldCsv, LongFormat) {
  const auto sol = solve_T({0.5, 32});
  std::ostringstream out;
  write_field_csv(out, sol);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "x,y,value\r");
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 33u * 33u);
}
