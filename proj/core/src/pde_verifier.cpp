#include "qdetect/pde_verifier.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "qdetect/csv.hpp"
#include "qdetect/errors.hpp"
#include "fd_stencil.hpp"

namespace qdetect {

std::string to_string(ExitProblem problem) {
  switch (problem) {
    case ExitProblem::MeanExitNoChange: return "T";
    case ExitProblem::MeanExitOneChanged: return "S";
    case ExitProblem::Custom: return "custom";
  }
  return "custom";
}

std::string to_string(AdvectionScheme scheme) {
  switch (scheme) {
    case AdvectionScheme::ExponentialFitted: return "fitted";
    case AdvectionScheme::Centered: return "centered";
    case AdvectionScheme::Upwind: return "upwind";
  }
  return "fitted";
}

AdvectionScheme parse_scheme(const std::string& text) {
  if (text == "fitted" || text == "exponential") return AdvectionScheme::ExponentialFitted;
  if (text == "centered" || text == "central") return AdvectionScheme::Centered;
  if (text == "upwind") return AdvectionScheme::Upwind;
  throw InvalidArgument("unknown advection scheme '" + text + "'");
}

void Grid2D::validate() const {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw InvalidArgument("epsilon must lie in (0, 1)");
  if (n_cells < 32) throw InvalidArgument("n_cells must be >= 32");
  if (spacing() > epsilon / 5.0 * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "grid spacing " << spacing() << " does not resolve the boundary layer (need <= eps/5 = "
       << epsilon / 5.0 << ")";
    throw InvalidArgument(os.str());
  }
}

Grid2D Grid2D::resolved(double epsilon, std::size_t min_cells, double cells_per_epsilon) {
  const auto needed = static_cast<std::size_t>(std::ceil(cells_per_epsilon / epsilon - 1e-9));
  return Grid2D{epsilon, std::max<std::size_t>({min_cells, needed, 32})};
}

PdeSolution solve_exit_energy(const Grid2D& grid, double drift_x, double drift_y,
                              const PdeOptions& options) {
  grid.validate();
  const std::size_t n = grid.n_cells;
  const double d = grid.spacing();
  const auto sx = stencil_1d(grid.epsilon, drift_x, d, options.scheme);
  const auto sy = stencil_1d(grid.epsilon, drift_y, d, options.scheme);

  // Unknowns are nodes with i, j < n; nodes on x = 1 or y = 1 are zero. Rows hold the negated
  // operator so the matrix is an M-matrix with right-hand side +1.
  const auto unknowns = static_cast<Eigen::Index>(n * n);
  auto index = [n](std::size_t i, std::size_t j) { return static_cast<Eigen::Index>(j * n + i); };
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(unknowns) * 5);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = index(i, j);
      triplets.emplace_back(row, row, sx.lower + sx.upper + sy.lower + sy.upper);
      if (i == 0) {
        triplets.emplace_back(row, index(1, j), -(sx.lower + sx.upper));
      } else {
        triplets.emplace_back(row, index(i - 1, j), -sx.lower);
        if (i + 1 < n) triplets.emplace_back(row, index(i + 1, j), -sx.upper);
      }
      if (j == 0) {
        triplets.emplace_back(row, index(i, 1), -(sy.lower + sy.upper));
      } else {
        triplets.emplace_back(row, index(i, j - 1), -sy.lower);
        if (j + 1 < n) triplets.emplace_back(row, index(i, j + 1), -sy.upper);
      }
    }
  }
  Eigen::SparseMatrix<double> a(unknowns, unknowns);
  a.setFromTriplets(triplets.begin(), triplets.end());
  a.makeCompressed();
  const Eigen::VectorXd rhs = Eigen::VectorXd::Ones(unknowns);

  auto fail = [&](const std::string& why) {
    std::ostringstream os;
    os << why << " (eps=" << grid.epsilon << ", n_cells=" << n << ", scheme=" << to_string(options.scheme)
       << ", cell Peclet=" << d / (2.0 * grid.epsilon) << ")";
    throw SolverError(os.str());
  };

  Eigen::VectorXd x;
  if (n <= options.direct_limit) {
    Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
    lu.compute(a);
    if (lu.info() != Eigen::Success) fail("sparse LU factorization failed: " + lu.lastErrorMessage());
    x = lu.solve(rhs);
    if (lu.info() != Eigen::Success) fail("sparse LU solve failed");
  } else {
    Eigen::BiCGSTAB<Eigen::SparseMatrix<double>, Eigen::IncompleteLUT<double>> solver;
    solver.setTolerance(options.iterative_tolerance);
    solver.setMaxIterations(20000);
    solver.compute(a);
    if (solver.info() != Eigen::Success) fail("ILUT preconditioner failed");
    x = solver.solve(rhs);
    if (solver.info() != Eigen::Success) fail("BiCGSTAB did not converge");
  }

  PdeSolution sol;
  sol.grid = grid;
  sol.drift_x = drift_x;
  sol.drift_y = drift_y;
  sol.residual_norm = (a * x - rhs).lpNorm<Eigen::Infinity>();
  if (!std::isfinite(sol.residual_norm) || sol.residual_norm > 1e-8 * static_cast<double>(n * n)) {
    fail("residual too large: " + format_real(sol.residual_norm));
  }
  sol.field.assign((n + 1) * (n + 1), 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) sol.field[j * (n + 1) + i] = x[index(i, j)];
  }
  sol.corner_value = sol.field[0];
  return sol;
}

PdeSolution solve_T(const Grid2D& grid, const PdeOptions& options) {
  auto sol = solve_exit_energy(grid, -1.0, -1.0, options);
  sol.problem = ExitProblem::MeanExitNoChange;
  return sol;
}

PdeSolution solve_S(const Grid2D& grid, const PdeOptions& options) {
  auto sol = solve_exit_energy(grid, 1.0, -1.0, options);
  sol.problem = ExitProblem::MeanExitOneChanged;
  return sol;
}

double asymptote_T(double epsilon, std::size_t n_sensors) {
  if (!(epsilon > 0.0) || n_sensors == 0) throw InvalidArgument("bad asymptote arguments");
  return epsilon * std::exp(1.0 / epsilon) / static_cast<double>(n_sensors);
}

double asymptote_S(double epsilon) {
  if (!(epsilon > 0.0)) throw InvalidArgument("epsilon must be > 0");
  return 1.0 - epsilon;
}

double epsilon_for_gamma(double gamma, std::size_t n_sensors) {
  if (!(gamma > 0.0) || n_sensors == 0) throw InvalidArgument("bad gamma or n_sensors");
  const double inv = std::log(gamma) + std::log(static_cast<double>(n_sensors));
  if (!(inv > 0.0)) throw InvalidArgument("gamma * N must exceed 1");
  return 1.0 / inv;
}

bool satisfies_maximum_principle(const PdeSolution& solution) {
  const std::size_t n = solution.grid.n_cells;
  for (std::size_t j = 0; j <= n; ++j) {
    for (std::size_t i = 0; i <= n; ++i) {
      const double v = solution.at(i, j);
      const bool dirichlet = i == n || j == n;
      if (dirichlet ? v != 0.0 : !(v > 0.0)) return false;
    }
  }
  return true;
}

bool is_monotone_toward_absorbing(const PdeSolution& solution) {
  const std::size_t n = solution.grid.n_cells;
  for (std::size_t j = 0; j <= n; ++j) {
    for (std::size_t i = 0; i <= n; ++i) {
      const double v = solution.at(i, j);
      if (i < n && solution.at(i + 1, j) > v) return false;
      if (j < n && solution.at(i, j + 1) > v) return false;
    }
  }
  return true;
}

void write_sweep_header(std::ostream& out) {
  write_csv_row(out, {"problem", "epsilon", "n_cells", "corner", "asymptote", "rel_err"});
}

void write_sweep_row(std::ostream& out, const SweepRow& row) {
  write_csv_row(out, {row.problem, format_real(row.epsilon), std::to_string(row.n_cells),
                      format_real(row.corner), format_real(row.asymptote), format_real(row.rel_err)});
}

void write_field_csv(std::ostream& out, const PdeSolution& solution) {
  const std::size_t n = solution.grid.n_cells;
  const double d = solution.grid.spacing();
  write_csv_row(out, {"x", "y", "value"});
  for (std::size_t j = 0; j <= n; ++j) {
    for (std::size_t i = 0; i <= n; ++i) {
      write_csv_row(out, {format_real(static_cast<double>(i) * d), format_real(static_cast<double>(j) * d),
                          format_real(solution.at(i, j))});
    }
  }
}

}  // namespace qdetect
