#pragma once

#include <cstddef>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace qdetect {

/// Which mean exit-energy problem a solution belongs to, in the rescaled unit square with
/// reflecting walls at x = 0, y = 0 and absorbing walls at x = 1, y = 1.
///   MeanExitNoChange:   eps*(T_xx + T_yy) - T_x - T_y = -1
///   MeanExitOneChanged: eps*(S_xx + S_yy) + S_x - S_y = -1
enum class ExitProblem { MeanExitNoChange, MeanExitOneChanged, Custom };

std::string to_string(ExitProblem problem);

/// Discretization of the advection terms.
///
/// ExponentialFitted replaces eps by (|b| d / 2) coth(|b| d / (2 eps)) under centered advection:
/// the matrix is an M-matrix for every cell Peclet number and the scheme reproduces the 1-D
/// homogeneous solutions exactly. Upwind is first order and adds d/2 of numerical diffusion,
/// which distorts e^{1/eps}-sized solutions badly; it is kept for comparison.
enum class AdvectionScheme { ExponentialFitted, Centered, Upwind };

std::string to_string(AdvectionScheme scheme);
AdvectionScheme parse_scheme(const std::string& text);

struct Grid2D {
  double epsilon = 0.2;
  std::size_t n_cells = 256;

  double spacing() const noexcept { return 1.0 / static_cast<double>(n_cells); }
  /// Requires 0 < epsilon < 1, n_cells >= 32 and spacing <= epsilon / 5.
  void validate() const;

  /// Smallest grid with at least `min_cells` cells and spacing <= epsilon / cells_per_epsilon.
  static Grid2D resolved(double epsilon, std::size_t min_cells = 256, double cells_per_epsilon = 8.0);
};

struct PdeOptions {
  AdvectionScheme scheme = AdvectionScheme::ExponentialFitted;
  /// Sparse LU up to this many cells per axis, BiCGSTAB with ILUT above.
  std::size_t direct_limit = 512;
  double iterative_tolerance = 1e-13;
};

struct PdeSolution {
  ExitProblem problem = ExitProblem::Custom;
  Grid2D grid;
  double drift_x = 0.0;
  double drift_y = 0.0;
  /// Nodal values on (n+1) x (n+1) nodes, field[j * (n+1) + i] at (x_i, y_j); zero on x=1, y=1.
  std::vector<double> field;
  double corner_value = 0.0;
  /// Infinity norm of the residual of the assembled linear system.
  double residual_norm = 0.0;

  double at(std::size_t i, std::size_t j) const { return field[j * (grid.n_cells + 1) + i]; }
};

/// Solves eps*(u_xx + u_yy) + drift_x*u_x + drift_y*u_y = -1 with homogeneous Neumann conditions
/// on x = 0, y = 0 (ghost nodes mirrored across the wall) and homogeneous Dirichlet conditions
/// on x = 1, y = 1.
PdeSolution solve_exit_energy(const Grid2D& grid, double drift_x, double drift_y,
                              const PdeOptions& options = {});

/// Mean exit energy with no sensor changed (drifts -1, -1).
PdeSolution solve_T(const Grid2D& grid, const PdeOptions& options = {});
/// Mean exit energy with sensor 1 changed (drifts +1, -1).
PdeSolution solve_S(const Grid2D& grid, const PdeOptions& options = {});

/// (1/N) * eps * e^{1/eps}.
double asymptote_T(double epsilon, std::size_t n_sensors);
/// 1 - eps.
double asymptote_S(double epsilon);
/// eps with asymptote_T(eps, N) / eps = gamma, i.e. 1/eps = log(gamma) + log(N).
double epsilon_for_gamma(double gamma, std::size_t n_sensors);

/// Nodal values >= 0 everywhere and > 0 off the Dirichlet walls.
bool satisfies_maximum_principle(const PdeSolution& solution);
/// Values non-increasing along +x and +y at every node.
bool is_monotone_toward_absorbing(const PdeSolution& solution);

struct SweepRow {
  std::string problem;
  double epsilon = 0.0;
  std::size_t n_cells = 0;
  double corner = 0.0;
  double asymptote = 0.0;
  double rel_err = 0.0;
};

void write_sweep_header(std::ostream& out);
void write_sweep_row(std::ostream& out, const SweepRow& row);
/// Long-format field dump `x,y,value`.
void write_field_csv(std::ostream& out, const PdeSolution& solution);

// ---------------------------------------------------------------------------------------------
// One-dimensional survival problems.

struct SurvivalOptions {
  std::size_t n_cells = 400;
  /// Absolute local error tolerance per step (step doubling).
  double tolerance = 1e-8;
  AdvectionScheme scheme = AdvectionScheme::ExponentialFitted;
  double initial_step = 1e-7;
  /// Integration stops once the survival product falls below this value.
  double cutoff = 1e-13;
  std::size_t max_steps = 5'000'000;
};

/// G(0, t) for dG/dt = eps*G_xx + drift_sign*G_x on [0, 1], reflecting at 0, absorbing at 1,
/// G(x, 0) = 1.
struct SurvivalCurve {
  double epsilon = 0.0;
  int drift_sign = -1;
  std::vector<double> t;  ///< requested times
  std::vector<double> g;  ///< G(0, t) at the requested times
  std::vector<double> trace_t;
  std::vector<double> trace_g;
  /// Integral of G(0, t) over [0, inf), including an exponential tail beyond the cutoff.
  double integral = 0.0;
  /// Decay rate fitted on the tail of the trace.
  double tail_rate = 0.0;
};

SurvivalCurve survival_1d(double epsilon, int drift_sign, std::span<const double> t_grid,
                          const SurvivalOptions& options = {});

/// Least-squares decay rate of log g over the points with lower <= g <= upper.
double fit_tail_rate(std::span<const double> t, std::span<const double> g, double upper = 0.5,
                     double lower = 1e-8);

struct ProductIntegral {
  double value = 0.0;
  double tail_rate = 0.0;
  std::size_t steps = 0;
};

/// Integral over t of prod_k G_k(0, t) where G_k solves the survival problem with drift_signs[k].
/// With independent coordinates the survival function of the product domain factorizes, so this
/// equals the mean exit energy at the corner.
ProductIntegral survival_product_integral(double epsilon, std::span<const int> drift_signs,
                                          const SurvivalOptions& options = {});

struct ProductCheckReport {
  double epsilon = 0.0;
  std::size_t n_cells = 0;
  double t_product = 0.0;
  double t_corner = 0.0;
  double t_rel_err = 0.0;
  double s_product = 0.0;
  double s_corner = 0.0;
  double s_rel_err = 0.0;
  /// False for eps > 0.25, where the leading-order asymptotics are not expected to hold.
  bool asymptotic_regime = true;
};

/// Compares the factorized survival integrals with the 2-D corner values of T and S.
ProductCheckReport product_check(double epsilon, const PdeOptions& pde = {},
                                 const SurvivalOptions& survival = {});

}  // namespace qdetect
