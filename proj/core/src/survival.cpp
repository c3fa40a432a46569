#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "fd_stencil.hpp"
#include "qdetect/errors.hpp"
#include "qdetect/pde_verifier.hpp"

namespace qdetect {

namespace {

// TR-BDF2 stage parameter: both implicit stages share the coefficient gamma/2 * h, and the scheme
// is L-stable, which damps the jump between G(x,0)=1 and the absorbing wall.
const double kGamma = 2.0 - std::sqrt(2.0);

/// Semi-discrete survival problem on nodes 0..n-1 (node n is the absorbing wall).
class SurvivalSystem {
 public:
  SurvivalSystem(double epsilon, int drift_sign, std::size_t n_cells, AdvectionScheme scheme)
      : n_(n_cells), s_(stencil_1d(epsilon, static_cast<double>(drift_sign), 1.0 / static_cast<double>(n_cells), scheme)),
        sup_(n_), rhs_(n_) {}

  std::size_t size() const noexcept { return n_; }

  /// out = g + c * A g
  void explicit_part(const std::vector<double>& g, double c, std::vector<double>& out) const {
    out.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      const double left = i == 0 ? g[1] : g[i - 1];
      const double right = i + 1 < n_ ? g[i + 1] : 0.0;
      out[i] = g[i] + c * (s_.lower * left - (s_.lower + s_.upper) * g[i] + s_.upper * right);
    }
  }

  /// Solves (I - c A) x = b by the Thomas algorithm (row 0 carries the mirrored neighbour).
  void implicit_solve(double c, const std::vector<double>& b, std::vector<double>& x) {
    const double d = 1.0 + c * (s_.lower + s_.upper);
    const double lo = -c * s_.lower;
    const double up = -c * s_.upper;
    x.resize(n_);
    double denom = d;
    sup_[0] = -c * (s_.lower + s_.upper) / denom;
    rhs_[0] = b[0] / denom;
    for (std::size_t i = 1; i < n_; ++i) {
      denom = d - lo * sup_[i - 1];
      sup_[i] = up / denom;
      rhs_[i] = (b[i] - lo * rhs_[i - 1]) / denom;
    }
    x[n_ - 1] = rhs_[n_ - 1];
    for (std::size_t i = n_ - 1; i-- > 0;) x[i] = rhs_[i] - sup_[i] * x[i + 1];
  }

  void tr_bdf2(const std::vector<double>& g, double h, std::vector<double>& out) {
    const double c1 = 0.5 * kGamma * h;
    explicit_part(g, c1, work_);
    implicit_solve(c1, work_, stage_);
    const double w1 = 1.0 / (kGamma * (2.0 - kGamma));
    const double w0 = (1.0 - kGamma) * (1.0 - kGamma) / (kGamma * (2.0 - kGamma));
    for (std::size_t i = 0; i < n_; ++i) work_[i] = w1 * stage_[i] - w0 * g[i];
    implicit_solve((1.0 - kGamma) / (2.0 - kGamma) * h, work_, out);
  }

 private:
  std::size_t n_;
  Stencil1D s_;
  std::vector<double> sup_, rhs_, work_, stage_;
};

struct Integration {
  std::vector<double> trace_t;
  std::vector<double> trace_p;
  std::vector<double> grid_p;
  double integral = 0.0;
  std::size_t steps = 0;
};

/// Integrates every system from G = 1, accumulating the integral of prod_k G_k(0, t) with Simpson's
/// rule on each accepted step (midpoint from the two half steps). Stops after the last requested
/// time once the product is below the cutoff.
Integration integrate_product(double epsilon, std::span<const int> signs, std::span<const double> t_grid,
                              const SurvivalOptions& options) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw InvalidArgument("epsilon must lie in (0, 1)");
  if (signs.empty()) throw InvalidArgument("need at least one survival problem");
  for (int s : signs) {
    if (s != 1 && s != -1) throw InvalidArgument("drift_sign must be -1 or +1");
  }
  if (options.n_cells < 8) throw InvalidArgument("survival grid needs at least 8 cells");
  if (!(options.tolerance > 0.0)) throw InvalidArgument("tolerance must be > 0");
  if (!std::is_sorted(t_grid.begin(), t_grid.end()) || (!t_grid.empty() && t_grid.front() < 0.0)) {
    throw InvalidArgument("t_grid must be non-negative and sorted");
  }

  const std::size_t k = signs.size();
  std::vector<SurvivalSystem> systems;
  for (int s : signs) systems.emplace_back(epsilon, s, options.n_cells, options.scheme);
  std::vector<std::vector<double>> g(k, std::vector<double>(options.n_cells, 1.0));
  std::vector<std::vector<double>> full(k), half(k), twice(k);

  Integration out;
  std::size_t next = 0;
  while (next < t_grid.size() && t_grid[next] <= 0.0) {
    out.grid_p.push_back(1.0);
    ++next;
  }
  double t = 0.0;
  double p = 1.0;
  double h = options.initial_step;
  out.trace_t.push_back(0.0);
  out.trace_p.push_back(1.0);

  while (true) {
    if (out.steps >= options.max_steps) {
      std::ostringstream os;
      os << "survival integration exceeded " << options.max_steps << " steps at t=" << t;
      throw SolverError(os.str());
    }
    double h_try = h;
    bool hits_grid = false;
    if (next < t_grid.size() && t + h_try >= t_grid[next]) {
      h_try = t_grid[next] - t;
      hits_grid = true;
    }
    double err = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      systems[j].tr_bdf2(g[j], h_try, full[j]);
      systems[j].tr_bdf2(g[j], 0.5 * h_try, half[j]);
      systems[j].tr_bdf2(half[j], 0.5 * h_try, twice[j]);
      for (std::size_t i = 0; i < options.n_cells; ++i) {
        err = std::max(err, std::abs(twice[j][i] - full[j][i]) / 3.0);
      }
    }
    if (!std::isfinite(err)) throw SolverError("survival integration produced non-finite values");
    const double factor = err > 0.0 ? 0.9 * std::cbrt(options.tolerance / err) : 4.0;
    if (err <= options.tolerance) {
      double p_mid = 1.0, p_end = 1.0;
      for (std::size_t j = 0; j < k; ++j) {
        p_mid *= half[j][0];
        p_end *= twice[j][0];
      }
      out.integral += h_try / 6.0 * (p + 4.0 * p_mid + p_end);
      t = hits_grid ? t_grid[next] : t + h_try;
      p = p_end;
      std::swap(g, twice);
      ++out.steps;
      out.trace_t.push_back(t);
      out.trace_p.push_back(p);
      if (hits_grid) {
        while (next < t_grid.size() && t_grid[next] <= t) {
          out.grid_p.push_back(p);
          ++next;
        }
      } else {
        h = h_try * std::clamp(factor, 0.2, 4.0);
      }
      if (next == t_grid.size() && std::abs(p) < options.cutoff) break;
    } else {
      h = h_try * std::clamp(factor, 0.2, 0.9);
      if (h < 1e-14 * std::max(1.0, t)) {
        std::ostringstream os;
        os << "survival step size underflow at t=" << t << " (eps=" << epsilon << ")";
        throw SolverError(os.str());
      }
    }
  }

  // Exponential tail beyond the cutoff, with the rate from the last two accepted points.
  const std::size_t m = out.trace_t.size();
  if (m >= 2 && out.trace_p[m - 1] > 0.0 && out.trace_p[m - 2] > out.trace_p[m - 1]) {
    const double rate = std::log(out.trace_p[m - 2] / out.trace_p[m - 1]) / (out.trace_t[m - 1] - out.trace_t[m - 2]);
    if (rate > 0.0) out.integral += out.trace_p[m - 1] / rate;
  }
  return out;
}

}  // namespace

double fit_tail_rate(std::span<const double> t, std::span<const double> g, double upper, double lower) {
  if (t.size() != g.size()) throw InvalidArgument("t and g differ in length");
  double n = 0.0, st = 0.0, sl = 0.0, stt = 0.0, stl = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!(g[i] >= lower && g[i] <= upper)) continue;
    const double l = std::log(g[i]);
    n += 1.0;
    st += t[i];
    sl += l;
    stt += t[i] * t[i];
    stl += t[i] * l;
  }
  const double denom = n * stt - st * st;
  if (n < 2.0 || !(denom > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  return -(n * stl - st * sl) / denom;
}

SurvivalCurve survival_1d(double epsilon, int drift_sign, std::span<const double> t_grid,
                          const SurvivalOptions& options) {
  const int signs[] = {drift_sign};
  auto run = integrate_product(epsilon, signs, t_grid, options);
  SurvivalCurve curve;
  curve.epsilon = epsilon;
  curve.drift_sign = drift_sign;
  curve.t.assign(t_grid.begin(), t_grid.end());
  curve.g = std::move(run.grid_p);
  curve.integral = run.integral;
  curve.tail_rate = fit_tail_rate(run.trace_t, run.trace_p);
  curve.trace_t = std::move(run.trace_t);
  curve.trace_g = std::move(run.trace_p);
  return curve;
}

ProductIntegral survival_product_integral(double epsilon, std::span<const int> drift_signs,
                                          const SurvivalOptions& options) {
  auto run = integrate_product(epsilon, drift_signs, {}, options);
  return {run.integral, fit_tail_rate(run.trace_t, run.trace_p), run.steps};
}

ProductCheckReport product_check(double epsilon, const PdeOptions& pde, const SurvivalOptions& survival) {
  const Grid2D grid = Grid2D::resolved(epsilon);
  ProductCheckReport report;
  report.epsilon = epsilon;
  report.n_cells = grid.n_cells;
  report.asymptotic_regime = epsilon <= 0.25;

  SurvivalOptions one_d = survival;
  one_d.n_cells = std::max(survival.n_cells, grid.n_cells);
  const int t_signs[] = {-1, -1};
  const int s_signs[] = {+1, -1};
  report.t_product = survival_product_integral(epsilon, t_signs, one_d).value;
  report.s_product = survival_product_integral(epsilon, s_signs, one_d).value;
  report.t_corner = solve_T(grid, pde).corner_value;
  report.s_corner = solve_S(grid, pde).corner_value;
  report.t_rel_err = (report.t_product - report.t_corner) / report.t_corner;
  report.s_rel_err = (report.s_product - report.s_corner) / report.s_corner;
  return report;
}

}  // namespace qdetect
