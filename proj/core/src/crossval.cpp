#include "qdetect/crossval.hpp"

#include <algorithm>
#include <cmath>

#include "qdetect/errors.hpp"

namespace qdetect {

bool agrees_within(double value, double reference, double se, double rel_tol, double se_multiple) {
  return std::abs(value - reference) <= std::max(se_multiple * se, rel_tol * std::abs(reference));
}

std::vector<CrossValRow> cross_validate(const CrossValParams& params) {
  if (params.thresholds.empty()) throw InvalidArgument("no thresholds to cross-validate");
  std::vector<double> levels = params.thresholds;
  std::sort(levels.begin(), levels.end());
  if (!(levels.front() > 1.0)) throw InvalidArgument("thresholds must exceed 1 (eps = 1/h < 1)");

  Scenario scenario = false_alarm_scenario(2, levels.back());
  scenario.id = "crossval";
  scenario.dt = params.dt;
  scenario.horizon = params.horizon;
  scenario.replications = params.replications;
  scenario.seed = params.seed;
  scenario.threads = params.threads;
  scenario.monitoring = params.monitoring;
  const EnergyCurve curve = energy_curve(scenario, levels, CurveCriterion::FalseAlarm);

  std::vector<CrossValRow> rows;
  for (double h : params.thresholds) {
    CrossValRow row;
    row.threshold = h;
    row.epsilon = 1.0 / h;
    const Grid2D grid = Grid2D::resolved(row.epsilon);
    row.n_cells = grid.n_cells;
    row.mc_gamma = curve.value_at(h);
    row.mc_se = curve.se_at(h);
    row.fd_gamma = solve_T(grid, params.pde).corner_value / row.epsilon;
    row.asymptote = asymptote_T(row.epsilon, 2) / row.epsilon;
    row.mc_fd = agrees_within(row.mc_gamma, row.fd_gamma, row.mc_se, params.rel_tol, params.se_multiple);
    row.mc_asymptote = agrees_within(row.mc_gamma, row.asymptote, row.mc_se, params.rel_tol, params.se_multiple);
    row.fd_asymptote = agrees_within(row.fd_gamma, row.asymptote, 0.0, params.rel_tol, params.se_multiple);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace qdetect
