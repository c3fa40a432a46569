#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "qdetect/drift_model.hpp"
#include "qdetect/errors.hpp"
#include "qdetect/montecarlo.hpp"

namespace qdetect {

enum class CalibrationMethod { ExactOneSensor, AsymptoticN, MonteCarloRootFind };

std::string to_string(CalibrationMethod method);

struct CalibrationResult {
  double threshold = 0.0;
  double gamma_target = 0.0;
  double gamma_achieved = 0.0;
  /// Standard error of gamma_achieved (Monte Carlo only).
  double gamma_se = 0.0;
  /// Standard error of the threshold propagated through the slope of the false-alarm curve.
  double threshold_se = 0.0;
  CalibrationMethod method = CalibrationMethod::ExactOneSensor;
  std::size_t n_sensors = 1;
  std::size_t replications = 0;
  std::size_t censored = 0;
};

/// Mean false-alarm energy of the one-sensor CUSUM: f(nu) = e^nu - nu - 1. Its value at -nu is
/// the worst-case mean detection energy.
double f_cusum(double nu);

/// Unique positive root of f(nu) = gamma, to |f(nu) - gamma| <= 1e-10 * max(1, gamma).
CalibrationResult solve_nu(double gamma);

/// log(gamma) + log(n_sensors).
double asymptotic_h(double gamma, std::size_t n_sensors);

struct McCalibrationParams {
  std::size_t replications = 4000;
  /// Replication budget; exceeding it without meeting the SE target raises BudgetExceededError.
  std::size_t max_replications = 64000;
  /// Target for gamma_se / gamma at the root.
  double relative_se_target = 0.02;
  /// Replications of the pilot pass over the full bracket (0 = replications / 8, at least 200).
  std::size_t pilot_replications = 0;
  double dt = 0.02;
  HorizonPolicy horizon{};
  std::uint64_t seed = 1;
  unsigned threads = 0;
  std::size_t levels = 121;
  /// Half-width of the initial bracket around the asymptotic threshold.
  double bracket_half_width = 2.0;
  Monitoring monitoring = Monitoring::BrownianBridge;
};

/// Budget exhaustion during MC calibration; carries the best result obtained so far.
class BudgetExceededError : public BudgetExceeded {
 public:
  BudgetExceededError(const std::string& what, CalibrationResult partial)
      : BudgetExceeded(what), partial_(partial) {}
  const CalibrationResult& partial() const noexcept { return partial_; }

 private:
  CalibrationResult partial_;
};

/// Finds h with mean false-alarm energy (all sensors unchanged) equal to gamma.
///
/// A pilot pass brackets the root around asymptotic_h(gamma, N); the main pass resolves a narrow
/// bracket. Both passes record, for every path, the energy at the first crossing of each level on
/// a grid, so the estimated curve is monotone in h and the root of its linear interpolant is
/// found deterministically.
CalibrationResult calibrate_h_mc(double gamma, std::size_t n_sensors, const DriftModel& model,
                                 const McCalibrationParams& params);

}  // namespace qdetect
