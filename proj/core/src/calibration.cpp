#include "qdetect/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/tools/roots.hpp>

namespace qdetect {

std::string to_string(CalibrationMethod method) {
  switch (method) {
    case CalibrationMethod::ExactOneSensor: return "exact_one_sensor";
    case CalibrationMethod::AsymptoticN: return "asymptotic_n";
    case CalibrationMethod::MonteCarloRootFind: return "monte_carlo_root_find";
  }
  return "unknown";
}

double f_cusum(double nu) {
  if (!std::isfinite(nu)) throw InvalidArgument("f_cusum needs a finite argument");
  // e^nu - nu - 1 loses all digits near 0; the series is exact there to double precision.
  if (std::abs(nu) < 1e-3) {
    const double n2 = nu * nu;
    return n2 * (0.5 + nu * (1.0 / 6.0 + nu * (1.0 / 24.0 + nu * (1.0 / 120.0 + nu / 720.0))));
  }
  return std::expm1(nu) - nu;
}

CalibrationResult solve_nu(double gamma) {
  if (!std::isfinite(gamma) || gamma <= 0.0) throw InvalidArgument("gamma must be finite and > 0");
  // f is increasing on (0, inf); f(nu) >= nu^2/2 and f(nu) >= e^nu - nu - 1 bracket the root.
  const double hi = std::max(std::sqrt(2.0 * gamma), std::log1p(gamma) + 2.0) + 1.0;
  const double guess = gamma < 1.0 ? std::sqrt(2.0 * gamma) : std::log(gamma + std::log(gamma + 1.0) + 1.0);
  auto fn = [gamma](double nu) {
    return std::make_pair(f_cusum(nu) - gamma, std::expm1(nu));
  };
  std::uintmax_t iterations = 200;
  double nu = boost::math::tools::newton_raphson_iterate(fn, std::clamp(guess, 0.0, hi), 0.0, hi,
                                                        std::numeric_limits<double>::digits - 2,
                                                        iterations);
  CalibrationResult r;
  r.threshold = nu;
  r.gamma_target = gamma;
  r.gamma_achieved = f_cusum(nu);
  r.method = CalibrationMethod::ExactOneSensor;
  r.n_sensors = 1;
  if (std::abs(r.gamma_achieved - gamma) > 1e-10 * std::max(1.0, gamma)) {
    throw SolverError("solve_nu did not converge for gamma = " + std::to_string(gamma));
  }
  return r;
}

double asymptotic_h(double gamma, std::size_t n_sensors) {
  if (!(gamma > 0.0)) throw InvalidArgument("gamma must be > 0");
  if (n_sensors == 0) throw InvalidArgument("n_sensors must be >= 1");
  return std::log(gamma) + std::log(static_cast<double>(n_sensors));
}

namespace {

Scenario calibration_scenario(std::size_t n_sensors, const DriftModel& model,
                              const McCalibrationParams& params, std::uint64_t seed) {
  Scenario s = false_alarm_scenario(n_sensors, 1.0);
  s.id = "calibration";
  s.model = model;
  s.dt = params.dt;
  s.horizon = params.horizon;
  s.seed = seed;
  s.threads = params.threads;
  s.monitoring = params.monitoring;
  s.replications = 2;
  return s;
}

CalibrationResult from_curve(const EnergyCurve& curve, double gamma, std::size_t n_sensors) {
  CalibrationResult r;
  r.method = CalibrationMethod::MonteCarloRootFind;
  r.gamma_target = gamma;
  r.n_sensors = n_sensors;
  r.replications = curve.replications;
  r.censored = curve.censored;
  r.threshold = curve.level_for(gamma);
  if (std::isnan(r.threshold)) return r;
  r.gamma_achieved = curve.value_at(r.threshold);
  r.gamma_se = curve.se_at(r.threshold);
  const double spacing = curve.levels[1] - curve.levels[0];
  const double slope = curve.slope_at(r.threshold, std::max(0.05, 2.0 * spacing));
  r.threshold_se = slope > 0.0 ? r.gamma_se / slope : std::numeric_limits<double>::infinity();
  return r;
}

}  // namespace

CalibrationResult calibrate_h_mc(double gamma, std::size_t n_sensors, const DriftModel& model,
                                 const McCalibrationParams& params) {
  if (!std::isfinite(gamma) || gamma <= 0.0) throw InvalidArgument("gamma must be finite and > 0");
  if (params.replications < 2 || params.max_replications < params.replications) {
    throw InvalidArgument("bad replication budget");
  }
  if (params.levels < 3) throw InvalidArgument("need at least 3 calibration levels");

  // Pilot pass over the full bracket; shift the bracket while the target lies outside it.
  const std::size_t pilot_reps =
      params.pilot_replications ? params.pilot_replications : std::max<std::size_t>(200, params.replications / 8);
  double center = std::max(asymptotic_h(std::max(gamma, 1.0 + 1e-9), n_sensors), 0.5);
  double lo = std::max(center - params.bracket_half_width, 0.02);
  double hi = center + params.bracket_half_width;
  CalibrationResult pilot;
  for (int attempt = 0;; ++attempt) {
    EnergyCurveSampler sampler(calibration_scenario(n_sensors, model, params, mix64(params.seed ^ 0x9170)),
                               level_grid(lo, hi, params.levels), CurveCriterion::FalseAlarm);
    sampler.add(pilot_reps);
    const auto curve = sampler.curve();
    pilot = from_curve(curve, gamma, n_sensors);
    if (!std::isnan(pilot.threshold)) break;
    if (attempt == 4) {
      throw BudgetExceededError("gamma " + std::to_string(gamma) + " not bracketed by the pilot pass", pilot);
    }
    const double width = hi - lo;
    if (gamma < curve.mean.front()) {
      hi = lo + 0.25 * width;
      lo = std::max(lo - width, 0.02);
    } else {
      lo = hi - 0.25 * width;
      hi = hi + width;
    }
  }

  // Main pass on a narrow bracket, adding replications until the SE target is met.
  const double half = std::max(0.3, 5.0 * pilot.threshold_se);
  lo = std::max(pilot.threshold - half, 0.02);
  hi = pilot.threshold + half;
  EnergyCurveSampler sampler(calibration_scenario(n_sensors, model, params, params.seed),
                             level_grid(lo, hi, params.levels), CurveCriterion::FalseAlarm);
  std::size_t batch = params.replications;
  CalibrationResult result;
  for (;;) {
    sampler.add(batch);
    result = from_curve(sampler.curve(), gamma, n_sensors);
    if (std::isnan(result.threshold)) {
      result.threshold = pilot.threshold;
      throw BudgetExceededError("main pass lost the bracket; pilot threshold returned", result);
    }
    if (result.gamma_se <= params.relative_se_target * gamma) return result;
    const std::size_t used = sampler.replications();
    if (used >= params.max_replications) {
      throw BudgetExceededError("replication budget exhausted before the SE target was met", result);
    }
    batch = std::min(used, params.max_replications - used);
  }
}

}  // namespace qdetect
