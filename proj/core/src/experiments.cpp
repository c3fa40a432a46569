#include "qdetect/experiments.hpp"

#include <cmath>

#include "qdetect/rng.hpp"

namespace qdetect {

std::vector<GapRow> theorem1_gap(std::span<const double> gammas, std::size_t n_sensors,
                                 const DriftModel& model, const GapParams& params) {
  std::vector<GapRow> rows;
  for (std::size_t g = 0; g < gammas.size(); ++g) {
    const double gamma = gammas[g];
    GapRow row;
    row.gamma = gamma;
    row.n_sensors = n_sensors;
    row.log_n = std::log(static_cast<double>(n_sensors));
    row.lemma_value = std::log(gamma) + row.log_n - 1.0;
    row.nu = solve_nu(gamma);
    row.lower_bound = f_cusum(-row.nu.threshold);

    McCalibrationParams cal = params.calibration;
    cal.seed = mix64(params.calibration.seed + 0x1000 * (g + 1) + n_sensors);
    cal.threads = params.threads;
    row.h = calibrate_h_mc(gamma, n_sensors, model, cal);

    // Delay at h and at h +/- 0.2 from the same paths.
    const double h = row.h.threshold;
    const double half = std::min(0.2, 0.5 * h);
    Scenario s = delay_scenario(n_sensors, 0, h);
    s.id = "gap-delay";
    s.model = model;
    s.dt = params.delay_dt;
    s.horizon = params.delay_horizon;
    s.replications = params.delay_replications;
    s.seed = mix64(params.seed + 0x2000 * (g + 1) + n_sensors);
    s.threads = params.threads;
    s.monitoring = params.monitoring;
    const auto curve = energy_curve(s, {h - half, h, h + half}, CurveCriterion::Delay);
    row.delay.mean = curve.mean[1];
    row.delay.std_error = curve.std_error[1];
    row.delay.replications_used = curve.counts[1];
    row.delay.censored_count = curve.censored;
    row.delay_slope = (curve.mean[2] - curve.mean[0]) / (2.0 * half);

    row.gap = row.delay.mean - row.lower_bound;
    const double from_h = row.delay_slope * row.h.threshold_se;
    row.gap_se = std::sqrt(row.delay.std_error * row.delay.std_error + from_h * from_h);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace qdetect
