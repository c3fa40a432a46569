#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "qdetect/calibration.hpp"
#include "qdetect/montecarlo.hpp"

namespace qdetect {

struct GapParams {
  McCalibrationParams calibration{};
  double delay_dt = 0.01;
  std::size_t delay_replications = 20000;
  HorizonPolicy delay_horizon{};
  std::uint64_t seed = 7;
  unsigned threads = 0;
  Monitoring monitoring = Monitoring::BrownianBridge;
};

/// One row of the gap between the multi-chart delay and the one-sensor lower bound.
struct GapRow {
  double gamma = 0.0;
  std::size_t n_sensors = 1;
  CalibrationResult nu;        ///< exact one-sensor threshold
  CalibrationResult h;         ///< Monte Carlo multi-chart threshold
  double lower_bound = 0.0;    ///< f(-nu)
  Estimate delay;              ///< worst-case delay of the multi-chart rule at h
  double delay_slope = 0.0;    ///< d delay / d h, used to propagate the threshold SE
  double gap = 0.0;            ///< delay - f(-nu)
  double gap_se = 0.0;
  double log_n = 0.0;
  double lemma_value = 0.0;    ///< log(gamma) + log(N) - 1
};

/// For each gamma: nu from f(nu) = gamma, h by Monte Carlo calibration, the worst-case delay of
/// the multi-chart rule at h, and the gap to f(-nu). The gap SE combines the delay SE and the
/// threshold SE times the delay slope.
std::vector<GapRow> theorem1_gap(std::span<const double> gammas, std::size_t n_sensors,
                                 const DriftModel& model, const GapParams& params);

}  // namespace qdetect
