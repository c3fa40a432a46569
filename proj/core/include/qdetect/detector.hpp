#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "qdetect/drift_model.hpp"
#include "qdetect/sde_sim.hpp"

namespace qdetect {

/// Running CUSUM statistics of one sensor: u is the log-likelihood-ratio integral, m its running
/// infimum and y = u - m >= 0 the CUSUM statistic.
struct CusumState {
  double u = 0.0;
  double m = 0.0;
  double y = 0.0;

  /// State with statistic y0 >= 0 (u offset by y0, infimum at 0).
  static CusumState started_at(double y0);

  friend bool operator==(const CusumState&, const CusumState&) = default;
};

/// One grid update: u' = u + alpha*dz - alpha^2*dt/2, m' = min(m, u'), y' = u' - m'.
CusumState cusum_step(const CusumState& state, double dz, double alpha, double dt);

/// How the statistic is monitored between grid points.
///
/// Grid looks at the statistic only at grid times. BrownianBridge treats u as a Brownian bridge
/// between consecutive grid values (exact for a drift that is constant over the step) and samples
/// the bridge extrema, so reflection at the running minimum and threshold crossings are resolved
/// in continuous time. Grid monitoring overstates both thresholds by about 0.58*alpha*sqrt(dt).
enum class Monitoring { Grid, BrownianBridge };

struct DetectorOptions {
  Monitoring monitoring = Monitoring::Grid;
  /// Key for bridge draws; defaults to the path seed when running on a PathBundle.
  std::optional<std::uint64_t> bridge_seed;
  std::uint64_t replication = 0;
};

struct StoppingOutcome {
  bool stopped = false;
  /// Stop time when stopped, otherwise the time reached (the run is censored).
  double stop_time = 0.0;
  std::int64_t stop_step = 0;
  /// Sensor with the largest excess over its threshold in the stopping step.
  std::size_t trigger_sensor = 0;
  std::vector<double> y_at_stop;
  /// Within-step supremum of each statistic in the last step (equals y under grid monitoring).
  std::vector<double> peak_at_stop;
  /// 1/2 * (1/N) * sum_i integral of the detector drift squared up to stop_time.
  double energy_to_stop = 0.0;
  /// 1/2 * integral of alpha_i^2 up to stop_time, per sensor.
  std::vector<double> sensor_energy;
};

/// Streaming multi-chart CUSUM: stops at the first time any sensor's statistic reaches its
/// threshold. With a single threshold shared by all sensors this is the minimum of the N
/// one-sensor CUSUM stopping times.
class MultichartCusum {
 public:
  MultichartCusum(std::size_t n_sensors, double threshold, double dt, DetectorOptions options = {});
  /// Per-sensor thresholds (diagnostic asymmetric mode).
  MultichartCusum(std::vector<double> thresholds, double dt, DetectorOptions options = {});

  /// Sensor ids select the bridge stream; by default sensor j of this detector uses id j.
  void set_sensor_ids(std::vector<std::size_t> ids);
  /// Starting statistics y(0); defaults to all zeros.
  void set_initial(std::span<const double> y0);

  /// Bridge maxima are resolved whenever they could reach `m + level` (level <= threshold).
  /// Lowering it never changes stopping decisions; it makes step_peak() exact for lower levels.
  void set_watch_level(double level);

  /// Consumes one grid step of increments and detector drifts. Returns true once stopped.
  bool step(std::span<const double> dz, std::span<const double> alpha);

  bool stopped() const noexcept { return stopped_; }
  std::size_t n_sensors() const noexcept { return states_.size(); }
  std::int64_t steps() const noexcept { return steps_; }
  double time() const noexcept { return static_cast<double>(steps_) * dt_; }
  const std::vector<CusumState>& states() const noexcept { return states_; }
  double max_statistic() const noexcept;
  /// Largest within-step supremum over sensors in the last step.
  double step_peak() const noexcept { return step_peak_; }
  /// 1/2 * (1/N) * sum_i integral of alpha_i^2 so far.
  double energy() const noexcept;
  const std::vector<double>& sensor_energy() const noexcept { return sensor_energy_; }

  StoppingOutcome outcome() const;

 private:
  void advance_sensor(std::size_t i, double dz, double alpha);

  std::vector<double> thresholds_;
  double dt_;
  DetectorOptions options_;
  std::vector<std::uint64_t> keys_;
  std::vector<CusumState> states_;
  std::vector<double> peaks_;
  std::vector<double> sensor_energy_;
  double watch_level_;
  double step_peak_ = 0.0;
  std::int64_t steps_ = 0;
  bool stopped_ = false;
  std::size_t trigger_ = 0;
};

/// Runs the multi-chart rule over a stored path bundle. The detector drift is the model evaluated
/// on the observed paths, whatever the regime.
StoppingOutcome run_multichart(const PathBundle& paths, const DriftModel& model, double h,
                               const DetectorOptions& options = {});
StoppingOutcome run_multichart(const PathBundle& paths, const DriftModel& model,
                               std::vector<double> thresholds, const DetectorOptions& options = {});

/// One-sensor CUSUM on column `sensor` of the bundle (the model still sees every sensor).
StoppingOutcome run_single_cusum(const PathBundle& paths, const DriftModel& model, double nu,
                                 std::size_t sensor = 0, const DetectorOptions& options = {});

/// Writes the statistic trace `t,y1..yN,max_y` until the stop (or the end of the bundle).
void write_trace_csv(std::ostream& out, const PathBundle& paths, const DriftModel& model, double h,
                     const DetectorOptions& options = {});

}  // namespace qdetect
