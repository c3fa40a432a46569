#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "qdetect/drift_model.hpp"
#include "qdetect/rng.hpp"

namespace qdetect {

/// Grid index of a change point; nullopt means the sensor never changes.
using ChangeStep = std::optional<std::int64_t>;

struct SimConfig {
  std::size_t n_sensors = 1;
  double dt = 1e-3;
  double horizon = 1.0;
  /// Change times; +infinity means "never".
  std::vector<double> change_points;
  std::uint64_t seed = 0;

  void validate() const;
  std::size_t n_steps() const;
  /// Change points snapped to the nearest grid time, ties rounded up.
  std::vector<ChangeStep> change_steps() const;
};

/// Snaps a change time to a grid index (round half up). Infinity maps to nullopt.
ChangeStep snap_change_point(double tau, double dt);

/// Number of steps of size dt needed to cover horizon.
std::size_t steps_for_horizon(double horizon, double dt);

/// Discretized observation paths. Matrices are row-major with one column per sensor.
struct PathBundle {
  std::size_t n_sensors = 0;
  std::size_t n_steps = 0;
  double dt = 0.0;
  std::uint64_t seed = 0;
  std::vector<ChangeStep> change_steps;
  std::vector<double> times;  ///< n_steps + 1 grid times
  std::vector<double> z;      ///< (n_steps + 1) x N observation values
  std::vector<double> dz;     ///< n_steps x N increments
  std::vector<double> alpha;  ///< n_steps x N applied drift (zero before the change)

  double z_at(std::size_t k, std::size_t i) const { return z[k * n_sensors + i]; }
  double dz_at(std::size_t k, std::size_t i) const { return dz[k * n_sensors + i]; }
  double alpha_at(std::size_t k, std::size_t i) const { return alpha[k * n_sensors + i]; }

  std::span<const double> z_row(std::size_t k) const {
    return {z.data() + k * n_sensors, n_sensors};
  }
  std::span<const double> dz_row(std::size_t k) const {
    return {dz.data() + k * n_sensors, n_sensors};
  }
  std::span<const double> alpha_row(std::size_t k) const {
    return {alpha.data() + k * n_sensors, n_sensors};
  }
};

/// Streaming Euler-Maruyama integrator for the N coupled observation processes.
///
/// Each step evaluates the model on the left-endpoint state, applies it only to sensors whose
/// change step has been reached, and adds sqrt(dt) times an independent normal per sensor.
class PathStepper {
 public:
  PathStepper(std::size_t n_sensors, double dt, std::vector<ChangeStep> change_steps,
              DriftModel model, std::uint64_t seed, std::uint64_t replication = 0);

  std::size_t n_sensors() const noexcept { return state_.size(); }
  std::int64_t index() const noexcept { return index_; }
  double time() const noexcept { return static_cast<double>(index_) * dt_; }
  double dt() const noexcept { return dt_; }

  /// Advances one step with the stepper's own noise streams.
  void step();
  /// Advances one step with caller-supplied standard normals (one per sensor).
  void step(std::span<const double> normals);

  std::span<const double> state() const noexcept { return state_; }
  /// Increment of the most recent step.
  std::span<const double> increment() const noexcept { return increment_; }
  /// Drift applied in the most recent step (zero for sensors still pre-change).
  std::span<const double> applied_alpha() const noexcept { return applied_; }
  /// Model drift at the left endpoint of the most recent step, regardless of regime. This is what
  /// an observer computes from the observed paths and what the detector consumes.
  std::span<const double> model_alpha() const noexcept { return model_alpha_; }

  /// Draws the normals the next step() would use, without advancing.
  void draw_normals(std::span<double> out) { noise_.draw(out); }

 private:
  DriftModel drift_;
  double dt_;
  double sqrt_dt_;
  std::vector<ChangeStep> change_steps_;
  GaussianStreams noise_;
  std::int64_t index_ = 0;
  std::vector<double> state_;
  std::vector<double> increment_;
  std::vector<double> applied_;
  std::vector<double> model_alpha_;
  std::vector<double> normals_;
};

/// Generates the full path bundle for (config, model). Bit-reproducible from the config seed.
PathBundle simulate_paths(const SimConfig& config, const DriftModel& model);

enum class SensorSet { All, Single };
enum class AlphaSource { Applied, Model };

struct EnergyQuery {
  double from_time = 0.0;
  double to_time = 0.0;
  SensorSet set = SensorSet::All;
  std::size_t sensor = 0;
  AlphaSource source = AlphaSource::Applied;
};

/// Left-endpoint Riemann sum of 1/2 * (1/|set|) * sum_{i in set} alpha_i^2 dt over grid steps
/// starting in [from_time, to_time). Model-source energy re-evaluates the model on the stored
/// observations.
double energy_integral(const PathBundle& path, const DriftModel& model, const EnergyQuery& query);

/// Writes `t,z1..zN,a1..aN` with one row per grid point. The drift column of the last grid point
/// repeats the last applied drift.
void write_paths_csv(std::ostream& out, const PathBundle& path);

}  // namespace qdetect
