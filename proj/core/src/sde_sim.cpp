#include "qdetect/sde_sim.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "qdetect/csv.hpp"
#include "qdetect/errors.hpp"

namespace qdetect {

ChangeStep snap_change_point(double tau, double dt) {
  if (std::isnan(tau) || tau < 0.0) throw InvalidArgument("change point must be >= 0 or inf");
  if (std::isinf(tau)) return std::nullopt;
  return static_cast<std::int64_t>(std::floor(tau / dt + 0.5));
}

std::size_t steps_for_horizon(double horizon, double dt) {
  const double ratio = horizon / dt;
  const double nearest = std::round(ratio);
  if (std::abs(ratio - nearest) <= 1e-9 * std::max(1.0, nearest)) {
    return static_cast<std::size_t>(nearest);
  }
  return static_cast<std::size_t>(std::ceil(ratio));
}

void SimConfig::validate() const {
  if (n_sensors == 0) throw InvalidArgument("n_sensors must be >= 1");
  if (!std::isfinite(dt) || dt <= 0.0) throw InvalidArgument("dt must be finite and > 0");
  if (!std::isfinite(horizon) || horizon <= 0.0) throw InvalidArgument("horizon must be finite and > 0");
  if (dt >= horizon) throw InvalidArgument("dt must be smaller than the horizon");
  if (change_points.size() != n_sensors) {
    throw InvalidArgument("expected " + std::to_string(n_sensors) + " change points, got " +
                          std::to_string(change_points.size()));
  }
  for (double tau : change_points) {
    if (std::isnan(tau) || tau < 0.0) throw InvalidArgument("change point must be >= 0 or inf");
  }
}

std::size_t SimConfig::n_steps() const { return steps_for_horizon(horizon, dt); }

std::vector<ChangeStep> SimConfig::change_steps() const {
  std::vector<ChangeStep> steps;
  steps.reserve(change_points.size());
  for (double tau : change_points) steps.push_back(snap_change_point(tau, dt));
  return steps;
}

PathStepper::PathStepper(std::size_t n_sensors, double dt, std::vector<ChangeStep> change_steps,
                         DriftModel model, std::uint64_t seed, std::uint64_t replication)
    : drift_(std::move(model)),
      dt_(dt),
      sqrt_dt_(std::sqrt(dt)),
      change_steps_(std::move(change_steps)),
      noise_(seed, replication, n_sensors),
      state_(n_sensors, 0.0),
      increment_(n_sensors, 0.0),
      applied_(n_sensors, 0.0),
      model_alpha_(n_sensors, 0.0),
      normals_(n_sensors, 0.0) {
  drift_.validate(n_sensors);
  if (!std::isfinite(dt) || dt <= 0.0) throw InvalidArgument("dt must be finite and > 0");
  if (change_steps_.size() != n_sensors) throw InvalidArgument("change step count != n_sensors");
}

void PathStepper::step() {
  noise_.draw(normals_);
  step(normals_);
}

void PathStepper::step(std::span<const double> normals) {
  const std::size_t n = state_.size();
  drift_.evaluate(time(), state_, model_alpha_);
  for (std::size_t i = 0; i < n; ++i) {
    const bool changed = change_steps_[i].has_value() && index_ >= *change_steps_[i];
    applied_[i] = changed ? model_alpha_[i] : 0.0;
    increment_[i] = applied_[i] * dt_ + sqrt_dt_ * normals[i];
  }
  for (std::size_t i = 0; i < n; ++i) state_[i] += increment_[i];
  ++index_;
}

PathBundle simulate_paths(const SimConfig& config, const DriftModel& model) {
  config.validate();
  model.validate(config.n_sensors);

  PathBundle path;
  path.n_sensors = config.n_sensors;
  path.n_steps = config.n_steps();
  path.dt = config.dt;
  path.seed = config.seed;
  path.change_steps = config.change_steps();

  const std::size_t n = path.n_sensors;
  const std::size_t steps = path.n_steps;
  path.times.resize(steps + 1);
  path.z.assign((steps + 1) * n, 0.0);
  path.dz.resize(steps * n);
  path.alpha.resize(steps * n);

  PathStepper stepper(n, config.dt, path.change_steps, model, config.seed, 0);
  path.times[0] = 0.0;
  for (std::size_t k = 0; k < steps; ++k) {
    stepper.step();
    const auto inc = stepper.increment();
    const auto applied = stepper.applied_alpha();
    for (std::size_t i = 0; i < n; ++i) {
      path.dz[k * n + i] = inc[i];
      path.alpha[k * n + i] = applied[i];
      path.z[(k + 1) * n + i] = path.z[k * n + i] + inc[i];
    }
    path.times[k + 1] = static_cast<double>(k + 1) * config.dt;
  }
  return path;
}

double energy_integral(const PathBundle& path, const DriftModel& model, const EnergyQuery& query) {
  if (!(query.from_time <= query.to_time)) throw InvalidArgument("energy interval is reversed");
  if (query.from_time < 0.0) throw InvalidArgument("energy interval starts before 0");
  const double horizon = static_cast<double>(path.n_steps) * path.dt;
  if (query.to_time > horizon * (1.0 + 1e-12)) throw InvalidArgument("energy interval exceeds horizon");
  if (query.set == SensorSet::Single && query.sensor >= path.n_sensors) {
    throw InvalidArgument("sensor index out of range");
  }

  // Steps whose left endpoint lies in [from, to).
  const auto first = static_cast<std::size_t>(std::ceil(query.from_time / path.dt - 1e-9));
  const auto last = std::min(path.n_steps, static_cast<std::size_t>(std::ceil(query.to_time / path.dt - 1e-9)));

  std::vector<double> alpha(path.n_sensors);
  double total = 0.0;
  for (std::size_t k = first; k < last; ++k) {
    std::span<const double> row;
    if (query.source == AlphaSource::Applied) {
      row = path.alpha_row(k);
    } else {
      model.evaluate(path.times[k], path.z_row(k), alpha);
      row = alpha;
    }
    if (query.set == SensorSet::Single) {
      total += row[query.sensor] * row[query.sensor];
    } else {
      double s = 0.0;
      for (double a : row) s += a * a;
      total += s / static_cast<double>(path.n_sensors);
    }
  }
  return 0.5 * total * path.dt;
}

void write_paths_csv(std::ostream& out, const PathBundle& path) {
  const std::size_t n = path.n_sensors;
  out << "t";
  for (std::size_t i = 0; i < n; ++i) out << ",z" << (i + 1);
  for (std::size_t i = 0; i < n; ++i) out << ",a" << (i + 1);
  out << "\r\n";
  for (std::size_t k = 0; k <= path.n_steps; ++k) {
    out << format_real(path.times[k]);
    for (std::size_t i = 0; i < n; ++i) out << ',' << format_real(path.z_at(k, i));
    const std::size_t row = k < path.n_steps ? k : (path.n_steps == 0 ? 0 : path.n_steps - 1);
    for (std::size_t i = 0; i < n; ++i) {
      out << ',' << format_real(path.n_steps == 0 ? 0.0 : path.alpha_at(row, i));
    }
    out << "\r\n";
  }
}

}  // namespace qdetect
