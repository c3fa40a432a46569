#include "qdetect/detector.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "qdetect/csv.hpp"
#include "qdetect/errors.hpp"
#include "qdetect/rng.hpp"

namespace qdetect {
namespace {

// Bridge excursions beyond a level are ignored when their probability is below exp(-40).
constexpr double kNegligibleExponent = 40.0;

void require_finite(double value, const char* what) {
  if (!std::isfinite(value)) throw InvalidArgument(std::string("non-finite ") + what);
}

}  // namespace

CusumState CusumState::started_at(double y0) {
  if (!(y0 >= 0.0) || !std::isfinite(y0)) throw InvalidArgument("initial statistic must be finite and >= 0");
  return {y0, 0.0, y0};
}

CusumState cusum_step(const CusumState& state, double dz, double alpha, double dt) {
  require_finite(dz, "increment");
  require_finite(alpha, "drift");
  if (!std::isfinite(dt) || dt <= 0.0) throw InvalidArgument("dt must be finite and > 0");
  CusumState next;
  next.u = state.u + alpha * dz - 0.5 * alpha * alpha * dt;
  next.m = std::min(state.m, next.u);
  next.y = next.u - next.m;
  return next;
}

MultichartCusum::MultichartCusum(std::size_t n_sensors, double threshold, double dt,
                                 DetectorOptions options)
    : MultichartCusum(std::vector<double>(n_sensors, threshold), dt, options) {}

MultichartCusum::MultichartCusum(std::vector<double> thresholds, double dt, DetectorOptions options)
    : thresholds_(std::move(thresholds)),
      dt_(dt),
      options_(options),
      states_(thresholds_.size()),
      peaks_(thresholds_.size(), 0.0),
      sensor_energy_(thresholds_.size(), 0.0) {
  if (thresholds_.empty()) throw InvalidArgument("detector needs at least one sensor");
  for (double h : thresholds_) {
    if (!std::isfinite(h) || h <= 0.0) throw InvalidArgument("threshold must be finite and > 0");
  }
  if (!std::isfinite(dt) || dt <= 0.0) throw InvalidArgument("dt must be finite and > 0");
  watch_level_ = *std::min_element(thresholds_.begin(), thresholds_.end());
  std::vector<std::size_t> ids(thresholds_.size());
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  set_sensor_ids(std::move(ids));
}

void MultichartCusum::set_sensor_ids(std::vector<std::size_t> ids) {
  if (ids.size() != thresholds_.size()) throw InvalidArgument("sensor id count mismatch");
  keys_.resize(ids.size());
  const std::uint64_t seed = options_.bridge_seed.value_or(0);
  for (std::size_t j = 0; j < ids.size(); ++j) {
    keys_[j] = stream_key(seed, StreamPurpose::Bridge, options_.replication, ids[j]);
  }
}

void MultichartCusum::set_initial(std::span<const double> y0) {
  if (y0.size() != states_.size()) throw InvalidArgument("initial statistic count mismatch");
  for (std::size_t i = 0; i < y0.size(); ++i) states_[i] = CusumState::started_at(y0[i]);
}

void MultichartCusum::set_watch_level(double level) {
  const double lowest = *std::min_element(thresholds_.begin(), thresholds_.end());
  watch_level_ = std::min(level, lowest);
}

double MultichartCusum::max_statistic() const noexcept {
  double best = 0.0;
  for (const auto& s : states_) best = std::max(best, s.y);
  return best;
}

double MultichartCusum::energy() const noexcept {
  return std::accumulate(sensor_energy_.begin(), sensor_energy_.end(), 0.0) /
         static_cast<double>(sensor_energy_.size());
}

void MultichartCusum::advance_sensor(std::size_t i, double dz, double alpha) {
  CusumState& s = states_[i];
  const double a = s.u;
  const double m = s.m;
  const double b = a + alpha * dz - 0.5 * alpha * alpha * dt_;
  double peak = b - m;
  double new_min = std::min(m, b);

  const double var = alpha * alpha * dt_;
  if (options_.monitoring == Monitoring::BrownianBridge && var > 0.0) {
    const auto counter = static_cast<std::uint64_t>(steps_) * 2;
    // P(bridge max >= L) = exp(-2 (L - a)(L - b) / var) for L above both endpoints.
    const double watch = m + std::min(watch_level_, thresholds_[i]);
    if (b < watch && 2.0 * (watch - a) * (watch - b) < kNegligibleExponent * var) {
      const double w = counter_uniform(keys_[i], counter);
      const double top = 0.5 * (a + b + std::sqrt((b - a) * (b - a) - 2.0 * var * std::log(w)));
      peak = std::max(peak, top - m);
    }
    // The bridge minimum lies below min(a, b); once b <= m it always sets the new running minimum.
    if (b <= m || 2.0 * (a - m) * (b - m) < kNegligibleExponent * var) {
      const double w = counter_uniform(keys_[i], counter + 1);
      const double bottom = 0.5 * (a + b - std::sqrt((b - a) * (b - a) - 2.0 * var * std::log(w)));
      new_min = std::min(new_min, bottom);
    }
  }

  s.u = b;
  s.m = new_min;
  s.y = b - new_min;
  peaks_[i] = std::max(peak, s.y);
  sensor_energy_[i] += 0.5 * alpha * alpha * dt_;
}

bool MultichartCusum::step(std::span<const double> dz, std::span<const double> alpha) {
  if (stopped_) return true;
  const std::size_t n = states_.size();
  if (dz.size() != n || alpha.size() != n) throw InvalidArgument("step input size mismatch");
  double best_excess = -1.0;
  step_peak_ = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    advance_sensor(i, dz[i], alpha[i]);
    step_peak_ = std::max(step_peak_, peaks_[i]);
    const double excess = peaks_[i] - thresholds_[i];
    if (excess >= 0.0 && excess > best_excess) {
      best_excess = excess;
      trigger_ = i;
      stopped_ = true;
    }
  }
  ++steps_;
  return stopped_;
}

StoppingOutcome MultichartCusum::outcome() const {
  StoppingOutcome out;
  out.stopped = stopped_;
  out.stop_time = time();
  out.stop_step = steps_;
  out.trigger_sensor = trigger_;
  out.y_at_stop.reserve(states_.size());
  for (const auto& s : states_) out.y_at_stop.push_back(s.y);
  out.peak_at_stop = peaks_;
  out.energy_to_stop = energy();
  out.sensor_energy = sensor_energy_;
  return out;
}

namespace {

DetectorOptions with_path_seed(DetectorOptions options, const PathBundle& paths) {
  if (!options.bridge_seed) options.bridge_seed = paths.seed;
  return options;
}

}  // namespace

StoppingOutcome run_multichart(const PathBundle& paths, const DriftModel& model, double h,
                               const DetectorOptions& options) {
  if (!(h > 0.0)) throw InvalidArgument("threshold must be > 0");
  return run_multichart(paths, model, std::vector<double>(paths.n_sensors, h), options);
}

StoppingOutcome run_multichart(const PathBundle& paths, const DriftModel& model,
                               std::vector<double> thresholds, const DetectorOptions& options) {
  model.validate(paths.n_sensors);
  if (thresholds.size() != paths.n_sensors) throw InvalidArgument("threshold count != n_sensors");
  MultichartCusum detector(std::move(thresholds), paths.dt, with_path_seed(options, paths));
  std::vector<double> alpha(paths.n_sensors);
  for (std::size_t k = 0; k < paths.n_steps; ++k) {
    model.evaluate(paths.times[k], paths.z_row(k), alpha);
    if (detector.step(paths.dz_row(k), alpha)) break;
  }
  return detector.outcome();
}

StoppingOutcome run_single_cusum(const PathBundle& paths, const DriftModel& model, double nu,
                                 std::size_t sensor, const DetectorOptions& options) {
  if (!(nu > 0.0)) throw InvalidArgument("threshold must be > 0");
  if (sensor >= paths.n_sensors) throw InvalidArgument("sensor index out of range");
  model.validate(paths.n_sensors);
  MultichartCusum detector(1, nu, paths.dt, with_path_seed(options, paths));
  detector.set_sensor_ids({sensor});
  std::vector<double> alpha(paths.n_sensors);
  for (std::size_t k = 0; k < paths.n_steps; ++k) {
    model.evaluate(paths.times[k], paths.z_row(k), alpha);
    const double dz = paths.dz_at(k, sensor);
    if (detector.step(std::span<const double>(&dz, 1), std::span<const double>(&alpha[sensor], 1))) {
      break;
    }
  }
  auto out = detector.outcome();
  out.trigger_sensor = sensor;
  return out;
}

void write_trace_csv(std::ostream& out, const PathBundle& paths, const DriftModel& model, double h,
                     const DetectorOptions& options) {
  model.validate(paths.n_sensors);
  const std::size_t n = paths.n_sensors;
  MultichartCusum detector(n, h, paths.dt, with_path_seed(options, paths));
  out << "t";
  for (std::size_t i = 0; i < n; ++i) out << ",y" << (i + 1);
  out << ",max_y\r\n";
  auto emit = [&] {
    out << format_real(detector.time());
    for (const auto& s : detector.states()) out << ',' << format_real(s.y);
    out << ',' << format_real(detector.max_statistic()) << "\r\n";
  };
  emit();
  std::vector<double> alpha(n);
  for (std::size_t k = 0; k < paths.n_steps; ++k) {
    model.evaluate(paths.times[k], paths.z_row(k), alpha);
    const bool done = detector.step(paths.dz_row(k), alpha);
    emit();
    if (done) break;
  }
}

}  // namespace qdetect
