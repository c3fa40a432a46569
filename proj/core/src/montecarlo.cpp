#include "qdetect/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qdetect/errors.hpp"
#include "qdetect/rng.hpp"
#include "qdetect/sde_sim.hpp"

namespace qdetect {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Per-sensor criterion energy measured from each sensor's own change step.
class DelayAccumulator {
 public:
  DelayAccumulator(const std::vector<ChangeStep>& steps, double dt) : steps_(steps), dt_(dt) {
    energy_.assign(steps.size(), 0.0);
    for (std::size_t i = 0; i < steps.size(); ++i) {
      if (!steps[i]) continue;
      ++finite_;
      single_ = i;
      first_ = std::min(first_, *steps[i]);
    }
  }

  /// Adds the step that started at grid index k.
  void add(std::int64_t k, std::span<const double> alpha) {
    if (finite_ == 0) return;
    for (std::size_t i = 0; i < steps_.size(); ++i) {
      if (steps_[i] && k >= *steps_[i]) energy_[i] += 0.5 * alpha[i] * alpha[i] * dt_;
    }
  }

  bool before_change(std::int64_t stop_step) const {
    return finite_ > 0 && stop_step <= first_;
  }

  double value() const {
    if (finite_ == 0) return 0.0;
    if (finite_ == 1) return energy_[single_];
    double total = 0.0;
    for (double e : energy_) total += e;
    return total / static_cast<double>(energy_.size());
  }

 private:
  const std::vector<ChangeStep>& steps_;
  double dt_;
  std::vector<double> energy_;
  std::size_t finite_ = 0;
  std::size_t single_ = 0;
  std::int64_t first_ = std::numeric_limits<std::int64_t>::max();
};

std::vector<ChangeStep> snapped(const Scenario& s, double dt) {
  std::vector<ChangeStep> steps;
  for (double tau : s.change_vector()) steps.push_back(snap_change_point(tau, dt));
  return steps;
}

DetectorOptions detector_options(const Scenario& s, std::uint64_t replication) {
  DetectorOptions options;
  options.monitoring = s.monitoring;
  options.bridge_seed = s.seed;
  options.replication = replication;
  return options;
}

void apply_initial(const Scenario& s, MultichartCusum& detector) {
  if (!s.initial_y.empty()) detector.set_initial(s.initial_y);
}

std::size_t first_limit(const Scenario& s, double dt) {
  return std::max<std::size_t>(1, steps_for_horizon(s.horizon.initial, dt));
}

}  // namespace

void Scenario::validate() const {
  if (n_sensors == 0) throw InvalidArgument("n_sensors must be >= 1");
  model.validate(n_sensors);
  if (!model.has_sufficient_energy()) {
    throw InvalidArgument("drift model " + model.describe() +
                          " has finite total energy; CUSUM stopping times are not a.s. finite");
  }
  if (thresholds.size() != 1 && thresholds.size() != n_sensors) {
    throw InvalidArgument("thresholds must have 1 or n_sensors entries");
  }
  for (double h : thresholds) {
    if (!std::isfinite(h) || h <= 0.0) throw InvalidArgument("threshold must be finite and > 0");
  }
  if (!std::isfinite(dt) || dt <= 0.0) throw InvalidArgument("dt must be finite and > 0");
  if (!change_points.empty() && change_points.size() != n_sensors) {
    throw InvalidArgument("change_points must be empty or have n_sensors entries");
  }
  for (double tau : change_points) {
    if (std::isnan(tau) || tau < 0.0) throw InvalidArgument("change point must be >= 0 or inf");
  }
  if (!initial_y.empty() && initial_y.size() != n_sensors) {
    throw InvalidArgument("initial_y must be empty or have n_sensors entries");
  }
  for (double y : initial_y) {
    if (!std::isfinite(y) || y < 0.0) throw InvalidArgument("initial statistic must be >= 0");
  }
  if (replications < 2) throw InvalidArgument("need at least 2 replications");
  if (!(horizon.initial > dt)) throw InvalidArgument("initial horizon must exceed dt");
}

std::vector<double> Scenario::threshold_vector() const {
  if (thresholds.size() == 1) return std::vector<double>(n_sensors, thresholds.front());
  return thresholds;
}

std::vector<double> Scenario::change_vector() const {
  if (change_points.empty()) return std::vector<double>(n_sensors, kInf);
  return change_points;
}

bool Scenario::has_change() const {
  return std::any_of(change_points.begin(), change_points.end(),
                     [](double tau) { return std::isfinite(tau); });
}

Scenario delay_scenario(std::size_t n_sensors, std::size_t changed, double threshold) {
  if (changed >= n_sensors) throw InvalidArgument("changed sensor out of range");
  Scenario s;
  s.id = "delay";
  s.n_sensors = n_sensors;
  s.change_points.assign(n_sensors, kInf);
  s.change_points[changed] = 0.0;
  s.thresholds = {threshold};
  return s;
}

Scenario false_alarm_scenario(std::size_t n_sensors, double threshold) {
  Scenario s;
  s.id = "false_alarm";
  s.n_sensors = n_sensors;
  s.change_points.clear();
  s.thresholds = {threshold};
  return s;
}

ReplicationRecord run_replication(const Scenario& scenario, std::uint64_t replication) {
  const auto steps = snapped(scenario, scenario.dt);
  PathStepper stepper(scenario.n_sensors, scenario.dt, steps, scenario.model, scenario.seed,
                      replication);
  MultichartCusum detector(scenario.threshold_vector(), scenario.dt,
                           detector_options(scenario, replication));
  apply_initial(scenario, detector);
  DelayAccumulator delay(steps, scenario.dt);

  std::size_t limit = first_limit(scenario, scenario.dt);
  for (unsigned doublings = 0;; ++doublings) {
    while (static_cast<std::size_t>(stepper.index()) < limit && !detector.stopped()) {
      const std::int64_t k = stepper.index();
      stepper.step();
      delay.add(k, stepper.model_alpha());
      detector.step(stepper.increment(), stepper.model_alpha());
    }
    if (detector.stopped() || doublings == scenario.horizon.max_doublings) break;
    limit *= 2;
  }

  ReplicationRecord record;
  record.stopped = detector.stopped();
  record.stop_time = detector.time();
  const auto outcome = detector.outcome();
  record.trigger_sensor = outcome.trigger_sensor;
  record.false_alarm_energy = detector.energy();
  record.delay_energy = delay.value();
  record.before_change = delay.before_change(detector.steps());
  return record;
}

std::vector<ReplicationRecord> run_replications(const Scenario& scenario, std::uint64_t first,
                                                std::size_t count) {
  scenario.validate();
  std::vector<ReplicationRecord> records(count);
  parallel_for(count, scenario.threads,
               [&](std::size_t i) { records[i] = run_replication(scenario, first + i); });
  return records;
}

Estimate summarize_records(std::span<const ReplicationRecord> records, bool delay,
                           double max_censored_fraction) {
  Estimate est;
  std::vector<double> values;
  values.reserve(records.size());
  for (const auto& r : records) {
    if (!r.stopped) {
      ++est.censored_count;
      continue;
    }
    if (delay && r.before_change) {
      ++est.excluded_count;
      continue;
    }
    values.push_back(delay ? r.delay_energy : r.false_alarm_energy);
  }
  const double censored_fraction =
      records.empty() ? 0.0 : static_cast<double>(est.censored_count) / static_cast<double>(records.size());
  if (censored_fraction >= max_censored_fraction && est.censored_count > 0) {
    throw BudgetExceeded("censored fraction " + std::to_string(censored_fraction) +
                         " exceeds limit after horizon extension");
  }
  const auto summary = summarize(values);
  est.mean = summary.mean;
  est.std_error = summary.std_error;
  est.replications_used = summary.count;
  return est;
}

Estimate estimate_delay(const Scenario& scenario) {
  if (!scenario.has_change()) throw InvalidArgument("delay scenario needs a finite change point");
  const auto records = run_replications(scenario, 0, scenario.replications);
  return summarize_records(records, true, scenario.max_censored_fraction);
}

Estimate estimate_false_alarm(const Scenario& scenario) {
  if (scenario.has_change()) throw InvalidArgument("false-alarm scenario must have no change point");
  const auto records = run_replications(scenario, 0, scenario.replications);
  return summarize_records(records, false, scenario.max_censored_fraction);
}

RefinementComparison compare_dt_halving(const Scenario& scenario) {
  scenario.validate();
  if (!scenario.has_change()) throw InvalidArgument("dt comparison needs a finite change point");
  const double coarse_dt = scenario.dt;
  const double fine_dt = 0.5 * scenario.dt;
  const auto coarse_steps = snapped(scenario, coarse_dt);
  const auto fine_steps = snapped(scenario, fine_dt);
  const std::size_t n = scenario.n_sensors;

  std::vector<ReplicationRecord> coarse(scenario.replications);
  std::vector<ReplicationRecord> fine(scenario.replications);

  parallel_for(scenario.replications, scenario.threads, [&](std::size_t rep) {
    PathStepper fine_path(n, fine_dt, fine_steps, scenario.model, scenario.seed, rep);
    PathStepper coarse_path(n, coarse_dt, coarse_steps, scenario.model, scenario.seed, rep);
    MultichartCusum fine_det(scenario.threshold_vector(), fine_dt, detector_options(scenario, rep));
    MultichartCusum coarse_det(scenario.threshold_vector(), coarse_dt, detector_options(scenario, rep));
    apply_initial(scenario, fine_det);
    apply_initial(scenario, coarse_det);
    DelayAccumulator fine_delay(fine_steps, fine_dt);
    DelayAccumulator coarse_delay(coarse_steps, coarse_dt);

    std::vector<double> first(n), second(n), merged(n);
    std::size_t limit = first_limit(scenario, coarse_dt);
    std::size_t coarse_steps_taken = 0;
    for (unsigned doublings = 0;; ++doublings) {
      while (coarse_steps_taken < limit && !(fine_det.stopped() && coarse_det.stopped())) {
        ++coarse_steps_taken;
        fine_path.draw_normals(first);
        fine_path.draw_normals(second);
        if (!fine_det.stopped()) {
          for (const auto* normals : {&first, &second}) {
            const std::int64_t k = fine_path.index();
            fine_path.step(*normals);
            fine_delay.add(k, fine_path.model_alpha());
            if (fine_det.step(fine_path.increment(), fine_path.model_alpha())) break;
          }
        }
        if (!coarse_det.stopped()) {
          for (std::size_t i = 0; i < n; ++i) merged[i] = (first[i] + second[i]) * M_SQRT1_2;
          const std::int64_t k = coarse_path.index();
          coarse_path.step(merged);
          coarse_delay.add(k, coarse_path.model_alpha());
          coarse_det.step(coarse_path.increment(), coarse_path.model_alpha());
        }
      }
      if ((fine_det.stopped() && coarse_det.stopped()) ||
          doublings == scenario.horizon.max_doublings) {
        break;
      }
      limit *= 2;
    }
    auto fill = [](ReplicationRecord& r, const MultichartCusum& det, const DelayAccumulator& acc) {
      r.stopped = det.stopped();
      r.stop_time = det.time();
      r.false_alarm_energy = det.energy();
      r.delay_energy = acc.value();
      r.before_change = acc.before_change(det.steps());
    };
    fill(coarse[rep], coarse_det, coarse_delay);
    fill(fine[rep], fine_det, fine_delay);
  });

  RefinementComparison out;
  out.coarse = summarize_records(coarse, true, scenario.max_censored_fraction);
  out.fine = summarize_records(fine, true, scenario.max_censored_fraction);
  std::vector<double> diffs;
  diffs.reserve(scenario.replications);
  for (std::size_t r = 0; r < scenario.replications; ++r) {
    const bool ok = coarse[r].stopped && fine[r].stopped && !coarse[r].before_change &&
                    !fine[r].before_change;
    if (ok) diffs.push_back(fine[r].delay_energy - coarse[r].delay_energy);
  }
  const auto d = summarize(diffs);
  out.difference = out.fine.mean - out.coarse.mean;
  out.difference_se = d.std_error;
  return out;
}

std::vector<double> level_grid(double lo, double hi, std::size_t count) {
  if (!(lo > 0.0) || !(hi > lo) || count < 2) throw InvalidArgument("bad level grid");
  std::vector<double> levels(count);
  for (std::size_t j = 0; j < count; ++j) {
    levels[j] = lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(count - 1);
  }
  return levels;
}

EnergyCurveSampler::EnergyCurveSampler(Scenario scenario, std::vector<double> levels,
                                       CurveCriterion criterion)
    : scenario_(std::move(scenario)), levels_(std::move(levels)), criterion_(criterion) {
  if (levels_.empty()) throw InvalidArgument("energy curve needs at least one level");
  if (!std::is_sorted(levels_.begin(), levels_.end()) || !(levels_.front() > 0.0)) {
    throw InvalidArgument("levels must be positive and ascending");
  }
  scenario_.thresholds = {levels_.back()};
  scenario_.validate();
  if (criterion_ == CurveCriterion::Delay && !scenario_.has_change()) {
    throw InvalidArgument("delay curve needs a finite change point");
  }
  if (criterion_ == CurveCriterion::FalseAlarm && scenario_.has_change()) {
    throw InvalidArgument("false-alarm curve must have no change point");
  }
}

void EnergyCurveSampler::run_one(std::uint64_t replication, std::span<double> out,
                                 bool& censored) const {
  const Scenario& s = scenario_;
  const auto steps = snapped(s, s.dt);
  PathStepper stepper(s.n_sensors, s.dt, steps, s.model, s.seed, replication);
  MultichartCusum detector(s.n_sensors, levels_.back(), s.dt, detector_options(s, replication));
  apply_initial(s, detector);
  DelayAccumulator delay(steps, s.dt);

  auto criterion_value = [&] {
    if (criterion_ == CurveCriterion::FalseAlarm) return detector.energy();
    return delay.before_change(detector.steps()) ? kNaN : delay.value();
  };

  std::size_t next = 0;
  const double start = detector.max_statistic();
  while (next < levels_.size() && levels_[next] <= start) out[next++] = 0.0;
  censored = false;
  if (next == levels_.size()) return;
  detector.set_watch_level(levels_[next]);

  std::size_t limit = first_limit(s, s.dt);
  for (unsigned doublings = 0;; ++doublings) {
    while (static_cast<std::size_t>(stepper.index()) < limit && next < levels_.size()) {
      const std::int64_t k = stepper.index();
      stepper.step();
      delay.add(k, stepper.model_alpha());
      detector.step(stepper.increment(), stepper.model_alpha());
      const double peak = detector.step_peak();
      if (peak >= levels_[next]) {
        const double value = criterion_value();
        while (next < levels_.size() && peak >= levels_[next]) out[next++] = value;
        if (next < levels_.size()) detector.set_watch_level(levels_[next]);
      }
    }
    if (next == levels_.size() || doublings == s.horizon.max_doublings) break;
    limit *= 2;
  }
  if (next < levels_.size()) {
    censored = true;
    std::fill(out.begin() + static_cast<std::ptrdiff_t>(next), out.end(), kNaN);
  }
}

void EnergyCurveSampler::add(std::size_t count) {
  const std::size_t width = levels_.size();
  const std::size_t before = static_cast<std::size_t>(next_replication_);
  records_.resize((before + count) * width);
  censored_.resize(before + count);
  parallel_for(count, scenario_.threads, [&](std::size_t i) {
    bool censored = false;
    run_one(next_replication_ + i,
            std::span<double>(records_.data() + (before + i) * width, width), censored);
    censored_[before + i] = censored ? 1 : 0;
  });
  next_replication_ += count;
}

EnergyCurve EnergyCurveSampler::curve() const {
  const std::size_t width = levels_.size();
  const std::size_t reps = static_cast<std::size_t>(next_replication_);
  EnergyCurve c;
  c.levels = levels_;
  c.replications = reps;
  c.censored = static_cast<std::size_t>(std::count(censored_.begin(), censored_.end(), 1));
  if (reps > 0 && static_cast<double>(c.censored) >= scenario_.max_censored_fraction * static_cast<double>(reps) &&
      c.censored > 0) {
    throw BudgetExceeded("censored fraction " + std::to_string(c.censored) + "/" +
                         std::to_string(reps) + " exceeds limit after horizon extension");
  }
  std::vector<double> column;
  column.reserve(reps);
  for (std::size_t j = 0; j < width; ++j) {
    column.clear();
    for (std::size_t r = 0; r < reps; ++r) {
      if (censored_[r]) continue;
      const double v = records_[r * width + j];
      if (!std::isnan(v)) column.push_back(v);
    }
    const auto s = summarize(column);
    c.mean.push_back(s.mean);
    c.std_error.push_back(s.std_error);
    c.counts.push_back(s.count);
  }
  return c;
}

EnergyCurve energy_curve(const Scenario& scenario, std::vector<double> levels,
                         CurveCriterion criterion) {
  EnergyCurveSampler sampler(scenario, std::move(levels), criterion);
  sampler.add(scenario.replications);
  return sampler.curve();
}

namespace {

double interpolate(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
  if (xs.size() == 1) return x == xs.front() ? ys.front() : kNaN;
  if (x < xs.front() || x > xs.back()) return kNaN;
  auto it = std::upper_bound(xs.begin(), xs.end(), x);
  if (it == xs.end()) return ys.back();
  const auto j = static_cast<std::size_t>(it - xs.begin());
  const double w = (x - xs[j - 1]) / (xs[j] - xs[j - 1]);
  return ys[j - 1] + w * (ys[j] - ys[j - 1]);
}

}  // namespace

double EnergyCurve::value_at(double level) const { return interpolate(levels, mean, level); }

double EnergyCurve::se_at(double level) const { return interpolate(levels, std_error, level); }

double EnergyCurve::slope_at(double level, double half_width) const {
  const double lo = std::max(levels.front(), level - half_width);
  const double hi = std::min(levels.back(), level + half_width);
  if (!(hi > lo)) return kNaN;
  return (value_at(hi) - value_at(lo)) / (hi - lo);
}

double EnergyCurve::level_for(double target) const {
  if (mean.empty() || target < mean.front() || target > mean.back()) return kNaN;
  for (std::size_t j = 1; j < mean.size(); ++j) {
    if (mean[j] >= target) {
      if (mean[j] == mean[j - 1]) return levels[j];
      const double w = (target - mean[j - 1]) / (mean[j] - mean[j - 1]);
      return levels[j - 1] + w * (levels[j] - levels[j - 1]);
    }
  }
  return levels.front();
}

EqualizerReport equalizer_test(const Scenario& base, double se_multiple) {
  EqualizerReport report;
  std::vector<SampleSummary> summaries;
  for (std::size_t i = 0; i < base.n_sensors; ++i) {
    Scenario s = base;
    s.change_points.assign(base.n_sensors, kInf);
    s.change_points[i] = 0.0;
    s.seed = mix64(base.seed + 0x51ed2701ULL * (i + 1));
    s.id = base.id + "/changed-" + std::to_string(i + 1);
    const Estimate est = estimate_delay(s);
    report.per_sensor.push_back(est);
    SampleSummary summary;
    summary.mean = est.mean;
    summary.std_error = est.std_error;
    summary.count = est.replications_used;
    summaries.push_back(summary);
  }
  report.equalized = true;
  for (std::size_t a = 0; a < summaries.size(); ++a) {
    for (std::size_t b = a + 1; b < summaries.size(); ++b) {
      PairComparison pc;
      pc.first = a;
      pc.second = b;
      pc.test = welch_test(summaries[a], summaries[b]);
      pc.within_tolerance = std::abs(pc.test.difference) < se_multiple * pc.test.pooled_se;
      report.max_abs_difference = std::max(report.max_abs_difference, std::abs(pc.test.difference));
      report.max_abs_t = std::max(report.max_abs_t, std::abs(pc.test.t_statistic));
      report.equalized = report.equalized && pc.within_tolerance;
      report.pairs.push_back(pc);
    }
  }
  return report;
}

}  // namespace qdetect
