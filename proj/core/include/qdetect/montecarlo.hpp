#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "qdetect/detector.hpp"
#include "qdetect/drift_model.hpp"
#include "qdetect/stats.hpp"

namespace qdetect {

/// Censored runs are continued with the horizon doubled, up to max_doublings times.
struct HorizonPolicy {
  double initial = 64.0;
  unsigned max_doublings = 20;
};

/// One Monte Carlo experiment. Delay scenarios need at least one finite change point; false-alarm
/// scenarios have none (an empty change_points vector means "never" for every sensor).
struct Scenario {
  std::string id = "scenario";
  std::size_t n_sensors = 1;
  std::vector<double> change_points;
  DriftModel model = DriftModel::constant(1.0);
  /// One value is shared by every sensor; N values give the asymmetric diagnostic mode.
  std::vector<double> thresholds{1.0};
  double dt = 1e-3;
  HorizonPolicy horizon;
  std::size_t replications = 10000;
  std::uint64_t seed = 1;
  Monitoring monitoring = Monitoring::BrownianBridge;
  /// Starting CUSUM statistics; empty means all zero (the worst case for the delay).
  std::vector<double> initial_y;
  unsigned threads = 0;
  double max_censored_fraction = 1e-3;

  void validate() const;
  std::vector<double> threshold_vector() const;
  std::vector<double> change_vector() const;
  bool has_change() const;
};

/// Worst-case delay scenario: sensor `changed` changes at t = 0, all others never change.
Scenario delay_scenario(std::size_t n_sensors, std::size_t changed, double threshold);
/// No-change scenario for the false-alarm energy.
Scenario false_alarm_scenario(std::size_t n_sensors, double threshold);

struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t replications_used = 0;
  std::size_t censored_count = 0;
  /// Delay runs that alarmed at or before the first change (not counted in the mean).
  std::size_t excluded_count = 0;
};

struct ReplicationRecord {
  bool stopped = false;
  bool before_change = false;
  double stop_time = 0.0;
  std::size_t trigger_sensor = 0;
  /// 1/2 * integral of the changed sensor's alpha^2 from its change point; with several finite
  /// change points, the 1/N average of the per-sensor integrals from each change point.
  double delay_energy = 0.0;
  /// 1/2 * (1/N) * sum_i integral of alpha_i^2 from 0.
  double false_alarm_energy = 0.0;
};

ReplicationRecord run_replication(const Scenario& scenario, std::uint64_t replication);

/// Replications first .. first+count-1, stored by index (parallel runs give identical output).
std::vector<ReplicationRecord> run_replications(const Scenario& scenario, std::uint64_t first,
                                                std::size_t count);

/// Mean criterion energy from the change to the alarm.
Estimate estimate_delay(const Scenario& scenario);
/// Mean criterion energy to the alarm under the no-change measure.
Estimate estimate_false_alarm(const Scenario& scenario);

/// Turns records into an estimate; throws BudgetExceeded when too many runs stayed censored.
Estimate summarize_records(std::span<const ReplicationRecord> records, bool delay,
                           double max_censored_fraction);

/// Delay estimates at dt and dt/2 on shared Brownian paths: each coarse increment is the sum of
/// the two fine increments it spans.
struct RefinementComparison {
  Estimate coarse;
  Estimate fine;
  double difference = 0.0;     ///< fine.mean - coarse.mean
  double difference_se = 0.0;  ///< paired standard error of the difference
};
RefinementComparison compare_dt_halving(const Scenario& scenario);

/// Mean criterion energy at the first crossing of each level, from one pass per path. Because
/// the first-passage time of the running maximum is monotone in the level, every path yields the
/// stopping time for all levels at once (common random numbers across thresholds).
struct EnergyCurve {
  std::vector<double> levels;
  std::vector<double> mean;
  std::vector<double> std_error;
  std::vector<std::size_t> counts;
  std::size_t replications = 0;
  std::size_t censored = 0;

  double value_at(double level) const;
  double se_at(double level) const;
  /// Central difference of the interpolated mean over +/- half_width.
  double slope_at(double level, double half_width = 0.05) const;
  /// Level where the interpolated mean reaches `target`; nullopt-like NaN when out of range.
  double level_for(double target) const;
};

enum class CurveCriterion { FalseAlarm, Delay };

class EnergyCurveSampler {
 public:
  /// `scenario.thresholds` is ignored; the run uses the top level as its stopping threshold.
  EnergyCurveSampler(Scenario scenario, std::vector<double> levels, CurveCriterion criterion);

  /// Adds `count` further replications (indices continue from the previous call).
  void add(std::size_t count);
  std::size_t replications() const noexcept { return next_replication_; }
  EnergyCurve curve() const;

 private:
  void run_one(std::uint64_t replication, std::span<double> out, bool& censored) const;

  Scenario scenario_;
  std::vector<double> levels_;
  CurveCriterion criterion_;
  std::vector<double> records_;
  std::vector<unsigned char> censored_;
  std::uint64_t next_replication_ = 0;
};

EnergyCurve energy_curve(const Scenario& scenario, std::vector<double> levels,
                         CurveCriterion criterion);

/// Evenly spaced levels over [lo, hi].
std::vector<double> level_grid(double lo, double hi, std::size_t count);

/// Delays with the change placed in each sensor in turn, compared pairwise by Welch tests.
struct PairComparison {
  std::size_t first = 0;
  std::size_t second = 0;
  WelchResult test;
  bool within_tolerance = false;  ///< |difference| < se_multiple * pooled SE
};

struct EqualizerReport {
  std::vector<Estimate> per_sensor;
  std::vector<PairComparison> pairs;
  double max_abs_difference = 0.0;
  double max_abs_t = 0.0;
  bool equalized = false;
};

EqualizerReport equalizer_test(const Scenario& base, double se_multiple = 3.0);

}  // namespace qdetect
