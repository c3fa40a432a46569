#include "qdetect_cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "qdetect/calibration.hpp"
#include "qdetect/csv.hpp"
#include "qdetect/detector.hpp"
#include "qdetect/errors.hpp"
#include "qdetect/experiments.hpp"
#include "qdetect/montecarlo.hpp"
#include "qdetect/pde_verifier.hpp"
#include "qdetect/rng.hpp"
#include "qdetect/sde_sim.hpp"
#include "qdetect/stats.hpp"

namespace qdetect::cli {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Json empty_list() { return Json::array(); }

std::vector<ParamSpec> scenario_params() {
  return {
      {"model", ParamType::Text, "constant:1", "drift model: constant:<level>, ar:<rate>, rotational[:state]"},
      {"n", ParamType::Integer, 1, "number of sensors"},
      {"dt", ParamType::Real, 1e-3, "time step"},
      {"monitoring", ParamType::Text, "bridge", "between-step monitoring: bridge or grid"},
      {"initial_horizon", ParamType::Real, 64.0, "first simulation horizon (doubled while censored)"},
      {"max_doublings", ParamType::Integer, 20, "horizon doublings before a run counts as censored"},
  };
}

std::vector<ParamSpec> calibration_params() {
  return {
      {"calibration", ParamType::Text, "auto", "threshold method for --gamma: auto, exact, asymptotic, mc"},
      {"cal_reps", ParamType::Integer, 4000, "calibration replications per pass"},
      {"cal_max_reps", ParamType::Integer, 64000, "calibration replication budget"},
      {"cal_rel_se", ParamType::Real, 0.02, "target relative SE of the calibrated false-alarm energy"},
      {"cal_dt", ParamType::Real, 0.02, "calibration time step"},
      {"cal_levels", ParamType::Integer, 121, "threshold grid size of the calibration curve"},
      {"cal_bracket", ParamType::Real, 2.0, "half-width of the initial threshold bracket"},
  };
}

Monitoring parse_monitoring(const std::string& text) {
  if (text == "bridge") return Monitoring::BrownianBridge;
  if (text == "grid") return Monitoring::Grid;
  throw InvalidArgument("monitoring must be 'bridge' or 'grid', got '" + text + "'");
}

std::size_t positive_size(const Json& cfg, const std::string& key) {
  const auto v = get_int(cfg, key);
  if (v < 1) throw InvalidArgument("'" + key + "' must be >= 1");
  return static_cast<std::size_t>(v);
}

HorizonPolicy horizon_policy(const Json& cfg) {
  HorizonPolicy policy;
  policy.initial = get_real(cfg, "initial_horizon");
  const auto d = get_int(cfg, "max_doublings");
  if (d < 0 || d > 60) throw InvalidArgument("max_doublings must lie in [0, 60]");
  policy.max_doublings = static_cast<unsigned>(d);
  return policy;
}

McCalibrationParams calibration_settings(const CommandContext& ctx, std::uint64_t salt) {
  const Json& cfg = ctx.config;
  McCalibrationParams p;
  p.replications = positive_size(cfg, "cal_reps");
  p.max_replications = positive_size(cfg, "cal_max_reps");
  p.relative_se_target = get_real(cfg, "cal_rel_se");
  p.dt = get_real(cfg, "cal_dt");
  p.levels = positive_size(cfg, "cal_levels");
  p.bracket_half_width = get_real(cfg, "cal_bracket");
  p.horizon = horizon_policy(cfg);
  p.seed = mix64(ctx.seed ^ (0xca11b0000ULL + salt));
  p.threads = ctx.threads;
  p.monitoring = parse_monitoring(get_text(cfg, "monitoring"));
  return p;
}

CalibrationResult calibrate_one(const CommandContext& ctx, double gamma, std::size_t n,
                                const DriftModel& model, std::uint64_t salt) {
  std::string method = get_text(ctx.config, "calibration");
  if (method == "auto") method = n == 1 ? "exact" : "mc";
  if (method == "exact") {
    if (n != 1) throw InvalidArgument("exact calibration applies to one sensor only");
    return solve_nu(gamma);
  }
  if (method == "asymptotic") {
    CalibrationResult r;
    r.threshold = asymptotic_h(gamma, n);
    r.gamma_target = gamma;
    r.gamma_achieved = kNaN;
    r.method = CalibrationMethod::AsymptoticN;
    r.n_sensors = n;
    return r;
  }
  if (method == "mc") return calibrate_h_mc(gamma, n, model, calibration_settings(ctx, salt));
  throw InvalidArgument("unknown calibration method '" + method + "'");
}

Json calibration_json(const CalibrationResult& r) {
  return Json{{"threshold", r.threshold},
              {"gamma_target", r.gamma_target},
              {"gamma_achieved", r.gamma_achieved},
              {"gamma_se", r.gamma_se},
              {"threshold_se", r.threshold_se},
              {"method", to_string(r.method)},
              {"n_sensors", r.n_sensors},
              {"replications", r.replications},
              {"censored", r.censored}};
}

void log_line(const CommandContext& ctx, const std::string& line) {
  if (ctx.log) *ctx.log << line << '\n';
}

// -------------------------------------------------------------------------------------------
// mc

struct McRow {
  std::string id;
  double gamma = kNaN;
  std::size_t n = 1;
  double threshold = kNaN;
  double mean = kNaN;
  double se = kNaN;
  std::size_t reps = 0;
  std::size_t censored = 0;
};

Json row_json(const McRow& r) {
  return Json{{"scenario_id", r.id}, {"gamma", r.gamma}, {"N", r.n},        {"threshold", r.threshold},
              {"mean", r.mean},      {"se", r.se},       {"reps", r.reps},  {"censored", r.censored}};
}

std::string optional_real(double v) { return std::isnan(v) ? std::string() : format_real(v); }

Scenario base_scenario(const CommandContext& ctx, const DriftModel& model, std::size_t n) {
  const Json& cfg = ctx.config;
  Scenario s;
  s.id = get_text(cfg, "id");
  s.n_sensors = n;
  s.model = model;
  s.dt = get_real(cfg, "dt");
  s.horizon = horizon_policy(cfg);
  s.replications = positive_size(cfg, "reps");
  s.seed = ctx.seed;
  s.monitoring = parse_monitoring(get_text(cfg, "monitoring"));
  s.initial_y = get_reals(cfg, "initial_y");
  s.threads = ctx.threads;
  s.max_censored_fraction = get_real(cfg, "max_censored");
  const auto sensor_thresholds = get_reals(cfg, "sensor_thresholds");
  if (!sensor_thresholds.empty()) s.thresholds = sensor_thresholds;
  return s;
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"simulate", "calibrate", "mc", "pde", "report"};
  return names;
}

std::string command_description(const std::string& command) {
  if (command == "simulate") return "simulate sensor paths and optionally the detector trace";
  if (command == "calibrate") return "thresholds for false-alarm energy targets";
  if (command == "mc") return "Monte Carlo delay, false-alarm, equalizer and gap experiments";
  if (command == "pde") return "finite-difference exit-energy solves and asymptote sweeps";
  if (command == "report") return "cross-validation and gap tables from a results directory";
  return {};
}

std::vector<ParamSpec> params_for(const std::string& command) {
  auto specs = common_params();
  specs.push_back({"tag", ParamType::Text, "", "prefix for output file names", false});
  auto append = [&](std::vector<ParamSpec> more) {
    for (auto& s : more) specs.push_back(std::move(s));
  };
  if (command == "simulate") {
    append(scenario_params());
    for (auto& s : specs) {
      if (s.name == "monitoring") s.default_value = "grid";
    }
    append({
        {"tau", ParamType::RealList, empty_list(), "change points per sensor (inf = never); empty = none"},
        {"horizon", ParamType::Real, 10.0, "simulated time span"},
        {"trace_h", ParamType::Real, 0.0, "threshold for an optional detector trace (0 = none)"},
    });
  } else if (command == "calibrate") {
    append(scenario_params());
    append(calibration_params());
    append({{"gamma", ParamType::RealList, empty_list(), "false-alarm energy targets"}});
  } else if (command == "mc") {
    append(scenario_params());
    append(calibration_params());
    append({
        {"id", ParamType::Text, "scenario", "scenario id written to mc.csv"},
        {"criterion", ParamType::Text, "delay", "delay, false_alarm, equalizer, gap or dt_check"},
        {"threshold", ParamType::RealList, empty_list(), "thresholds h (one run per value)"},
        {"gamma", ParamType::RealList, empty_list(), "false-alarm targets; thresholds are calibrated"},
        {"sensor_thresholds", ParamType::RealList, empty_list(), "per-sensor thresholds (diagnostic mode)"},
        {"changed", ParamType::Integer, 1, "sensor that changes at t=0 in delay runs (1-based)"},
        {"tau", ParamType::RealList, empty_list(), "explicit change points per sensor (overrides --changed)"},
        {"initial_y", ParamType::RealList, empty_list(), "starting statistics (default all zero)"},
        {"reps", ParamType::Integer, 10000, "replications"},
        {"max_censored", ParamType::Real, 1e-3, "largest tolerated censored fraction"},
        {"se_multiple", ParamType::Real, 3.0, "equalizer tolerance in pooled standard errors"},
    });
  } else if (command == "pde") {
    append({
        {"eps", ParamType::RealList, "0.25,0.2,0.15,0.125", "boundary-layer parameters"},
        {"threshold", ParamType::RealList, empty_list(), "thresholds h; adds eps = 1/h"},
        {"problems", ParamType::TextList, "T,S", "T (no change), S (sensor 1 changed), Tflip (drifts +1,+1)"},
        {"scheme", ParamType::Text, "fitted", "advection scheme: fitted, upwind, centered"},
        {"n_cells", ParamType::Integer, 0, "cells per axis (0 = resolve from eps)"},
        {"cells_per_eps", ParamType::Real, 8.0, "resolution rule: spacing <= eps / cells_per_eps"},
        {"min_cells", ParamType::Integer, 256, "smallest automatic grid"},
        {"product_check", ParamType::Flag, false, "compare 1-D survival products with the 2-D corners"},
        {"survival", ParamType::Flag, false, "1-D survival tail rate and integral diagnostics"},
        {"field_dump", ParamType::Flag, false, "write each solved field as CSV"},
    });
  } else if (command == "report") {
    append({{"input", ParamType::Text, "", "results directory (default: --out)", false}});
  } else {
    throw ConfigError("unknown command '" + command + "'");
  }
  return specs;
}

std::filesystem::path CommandContext::output_path(const std::string& name) const {
  return out_dir / (tag.empty() ? name : tag + "_" + name);
}

std::ofstream CommandContext::open(const std::string& name) const {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory '" + out_dir.string() + "': " + ec.message());
  const auto path = output_path(name);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  return out;
}

std::string CommandContext::csv_stamp() const {
  return "# config_hash=" + hash + ",seed=" + std::to_string(seed) + "\r\n";
}

Json CommandContext::summary(const std::string& kind) const {
  Json j = Json::object();
  j["kind"] = kind;
  j["command"] = command;
  j["config"] = canonical;
  j["config_hash"] = hash;
  j["seed"] = seed;
  return j;
}

void CommandContext::write_json(const std::string& name, const Json& value) const {
  auto out = open(name);
  out << dump_json(value) << '\n';
  if (!out) throw IoError("failed writing '" + output_path(name).string() + "'");
}

CommandContext make_context(const std::string& command, const Json& merged, std::ostream& log) {
  const auto specs = params_for(command);
  CommandContext ctx;
  ctx.command = command;
  ctx.config = merged;
  ctx.canonical = canonical_config(command, specs, merged);
  ctx.hash = config_hash(ctx.canonical);
  ctx.seed = get_u64(merged, "seed");
  const auto threads = get_int(merged, "threads");
  if (threads < 0) throw ConfigError("'threads' must be >= 0");
  ctx.threads = static_cast<unsigned>(threads);
  ctx.out_dir = get_text(merged, "out");
  ctx.tag = get_text(merged, "tag");
  ctx.log = &log;
  return ctx;
}

void cmd_simulate(const CommandContext& ctx) {
  const Json& cfg = ctx.config;
  SimConfig sc;
  sc.n_sensors = positive_size(cfg, "n");
  sc.dt = get_real(cfg, "dt");
  sc.horizon = get_real(cfg, "horizon");
  sc.change_points = get_reals(cfg, "tau");
  if (sc.change_points.empty()) sc.change_points.assign(sc.n_sensors, kInf);
  sc.seed = ctx.seed;
  const DriftModel model = DriftModel::parse(get_text(cfg, "model"));
  model.validate(sc.n_sensors);
  sc.validate();
  const double trace_h = get_real(cfg, "trace_h");
  if (trace_h < 0.0 || !std::isfinite(trace_h)) throw InvalidArgument("trace_h must be finite and >= 0");

  const PathBundle paths = simulate_paths(sc, model);
  {
    auto out = ctx.open("paths.csv");
    out << ctx.csv_stamp();
    write_paths_csv(out, paths);
  }
  Json summary = ctx.summary("simulate");
  summary["n_steps"] = paths.n_steps;
  summary["files"] = Json::array({ctx.output_path("paths.csv").filename().string()});
  if (trace_h > 0.0) {
    DetectorOptions opts;
    opts.monitoring = parse_monitoring(get_text(cfg, "monitoring"));
    {
      auto out = ctx.open("trace.csv");
      out << ctx.csv_stamp();
      write_trace_csv(out, paths, model, trace_h, opts);
    }
    const auto outcome = run_multichart(paths, model, trace_h, opts);
    summary["files"].push_back(ctx.output_path("trace.csv").filename().string());
    summary["detector"] = Json{{"threshold", trace_h},
                               {"stopped", outcome.stopped},
                               {"stop_time", outcome.stop_time},
                               {"trigger_sensor", outcome.trigger_sensor + 1},
                               {"energy_to_stop", outcome.energy_to_stop}};
  }
  ctx.write_json("simulate.json", summary);
  log_line(ctx, "simulate: " + std::to_string(paths.n_steps) + " steps, " +
                    std::to_string(sc.n_sensors) + " sensors -> " + ctx.out_dir.string());
}

void cmd_calibrate(const CommandContext& ctx) {
  const Json& cfg = ctx.config;
  const auto gammas = get_reals(cfg, "gamma");
  if (gammas.empty()) throw InvalidArgument("calibrate needs --gamma");
  const std::size_t n = positive_size(cfg, "n");
  const DriftModel model = DriftModel::parse(get_text(cfg, "model"));
  model.validate(n);
  Json summary = ctx.summary("calibration");
  summary["results"] = Json::array();
  for (std::size_t g = 0; g < gammas.size(); ++g) {
    const auto r = calibrate_one(ctx, gammas[g], n, model, g);
    summary["results"].push_back(calibration_json(r));
    std::ostringstream os;
    os << "calibrate: gamma=" << format_real(gammas[g]) << " N=" << n << " threshold=" << format_real(r.threshold)
       << " (" << to_string(r.method) << ")";
    log_line(ctx, os.str());
  }
  ctx.write_json("calibration.json", summary);
}

void cmd_mc(const CommandContext& ctx) {
  const Json& cfg = ctx.config;
  const std::string criterion = get_text(cfg, "criterion");
  const std::size_t n = positive_size(cfg, "n");
  const DriftModel model = DriftModel::parse(get_text(cfg, "model"));
  model.validate(n);
  const auto gammas = get_reals(cfg, "gamma");
  auto thresholds = get_reals(cfg, "threshold");
  const bool per_sensor = !get_reals(cfg, "sensor_thresholds").empty();

  Json summary = ctx.summary("mc_summary");
  summary["criterion"] = criterion;
  summary["n_sensors"] = n;
  summary["monitoring"] = get_text(cfg, "monitoring");
  std::vector<McRow> rows;
  std::vector<double> row_gammas;

  if (criterion == "gap") {
    if (gammas.empty()) throw InvalidArgument("gap criterion needs --gamma");
    GapParams params;
    params.calibration = calibration_settings(ctx, 0);
    params.delay_dt = get_real(cfg, "dt");
    params.delay_replications = positive_size(cfg, "reps");
    params.delay_horizon = horizon_policy(cfg);
    params.seed = ctx.seed;
    params.threads = ctx.threads;
    params.monitoring = parse_monitoring(get_text(cfg, "monitoring"));
    const auto gap_rows = theorem1_gap(gammas, n, model, params);
    summary["gap"] = Json::array();
    for (const auto& g : gap_rows) {
      McRow row;
      row.id = get_text(cfg, "id");
      row.gamma = g.gamma;
      row.n = n;
      row.threshold = g.h.threshold;
      row.mean = g.delay.mean;
      row.se = g.delay.std_error;
      row.reps = g.delay.replications_used;
      row.censored = g.delay.censored_count;
      rows.push_back(row);
      summary["gap"].push_back(Json{{"gamma", g.gamma},
                                    {"N", n},
                                    {"nu", g.nu.threshold},
                                    {"h", g.h.threshold},
                                    {"h_se", g.h.threshold_se},
                                    {"gamma_achieved", g.h.gamma_achieved},
                                    {"gamma_se", g.h.gamma_se},
                                    {"lower_bound", g.lower_bound},
                                    {"delay", g.delay.mean},
                                    {"delay_se", g.delay.std_error},
                                    {"gap", g.gap},
                                    {"gap_se", g.gap_se},
                                    {"log_n", g.log_n},
                                    {"lemma_value", g.lemma_value}});
      std::ostringstream os;
      os << "gap: gamma=" << format_real(g.gamma) << " h=" << g.h.threshold << " delay=" << g.delay.mean
         << " f(-nu)=" << g.lower_bound << " gap=" << g.gap << " +/- " << g.gap_se;
      log_line(ctx, os.str());
    }
  } else {
    if (!gammas.empty() && !thresholds.empty()) throw InvalidArgument("give either --threshold or --gamma");
    if (per_sensor && (!gammas.empty() || !thresholds.empty())) {
      throw InvalidArgument("--sensor-thresholds replaces --threshold and --gamma");
    }
    if (per_sensor) {
      thresholds = {kNaN};
    } else if (!gammas.empty()) {
      summary["calibration"] = Json::array();
      for (std::size_t g = 0; g < gammas.size(); ++g) {
        const auto r = calibrate_one(ctx, gammas[g], n, model, g);
        summary["calibration"].push_back(calibration_json(r));
        thresholds.push_back(r.threshold);
      }
      row_gammas = gammas;
    }
    if (thresholds.empty()) throw InvalidArgument("mc needs --threshold, --gamma or --sensor-thresholds");
    if (row_gammas.empty()) row_gammas.assign(thresholds.size(), kNaN);

    Scenario base = base_scenario(ctx, model, n);
    const auto tau = get_reals(cfg, "tau");
    auto with_threshold = [&](double h) {
      Scenario s = base;
      if (!per_sensor) s.thresholds = {h};
      return s;
    };
    auto delay_setup = [&](Scenario& s) {
      if (!tau.empty()) {
        s.change_points = tau;
      } else {
        const auto changed = get_int(cfg, "changed");
        if (changed < 1 || static_cast<std::size_t>(changed) > n) throw InvalidArgument("--changed out of range");
        s.change_points.assign(n, kInf);
        s.change_points[static_cast<std::size_t>(changed - 1)] = 0.0;
      }
    };
    auto fill_row = [&](McRow& row, const Estimate& e) {
      row.mean = e.mean;
      row.se = e.std_error;
      row.reps = e.replications_used;
      row.censored = e.censored_count;
    };

    if (criterion == "delay" || criterion == "false_alarm") {
      const bool delay = criterion == "delay";
      std::vector<double> sorted = thresholds;
      std::sort(sorted.begin(), sorted.end());
      const bool shared_paths = thresholds.size() > 1 && !per_sensor &&
                                std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end();
      if (shared_paths) {
        // One pass per path records every threshold (common random numbers).
        Scenario s = with_threshold(sorted.back());
        if (delay) delay_setup(s);
        const auto curve = energy_curve(s, sorted, delay ? CurveCriterion::Delay : CurveCriterion::FalseAlarm);
        for (std::size_t j = 0; j < thresholds.size(); ++j) {
          McRow row;
          row.id = base.id;
          row.gamma = row_gammas[j];
          row.n = n;
          row.threshold = thresholds[j];
          row.mean = curve.value_at(thresholds[j]);
          row.se = curve.se_at(thresholds[j]);
          const auto k = static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), thresholds[j]) - sorted.begin());
          row.reps = curve.counts[k];
          row.censored = curve.censored;
          rows.push_back(row);
        }
      } else {
        for (std::size_t j = 0; j < thresholds.size(); ++j) {
          Scenario s = with_threshold(thresholds[j]);
          if (delay) delay_setup(s);
          McRow row;
          row.id = base.id;
          row.gamma = row_gammas[j];
          row.n = n;
          row.threshold = per_sensor ? s.thresholds.front() : thresholds[j];
          fill_row(row, delay ? estimate_delay(s) : estimate_false_alarm(s));
          rows.push_back(row);
        }
      }
      if (per_sensor) summary["sensor_thresholds"] = get_reals(cfg, "sensor_thresholds");
    } else if (criterion == "equalizer") {
      if (thresholds.size() != 1) throw InvalidArgument("equalizer takes one threshold");
      Scenario s = with_threshold(thresholds.front());
      const auto report = equalizer_test(s, get_real(cfg, "se_multiple"));
      for (std::size_t i = 0; i < report.per_sensor.size(); ++i) {
        McRow row;
        row.id = base.id + "/changed-" + std::to_string(i + 1);
        row.gamma = row_gammas.front();
        row.n = n;
        row.threshold = per_sensor ? s.thresholds[i] : thresholds.front();
        fill_row(row, report.per_sensor[i]);
        rows.push_back(row);
      }
      Json pairs = Json::array();
      for (const auto& p : report.pairs) {
        pairs.push_back(Json{{"first", p.first + 1},
                             {"second", p.second + 1},
                             {"difference", p.test.difference},
                             {"pooled_se", p.test.pooled_se},
                             {"t", p.test.t_statistic},
                             {"dof", p.test.dof},
                             {"p_value", p.test.p_value},
                             {"within_tolerance", p.within_tolerance}});
      }
      summary["equalizer"] = Json{{"pairs", pairs},
                                  {"max_abs_difference", report.max_abs_difference},
                                  {"max_abs_t", report.max_abs_t},
                                  {"equalized", report.equalized}};
      if (per_sensor) summary["sensor_thresholds"] = get_reals(cfg, "sensor_thresholds");
    } else if (criterion == "dt_check") {
      if (thresholds.size() != 1) throw InvalidArgument("dt_check takes one threshold");
      Scenario s = with_threshold(thresholds.front());
      delay_setup(s);
      const auto cmp = compare_dt_halving(s);
      for (const auto* est : {&cmp.coarse, &cmp.fine}) {
        McRow row;
        row.id = base.id + "/dt=" + format_real(est == &cmp.coarse ? s.dt : 0.5 * s.dt);
        row.gamma = row_gammas.front();
        row.n = n;
        row.threshold = thresholds.front();
        fill_row(row, *est);
        rows.push_back(row);
      }
      summary["dt_check"] = Json{{"difference", cmp.difference},
                                 {"difference_se", cmp.difference_se},
                                 {"coarse_se", cmp.coarse.std_error},
                                 {"within_one_se", std::abs(cmp.difference) < cmp.coarse.std_error}};
    } else {
      throw InvalidArgument("unknown criterion '" + criterion + "'");
    }
  }

  {
    auto out = ctx.open("mc.csv");
    out << ctx.csv_stamp();
    write_csv_row(out, {"scenario_id", "gamma", "N", "threshold", "mean", "se", "reps", "censored"});
    for (const auto& r : rows) {
      write_csv_row(out, {r.id, optional_real(r.gamma), std::to_string(r.n), optional_real(r.threshold),
                          format_real(r.mean), format_real(r.se), std::to_string(r.reps),
                          std::to_string(r.censored)});
    }
  }
  summary["rows"] = Json::array();
  for (const auto& r : rows) summary["rows"].push_back(row_json(r));
  ctx.write_json("mc_summary.json", summary);
  for (const auto& r : rows) {
    std::ostringstream os;
    os << "mc " << criterion << ": " << r.id << " N=" << r.n << " h=" << optional_real(r.threshold)
       << " mean=" << r.mean << " se=" << r.se << " reps=" << r.reps << " censored=" << r.censored;
    log_line(ctx, os.str());
  }
}

void cmd_pde(const CommandContext& ctx) {
  const Json& cfg = ctx.config;
  std::vector<double> eps = get_reals(cfg, "eps");
  for (double h : get_reals(cfg, "threshold")) {
    if (!(h > 1.0)) throw InvalidArgument("h must exceed 1");
    eps.push_back(1.0 / h);
  }
  if (eps.empty()) throw InvalidArgument("pde needs --eps or --threshold");
  const auto problems = get_texts(cfg, "problems");
  PdeOptions options;
  options.scheme = parse_scheme(get_text(cfg, "scheme"));
  const auto fixed_cells = get_int(cfg, "n_cells");
  const double cells_per_eps = get_real(cfg, "cells_per_eps");
  const auto min_cells = get_int(cfg, "min_cells");
  if (fixed_cells < 0 || min_cells < 1 || !(cells_per_eps > 0.0)) throw InvalidArgument("bad grid settings");

  struct Job {
    std::string problem;
    double epsilon;
  };
  std::vector<Job> jobs;
  for (double e : eps) {
    for (const auto& p : problems) {
      if (p != "T" && p != "S" && p != "Tflip") throw InvalidArgument("unknown problem '" + p + "'");
      jobs.push_back({p, e});
    }
  }
  std::vector<PdeSolution> solutions(jobs.size());
  parallel_for(jobs.size(), ctx.threads, [&](std::size_t j) {
    const double e = jobs[j].epsilon;
    const Grid2D grid = fixed_cells > 0 ? Grid2D{e, static_cast<std::size_t>(fixed_cells)}
                                        : Grid2D::resolved(e, static_cast<std::size_t>(min_cells), cells_per_eps);
    if (jobs[j].problem == "T") {
      solutions[j] = solve_T(grid, options);
    } else if (jobs[j].problem == "S") {
      solutions[j] = solve_S(grid, options);
    } else {
      solutions[j] = solve_exit_energy(grid, 1.0, 1.0, options);
    }
  });

  Json summary = ctx.summary("pde_summary");
  summary["scheme"] = to_string(options.scheme);
  summary["rows"] = Json::array();
  {
    auto out = ctx.open("pde_sweep.csv");
    out << ctx.csv_stamp();
    write_sweep_header(out);
    for (std::size_t j = 0; j < jobs.size(); ++j) {
      const auto& sol = solutions[j];
      const double e = jobs[j].epsilon;
      SweepRow row;
      row.problem = jobs[j].problem;
      row.epsilon = e;
      row.n_cells = sol.grid.n_cells;
      row.corner = sol.corner_value;
      row.asymptote = row.problem == "S" ? asymptote_S(e) : row.problem == "T" ? asymptote_T(e, 2) : kNaN;
      row.rel_err = row.corner / row.asymptote - 1.0;
      write_sweep_row(out, row);
      summary["rows"].push_back(Json{{"problem", row.problem},
                                     {"epsilon", e},
                                     {"n_cells", row.n_cells},
                                     {"corner", row.corner},
                                     {"asymptote", row.asymptote},
                                     {"rel_err", row.rel_err},
                                     {"residual_norm", sol.residual_norm},
                                     {"maximum_principle", satisfies_maximum_principle(sol)},
                                     {"monotone", is_monotone_toward_absorbing(sol)}});
      std::ostringstream os;
      os << "pde " << row.problem << ": eps=" << format_real(e) << " n=" << row.n_cells
         << " corner=" << row.corner << " asymptote=" << row.asymptote;
      log_line(ctx, os.str());
    }
  }
  if (get_flag(cfg, "field_dump")) {
    for (std::size_t j = 0; j < jobs.size(); ++j) {
      auto out = ctx.open("field_" + jobs[j].problem + "_eps" + format_real(jobs[j].epsilon) + ".csv");
      out << ctx.csv_stamp();
      write_field_csv(out, solutions[j]);
    }
  }
  if (get_flag(cfg, "product_check")) {
    summary["product_check"] = Json::array();
    std::vector<ProductCheckReport> reports(eps.size());
    parallel_for(eps.size(), ctx.threads, [&](std::size_t j) { reports[j] = product_check(eps[j], options); });
    for (const auto& r : reports) {
      summary["product_check"].push_back(Json{{"epsilon", r.epsilon},
                                              {"n_cells", r.n_cells},
                                              {"t_product", r.t_product},
                                              {"t_corner", r.t_corner},
                                              {"t_rel_err", r.t_rel_err},
                                              {"s_product", r.s_product},
                                              {"s_corner", r.s_corner},
                                              {"s_rel_err", r.s_rel_err},
                                              {"asymptotic_regime", r.asymptotic_regime}});
    }
  }
  if (get_flag(cfg, "survival")) {
    summary["survival"] = Json::array();
    for (double e : eps) {
      const auto down = survival_1d(e, -1, {});
      const auto up = survival_1d(e, +1, {});
      const double expected_rate = std::exp(-1.0 / e) / e;
      summary["survival"].push_back(Json{{"epsilon", e},
                                         {"tail_rate", down.tail_rate},
                                         {"asymptotic_rate", expected_rate},
                                         {"rate_rel_err", down.tail_rate / expected_rate - 1.0},
                                         {"integral_toward_wall", down.integral},
                                         {"integral_away", up.integral},
                                         {"integral_away_asymptote", 1.0 - e}});
    }
  }
  ctx.write_json("pde_summary.json", summary);
}

void dispatch(const CommandContext& ctx) {
  if (ctx.command == "simulate") return cmd_simulate(ctx);
  if (ctx.command == "calibrate") return cmd_calibrate(ctx);
  if (ctx.command == "mc") return cmd_mc(ctx);
  if (ctx.command == "pde") return cmd_pde(ctx);
  if (ctx.command == "report") return cmd_report(ctx);
  throw ConfigError("unknown command '" + ctx.command + "'");
}

}  // namespace qdetect::cli
