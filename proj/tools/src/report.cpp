#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "qdetect/calibration.hpp"
#include "qdetect/crossval.hpp"
#include "qdetect/csv.hpp"
#include "qdetect_cli/commands.hpp"

namespace qdetect::cli {
namespace {

struct Sources {
  std::vector<std::pair<std::string, Json>> mc, pde, calibration;
};

Sources scan(const std::filesystem::path& dir, std::ostream* log) {
  Sources s;
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) throw IoError("results directory '" + dir.string() + "' not found");
  std::vector<std::filesystem::path> files;
  for (auto it = std::filesystem::recursive_directory_iterator(dir, ec);
       !ec && it != std::filesystem::recursive_directory_iterator(); it.increment(ec)) {
    if (it->is_regular_file() && it->path().extension() == ".json") files.push_back(it->path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& path : files) {
    std::ifstream in(path);
    Json j = Json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("kind")) {
      if (log) *log << "report: skipping " << path.string() << '\n';
      continue;
    }
    const auto kind = j["kind"].get<std::string>();
    const auto name = std::filesystem::relative(path, dir).string();
    if (kind == "mc_summary") s.mc.emplace_back(name, std::move(j));
    if (kind == "pde_summary") s.pde.emplace_back(name, std::move(j));
    if (kind == "calibration") s.calibration.emplace_back(name, std::move(j));
  }
  return s;
}

/// Finest T solve at eps = 1/h, if any.
const Json* find_fd(const Sources& s, double h) {
  const Json* best = nullptr;
  for (const auto& [name, summary] : s.pde) {
    for (const auto& row : summary["rows"]) {
      if (row["problem"] != "T") continue;
      const double eps = json_real(row["epsilon"]);
      if (std::abs(eps * h - 1.0) > 1e-9) continue;
      if (!best || row["n_cells"].get<std::size_t>() > (*best)["n_cells"].get<std::size_t>()) best = &row;
    }
  }
  return best;
}

std::string cell(double v, int precision = 6) {
  if (std::isnan(v)) return "absent";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", precision, v);
  return buf;
}

std::string yes_no(bool available, bool v) { return available ? (v ? "yes" : "NO") : "absent"; }

}  // namespace

void cmd_report(const CommandContext& ctx) {
  std::string input = get_text(ctx.config, "input");
  const std::filesystem::path dir = input.empty() ? ctx.out_dir : std::filesystem::path(input);
  const Sources sources = scan(dir, ctx.log);

  Json report = ctx.summary("report");
  report["sources"] = Json::array();
  for (const auto* group : {&sources.mc, &sources.pde, &sources.calibration}) {
    for (const auto& entry : *group) report["sources"].push_back(entry.first);
  }
  std::ostringstream text;

  // Three-way cross-validation of the two-sensor false-alarm energy.
  report["crossval"] = Json::array();
  text << "Cross-validation: two-sensor false-alarm energy at threshold h\n";
  text << "  h        MC gamma      MC SE       FD corner/eps  (1/2)e^h      MC~FD   MC~asym FD~asym\n";
  for (const auto& [name, summary] : sources.mc) {
    if (summary.value("criterion", "") != "false_alarm" || summary.value("n_sensors", 0) != 2) continue;
    if (summary.contains("sensor_thresholds")) continue;
    for (const auto& row : summary["rows"]) {
      const double h = json_real(row["threshold"]);
      const double mc = json_real(row["mean"]);
      const double se = json_real(row["se"]);
      const Json* fd_row = find_fd(sources, h);
      const double fd = fd_row ? json_real((*fd_row)["corner"]) * h : NAN;
      const double asym = 0.5 * std::exp(h);
      const bool mc_fd = fd_row && agrees_within(mc, fd, se);
      const bool mc_asym = agrees_within(mc, asym, se);
      const bool fd_asym = fd_row && agrees_within(fd, asym, 0.0);
      Json entry{{"source", name}, {"h", h},        {"mc_gamma", mc},           {"mc_se", se},
                 {"asymptote", asym}, {"mc_vs_asymptote", mc_asym}};
      if (fd_row) {
        entry["fd_gamma"] = fd;
        entry["fd_n_cells"] = (*fd_row)["n_cells"];
        entry["mc_vs_fd"] = mc_fd;
        entry["fd_vs_asymptote"] = fd_asym;
      } else {
        entry["fd_gamma"] = nullptr;
        entry["mc_vs_fd"] = nullptr;
        entry["fd_vs_asymptote"] = nullptr;
      }
      report["crossval"].push_back(entry);
      char line[256];
      std::snprintf(line, sizeof line, "  %-8s %-13s %-11s %-14s %-13s %-7s %-7s %s\n", cell(h, 4).c_str(),
                    cell(mc).c_str(), cell(se, 3).c_str(), cell(fd).c_str(), cell(asym).c_str(),
                    yes_no(fd_row, mc_fd).c_str(), yes_no(true, mc_asym).c_str(), yes_no(fd_row, fd_asym).c_str());
      text << line;
    }
  }
  if (report["crossval"].empty()) text << "  (no two-sensor false-alarm runs found)\n";

  // Gap between the multi-chart delay and the one-sensor lower bound f(-nu).
  report["gap"] = Json::array();
  text << "\nGap: delay(T_h) - f(-nu) against log N\n";
  text << "  N   gamma      h          delay        f(-nu)       gap          gap SE     log N\n";
  auto add_gap = [&](const std::string& source, std::size_t n, double gamma, double h, double delay, double lower,
                     double gap, double gap_se) {
    report["gap"].push_back(Json{{"source", source},
                                 {"N", n},
                                 {"gamma", gamma},
                                 {"h", h},
                                 {"delay", delay},
                                 {"lower_bound", lower},
                                 {"gap", gap},
                                 {"gap_se", gap_se},
                                 {"log_n", std::log(static_cast<double>(n))}});
    char line[256];
    std::snprintf(line, sizeof line, "  %-3zu %-10s %-10s %-12s %-12s %-12s %-10s %s\n", n, cell(gamma).c_str(),
                  cell(h, 5).c_str(), cell(delay).c_str(), cell(lower).c_str(), cell(gap, 4).c_str(),
                  cell(gap_se, 3).c_str(), cell(std::log(static_cast<double>(n)), 4).c_str());
    text << line;
  };
  for (const auto& [name, summary] : sources.mc) {
    const auto criterion = summary.value("criterion", "");
    if (criterion == "gap") {
      for (const auto& g : summary["gap"]) {
        add_gap(name, g["N"].get<std::size_t>(), json_real(g["gamma"]), json_real(g["h"]), json_real(g["delay"]),
                json_real(g["lower_bound"]), json_real(g["gap"]), json_real(g["gap_se"]));
      }
    } else if (criterion == "delay" && !summary.contains("sensor_thresholds")) {
      for (const auto& row : summary["rows"]) {
        const double gamma = json_real(row["gamma"]);
        if (!(gamma > 0.0)) continue;
        const double lower = f_cusum(-solve_nu(gamma).threshold);
        const double delay = json_real(row["mean"]);
        add_gap(name, row["N"].get<std::size_t>(), gamma, json_real(row["threshold"]), delay, lower, delay - lower,
                json_real(row["se"]));
      }
    }
  }
  if (report["gap"].empty()) text << "  (no delay runs with a false-alarm target found)\n";

  // PDE sweeps against their asymptotes.
  report["pde"] = Json::array();
  text << "\nPDE corner values against asymptotes\n";
  if (sources.pde.empty()) {
    text << "  absent (no pde results)\n";
  } else {
    text << "  problem eps        n_cells  corner        asymptote     rel_err\n";
    for (const auto& [name, summary] : sources.pde) {
      for (const auto& row : summary["rows"]) {
        Json entry = row;
        entry["source"] = name;
        report["pde"].push_back(entry);
        char line[256];
        std::snprintf(line, sizeof line, "  %-7s %-10s %-8zu %-13s %-13s %s\n",
                      row["problem"].get<std::string>().c_str(), cell(json_real(row["epsilon"])).c_str(),
                      row["n_cells"].get<std::size_t>(), cell(json_real(row["corner"])).c_str(),
                      cell(json_real(row["asymptote"])).c_str(), cell(json_real(row["rel_err"]), 4).c_str());
        text << line;
      }
    }
  }

  report["calibration"] = Json::array();
  if (!sources.calibration.empty()) {
    text << "\nCalibrated thresholds\n";
    for (const auto& [name, summary] : sources.calibration) {
      for (const auto& r : summary["results"]) {
        Json entry = r;
        entry["source"] = name;
        report["calibration"].push_back(entry);
        char line[256];
        std::snprintf(line, sizeof line, "  N=%-3zu gamma=%-10s threshold=%-10s method=%s\n",
                      r["n_sensors"].get<std::size_t>(), cell(json_real(r["gamma_target"])).c_str(),
                      cell(json_real(r["threshold"])).c_str(), r["method"].get<std::string>().c_str());
        text << line;
      }
    }
  }

  {
    auto out = ctx.open("report.txt");
    out << "# config_hash=" << ctx.hash << ",seed=" << ctx.seed << '\n' << text.str();
  }
  ctx.write_json("report.json", report);
  if (ctx.log) *ctx.log << text.str();
}

}  // namespace qdetect::cli
