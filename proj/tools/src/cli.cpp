#include <map>
#include <memory>

#include <CLI11.hpp>

#include "qdetect/calibration.hpp"
#include "qdetect/errors.hpp"
#include "qdetect_cli/commands.hpp"

namespace qdetect::cli {
namespace {

std::string flag_name(const std::string& key) {
  std::string flag = key;
  for (auto& c : flag) {
    if (c == '_') c = '-';
  }
  return flag;
}

int report_error(std::ostream& err, const std::string& command, const std::string& type,
                 const std::string& message, int code, Json extra = Json::object()) {
  Json j = Json::object();
  j["error"] = Json{{"type", type}, {"message", message}, {"command", command}, {"exit_code", code}};
  for (auto it = extra.begin(); it != extra.end(); ++it) j["error"][it.key()] = it.value();
  err << dump_json(j, -1) << '\n';
  return code;
}

struct SubcommandState {
  std::string name;
  std::vector<ParamSpec> specs;
  CLI::App* app = nullptr;
  std::string config_path;
  std::map<std::string, std::string> values;
  std::map<std::string, bool> on, off;
  std::map<std::string, CLI::Option*> options, on_options, off_options;
};

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"qdetect: multi-chart CUSUM simulation, calibration and PDE verification"};
  app.require_subcommand(1, 1);
  app.set_help_all_flag("--help-all", "help for every subcommand");

  std::vector<std::unique_ptr<SubcommandState>> subs;
  for (const auto& name : command_names()) {
    auto state = std::make_unique<SubcommandState>();
    state->name = name;
    state->specs = params_for(name);
    state->app = app.add_subcommand(name, command_description(name));
    state->app->add_option("--config", state->config_path, "JSON config file (flags override it)");
    for (const auto& spec : state->specs) {
      const std::string flag = "--" + flag_name(spec.name);
      if (spec.type == ParamType::Flag) {
        state->on_options[spec.name] = state->app->add_flag(flag, state->on[spec.name], spec.help);
        state->off_options[spec.name] = state->app->add_flag("--no-" + flag_name(spec.name), state->off[spec.name]);
      } else {
        std::string help = spec.help;
        if (!spec.default_value.is_null()) help += " [default: " + dump_json(spec.default_value, -1) + "]";
        state->options[spec.name] = state->app->add_option(flag, state->values[spec.name], help);
      }
    }
    subs.push_back(std::move(state));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    return report_error(err, "", "usage", e.what(), 2);
  }

  const SubcommandState* active = nullptr;
  for (const auto& s : subs) {
    if (s->app->parsed()) active = s.get();
  }
  if (!active) return report_error(err, "", "usage", "no subcommand given", 2);
  const std::string& command = active->name;

  try {
    std::vector<std::pair<std::string, std::string>> flags;
    for (const auto& spec : active->specs) {
      if (spec.type == ParamType::Flag) {
        if (active->on_options.at(spec.name)->count() > 0) flags.emplace_back(spec.name, "true");
        if (active->off_options.at(spec.name)->count() > 0) flags.emplace_back(spec.name, "false");
      } else if (active->options.at(spec.name)->count() > 0) {
        flags.emplace_back(spec.name, active->values.at(spec.name));
      }
    }
    const Json merged = merge_config(command, active->specs, active->config_path, flags);
    const CommandContext ctx = make_context(command, merged, out);
    dispatch(ctx);
    return 0;
  } catch (const ConfigError& e) {
    return report_error(err, command, "config", e.what(), 2);
  } catch (const InvalidArgument& e) {
    return report_error(err, command, "invalid_argument", e.what(), 2);
  } catch (const IoError& e) {
    return report_error(err, command, "io", e.what(), 3);
  } catch (const BudgetExceededError& e) {
    const auto& p = e.partial();
    return report_error(err, command, "budget_exceeded", e.what(), 4,
                        Json{{"partial", Json{{"threshold", p.threshold},
                                              {"gamma_target", p.gamma_target},
                                              {"gamma_achieved", p.gamma_achieved},
                                              {"gamma_se", p.gamma_se},
                                              {"replications", p.replications}}}});
  } catch (const BudgetExceeded& e) {
    return report_error(err, command, "budget_exceeded", e.what(), 4);
  } catch (const SolverError& e) {
    return report_error(err, command, "solver", e.what(), 5);
  } catch (const std::exception& e) {
    return report_error(err, command, "internal", e.what(), 1);
  }
}

}  // namespace qdetect::cli
