#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "qdetect_cli/config.hpp"

namespace qdetect::cli {

/// Output directory or file could not be created or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

const std::vector<std::string>& command_names();
std::string command_description(const std::string& command);
/// Common parameters followed by the command's own.
std::vector<ParamSpec> params_for(const std::string& command);

struct CommandContext {
  std::string command;
  Json config;     ///< merged parameters
  Json canonical;  ///< result-determining subset, hashed
  std::string hash;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  std::filesystem::path out_dir;
  std::string tag;
  std::ostream* log = nullptr;

  /// out_dir / (tag + "_" + name), or out_dir / name without a tag.
  std::filesystem::path output_path(const std::string& name) const;
  /// Opens an output file (creating the directory); throws IoError on failure.
  std::ofstream open(const std::string& name) const;
  /// `# config_hash=<hex>,seed=<n>` followed by CRLF.
  std::string csv_stamp() const;
  /// Object with kind, command, config, config_hash and seed filled in.
  Json summary(const std::string& kind) const;
  void write_json(const std::string& name, const Json& value) const;
};

CommandContext make_context(const std::string& command, const Json& merged, std::ostream& log);

void cmd_simulate(const CommandContext& ctx);
void cmd_calibrate(const CommandContext& ctx);
void cmd_mc(const CommandContext& ctx);
void cmd_pde(const CommandContext& ctx);
void cmd_report(const CommandContext& ctx);

void dispatch(const CommandContext& ctx);

/// Full command-line entry point; returns the process exit code. Errors are reported as a JSON
/// object on `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace qdetect::cli
