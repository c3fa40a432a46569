#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace qdetect::cli {

using Json = nlohmann::json;

/// Bad configuration (unknown key, wrong type, unreadable file).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ParamType { Integer, Unsigned64, Real, RealList, Text, TextList, Flag };

struct ParamSpec {
  std::string name;  ///< config key; the flag is --name with '_' replaced by '-'
  ParamType type = ParamType::Text;
  Json default_value;
  std::string help;
  /// Excluded from the config hash (locations and parallelism do not change results).
  bool affects_results = true;
};

/// Parameters shared by every subcommand.
std::vector<ParamSpec> common_params();

/// Converts a flag string or a config-file value to the normalized JSON form of `spec`.
/// Reals may be numbers or strings ("inf"); lists may be arrays or comma-separated strings.
Json normalize(const ParamSpec& spec, const Json& value);

/// Defaults, then the config file, then explicit flags. Unknown config keys are errors.
Json merge_config(const std::string& command, const std::vector<ParamSpec>& specs,
                  const std::string& config_path, const std::vector<std::pair<std::string, std::string>>& flags);

/// The subset of the merged config that determines results, with the command name.
Json canonical_config(const std::string& command, const std::vector<ParamSpec>& specs, const Json& merged);
std::string config_hash(const Json& canonical);

double get_real(const Json& cfg, const std::string& key);
std::int64_t get_int(const Json& cfg, const std::string& key);
std::uint64_t get_u64(const Json& cfg, const std::string& key);
std::string get_text(const Json& cfg, const std::string& key);
bool get_flag(const Json& cfg, const std::string& key);
std::vector<double> get_reals(const Json& cfg, const std::string& key);
std::vector<std::string> get_texts(const Json& cfg, const std::string& key);

/// JSON text with every float written to 17 significant digits and non-finite values as the
/// strings "inf", "-inf", "nan". Object keys keep nlohmann's sorted order.
std::string dump_json(const Json& value, int indent = 2);
/// Reads a real that may have been written as a string by dump_json.
double json_real(const Json& value);

}  // namespace qdetect::cli
