#include "qdetect_cli/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "qdetect/csv.hpp"

namespace qdetect::cli {
namespace {

double parse_real_text(const std::string& key, std::string text) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.erase(text.begin());
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.pop_back();
  if (text == "inf" || text == "+inf" || text == "infinity" || text == "Inf") return INFINITY;
  if (text == "-inf" || text == "-infinity") return -INFINITY;
  if (text == "nan") return NAN;
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw ConfigError("'" + key + "': expected a number, got '" + text + "'");
  }
  if (used != text.size()) throw ConfigError("'" + key + "': trailing characters in '" + text + "'");
  return v;
}

Json real_json(double v) {
  if (std::isfinite(v)) return v;
  return format_real(v);
}

std::vector<std::string> split_commas(const std::string& text) {
  std::vector<std::string> parts;
  if (text.empty()) return parts;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) parts.push_back(item);
  return parts;
}

void write_json(std::ostream& out, const Json& v, int indent, int depth) {
  const std::string pad = indent > 0 ? std::string(static_cast<std::size_t>(indent * (depth + 1)), ' ') : "";
  const std::string end_pad = indent > 0 ? std::string(static_cast<std::size_t>(indent * depth), ' ') : "";
  const char* nl = indent > 0 ? "\n" : "";
  const char* sep = indent > 0 ? ": " : ":";
  if (v.is_object()) {
    if (v.empty()) {
      out << "{}";
      return;
    }
    out << '{' << nl;
    bool first = true;
    for (auto it = v.begin(); it != v.end(); ++it) {
      if (!first) out << ',' << nl;
      first = false;
      out << pad << Json(it.key()).dump() << sep;
      write_json(out, it.value(), indent, depth + 1);
    }
    out << nl << end_pad << '}';
  } else if (v.is_array()) {
    if (v.empty()) {
      out << "[]";
      return;
    }
    out << '[' << nl;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) out << ',' << nl;
      out << pad;
      write_json(out, v[i], indent, depth + 1);
    }
    out << nl << end_pad << ']';
  } else if (v.is_number_float()) {
    const double d = v.get<double>();
    if (std::isfinite(d)) {
      out << format_real(d);
    } else {
      out << '"' << format_real(d) << '"';
    }
  } else {
    out << v.dump();
  }
}

}  // namespace

std::vector<ParamSpec> common_params() {
  return {
      {"seed", ParamType::Unsigned64, 1, "master seed"},
      {"threads", ParamType::Integer, 0, "worker threads (0 = available parallelism)", false},
      {"out", ParamType::Text, ".", "output directory", false},
  };
}

Json normalize(const ParamSpec& spec, const Json& value) {
  const std::string& key = spec.name;
  auto as_text = [&](const Json& v) -> std::string {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number()) return format_real(v.get<double>());
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    throw ConfigError("'" + key + "': unsupported value " + v.dump());
  };
  auto as_real = [&](const Json& v) -> double {
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) return parse_real_text(key, v.get<std::string>());
    throw ConfigError("'" + key + "': expected a number, got " + v.dump());
  };
  switch (spec.type) {
    case ParamType::Integer: {
      const double d = as_real(value);
      if (!std::isfinite(d) || d != std::floor(d)) throw ConfigError("'" + key + "': expected an integer");
      return static_cast<std::int64_t>(d);
    }
    case ParamType::Unsigned64: {
      if (value.is_number_unsigned()) return value.get<std::uint64_t>();
      if (value.is_number_integer()) {
        if (value.get<std::int64_t>() < 0) throw ConfigError("'" + key + "': must be >= 0");
        return value.get<std::uint64_t>();
      }
      const std::string text = as_text(value);
      std::size_t used = 0;
      std::uint64_t v = 0;
      try {
        if (!text.empty() && text.front() == '-') throw std::invalid_argument("negative");
        v = std::stoull(text, &used, 0);
      } catch (const std::exception&) {
        throw ConfigError("'" + key + "': expected an unsigned 64-bit integer, got '" + text + "'");
      }
      if (used != text.size()) throw ConfigError("'" + key + "': trailing characters in '" + text + "'");
      return v;
    }
    case ParamType::Real:
      return real_json(as_real(value));
    case ParamType::RealList: {
      Json out = Json::array();
      if (value.is_array()) {
        for (const auto& item : value) out.push_back(real_json(as_real(item)));
      } else if (value.is_null()) {
      } else {
        for (const auto& part : split_commas(as_text(value))) out.push_back(real_json(parse_real_text(key, part)));
      }
      return out;
    }
    case ParamType::Text:
      return as_text(value);
    case ParamType::TextList: {
      Json out = Json::array();
      if (value.is_array()) {
        for (const auto& item : value) out.push_back(as_text(item));
      } else if (!value.is_null()) {
        for (const auto& part : split_commas(as_text(value))) out.push_back(part);
      }
      return out;
    }
    case ParamType::Flag: {
      if (value.is_boolean()) return value.get<bool>();
      const std::string text = as_text(value);
      if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
      if (text == "false" || text == "0" || text == "no" || text == "off") return false;
      throw ConfigError("'" + key + "': expected true or false, got '" + text + "'");
    }
  }
  return value;
}

Json merge_config(const std::string& command, const std::vector<ParamSpec>& specs,
                  const std::string& config_path, const std::vector<std::pair<std::string, std::string>>& flags) {
  Json merged = Json::object();
  for (const auto& spec : specs) merged[spec.name] = normalize(spec, spec.default_value);
  auto find = [&](const std::string& name) -> const ParamSpec* {
    for (const auto& spec : specs) {
      if (spec.name == name) return &spec;
    }
    return nullptr;
  };

  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw ConfigError("cannot read config file '" + config_path + "'");
    Json file;
    try {
      file = Json::parse(in);
    } catch (const Json::parse_error& e) {
      throw ConfigError("config file '" + config_path + "' is not valid JSON: " + e.what());
    }
    if (!file.is_object()) throw ConfigError("config file must hold a JSON object");
    // Output summaries embed the canonical config; accept them directly for re-runs.
    if (file.contains("kind") && file.contains("config") && file["config"].is_object()) {
      Json inner = file["config"];
      file = std::move(inner);
    }
    for (auto it = file.begin(); it != file.end(); ++it) {
      if (it.key() == "command") {
        if (!it.value().is_string() || it.value().get<std::string>() != command) {
          throw ConfigError("config file is for command " + it.value().dump() + ", not '" + command + "'");
        }
        continue;
      }
      if (it.key() == "config_hash") continue;
      const ParamSpec* spec = find(it.key());
      if (!spec) throw ConfigError("unknown key '" + it.key() + "' in config file for '" + command + "'");
      merged[spec->name] = normalize(*spec, it.value());
    }
  }
  for (const auto& [name, text] : flags) {
    const ParamSpec* spec = find(name);
    if (!spec) throw ConfigError("unknown option '" + name + "'");
    merged[name] = normalize(*spec, Json(text));
  }
  return merged;
}

Json canonical_config(const std::string& command, const std::vector<ParamSpec>& specs, const Json& merged) {
  Json canon = Json::object();
  canon["command"] = command;
  for (const auto& spec : specs) {
    if (spec.affects_results) canon[spec.name] = merged.at(spec.name);
  }
  return canon;
}

std::string config_hash(const Json& canonical) { return hex64(fnv1a64(dump_json(canonical, -1))); }

double get_real(const Json& cfg, const std::string& key) { return json_real(cfg.at(key)); }

std::int64_t get_int(const Json& cfg, const std::string& key) { return cfg.at(key).get<std::int64_t>(); }

std::uint64_t get_u64(const Json& cfg, const std::string& key) { return cfg.at(key).get<std::uint64_t>(); }

std::string get_text(const Json& cfg, const std::string& key) { return cfg.at(key).get<std::string>(); }

bool get_flag(const Json& cfg, const std::string& key) { return cfg.at(key).get<bool>(); }

std::vector<double> get_reals(const Json& cfg, const std::string& key) {
  std::vector<double> out;
  for (const auto& v : cfg.at(key)) out.push_back(json_real(v));
  return out;
}

std::vector<std::string> get_texts(const Json& cfg, const std::string& key) {
  std::vector<std::string> out;
  for (const auto& v : cfg.at(key)) out.push_back(v.get<std::string>());
  return out;
}

double json_real(const Json& value) {
  if (value.is_number()) return value.get<double>();
  if (value.is_string()) return parse_real_text("value", value.get<std::string>());
  if (value.is_null()) return NAN;
  throw ConfigError("expected a number, got " + value.dump());
}

std::string dump_json(const Json& value, int indent) {
  std::ostringstream out;
  write_json(out, value, indent, 0);
  return out.str();
}

}  // namespace qdetect::cli
