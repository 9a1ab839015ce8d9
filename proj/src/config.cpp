// SPDX-License-Identifier: Apache-2.0
#include "objnerf/config.hpp"

#include <fstream>
#include <sstream>

namespace objnerf {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

}  // namespace

ConfigMap ConfigMap::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  ConfigMap cfg;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
    }
    cfg.values_[key] = value;
  }
  return cfg;
}

void ConfigMap::apply_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw ConfigError("override '" + assignment + "' must have the form key=value");
  }
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

void ConfigMap::set(const std::string& key, const std::string& value) {
  if (key.empty()) throw ConfigError("empty config key");
  values_[key] = value;
}

std::string ConfigMap::resolve(const std::string& key, const std::string& def, bool required) {
  auto it = values_.find(key);
  if (it == values_.end()) {
    if (required) throw ConfigError("missing required config key '" + key + "'");
    effective_[key] = def;
    return def;
  }
  effective_[key] = it->second;
  return it->second;
}

std::string ConfigMap::get_string(const std::string& key, const std::string& def) {
  return resolve(key, def, false);
}

std::string ConfigMap::require_string(const std::string& key) { return resolve(key, "", true); }

int64_t ConfigMap::get_int(const std::string& key, int64_t def) {
  const std::string v = resolve(key, std::to_string(def), false);
  try {
    size_t pos = 0;
    const int64_t out = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "' expects an integer, got '" + v + "'");
  }
}

double ConfigMap::get_double(const std::string& key, double def) {
  std::ostringstream os;
  os.precision(17);
  os << def;
  const std::string v = resolve(key, os.str(), false);
  try {
    size_t pos = 0;
    const double out = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "' expects a number, got '" + v + "'");
  }
}

bool ConfigMap::get_bool(const std::string& key, bool def) {
  const std::string v = resolve(key, def ? "true" : "false", false);
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("config key '" + key + "' expects true/false, got '" + v + "'");
}

void ConfigMap::reject_unknown_keys() const {
  for (const auto& [key, value] : values_) {
    if (effective_.find(key) == effective_.end()) {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
}

std::string ConfigMap::dump_effective() const {
  std::ostringstream os;
  for (const auto& [key, value] : effective_) {
    os << key << " = " << value << "\n";
  }
  return os.str();
}

}  // namespace objnerf
