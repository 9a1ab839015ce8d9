// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "objnerf/common.hpp"

namespace objnerf {

// Flat dotted-key configuration ("train.epochs = 200", '#' comments).
// Typed getters record every key they resolve (including defaulted ones);
// after a command has read its parameters, reject_unknown_keys() fails on
// anything left over, and dump_effective() re-serializes the resolved
// parameter tree in the input format.
class ConfigMap {
 public:
  ConfigMap() = default;
  static ConfigMap from_file(const std::filesystem::path& path);

  // "key=value" (or "key = value") command line override.
  void apply_override(const std::string& assignment);
  void set(const std::string& key, const std::string& value);

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get_string(const std::string& key, const std::string& def);
  std::string require_string(const std::string& key);
  int64_t get_int(const std::string& key, int64_t def);
  double get_double(const std::string& key, double def);
  bool get_bool(const std::string& key, bool def);

  void reject_unknown_keys() const;
  std::string dump_effective() const;

 private:
  std::string resolve(const std::string& key, const std::string& def, bool required);

  std::map<std::string, std::string> values_;
  mutable std::map<std::string, std::string> effective_;
};

}  // namespace objnerf
