#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ghfeat/common.hpp"

namespace ghfeat {

// Flat key/value configuration with dotted section keys, e.g.
//   train.lambda1 = 0.1
// Lines starting with '#' are comments. Values keep their text form; typed
// getters parse on access so the resolved snapshot is byte-faithful.
class Config {
 public:
  Config() = default;

  static Config from_file(const std::string& path);
  static Config from_string(const std::string& text);

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  std::string get_str(const std::string& key) const;
  std::string get_str(const std::string& key, const std::string& fallback) const;
  int64_t get_int(const std::string& key) const;
  int64_t get_int(const std::string& key, int64_t fallback) const;
  double get_real(const std::string& key) const;
  double get_real(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<int64_t> get_int_list(const std::string& key, const std::vector<int64_t>& fallback) const;

  // Applies "--a.b value" style overrides; returns positional leftovers.
  std::vector<std::string> apply_cli_overrides(const std::vector<std::string>& args);

  const std::map<std::string, std::string>& items() const { return values_; }

  // Serializes keys sorted, one per line; used for resolved-config snapshots.
  std::string to_text() const;
  void save(const std::string& path) const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace ghfeat
