#include "ghfeat/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace ghfeat {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace

Config Config::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config file not found: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return from_string(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

Config Config::from_string(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("parse error at line " + std::to_string(lineno) + ": missing '=' in \"" + t + "\"");
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (key.empty())
      throw ConfigError("parse error at line " + std::to_string(lineno) + ": empty key");
    cfg.values_[key] = value;
  }
  return cfg;
}

std::string Config::get_str(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("missing config key: " + key);
  return it->second;
}

std::string Config::get_str(const std::string& key, const std::string& fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

int64_t Config::get_int(const std::string& key) const {
  const std::string v = get_str(key);
  char* end = nullptr;
  int64_t r = std::strtoll(v.c_str(), &end, 10);
  if (end == v.c_str() || *end != '\0')
    throw ConfigError("config key " + key + " is not an integer: \"" + v + "\"");
  return r;
}

int64_t Config::get_int(const std::string& key, int64_t fallback) const {
  return has(key) ? get_int(key) : fallback;
}

double Config::get_real(const std::string& key) const {
  const std::string v = get_str(key);
  char* end = nullptr;
  double r = std::strtod(v.c_str(), &end);
  if (end == v.c_str() || *end != '\0')
    throw ConfigError("config key " + key + " is not a number: \"" + v + "\"");
  return r;
}

double Config::get_real(const std::string& key, double fallback) const {
  return has(key) ? get_real(key) : fallback;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string v = get_str(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config key " + key + " is not a boolean: \"" + v + "\"");
}

std::vector<int64_t> Config::get_int_list(const std::string& key, const std::vector<int64_t>& fallback) const {
  if (!has(key)) return fallback;
  std::vector<int64_t> out;
  std::istringstream in(get_str(key));
  std::string tok;
  while (std::getline(in, tok, ',')) {
    char* end = nullptr;
    const std::string t = tok;
    int64_t r = std::strtoll(t.c_str(), &end, 10);
    if (end == t.c_str())
      throw ConfigError("config key " + key + " has a non-integer element: \"" + t + "\"");
    out.push_back(r);
  }
  return out;
}

std::vector<std::string> Config::apply_cli_overrides(const std::vector<std::string>& args) {
  std::vector<std::string> positional;
  for (size_t i = 0; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (a.rfind("--", 0) == 0) {
      std::string key = a.substr(2);
      std::string value;
      size_t eq = key.find('=');
      if (eq != std::string::npos) {
        value = key.substr(eq + 1);
        key = key.substr(0, eq);
      } else {
        if (i + 1 >= args.size()) throw ConfigError("flag --" + key + " expects a value");
        value = args[++i];
      }
      values_[key] = value;
    } else {
      positional.push_back(a);
    }
  }
  return positional;
}

std::string Config::to_text() const {
  std::ostringstream out;
  for (const auto& [k, v] : values_) out << k << " = " << v << "\n";
  return out.str();
}

void Config::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write config: " + path);
  out << to_text();
}

}  // namespace ghfeat
