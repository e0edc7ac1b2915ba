#include "cvqkd/config.hpp"

#include "cvqkd/errors.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace cvqkd {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

} // namespace

KeyValueConfig KeyValueConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream oss;
  oss << in.rdbuf();
  return from_string(oss.str());
}

KeyValueConfig KeyValueConfig::from_string(const std::string& text) {
  KeyValueConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    if (cfg.values_.count(key))
      throw ConfigError("config: duplicate key '" + key + "'");
    cfg.values_[key] = value;
  }
  return cfg;
}

bool KeyValueConfig::has(const std::string& key) const { return values_.count(key) > 0; }

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  consumed_[key] = true;
  return it->second;
}

std::string KeyValueConfig::require_string(const std::string& key) {
  if (!has(key)) throw ConfigError("config: missing required key '" + key + "'");
  return get_string(key, "");
}

double KeyValueConfig::get_double(const std::string& key, double fallback) {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  consumed_[key] = true;
  try {
    std::size_t pos = 0;
    const double v = std::stod(it->second, &pos);
    if (pos != it->second.size())
      throw ConfigError("config: key '" + key + "' has trailing junk: " + it->second);
    return v;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' is not a number: " + it->second);
  }
}

double KeyValueConfig::require_double(const std::string& key) {
  if (!has(key)) throw ConfigError("config: missing required key '" + key + "'");
  return get_double(key, 0.0);
}

long long KeyValueConfig::get_int(const std::string& key, long long fallback) {
  const double v = get_double(key, static_cast<double>(fallback));
  const auto i = static_cast<long long>(v);
  if (static_cast<double>(i) != v)
    throw ConfigError("config: key '" + key + "' must be an integer");
  return i;
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  consumed_[key] = true;
  std::string v = it->second;
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
  if (v == "true" || v == "on" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "off" || v == "0" || v == "no") return false;
  throw ConfigError("config: key '" + key + "' is not a boolean: " + it->second);
}

void KeyValueConfig::reject_unknown_keys() const {
  std::string unknown;
  for (const auto& [key, value] : values_) {
    if (!consumed_.count(key)) {
      if (!unknown.empty()) unknown += ", ";
      unknown += key;
    }
  }
  if (!unknown.empty()) throw ConfigError("config: unknown keys: " + unknown);
}

} // namespace cvqkd
