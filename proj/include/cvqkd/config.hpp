#pragma once

#include <map>
#include <string>

namespace cvqkd {

// Flat key-value configuration text: one `section.key = value` per line,
// '#' comments, blank lines ignored. Typed getters record which keys were
// consumed; any leftover key is a configuration error (catches typos).
class KeyValueConfig {
 public:
  static KeyValueConfig from_file(const std::string& path);
  static KeyValueConfig from_string(const std::string& text);

  bool has(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback);
  double get_double(const std::string& key, double fallback);
  long long get_int(const std::string& key, long long fallback);
  bool get_bool(const std::string& key, bool fallback);

  std::string require_string(const std::string& key);
  double require_double(const std::string& key);

  /// Throws ConfigError naming every key that was never consumed.
  void reject_unknown_keys() const;

 private:
  std::map<std::string, std::string> values_;
  mutable std::map<std::string, bool> consumed_;
};

} // namespace cvqkd
