#pragma once

#include <map>
#include <string>
#include <variant>
#include <vector>

namespace htbnn {

/// Value of a `key = value` line: number, quoted string, boolean or a list of numbers.
using ConfigValue = std::variant<double, std::string, bool, std::vector<double>>;

/// Flat TOML-style key/value file. `[section]` headers prefix keys as "section.key";
/// `#` starts a comment outside strings.
class ConfigFile {
 public:
  static ConfigFile parse(const std::string& text);
  static ConfigFile load(const std::string& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::map<std::string, ConfigValue>& values() const noexcept { return values_; }
  void set(const std::string& key, ConfigValue v) { values_[key] = std::move(v); }

  double number(const std::string& key, double fallback) const;
  int integer(const std::string& key, int fallback) const;
  std::string string(const std::string& key, const std::string& fallback) const;
  bool boolean(const std::string& key, bool fallback) const;
  std::vector<double> list(const std::string& key, const std::vector<double>& fallback) const;

 private:
  std::map<std::string, ConfigValue> values_;
};

}  // namespace htbnn
