#pragma once

// Key-value configuration: INI-style text with [section] headers (sections
// may be dotted, e.g. [moons.train]) and `key = value` lines. Lists are
// comma separated. Unknown keys are errors.

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <concepts>
#include <limits>
#include <vector>

namespace a3t::cli {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IniEntry {
  std::string key;  // "section.name", or "name" before any section
  std::string value;
  std::size_t line = 0;
};

std::vector<IniEntry> parse_ini(std::string_view text);

// Text conversions used by the schema; throw ConfigError on bad input.
void parse_value(std::string_view text, double& out);
unsigned long long parse_unsigned(std::string_view text);

template <std::unsigned_integral T>
  requires(!std::same_as<T, bool>)
void parse_value(std::string_view text, T& out) {
  const auto v = parse_unsigned(text);
  if (v > std::numeric_limits<T>::max()) throw ConfigError("value out of range: " + std::string(text));
  out = static_cast<T>(v);
}
void parse_value(std::string_view text, int& out);
void parse_value(std::string_view text, bool& out);
void parse_value(std::string_view text, std::string& out);
std::vector<std::string> split_list(std::string_view text);

std::string format_value(double v);
template <std::unsigned_integral T>
  requires(!std::same_as<T, bool>)
std::string format_value(T v) {
  return std::to_string(v);
}
std::string format_value(int v);
std::string format_value(bool v);
std::string format_value(const std::string& v);

template <typename T>
void parse_value(std::string_view text, std::vector<T>& out) {
  out.clear();
  for (const auto& item : split_list(text)) {
    T v{};
    parse_value(item, v);
    out.push_back(v);
  }
}

template <typename T>
std::string format_value(const std::vector<T>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    s += format_value(v[i]);
  }
  return s;
}

// Registry of configurable fields bound to variables.
class Schema {
 public:
  template <typename T>
  void bind(std::string key, T& target, std::string help) {
    add(std::move(key), std::move(help),
        [&target](std::string_view text) { parse_value(text, target); },
        [&target] { return format_value(target); });
  }

  void add(std::string key, std::string help, std::function<void(std::string_view)> parse,
           std::function<std::string()> print);

  void set(std::string_view key, std::string_view value);
  void apply(const std::vector<IniEntry>& entries);
  bool has(std::string_view key) const;

  // Every field with its current value, grouped by section, as config text.
  std::string dump() const;

 private:
  struct Field {
    std::string key;
    std::string help;
    std::function<void(std::string_view)> parse;
    std::function<std::string()> print;
  };
  const Field* find(std::string_view key) const;
  std::vector<Field> fields_;
};

}  // namespace a3t::cli
