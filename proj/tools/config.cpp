#include "config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <set>

#include "a3t/data.hpp"

namespace a3t::cli {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::string_view unquote(std::string_view s) {
  if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front()) {
    return s.substr(1, s.size() - 2);
  }
  return s;
}

bool valid_name(std::string_view s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '-';
  });
}

template <typename T>
void parse_integer(std::string_view text, T& out) {
  const auto t = trim(text);
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
  if (ec != std::errc{} || ptr != t.data() + t.size() || t.empty()) {
    throw ConfigError("expected a non-negative integer, got '" + std::string(text) + "'");
  }
}

}  // namespace

std::vector<IniEntry> parse_ini(std::string_view text) {
  std::vector<IniEntry> out;
  std::string section;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    line = trim(line);
    if (line.empty() || line.front() == '#' || line.front() == ';') continue;
    const auto where = " (line " + std::to_string(line_no) + ")";
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("unterminated section header" + where);
      const auto name = trim(line.substr(1, line.size() - 2));
      if (!valid_name(name)) throw ConfigError("bad section name '" + std::string(name) + "'" + where);
      section = std::string(name);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError("expected key = value" + where);
    const auto key = trim(line.substr(0, eq));
    if (!valid_name(key)) throw ConfigError("bad key '" + std::string(key) + "'" + where);
    std::string_view value = trim(line.substr(eq + 1));
    // Trailing comments need whitespace before the marker.
    for (std::size_t i = 1; i < value.size(); ++i) {
      if ((value[i] == '#' || value[i] == ';') && (value[i - 1] == ' ' || value[i - 1] == '\t')) {
        if (value.front() != '"' && value.front() != '\'') value = trim(value.substr(0, i));
        break;
      }
    }
    out.push_back({section.empty() ? std::string(key) : section + "." + std::string(key),
                   std::string(value), line_no});
  }
  return out;
}

void parse_value(std::string_view text, double& out) {
  const auto t = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc{} || ptr != t.data() + t.size() || t.empty() || !std::isfinite(v)) {
    throw ConfigError("expected a finite number, got '" + std::string(text) + "'");
  }
  out = v;
}

unsigned long long parse_unsigned(std::string_view text) {
  unsigned long long v = 0;
  parse_integer(text, v);
  return v;
}

void parse_value(std::string_view text, int& out) {
  const auto t = trim(text);
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
  if (ec != std::errc{} || ptr != t.data() + t.size() || t.empty()) {
    throw ConfigError("expected an integer, got '" + std::string(text) + "'");
  }
}

void parse_value(std::string_view text, bool& out) {
  const auto t = trim(text);
  if (t == "true" || t == "yes" || t == "on" || t == "1") {
    out = true;
  } else if (t == "false" || t == "no" || t == "off" || t == "0") {
    out = false;
  } else {
    throw ConfigError("expected true or false, got '" + std::string(text) + "'");
  }
}

void parse_value(std::string_view text, std::string& out) { out = std::string(unquote(trim(text))); }

std::vector<std::string> split_list(std::string_view text) {
  std::vector<std::string> items;
  const auto t = trim(text);
  if (t.empty()) return items;
  std::size_t start = 0;
  while (true) {
    const auto comma = t.find(',', start);
    const auto item = trim(t.substr(start, comma - start));
    if (item.empty()) throw ConfigError("empty list item in '" + std::string(text) + "'");
    items.emplace_back(unquote(item));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return items;
}

std::string format_value(double v) { return format_double(v); }
std::string format_value(int v) { return std::to_string(v); }
std::string format_value(bool v) { return v ? "true" : "false"; }
std::string format_value(const std::string& v) { return v; }

void Schema::add(std::string key, std::string help, std::function<void(std::string_view)> parse,
                 std::function<std::string()> print) {
  if (find(key)) throw std::logic_error("config key registered twice: " + key);
  fields_.push_back({std::move(key), std::move(help), std::move(parse), std::move(print)});
}

const Schema::Field* Schema::find(std::string_view key) const {
  for (const auto& f : fields_) {
    if (f.key == key) return &f;
  }
  return nullptr;
}

bool Schema::has(std::string_view key) const { return find(key) != nullptr; }

void Schema::set(std::string_view key, std::string_view value) {
  const Field* f = find(key);
  if (!f) throw ConfigError("unknown config key '" + std::string(key) + "'");
  try {
    f->parse(value);
  } catch (const ConfigError& e) {
    throw ConfigError(std::string(key) + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string(key) + ": " + e.what());
  }
}

void Schema::apply(const std::vector<IniEntry>& entries) {
  std::set<std::string> seen;
  for (const auto& e : entries) {
    const auto where = " (line " + std::to_string(e.line) + ")";
    if (!seen.insert(e.key).second) throw ConfigError("duplicate key '" + e.key + "'" + where);
    try {
      set(e.key, e.value);
    } catch (const ConfigError& err) {
      throw ConfigError(err.what() + where);
    }
  }
}

std::string Schema::dump() const {
  std::string out;
  std::vector<std::string> sections;
  for (const auto& f : fields_) {
    const auto dot = f.key.rfind('.');
    const std::string sec = dot == std::string::npos ? "" : f.key.substr(0, dot);
    if (std::find(sections.begin(), sections.end(), sec) == sections.end()) sections.push_back(sec);
  }
  // Top-level keys must come before any section header.
  std::stable_partition(sections.begin(), sections.end(), [](const std::string& s) { return s.empty(); });
  for (const auto& sec : sections) {
    if (!sec.empty()) out += "\n[" + sec + "]\n";
    for (const auto& f : fields_) {
      const auto dot = f.key.rfind('.');
      const std::string fsec = dot == std::string::npos ? "" : f.key.substr(0, dot);
      if (fsec != sec) continue;
      const std::string name = dot == std::string::npos ? f.key : f.key.substr(dot + 1);
      if (!f.help.empty()) out += "# " + f.help + "\n";
      out += name + " = " + f.print() + "\n";
    }
  }
  return out;
}

}  // namespace a3t::cli
