#pragma once
// Flat typed key = value configuration with command-line overrides.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rankdiv/error.hpp"

namespace rankdiv {

namespace detail {

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline double parse_double(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &pos);
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': '" + v + "' is not a number");
  }
  if (pos != v.size()) throw ConfigError("key '" + key + "': '" + v + "' is not a number");
  return x;
}

// Accepts "10000" as well as "1e4".
inline long long parse_integer(const std::string& key, const std::string& v) {
  const double x = parse_double(key, v);
  if (x != std::floor(x) || std::abs(x) > 9e15) throw ConfigError("key '" + key + "': '" + v + "' is not an integer");
  return static_cast<long long>(x);
}

}  // namespace detail

/// Every getter records the value it resolved (explicit or default), so
/// `resolved()` is the complete configuration a run actually used.
class Config {
 public:
  Config() = default;

  static Config from_file(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file " + path.string());
    Config c;
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
      ++lineno;
      if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
      line = detail::trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected key = value");
      c.set(detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
    }
    return c;
  }

  void set(const std::string& key, const std::string& value) {
    if (key.empty()) throw ConfigError("empty config key");
    values_[key] = value;
  }

  /// "key=value" override.
  void set_assignment(const std::string& kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + kv + "' is not key=value");
    set(detail::trim(kv.substr(0, eq)), detail::trim(kv.substr(eq + 1)));
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::string get_string(const std::string& key, const std::string& def) {
    const auto v = raw(key, def);
    resolved_[key] = v;
    return v;
  }
  double get_double(const std::string& key, double def) {
    const double v = has(key) ? detail::parse_double(key, values_.at(key)) : def;
    resolved_[key] = v;
    return v;
  }
  long long get_int(const std::string& key, long long def) {
    const long long v = has(key) ? detail::parse_integer(key, values_.at(key)) : def;
    resolved_[key] = v;
    return v;
  }
  std::uint64_t get_seed(const std::string& key, std::uint64_t def) {
    std::uint64_t v = def;
    if (has(key)) {
      try {
        std::size_t pos = 0;
        v = std::stoull(values_.at(key), &pos, 0);
        if (pos != values_.at(key).size()) throw ConfigError("");
      } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': '" + values_.at(key) + "' is not an unsigned integer");
      }
    }
    resolved_[key] = v;
    return v;
  }
  bool get_bool(const std::string& key, bool def) {
    bool v = def;
    if (has(key)) {
      const auto& s = values_.at(key);
      if (s == "true" || s == "1" || s == "on" || s == "yes") v = true;
      else if (s == "false" || s == "0" || s == "off" || s == "no") v = false;
      else throw ConfigError("key '" + key + "': '" + s + "' is not a boolean");
    }
    resolved_[key] = v;
    return v;
  }
  std::vector<std::string> get_strings(const std::string& key, const std::vector<std::string>& def) {
    auto v = has(key) ? detail::split_list(values_.at(key)) : def;
    if (v.empty()) throw ConfigError("key '" + key + "' must be a nonempty list");
    resolved_[key] = v;
    return v;
  }
  std::vector<double> get_doubles(const std::string& key, const std::vector<double>& def) {
    std::vector<double> v = def;
    if (has(key)) {
      v.clear();
      for (const auto& s : detail::split_list(values_.at(key))) v.push_back(detail::parse_double(key, s));
    }
    if (v.empty()) throw ConfigError("key '" + key + "' must be a nonempty list");
    resolved_[key] = v;
    return v;
  }
  std::vector<long long> get_ints(const std::string& key, const std::vector<long long>& def) {
    std::vector<long long> v = def;
    if (has(key)) {
      v.clear();
      for (const auto& s : detail::split_list(values_.at(key))) v.push_back(detail::parse_integer(key, s));
    }
    if (v.empty()) throw ConfigError("key '" + key + "' must be a nonempty list");
    resolved_[key] = v;
    return v;
  }

  /// Throws on keys that no getter asked for (usually a typo).
  void check_all_used() const {
    for (const auto& [k, v] : values_) {
      if (!resolved_.contains(k)) throw ConfigError("unknown config key '" + k + "'");
    }
  }

  const nlohmann::json& resolved() const { return resolved_; }

 private:
  std::string raw(const std::string& key, const std::string& def) const {
    auto it = values_.find(key);
    return it == values_.end() ? def : it->second;
  }

  std::map<std::string, std::string> values_;
  nlohmann::json resolved_ = nlohmann::json::object();
};

}  // namespace rankdiv
