#pragma once

#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>

#include "sttcim/common.hpp"

namespace sttcim {

/// Line-oriented key=value file. `#` starts a comment; blank lines are
/// ignored. Keys must be unique. Every consumer marks the keys it reads so
/// the caller can reject typos via `unused_keys()`.
class KeyValueConfig {
 public:
  KeyValueConfig() = default;

  static KeyValueConfig parse(std::istream& in, const std::string& origin = "<config>") {
    KeyValueConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      std::string_view body = trim(line);
      if (body.empty()) continue;
      auto eq = body.find('=');
      if (eq == std::string_view::npos) {
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key=value");
      }
      std::string key{trim(body.substr(0, eq))};
      std::string value{trim(body.substr(eq + 1))};
      if (key.empty()) throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
      if (!cfg.values_.emplace(key, value).second) {
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
      }
    }
    return cfg;
  }

  static KeyValueConfig parse_string(const std::string& text) {
    std::istringstream in(text);
    return parse(in);
  }

  static KeyValueConfig load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    return parse(in, path);
  }

  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  /// Overwrites `out` when the key is present.
  void get(const std::string& key, double& out) const {
    auto it = values_.find(key);
    if (it == values_.end()) return;
    used_.insert(key);
    out = to_double(key, it->second);
  }

  void get(const std::string& key, int& out) const {
    double v = out;
    get(key, v);
    if (has(key)) {
      if (v != static_cast<int>(v)) throw ConfigError("key '" + key + "' must be an integer");
      out = static_cast<int>(v);
    }
  }

  void get(const std::string& key, bool& out) const {
    auto it = values_.find(key);
    if (it == values_.end()) return;
    used_.insert(key);
    const std::string& v = it->second;
    if (v == "1" || v == "true" || v == "yes") out = true;
    else if (v == "0" || v == "false" || v == "no") out = false;
    else throw ConfigError("key '" + key + "' expects a boolean, got '" + v + "'");
  }

  std::set<std::string> unused_keys() const {
    std::set<std::string> out;
    for (const auto& [k, v] : values_) {
      if (!used_.count(k)) out.insert(k);
    }
    return out;
  }

  void require_all_used() const {
    auto unused = unused_keys();
    if (!unused.empty()) throw ConfigError("unknown config key '" + *unused.begin() + "'");
  }

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  static std::string_view trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  }

  static double to_double(const std::string& key, const std::string& text) {
    std::size_t pos = 0;
    double v = 0;
    try {
      v = std::stod(text, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != text.size() || text.empty()) {
      throw ConfigError("key '" + key + "' expects a number, got '" + text + "'");
    }
    return v;
  }

  std::map<std::string, std::string> values_;
  mutable std::set<std::string> used_;
};

}  // namespace sttcim
