#pragma once

// Minimal `key = value` configuration documents.
//
//   # comment
//   miner.max_hops = 3
//
// Keys are unique. Readers consume keys with get_*(); finish() rejects any
// key that nobody asked for, so typos surface as config errors.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "qref/error.hpp"

namespace qref {

inline std::string_view trim(std::string_view s) {
  constexpr std::string_view ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.emplace_back(s.substr(start));
      return out;
    }
    out.emplace_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

/// Shortest decimal form that parses back to the same double.
inline std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  (void)ec;
  return std::string(buf, ptr);
}

class KeyValueDoc {
 public:
  static KeyValueDoc parse(std::istream& in, std::string origin = "<config>") {
    KeyValueDoc doc;
    doc.origin_ = std::move(origin);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      auto view = trim(line);
      if (view.empty() || view.front() == '#') continue;
      const auto eq = view.find('=');
      if (eq == std::string_view::npos) {
        throw Error(ErrorKind::Config,
                    doc.origin_ + ":" + std::to_string(lineno) + ": expected 'key = value'",
                    lineno);
      }
      std::string key(trim(view.substr(0, eq)));
      std::string value(trim(view.substr(eq + 1)));
      if (key.empty()) {
        throw Error(ErrorKind::Config, doc.origin_ + ":" + std::to_string(lineno) + ": empty key",
                    lineno);
      }
      if (!doc.values_.emplace(key, Entry{value, lineno}).second) {
        throw Error(ErrorKind::Config,
                    doc.origin_ + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'",
                    lineno);
      }
    }
    return doc;
  }

  static KeyValueDoc parse_string(const std::string& text, std::string origin = "<config>") {
    std::istringstream in(text);
    return parse(in, std::move(origin));
  }

  static KeyValueDoc load(const std::string& path) {
    std::ifstream in(path);
    if (!in) io_error("cannot open config file '" + path + "'");
    return parse(in, path);
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  /// Keys starting with prefix, in sorted order.
  std::vector<std::string> keys_with_prefix(std::string_view prefix) const {
    std::vector<std::string> out;
    for (const auto& [k, v] : values_) {
      if (k.size() >= prefix.size() && std::string_view(k).substr(0, prefix.size()) == prefix) {
        out.push_back(k);
      }
    }
    return out;
  }

  std::string get_string(const std::string& key, const std::string& fallback) {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    used_.insert(key);
    return it->second.value;
  }

  std::string require_string(const std::string& key) {
    auto it = values_.find(key);
    if (it == values_.end()) config_error(origin_ + ": missing required key '" + key + "'");
    used_.insert(key);
    return it->second.value;
  }

  double get_double(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    const auto text = get_string(key, "");
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(value)) {
      fail(key, "expected a finite number, got '" + text + "'");
    }
    return value;
  }

  std::uint64_t get_uint(const std::string& key, std::uint64_t fallback) {
    if (!has(key)) return fallback;
    const auto text = get_string(key, "");
    std::uint64_t value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
      fail(key, "expected a non-negative integer, got '" + text + "'");
    }
    return value;
  }

  [[noreturn]] void fail(const std::string& key, const std::string& message) const {
    auto it = values_.find(key);
    const std::size_t line = it == values_.end() ? 0 : it->second.line;
    throw Error(ErrorKind::Config,
                origin_ + ":" + std::to_string(line) + ": key '" + key + "': " + message, line);
  }

  void finish() const {
    for (const auto& [k, v] : values_) {
      if (!used_.count(k)) {
        throw Error(ErrorKind::Config,
                    origin_ + ":" + std::to_string(v.line) + ": unknown key '" + k + "'", v.line);
      }
    }
  }

  const std::string& origin() const { return origin_; }

 private:
  struct Entry {
    std::string value;
    std::size_t line;
  };
  std::string origin_;
  std::map<std::string, Entry> values_;
  std::set<std::string> used_;
};

}  // namespace qref
