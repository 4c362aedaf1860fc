#pragma once

// Behavioral-log data model: query normalization, engagement scoring,
// the category taxonomy, and newline-delimited JSON session logs.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "qref/error.hpp"
#include "qref/keyvalue.hpp"

namespace qref {

using Tokens = std::vector<std::string>;

// ---------------------------------------------------------------------------
// Normalization

struct NormalizeConfig {
  /// Characters stripped from both ends of every token.
  std::string punctuation = R"(!"#$%&'()*+,-./:;<=>?@[\]^_`{|}~)";
};

namespace detail {

/// Byte length of the whitespace code point starting at s[i], or 0.
/// Covers ASCII whitespace plus the Unicode space separators in UTF-8.
inline std::size_t whitespace_length(std::string_view s, std::size_t i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  if (b0 == ' ' || (b0 >= '\t' && b0 <= '\r')) return 1;
  auto at = [&](std::size_t k) -> int {
    return i + k < s.size() ? static_cast<unsigned char>(s[i + k]) : -1;
  };
  if (b0 == 0xC2 && (at(1) == 0x85 || at(1) == 0xA0)) return 2;
  if (b0 == 0xE1 && at(1) == 0x9A && at(2) == 0x80) return 3;
  if (b0 == 0xE2 && at(1) == 0x80) {
    const int b2 = at(2);
    if ((b2 >= 0x80 && b2 <= 0x8A) || b2 == 0xA8 || b2 == 0xA9 || b2 == 0xAF) return 3;
  }
  if (b0 == 0xE2 && at(1) == 0x81 && at(2) == 0x9F) return 3;
  if (b0 == 0xE3 && at(1) == 0x80 && at(2) == 0x80) return 3;
  return 0;
}

}  // namespace detail

/// Lowercase (ASCII), split on any whitespace run, strip punctuation from
/// token ends, and drop tokens that end up empty. Idempotent.
inline Tokens normalize(std::string_view raw, const NormalizeConfig& cfg = {}) {
  Tokens tokens;
  std::string current;
  auto flush = [&] {
    std::string_view tok = current;
    const auto b = tok.find_first_not_of(cfg.punctuation);
    if (b != std::string_view::npos) {
      const auto e = tok.find_last_not_of(cfg.punctuation);
      tokens.emplace_back(tok.substr(b, e - b + 1));
    }
    current.clear();
  };
  for (std::size_t i = 0; i < raw.size();) {
    if (const auto ws = detail::whitespace_length(raw, i)) {
      flush();
      i += ws;
      continue;
    }
    char c = raw[i];
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    current.push_back(c);
    ++i;
  }
  flush();
  return tokens;
}

inline std::string join_tokens(std::span<const std::string> tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out.push_back(' ');
    out += t;
  }
  return out;
}

/// Canonical query string: the normalized tokens joined by single spaces.
inline std::string canonical_query(std::string_view raw, const NormalizeConfig& cfg = {}) {
  return join_tokens(normalize(raw, cfg));
}

// ---------------------------------------------------------------------------
// Engagement signals

namespace signal {
inline constexpr const char* kClick = "click";
inline constexpr const char* kBid = "bid";
inline constexpr const char* kAddToCart = "add_to_cart";
inline constexpr const char* kBought = "bought";
}  // namespace signal

struct Engagement {
  std::string item_id;
  std::string signal;

  friend bool operator==(const Engagement&, const Engagement&) = default;
};

/// Weight per engagement kind. The set of kinds is open: configs may add more.
class SignalWeights {
 public:
  static SignalWeights defaults() {
    SignalWeights w;
    w.set(signal::kClick, 1.0);
    w.set(signal::kBid, 3.0);
    w.set(signal::kAddToCart, 4.0);
    w.set(signal::kBought, 5.0);
    return w;
  }

  void set(const std::string& kind, double weight) {
    if (kind.empty()) config_error("signal kind must be non-empty");
    if (!std::isfinite(weight) || weight < 0.0) {
      config_error("signal '" + kind + "' needs a finite weight >= 0");
    }
    weights_[kind] = weight;
  }

  bool contains(const std::string& kind) const { return weights_.count(kind) != 0; }

  double weight(const std::string& kind) const {
    auto it = weights_.find(kind);
    if (it == weights_.end()) config_error("unknown engagement signal '" + kind + "'");
    return it->second;
  }

  const std::map<std::string, double>& all() const { return weights_; }

  friend bool operator==(const SignalWeights&, const SignalWeights&) = default;

 private:
  std::map<std::string, double> weights_;
};

// ---------------------------------------------------------------------------
// Events and logs

struct SessionEvent {
  std::string session_id;
  std::int64_t ts = 0;  // milliseconds, > 0
  std::string raw_query;
  Tokens tokens;  // normalize(raw_query)
  std::string category_id;
  std::vector<Engagement> engagements;

  std::string query() const { return join_tokens(tokens); }

  friend bool operator==(const SessionEvent&, const SessionEvent&) = default;
};

/// Sum of configured weights over the event's engagements.
inline double engagement_score(const SessionEvent& event, const SignalWeights& weights) {
  double score = 0.0;
  for (const auto& e : event.engagements) score += weights.weight(e.signal);
  return score;
}

inline SessionEvent make_event(std::string session_id, std::int64_t ts, std::string raw_query,
                               std::string category_id, std::vector<Engagement> engagements = {},
                               const NormalizeConfig& cfg = {}) {
  SessionEvent ev;
  ev.session_id = std::move(session_id);
  ev.ts = ts;
  ev.tokens = normalize(raw_query, cfg);
  ev.raw_query = std::move(raw_query);
  ev.category_id = std::move(category_id);
  ev.engagements = std::move(engagements);
  return ev;
}

/// Events grouped by session, sessions ordered by id, events by timestamp.
/// Immutable once built.
class SessionLog {
 public:
  using Session = std::vector<SessionEvent>;

  SessionLog() = default;

  /// Groups events by session id, keeping their relative order. Throws a
  /// validation error when a session's timestamps are not strictly increasing
  /// or an event breaks a field invariant.
  static SessionLog from_events(std::vector<SessionEvent> events) {
    SessionLog log;
    for (auto& ev : events) {
      check_event(ev);
      auto& session = log.sessions_[ev.session_id];
      if (!session.empty() && session.back().ts >= ev.ts) {
        validation_error("session '" + ev.session_id + "' has non-increasing timestamps (" +
                         std::to_string(session.back().ts) + " then " + std::to_string(ev.ts) +
                         ")");
      }
      session.push_back(std::move(ev));
      ++log.event_count_;
    }
    return log;
  }

  const std::map<std::string, Session>& sessions() const { return sessions_; }
  std::size_t session_count() const { return sessions_.size(); }
  std::size_t event_count() const { return event_count_; }
  bool empty() const { return event_count_ == 0; }

  template <typename F>
  void for_each_event(F&& f) const {
    for (const auto& [id, session] : sessions_) {
      for (const auto& ev : session) f(ev);
    }
  }

  std::vector<SessionEvent> events() const {
    std::vector<SessionEvent> out;
    out.reserve(event_count_);
    for_each_event([&](const SessionEvent& ev) { out.push_back(ev); });
    return out;
  }

  friend bool operator==(const SessionLog&, const SessionLog&) = default;

 private:
  static void check_event(const SessionEvent& ev) {
    if (ev.session_id.empty()) validation_error("event with empty session_id");
    if (ev.ts <= 0) {
      validation_error("session '" + ev.session_id + "': timestamp must be positive");
    }
    if (ev.tokens.empty()) {
      validation_error("session '" + ev.session_id + "': query '" + ev.raw_query +
                       "' normalizes to no tokens");
    }
    if (ev.category_id.empty()) {
      validation_error("session '" + ev.session_id + "': event without category");
    }
  }

  std::map<std::string, Session> sessions_;
  std::size_t event_count_ = 0;
};

// ---------------------------------------------------------------------------
// Taxonomy

/// Category tree with a single root. The file format is one node per line,
/// `<id> <parent-id>`, with `-` as the root's parent. Parents may be declared
/// after their children.
class Taxonomy {
 public:
  static Taxonomy parse(std::istream& in, const std::string& origin = "<taxonomy>") {
    Taxonomy tax;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      auto view = trim(line);
      if (view.empty() || view.front() == '#') continue;
      std::istringstream fields{std::string(view)};
      std::string id, parent, extra;
      if (!(fields >> id >> parent) || (fields >> extra)) {
        throw Error(ErrorKind::Config, origin + ":" + std::to_string(lineno) +
                                           ": expected '<category> <parent>'",
                    lineno);
      }
      if (!tax.parent_.emplace(id, parent == "-" ? std::string() : parent).second) {
        throw Error(ErrorKind::Config,
                    origin + ":" + std::to_string(lineno) + ": duplicate category '" + id + "'",
                    lineno);
      }
    }
    tax.finalize(origin);
    return tax;
  }

  static Taxonomy load(const std::string& path) {
    std::ifstream in(path);
    if (!in) io_error("cannot open taxonomy file '" + path + "'");
    return parse(in, path);
  }

  static Taxonomy from_edges(const std::vector<std::pair<std::string, std::string>>& edges) {
    std::ostringstream text;
    for (const auto& [child, parent] : edges) {
      text << child << ' ' << (parent.empty() ? "-" : parent) << '\n';
    }
    std::istringstream in(text.str());
    return parse(in);
  }

  bool contains(const std::string& id) const { return parent_.count(id) != 0; }
  const std::string& root() const { return root_; }
  std::size_t size() const { return parent_.size(); }

  bool is_leaf(const std::string& id) const {
    require(id);
    return !has_children_.count(id);
  }

  /// Empty for the root.
  const std::string& parent(const std::string& id) const {
    require(id);
    return parent_.at(id);
  }

  std::size_t depth(const std::string& id) const {
    require(id);
    std::size_t d = 0;
    for (const std::string* cur = &id; !parent_.at(*cur).empty(); cur = &parent_.at(*cur)) ++d;
    return d;
  }

  /// Depth-1 ancestor (the node itself when already at depth 1, root for root).
  std::string meta_category(const std::string& id) const {
    require(id);
    std::string cur = id;
    while (!parent_.at(cur).empty() && !parent_.at(parent_.at(cur)).empty()) {
      cur = parent_.at(cur);
    }
    return cur;
  }

  std::vector<std::string> leaves() const {
    std::vector<std::string> out;
    for (const auto& [id, p] : parent_) {
      if (!has_children_.count(id)) out.push_back(id);
    }
    return out;
  }

 private:
  void require(const std::string& id) const {
    if (!contains(id)) validation_error("unknown category '" + id + "'");
  }

  void finalize(const std::string& origin) {
    for (const auto& [id, p] : parent_) {
      if (p.empty()) {
        if (!root_.empty()) {
          config_error(origin + ": more than one root ('" + root_ + "', '" + id + "')");
        }
        root_ = id;
      } else {
        if (!parent_.count(p)) {
          config_error(origin + ": category '" + id + "' has undeclared parent '" + p + "'");
        }
        has_children_.insert(p);
      }
    }
    if (root_.empty()) config_error(origin + ": taxonomy has no root");
    // Every node must reach the root; a cycle would never terminate.
    for (const auto& [id, p] : parent_) {
      std::string cur = id;
      for (std::size_t steps = 0; !parent_.at(cur).empty(); ++steps) {
        if (steps > parent_.size()) config_error(origin + ": cycle through '" + id + "'");
        cur = parent_.at(cur);
      }
    }
  }

  std::map<std::string, std::string> parent_;
  std::set<std::string> has_children_;
  std::string root_;
};

// ---------------------------------------------------------------------------
// Log files: one JSON object per line
//   {"session_id":..., "ts":..., "query":..., "category":...,
//    "engagements":[{"item":..., "signal":...}]}

enum class LogFormat { JsonLines };

inline void write_log(const SessionLog& log, std::ostream& out) {
  log.for_each_event([&](const SessionEvent& ev) {
    nlohmann::ordered_json j;
    j["session_id"] = ev.session_id;
    j["ts"] = ev.ts;
    j["query"] = ev.raw_query;
    j["category"] = ev.category_id;
    auto engagements = nlohmann::ordered_json::array();
    for (const auto& e : ev.engagements) {
      engagements.push_back({{"item", e.item_id}, {"signal", e.signal}});
    }
    j["engagements"] = std::move(engagements);
    out << j.dump() << '\n';
  });
}

inline void write_log(const SessionLog& log, const std::filesystem::path& path,
                      LogFormat = LogFormat::JsonLines) {
  std::ofstream out(path, std::ios::binary);
  if (!out) io_error("cannot write log file '" + path.string() + "'");
  write_log(log, out);
  if (!out) io_error("failed writing log file '" + path.string() + "'");
}

namespace detail {

inline const nlohmann::json& require_field(const nlohmann::json& obj, const char* name,
                                           std::size_t lineno, std::uint64_t offset) {
  auto it = obj.find(name);
  if (it == obj.end()) {
    throw Error(ErrorKind::Validation,
                "line " + std::to_string(lineno) + " (byte " + std::to_string(offset) +
                    "): missing field '" + name + "'",
                lineno, offset);
  }
  return *it;
}

[[noreturn]] inline void bad_field(const char* name, const char* expected, std::size_t lineno,
                                   std::uint64_t offset) {
  throw Error(ErrorKind::Validation,
              "line " + std::to_string(lineno) + " (byte " + std::to_string(offset) +
                  "): field '" + name + "' must be " + expected,
              lineno, offset);
}

}  // namespace detail

/// Parses a JSON-lines log. Malformed lines raise a validation error with the
/// 1-based line number and the byte offset into the stream. When a taxonomy
/// is given, every category must exist in it.
inline SessionLog load_log(std::istream& in, const Taxonomy* taxonomy = nullptr,
                           const NormalizeConfig& cfg = {}) {
  std::vector<SessionEvent> events;
  std::string line;
  std::size_t lineno = 0;
  std::uint64_t line_start = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::uint64_t offset = line_start;
    line_start += line.size() + 1;
    if (trim(line).empty()) continue;

    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      const std::uint64_t at = offset + (e.byte > 0 ? e.byte - 1 : 0);
      throw Error(ErrorKind::Validation,
                  "line " + std::to_string(lineno) + " (byte " + std::to_string(at) +
                      "): malformed JSON",
                  lineno, at);
    }
    if (!j.is_object()) detail::bad_field("<record>", "an object", lineno, offset);

    const auto& sid = detail::require_field(j, "session_id", lineno, offset);
    const auto& ts = detail::require_field(j, "ts", lineno, offset);
    const auto& query = detail::require_field(j, "query", lineno, offset);
    const auto& category = detail::require_field(j, "category", lineno, offset);
    const auto& engagements = detail::require_field(j, "engagements", lineno, offset);
    if (!sid.is_string() || sid.get_ref<const std::string&>().empty()) {
      detail::bad_field("session_id", "a non-empty string", lineno, offset);
    }
    if (!ts.is_number_integer() || ts.get<std::int64_t>() <= 0) {
      detail::bad_field("ts", "a positive integer", lineno, offset);
    }
    if (!query.is_string()) detail::bad_field("query", "a string", lineno, offset);
    if (!category.is_string() || category.get_ref<const std::string&>().empty()) {
      detail::bad_field("category", "a non-empty string", lineno, offset);
    }
    if (!engagements.is_array()) detail::bad_field("engagements", "an array", lineno, offset);

    std::vector<Engagement> parsed;
    for (const auto& e : engagements) {
      if (!e.is_object() || !e.contains("item") || !e.contains("signal") ||
          !e["item"].is_string() || !e["signal"].is_string()) {
        detail::bad_field("engagements", "a list of {item, signal} string objects", lineno,
                          offset);
      }
      parsed.push_back({e["item"].get<std::string>(), e["signal"].get<std::string>()});
    }

    auto ev = make_event(sid.get<std::string>(), ts.get<std::int64_t>(), query.get<std::string>(),
                         category.get<std::string>(), std::move(parsed), cfg);
    if (ev.tokens.empty()) {
      throw Error(ErrorKind::Validation,
                  "line " + std::to_string(lineno) + " (byte " + std::to_string(offset) +
                      "): query normalizes to no tokens",
                  lineno, offset);
    }
    if (taxonomy != nullptr && !taxonomy->contains(ev.category_id)) {
      throw Error(ErrorKind::Validation,
                  "line " + std::to_string(lineno) + " (byte " + std::to_string(offset) +
                      "): unknown category '" + ev.category_id + "'",
                  lineno, offset);
    }
    events.push_back(std::move(ev));
  }
  return SessionLog::from_events(std::move(events));
}

inline SessionLog load_log(const std::filesystem::path& path, LogFormat = LogFormat::JsonLines,
                           const Taxonomy* taxonomy = nullptr) {
  std::ifstream in(path, std::ios::binary);
  if (!in) io_error("cannot open log file '" + path.string() + "'");
  return load_log(in, taxonomy);
}

}  // namespace qref
