#pragma once

// Reformulation mining over a SessionLog:
//   * in-session n-hop pairs (source followed by an engaged target),
//   * cross-session co-engaged pairs (queries sharing engaged items),
//   * cross-session one-hop pairs (queries linked only through a bridge query).

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <variant>
#include <vector>

#include "qref/corpus.hpp"
#include "qref/labels.hpp"

namespace qref {

struct InSessionEvidence {
  std::string session_id;
  std::size_t hops = 0;

  friend auto operator<=>(const InSessionEvidence&, const InSessionEvidence&) = default;
};

struct CoEngagedEvidence {
  std::vector<std::string> shared_items;  // sorted

  friend auto operator<=>(const CoEngagedEvidence&, const CoEngagedEvidence&) = default;
};

struct OneHopEvidence {
  std::string bridge_query;
  std::string first_item;   // shared by source and bridge
  std::string second_item;  // shared by bridge and target

  friend auto operator<=>(const OneHopEvidence&, const OneHopEvidence&) = default;
};

using Evidence = std::variant<InSessionEvidence, CoEngagedEvidence, OneHopEvidence>;

struct QueryPair {
  Tokens source_tokens;
  Tokens target_tokens;
  std::string source_query;
  std::string target_query;
  std::string source_category;
  std::string target_category;
  Provenance provenance = Provenance::InSession;
  Evidence evidence;
  std::optional<IntentBucket> bucket;

  friend bool operator==(const QueryPair&, const QueryPair&) = default;
};

inline QueryPair make_query_pair(Provenance provenance, const std::string& source,
                           const std::string& target, Evidence evidence,
                           std::string source_category = {}, std::string target_category = {}) {
  QueryPair p;
  p.source_tokens = normalize(source);
  p.target_tokens = normalize(target);
  p.source_query = join_tokens(p.source_tokens);
  p.target_query = join_tokens(p.target_tokens);
  p.source_category = std::move(source_category);
  p.target_category = std::move(target_category);
  p.provenance = provenance;
  p.evidence = std::move(evidence);
  return p;
}

struct MinerConfig {
  std::size_t max_hops = 3;
  double engagement_threshold = 1.0;
  std::size_t min_shared = 1;
  std::set<std::string> signal_filter = {signal::kClick};

  friend bool operator==(const MinerConfig&, const MinerConfig&) = default;
};

// ---------------------------------------------------------------------------
// In-session

/// Pairs (q_i, q_j) from one session with i < j <= i + max_hops whose target
/// event scores at least engagement_threshold. Deduplicated on (source,
/// target), first occurrence wins; sessions in id order, then source order.
inline std::vector<QueryPair> mine_in_session(const SessionLog& log, std::size_t max_hops,
                                              double engagement_threshold,
                                              const SignalWeights& weights) {
  if (max_hops < 1) config_error("max_hops must be >= 1");
  std::vector<QueryPair> out;
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& [sid, events] : log.sessions()) {
    std::vector<bool> engaged(events.size());
    for (std::size_t j = 0; j < events.size(); ++j) {
      engaged[j] = engagement_score(events[j], weights) >= engagement_threshold;
    }
    for (std::size_t i = 0; i < events.size(); ++i) {
      const auto source = events[i].query();
      const std::size_t last = std::min(events.size() - 1, i + max_hops);
      for (std::size_t j = i + 1; j <= last; ++j) {
        if (!engaged[j]) continue;
        const auto target = events[j].query();
        if (source == target || !seen.emplace(source, target).second) continue;
        out.push_back(make_query_pair(Provenance::InSession, source, target,
                                InSessionEvidence{sid, j - i}, events[i].category_id,
                                events[j].category_id));
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Co-click graph

/// Bipartite query-item graph. Query nodes are normalized query strings; only
/// queries and items with at least one edge are nodes.
class CoClickGraph {
 public:
  using SignalCounts = std::map<std::string, std::size_t>;

  static CoClickGraph build(const SessionLog& log,
                            const std::set<std::string>& signal_filter = {signal::kClick}) {
    if (signal_filter.empty()) config_error("co-click graph needs a non-empty signal filter");
    CoClickGraph g;
    log.for_each_event([&](const SessionEvent& ev) {
      bool any = false;
      const auto q = ev.query();
      for (const auto& e : ev.engagements) {
        if (!signal_filter.count(e.signal)) continue;
        ++g.edges_[q][e.item_id][e.signal];
        g.item_queries_[e.item_id].insert(q);
        any = true;
      }
      if (any) ++g.category_votes_[q][ev.category_id];
    });
    for (const auto& [q, items] : g.edges_) {
      auto& set = g.query_items_[q];
      for (const auto& [item, counts] : items) set.insert(item);
    }
    return g;
  }

  std::size_t query_count() const { return edges_.size(); }
  std::size_t item_count() const { return item_queries_.size(); }

  std::size_t edge_count() const {
    std::size_t n = 0;
    for (const auto& [q, items] : edges_) n += items.size();
    return n;
  }

  bool has_edge(const std::string& query, const std::string& item) const {
    auto it = edges_.find(query);
    return it != edges_.end() && it->second.count(item);
  }

  const SignalCounts& edge_counts(const std::string& query, const std::string& item) const {
    static const SignalCounts kEmpty;
    auto it = edges_.find(query);
    if (it == edges_.end()) return kEmpty;
    auto jt = it->second.find(item);
    return jt == it->second.end() ? kEmpty : jt->second;
  }

  std::vector<std::string> queries() const {
    std::vector<std::string> out;
    for (const auto& [q, items] : edges_) out.push_back(q);
    return out;
  }

  const std::set<std::string>& items_of(const std::string& query) const {
    static const std::set<std::string> kEmpty;
    auto it = query_items_.find(query);
    return it == query_items_.end() ? kEmpty : it->second;
  }

  const std::set<std::string>& queries_of(const std::string& item) const {
    static const std::set<std::string> kEmpty;
    auto it = item_queries_.find(item);
    return it == item_queries_.end() ? kEmpty : it->second;
  }

  std::vector<std::string> shared_items(const std::string& a, const std::string& b) const {
    const auto& ia = items_of(a);
    const auto& ib = items_of(b);
    std::vector<std::string> out;
    std::set_intersection(ia.begin(), ia.end(), ib.begin(), ib.end(), std::back_inserter(out));
    return out;
  }

  /// Number of items engaged under both queries.
  std::size_t co_engaged(const std::string& a, const std::string& b) const {
    if (a == b) return 0;
    return shared_items(a, b).size();
  }

  /// Queries sharing at least min_shared items with `query`, sorted.
  std::map<std::string, std::size_t> neighbors(const std::string& query,
                                               std::size_t min_shared) const {
    std::map<std::string, std::size_t> counts;
    for (const auto& item : items_of(query)) {
      for (const auto& other : queries_of(item)) {
        if (other != query) ++counts[other];
      }
    }
    std::erase_if(counts, [&](const auto& kv) { return kv.second < min_shared; });
    return counts;
  }

  /// Most frequent category among the events contributing this query's edges
  /// (ties go to the smaller id).
  std::string category_of(const std::string& query) const {
    auto it = category_votes_.find(query);
    if (it == category_votes_.end()) return {};
    std::string best;
    std::size_t best_count = 0;
    for (const auto& [cat, n] : it->second) {
      if (n > best_count) {
        best = cat;
        best_count = n;
      }
    }
    return best;
  }

 private:
  std::map<std::string, std::map<std::string, SignalCounts>> edges_;
  std::map<std::string, std::set<std::string>> query_items_;
  std::map<std::string, std::set<std::string>> item_queries_;
  std::map<std::string, std::map<std::string, std::size_t>> category_votes_;
};

inline CoClickGraph build_coclick_graph(const SessionLog& log,
                                        const std::set<std::string>& signal_filter = {
                                            signal::kClick}) {
  return CoClickGraph::build(log, signal_filter);
}

// ---------------------------------------------------------------------------
// Cross-session miners

/// Session ids in which each normalized query was issued.
inline std::map<std::string, std::set<std::string>> query_sessions(const SessionLog& log) {
  std::map<std::string, std::set<std::string>> out;
  log.for_each_event([&](const SessionEvent& ev) { out[ev.query()].insert(ev.session_id); });
  return out;
}

/// Unordered pairs sharing >= min_shared items and attested by two different
/// sessions, emitted as (smaller, larger) in lexicographic order.
inline std::vector<QueryPair> mine_cross_session_coengaged(const CoClickGraph& g,
                                                           const SessionLog& log,
                                                           std::size_t min_shared) {
  if (min_shared < 1) config_error("min_shared must be >= 1");
  const auto sessions = query_sessions(log);
  auto cross_session = [&](const std::string& a, const std::string& b) {
    auto ia = sessions.find(a);
    auto ib = sessions.find(b);
    if (ia == sessions.end() || ib == sessions.end()) return false;
    // False only when both were issued in exactly one and the same session.
    return !(ia->second.size() == 1 && ib->second == ia->second);
  };

  std::vector<QueryPair> out;
  for (const auto& q1 : g.queries()) {
    for (const auto& [q2, shared] : g.neighbors(q1, min_shared)) {
      if (!(q1 < q2) || !cross_session(q1, q2)) continue;
      out.push_back(make_query_pair(Provenance::CrossSessionCoEngaged, q1, q2,
                              CoEngagedEvidence{g.shared_items(q1, q2)}, g.category_of(q1),
                              g.category_of(q2)));
    }
  }
  return out;
}

/// Pairs with no shared item that are each co-engaged (>= min_shared) with a
/// common bridge query. The smallest bridge and, per hop, the smallest shared
/// item are recorded.
inline std::vector<QueryPair> mine_cross_session_onehop(const CoClickGraph& g,
                                                        std::size_t min_shared) {
  if (min_shared < 1) config_error("min_shared must be >= 1");
  std::map<std::pair<std::string, std::string>, OneHopEvidence> found;
  for (const auto& bridge : g.queries()) {
    const auto nbrs = g.neighbors(bridge, min_shared);
    for (auto a = nbrs.begin(); a != nbrs.end(); ++a) {
      for (auto b = std::next(a); b != nbrs.end(); ++b) {
        const auto& q1 = a->first;
        const auto& q2 = b->first;
        if (found.count({q1, q2}) || g.co_engaged(q1, q2) > 0) continue;
        // Bridges are visited in increasing order, so the first one found is smallest.
        found.emplace(std::make_pair(q1, q2),
                      OneHopEvidence{bridge, g.shared_items(q1, bridge).front(),
                                     g.shared_items(bridge, q2).front()});
      }
    }
  }
  std::vector<QueryPair> out;
  out.reserve(found.size());
  for (auto& [key, ev] : found) {
    out.push_back(make_query_pair(Provenance::CrossSessionOneHop, key.first, key.second, std::move(ev),
                            g.category_of(key.first), g.category_of(key.second)));
  }
  return out;
}

struct MinedPairs {
  std::vector<QueryPair> in_session;
  std::vector<QueryPair> co_engaged;
  std::vector<QueryPair> one_hop;

  std::vector<QueryPair> all() const {
    std::vector<QueryPair> out = in_session;
    out.insert(out.end(), co_engaged.begin(), co_engaged.end());
    out.insert(out.end(), one_hop.begin(), one_hop.end());
    return out;
  }
};

inline MinedPairs mine_all(const SessionLog& log, const MinerConfig& cfg,
                           const SignalWeights& weights) {
  MinedPairs out;
  out.in_session = mine_in_session(log, cfg.max_hops, cfg.engagement_threshold, weights);
  const auto graph = build_coclick_graph(log, cfg.signal_filter);
  out.co_engaged = mine_cross_session_coengaged(graph, log, cfg.min_shared);
  out.one_hop = mine_cross_session_onehop(graph, cfg.min_shared);
  return out;
}

// ---------------------------------------------------------------------------
// Pairs file: provenance, source, target, evidence (';'-joined),
// source category, target category[, bucket], tab separated.

inline std::string format_evidence(const Evidence& evidence) {
  return std::visit(
      [](const auto& ev) -> std::string {
        using T = std::decay_t<decltype(ev)>;
        if constexpr (std::is_same_v<T, InSessionEvidence>) {
          return ev.session_id + ";" + std::to_string(ev.hops);
        } else if constexpr (std::is_same_v<T, CoEngagedEvidence>) {
          std::string s;
          for (const auto& item : ev.shared_items) {
            if (!s.empty()) s.push_back(';');
            s += item;
          }
          return s;
        } else {
          return ev.bridge_query + ";" + ev.first_item + ";" + ev.second_item;
        }
      },
      evidence);
}

inline std::optional<Evidence> parse_evidence(Provenance provenance, const std::string& text) {
  auto parts = split(text, ';');
  auto all_non_empty = [&] {
    return std::all_of(parts.begin(), parts.end(), [](const auto& p) { return !p.empty(); });
  };
  switch (provenance) {
    case Provenance::InSession: {
      if (parts.size() != 2 || parts[0].empty() || parts[1].empty()) return std::nullopt;
      std::size_t hops = 0;
      auto [ptr, ec] = std::from_chars(parts[1].data(), parts[1].data() + parts[1].size(), hops);
      if (ec != std::errc{} || ptr != parts[1].data() + parts[1].size() || hops == 0) {
        return std::nullopt;
      }
      return InSessionEvidence{parts[0], hops};
    }
    case Provenance::CrossSessionCoEngaged:
      if (text.empty() || !all_non_empty()) return std::nullopt;
      return CoEngagedEvidence{parts};
    case Provenance::CrossSessionOneHop: {
      // Items never contain ';'; the bridge query might.
      if (parts.size() < 3) return std::nullopt;
      OneHopEvidence ev;
      ev.second_item = parts.back();
      parts.pop_back();
      ev.first_item = parts.back();
      parts.pop_back();
      for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) ev.bridge_query.push_back(';');
        ev.bridge_query += parts[i];
      }
      if (ev.bridge_query.empty() || ev.first_item.empty() || ev.second_item.empty()) {
        return std::nullopt;
      }
      return ev;
    }
  }
  return std::nullopt;
}

namespace detail {

inline void check_field(const std::string& value, const char* what) {
  if (value.find_first_of("\t\n") != std::string::npos) {
    validation_error(std::string(what) + " '" + value + "' contains a tab or newline");
  }
}

inline void check_evidence_ids(const Evidence& evidence) {
  auto check = [](const std::string& id) {
    if (id.find_first_of(";\t\n") != std::string::npos) {
      validation_error("identifier '" + id + "' contains ';', tab or newline");
    }
  };
  std::visit(
      [&](const auto& ev) {
        using T = std::decay_t<decltype(ev)>;
        if constexpr (std::is_same_v<T, InSessionEvidence>) {
          check(ev.session_id);
        } else if constexpr (std::is_same_v<T, CoEngagedEvidence>) {
          for (const auto& item : ev.shared_items) check(item);
        } else {
          check(ev.first_item);
          check(ev.second_item);
        }
      },
      evidence);
}

}  // namespace detail

inline void write_pairs(const std::vector<QueryPair>& pairs, std::ostream& out,
                        bool with_bucket = false) {
  for (const auto& p : pairs) {
    detail::check_field(p.source_query, "query");
    detail::check_field(p.target_query, "query");
    detail::check_evidence_ids(p.evidence);
    out << to_string(p.provenance) << '\t' << p.source_query << '\t' << p.target_query << '\t'
        << format_evidence(p.evidence) << '\t' << p.source_category << '\t' << p.target_category;
    if (with_bucket) {
      if (!p.bucket) validation_error("pair '" + p.source_query + "' has no bucket");
      out << '\t' << to_string(*p.bucket);
    }
    out << '\n';
  }
}

/// Reads a pairs file; a seventh column, when present, is the intent bucket.
inline std::vector<QueryPair> read_pairs(std::istream& in, const std::string& origin = "<pairs>") {
  std::vector<QueryPair> out;
  std::string line;
  std::size_t lineno = 0;
  auto fail = [&](const std::string& why) {
    throw Error(ErrorKind::Validation, origin + ":" + std::to_string(lineno) + ": " + why, lineno);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto f = split(line, '\t');
    if (f.size() != 6 && f.size() != 7) fail("expected 6 or 7 tab-separated fields");
    const auto prov = parse_provenance(f[0]);
    if (!prov) fail("unknown provenance '" + f[0] + "'");
    auto evidence = parse_evidence(*prov, f[3]);
    if (!evidence) fail("evidence '" + f[3] + "' does not match provenance " + f[0]);
    auto pair = make_query_pair(*prov, f[1], f[2], std::move(*evidence), f[4], f[5]);
    if (pair.source_tokens.empty() || pair.target_tokens.empty()) fail("empty query");
    if (pair.source_query == pair.target_query) fail("source equals target");
    if (f.size() == 7) {
      pair.bucket = parse_bucket(f[6]);
      if (!pair.bucket) fail("unknown bucket '" + f[6] + "'");
    }
    out.push_back(std::move(pair));
  }
  return out;
}

}  // namespace qref
