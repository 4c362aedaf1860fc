#pragma once

// Brute-force reference implementations used by the tests. They follow the
// defining predicates literally and make no attempt to be fast.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "qref/qref.hpp"

namespace oracle {

using qref::Tokens;

inline std::string q(const qref::SessionEvent& ev) {
  std::string s;
  for (const auto& t : ev.tokens) s += (s.empty() ? "" : " ") + t;
  return s;
}

/// In-session pairs: for every two events of one session, the later one is
/// the target when it sits at most max_hops positions after the source.
inline std::set<std::pair<std::string, std::string>> in_session(
    const std::vector<qref::SessionEvent>& events, std::size_t max_hops, double threshold,
    const qref::SignalWeights& w) {
  auto position = [&](const qref::SessionEvent& ev) {
    std::size_t pos = 0;
    for (const auto& other : events) {
      if (other.session_id == ev.session_id && other.ts < ev.ts) ++pos;
    }
    return pos;
  };
  std::set<std::pair<std::string, std::string>> out;
  for (const auto& a : events) {
    for (const auto& b : events) {
      if (a.session_id != b.session_id) continue;
      const auto pa = position(a), pb = position(b);
      if (!(pa < pb) || pb - pa > max_hops) continue;
      double score = 0.0;
      for (const auto& e : b.engagements) score += w.weight(e.signal);
      if (score < threshold) continue;
      if (q(a) == q(b)) continue;
      out.emplace(q(a), q(b));
    }
  }
  return out;
}

inline std::set<std::pair<std::string, std::string>> edges(
    const std::vector<qref::SessionEvent>& events, const std::set<std::string>& filter) {
  std::set<std::pair<std::string, std::string>> out;
  for (const auto& ev : events) {
    for (const auto& e : ev.engagements) {
      if (filter.count(e.signal)) out.emplace(q(ev), e.item_id);
    }
  }
  return out;
}

inline std::vector<std::string> shared(const std::set<std::pair<std::string, std::string>>& edges,
                                       const std::string& a, const std::string& b) {
  std::vector<std::string> out;
  for (const auto& [qa, item] : edges) {
    if (qa == a && edges.count({b, item})) out.push_back(item);
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline std::vector<std::string> graph_queries(
    const std::set<std::pair<std::string, std::string>>& edges) {
  std::set<std::string> qs;
  for (const auto& [qa, item] : edges) qs.insert(qa);
  return {qs.begin(), qs.end()};
}

/// Co-engaged pairs with their shared items. A pair qualifies when it shares
/// enough items and the two queries were issued in at least two sessions
/// between them.
inline std::map<std::pair<std::string, std::string>, std::vector<std::string>> co_engaged(
    const std::vector<qref::SessionEvent>& events, const std::set<std::string>& filter,
    std::size_t min_shared) {
  const auto es = edges(events, filter);
  const auto qs = graph_queries(es);
  std::map<std::pair<std::string, std::string>, std::vector<std::string>> out;
  for (const auto& a : qs) {
    for (const auto& b : qs) {
      if (!(a < b)) continue;
      auto items = shared(es, a, b);
      if (items.size() < min_shared) continue;
      std::set<std::string> sessions;
      for (const auto& ev : events) {
        if (q(ev) == a || q(ev) == b) sessions.insert(ev.session_id);
      }
      if (sessions.size() < 2) continue;
      out[{a, b}] = std::move(items);
    }
  }
  return out;
}

/// One-hop pairs: no shared item, but both share enough items with some
/// third query. Records the smallest bridge and the smallest witness items.
inline std::map<std::pair<std::string, std::string>, std::tuple<std::string, std::string, std::string>>
one_hop(const std::vector<qref::SessionEvent>& events, const std::set<std::string>& filter,
        std::size_t min_shared) {
  const auto es = edges(events, filter);
  const auto qs = graph_queries(es);
  std::map<std::pair<std::string, std::string>, std::tuple<std::string, std::string, std::string>>
      out;
  for (const auto& a : qs) {
    for (const auto& b : qs) {
      if (!(a < b) || !shared(es, a, b).empty()) continue;
      for (const auto& bridge : qs) {
        if (bridge == a || bridge == b) continue;
        const auto x = shared(es, a, bridge);
        const auto y = shared(es, bridge, b);
        if (x.size() < min_shared || y.size() < min_shared) continue;
        out.emplace(std::make_pair(a, b), std::make_tuple(bridge, x.front(), y.front()));
        break;  // qs is sorted, so this is the smallest bridge
      }
    }
  }
  return out;
}

/// Rewrite type by counting with std::multiset, one independent predicate
/// per type. Returns every type whose predicate holds.
inline std::vector<qref::RewriteType> matching_types(const Tokens& src, const Tokens& pred) {
  std::multiset<std::string> s(src.begin(), src.end()), p(pred.begin(), pred.end());
  std::size_t kept = 0;
  {
    auto rest = p;
    for (const auto& t : s) {
      auto it = rest.find(t);
      if (it != rest.end()) {
        ++kept;
        rest.erase(it);
      }
    }
  }
  const std::size_t dropped = s.size() - kept, added = p.size() - kept;
  using T = qref::RewriteType;
  std::vector<T> out;
  if (p.empty()) out.push_back(T::Empty);
  if (!p.empty() && dropped == 0 && added == 0) out.push_back(T::Same);
  if (!p.empty() && dropped == 0 && added > 0) out.push_back(T::SuperSet);
  if (!p.empty() && added == 0 && dropped > 0) out.push_back(T::SubSet);
  const bool all_three = dropped > 0 && added > 0 && kept > 0;
  if (all_three && p.size() == s.size()) out.push_back(T::Replace);
  if (all_three && p.size() < s.size()) out.push_back(T::SubSetRep);
  if (all_three && p.size() > s.size()) out.push_back(T::SupSetRep);
  if (!p.empty() && kept == 0 && dropped > 0 && added > 0) out.push_back(T::Other);
  return out;
}

/// rats = (1/N) * sum of 1[type(prediction) == type(gold)], any of the first k.
inline double rats(const std::vector<qref::EvalInstance>& instances, std::size_t k = 1) {
  double sum = 0.0;
  for (const auto& inst : instances) {
    const auto gold = matching_types(inst.source, inst.gold).at(0);
    bool hit = false;
    for (std::size_t c = 0; c < std::min(k, inst.candidates.size()); ++c) {
      hit = hit || matching_types(inst.source, inst.candidates[c]).at(0) == gold;
    }
    sum += hit ? 1.0 : 0.0;
  }
  return sum / static_cast<double>(instances.size());
}

inline double multiset_overlap(const Tokens& a, const Tokens& b) {
  std::multiset<std::string> rest(b.begin(), b.end());
  double n = 0;
  for (const auto& t : a) {
    auto it = rest.find(t);
    if (it != rest.end()) {
      ++n;
      rest.erase(it);
    }
  }
  return n;
}

inline double f1(const Tokens& gold, const Tokens& pred) {
  if (pred.empty()) return 0.0;
  const double m = multiset_overlap(gold, pred);
  const double r = m / static_cast<double>(gold.size());
  const double p = m / static_cast<double>(pred.size());
  return r + p == 0.0 ? 0.0 : 2 * r * p / (r + p);
}

/// Per-instance recall of the best-F1 candidate among the first k.
inline double best_of_k_recall(const qref::EvalInstance& inst, std::size_t k) {
  double best_f1 = -1.0, recall = 0.0;
  for (std::size_t c = 0; c < std::min(k, inst.candidates.size()); ++c) {
    const double f = f1(inst.gold, inst.candidates[c]);
    if (f > best_f1) {
      best_f1 = f;
      recall = multiset_overlap(inst.gold, inst.candidates[c]) / static_cast<double>(inst.gold.size());
    }
  }
  return recall;
}

/// Items scored by the number of distinct query tokens in their title.
inline std::vector<std::string> recall_set(const std::map<std::string, Tokens>& items,
                                           const Tokens& query, std::size_t k) {
  std::set<std::string> qset(query.begin(), query.end());
  std::vector<std::pair<long, std::string>> scored;
  for (const auto& [id, title] : items) {
    std::set<std::string> tset(title.begin(), title.end());
    long n = 0;
    for (const auto& t : qset) n += static_cast<long>(tset.count(t));
    if (n > 0) scored.emplace_back(-n, id);
  }
  std::sort(scored.begin(), scored.end());
  std::vector<std::string> out;
  for (std::size_t i = 0; i < std::min(k, scored.size()); ++i) out.push_back(scored[i].second);
  return out;
}

// ---------------------------------------------------------------------------
// Random inputs

inline Tokens random_tokens(std::mt19937_64& rng, std::size_t min_len, std::size_t max_len,
                            std::size_t vocab) {
  std::uniform_int_distribution<std::size_t> len(min_len, max_len), tok(0, vocab - 1);
  Tokens out(len(rng));
  for (auto& t : out) t = "w" + std::to_string(tok(rng));
  return out;
}

/// Small random log over a tiny vocabulary so queries and items collide often.
inline std::vector<qref::SessionEvent> random_events(std::uint64_t seed, std::size_t n_events,
                                                     std::size_t n_sessions = 25,
                                                     std::size_t n_queries = 15,
                                                     std::size_t n_items = 12) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> session(0, n_sessions - 1), query(0, n_queries - 1),
      item(0, n_items - 1), n_eng(0, 2), sig(0, 5);
  static const char* kSignals[] = {"click", "click", "click", "bought", "bid", "add_to_cart"};
  std::map<std::size_t, std::int64_t> clock;
  std::vector<qref::SessionEvent> out;
  for (std::size_t i = 0; i < n_events; ++i) {
    const auto s = session(rng);
    auto& ts = clock[s];
    ts += 1 + static_cast<std::int64_t>(rng() % 1000);
    std::vector<qref::Engagement> eng;
    for (std::size_t e = n_eng(rng); e > 0; --e) {
      eng.push_back({"item" + std::to_string(item(rng)), kSignals[sig(rng)]});
    }
    const auto qi = query(rng);
    out.push_back(qref::make_event("s" + std::to_string(s), ts,
                                   "q" + std::to_string(qi % 5) + " t" + std::to_string(qi),
                                   "cat" + std::to_string(qi % 3), std::move(eng)));
  }
  return out;
}

}  // namespace oracle
