#pragma once

// Seeded synthetic search logs with planted reformulation patterns.
//
// Three pattern families are planted on top of background noise sessions:
//   * in-session chains: 2-3 queries in one session, only the last engaged;
//   * co-click cliques: c sessions whose distinct queries click one shared item;
//   * two-hop bridges: q1 -X- q3 -Y- q2 across three sessions, where q1, q2,
//     q3 and the items X, Y are reserved for that pattern alone.
// The manifest lists every pair the patterns guarantee.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "qref/corpus.hpp"
#include "qref/keyvalue.hpp"
#include "qref/labels.hpp"
#include "qref/random.hpp"

namespace qref {

/// Query template: one alternative is chosen per slot; empty alternatives make
/// a slot optional.
struct CategoryVocabulary {
  std::string category_id;
  std::vector<std::vector<std::string>> slots;
  std::size_t item_count = 0;
};

struct GeneratorSpec {
  std::size_t sessions = 0;
  std::vector<CategoryVocabulary> categories;
  std::size_t in_session_chains = 0;
  std::size_t coclick_cliques = 0;
  std::size_t clique_size = 2;
  std::size_t two_hop_bridges = 0;
  std::size_t noise_max_events = 4;
  double noise_click_probability = 0.5;
  double noise_purchase_probability = 0.05;
  std::int64_t start_ts = 1'700'000'000'000;

  /// Reads the key=value form:
  ///   sessions = 200
  ///   category.<leaf>.template = nike|adidas ; air max|ultraboost ; |womens
  ///   category.<leaf>.items = 30
  static GeneratorSpec parse(KeyValueDoc& doc) {
    GeneratorSpec spec;
    spec.sessions = doc.get_uint("sessions", 0);
    spec.in_session_chains = doc.get_uint("in_session_chains", 0);
    spec.coclick_cliques = doc.get_uint("coclick_cliques", 0);
    spec.clique_size = doc.get_uint("clique_size", 2);
    spec.two_hop_bridges = doc.get_uint("two_hop_bridges", 0);
    spec.noise_max_events = doc.get_uint("noise.max_events", 4);
    spec.noise_click_probability = doc.get_double("noise.click_probability", 0.5);
    spec.noise_purchase_probability = doc.get_double("noise.purchase_probability", 0.05);
    spec.start_ts = static_cast<std::int64_t>(doc.get_uint("start_ts", 1'700'000'000'000));

    std::set<std::string> seen;
    for (const auto& key : doc.keys_with_prefix("category.")) {
      const auto rest = key.substr(std::string("category.").size());
      const auto dot = rest.rfind('.');
      if (dot == std::string::npos) doc.fail(key, "expected category.<id>.template or .items");
      const auto id = rest.substr(0, dot);
      if (!seen.insert(id).second) continue;
      CategoryVocabulary vocab;
      vocab.category_id = id;
      const auto tmpl = doc.require_string("category." + id + ".template");
      for (const auto& slot : split(tmpl, ';')) {
        std::vector<std::string> alternatives;
        for (const auto& alt : split(slot, '|')) alternatives.emplace_back(trim(alt));
        vocab.slots.push_back(std::move(alternatives));
      }
      vocab.item_count = doc.get_uint("category." + id + ".items", 20);
      spec.categories.push_back(std::move(vocab));
    }
    return spec;
  }

  static GeneratorSpec load(const std::string& path) {
    auto doc = KeyValueDoc::load(path);
    auto spec = parse(doc);
    doc.finish();
    return spec;
  }

  void validate() const {
    if (sessions == 0) config_error("generator spec: sessions must be positive");
    if (categories.empty()) config_error("generator spec: empty query vocabulary");
    for (const auto& c : categories) {
      bool any = false;
      for (const auto& slot : c.slots) {
        if (slot.empty()) config_error("generator spec: empty slot in '" + c.category_id + "'");
        for (const auto& alt : slot) any = any || !normalize(alt).empty();
      }
      if (!any) config_error("generator spec: empty vocabulary for '" + c.category_id + "'");
      if (c.item_count == 0) config_error("generator spec: '" + c.category_id + "' has no items");
    }
    if (clique_size < 2) config_error("generator spec: clique_size must be >= 2");
    if (noise_max_events == 0) config_error("generator spec: noise.max_events must be >= 1");
    if (!(noise_click_probability >= 0.0 && noise_click_probability <= 1.0) ||
        !(noise_purchase_probability >= 0.0 && noise_purchase_probability <= 1.0)) {
      config_error("generator spec: probabilities must lie in [0, 1]");
    }
    if (start_ts <= 0) config_error("generator spec: start_ts must be positive");
    if (planted_sessions() > sessions) {
      config_error("generator spec: planted patterns need " + std::to_string(planted_sessions()) +
                   " sessions but only " + std::to_string(sessions) + " requested");
    }
  }

  std::size_t planted_sessions() const {
    return in_session_chains + coclick_cliques * clique_size + two_hop_bridges * 3;
  }
};

struct PlantedPair {
  Provenance provenance;
  std::string source;
  std::string target;

  friend auto operator<=>(const PlantedPair&, const PlantedPair&) = default;
};

struct InventoryItem {
  std::string item_id;
  std::string category_id;
  std::string title;

  friend bool operator==(const InventoryItem&, const InventoryItem&) = default;
};

struct GeneratedLog {
  SessionLog log;
  std::vector<PlantedPair> manifest;  // sorted, unique
  std::vector<InventoryItem> inventory;  // sorted by item id
};

namespace detail {

class QueryFactory {
 public:
  QueryFactory(const GeneratorSpec& spec, SplitMix64& rng) : spec_(spec), rng_(rng) {
    // Background pools: the queries noise sessions and non-reserved patterns draw from.
    for (std::size_t c = 0; c < spec.categories.size(); ++c) {
      std::vector<std::string> pool;
      std::set<std::string> seen;
      for (int attempt = 0; attempt < 200 && pool.size() < 24; ++attempt) {
        auto q = sample(c);
        if (!q.empty() && seen.insert(q).second) pool.push_back(q);
      }
      pools_.push_back(std::move(pool));
      for (const auto& q : pools_.back()) used_.insert(q);
    }
  }

  const std::vector<std::string>& pool(std::size_t category) const { return pools_[category]; }

  std::string pool_query(std::size_t category) {
    const auto& p = pools_[category];
    return p[uniform_below(rng_, p.size())];
  }

  /// A query string never produced for any other purpose.
  std::string reserved_query(std::size_t category) {
    for (int attempt = 0; attempt < 50; ++attempt) {
      auto q = sample(category);
      if (!q.empty() && used_.insert(q).second) return q;
    }
    for (;;) {
      auto base = sample(category);
      auto q = canonical_query(base + " v" + std::to_string(++suffix_));
      if (used_.insert(q).second) return q;
    }
  }

  std::string sample(std::size_t category) {
    std::vector<std::string> parts;
    for (const auto& slot : spec_.categories[category].slots) {
      const auto& alt = slot[uniform_below(rng_, slot.size())];
      if (!alt.empty()) parts.push_back(alt);
    }
    return canonical_query(join_tokens(parts));
  }

 private:
  const GeneratorSpec& spec_;
  SplitMix64& rng_;
  std::vector<std::vector<std::string>> pools_;
  std::set<std::string> used_;
  std::uint64_t suffix_ = 0;
};

inline std::string padded(std::size_t n, int width) {
  auto s = std::to_string(n);
  if (static_cast<int>(s.size()) < width) s.insert(0, width - s.size(), '0');
  return s;
}

}  // namespace detail

/// Deterministic for a fixed (spec, seed).
inline GeneratedLog generate_synthetic_log(const GeneratorSpec& spec, std::uint64_t seed) {
  spec.validate();
  SplitMix64 rng(derive_seed(seed, 0x5e55));
  detail::QueryFactory queries(spec, rng);
  const std::size_t ncat = spec.categories.size();
  for (std::size_t c = 0; c < ncat; ++c) {
    if (queries.pool(c).empty()) {
      config_error("generator spec: vocabulary of '" + spec.categories[c].category_id +
                   "' yields no queries");
    }
  }

  GeneratedLog result;
  std::map<std::string, InventoryItem> inventory;

  auto general_item = [&](std::size_t c) {
    const auto& cat = spec.categories[c].category_id;
    return cat + "-i" + detail::padded(uniform_below(rng, spec.categories[c].item_count) + 1, 4);
  };
  std::size_t planted_counter = 0;
  auto planted_item = [&](std::size_t c, const std::string& title) {
    const auto& cat = spec.categories[c].category_id;
    auto id = cat + "-p" + detail::padded(++planted_counter, 4);
    inventory[id] = {id, cat, title};
    return id;
  };

  for (std::size_t c = 0; c < ncat; ++c) {
    const auto& cat = spec.categories[c].category_id;
    for (std::size_t i = 1; i <= spec.categories[c].item_count; ++i) {
      auto id = cat + "-i" + detail::padded(i, 4);
      inventory[id] = {id, cat, queries.sample(c)};
    }
  }

  // Session slots, shuffled so planted patterns scatter across ids.
  std::vector<std::size_t> slots(spec.sessions);
  for (std::size_t i = 0; i < slots.size(); ++i) slots[i] = i;
  shuffle(slots, rng);
  std::size_t next_slot = 0;

  std::vector<SessionEvent> events;
  auto session_id = [&](std::size_t slot) { return "s" + detail::padded(slot + 1, 6); };
  auto session_start = [&](std::size_t slot) {
    return spec.start_ts + static_cast<std::int64_t>(slot) * 3'600'000 +
           static_cast<std::int64_t>(uniform_below(rng, 1'000'000));
  };
  auto step = [&] { return 1'000 + static_cast<std::int64_t>(uniform_below(rng, 59'000)); };
  auto emit = [&](const std::string& sid, std::int64_t ts, const std::string& q, std::size_t c,
                  std::vector<Engagement> eng) {
    events.push_back(make_event(sid, ts, q, spec.categories[c].category_id, std::move(eng)));
  };

  for (std::size_t n = 0; n < spec.in_session_chains; ++n) {
    const auto slot = slots[next_slot++];
    const auto c = static_cast<std::size_t>(uniform_below(rng, ncat));
    const auto& pool = queries.pool(c);
    if (pool.size() < 2) {
      config_error("generator spec: '" + spec.categories[c].category_id +
                   "' needs at least two distinct queries for in-session chains");
    }
    const std::size_t length = std::min<std::size_t>(2 + uniform_below(rng, 2), pool.size());
    std::vector<std::string> chain;
    while (chain.size() < length) {
      auto q = queries.pool_query(c);
      if (std::find(chain.begin(), chain.end(), q) == chain.end()) chain.push_back(q);
    }
    const auto sid = session_id(slot);
    auto ts = session_start(slot);
    for (std::size_t i = 0; i < chain.size(); ++i) {
      std::vector<Engagement> eng;
      if (i + 1 == chain.size()) eng.push_back({general_item(c), signal::kClick});
      emit(sid, ts, chain[i], c, std::move(eng));
      ts += step();
    }
    for (std::size_t i = 0; i + 1 < chain.size(); ++i) {
      result.manifest.push_back({Provenance::InSession, chain[i], chain.back()});
    }
  }

  for (std::size_t n = 0; n < spec.coclick_cliques; ++n) {
    const auto c = static_cast<std::size_t>(uniform_below(rng, ncat));
    std::vector<std::string> members;
    for (int attempt = 0; members.size() < spec.clique_size && attempt < 100; ++attempt) {
      auto q = queries.pool_query(c);
      if (std::find(members.begin(), members.end(), q) == members.end()) members.push_back(q);
    }
    while (members.size() < spec.clique_size) members.push_back(queries.reserved_query(c));
    const auto item = planted_item(c, members.front());
    for (const auto& q : members) {
      const auto slot = slots[next_slot++];
      emit(session_id(slot), session_start(slot), q, c, {{item, signal::kClick}});
    }
    for (std::size_t i = 0; i < members.size(); ++i) {
      for (std::size_t j = i + 1; j < members.size(); ++j) {
        result.manifest.push_back({Provenance::CrossSessionCoEngaged,
                                   std::min(members[i], members[j]),
                                   std::max(members[i], members[j])});
      }
    }
  }

  for (std::size_t n = 0; n < spec.two_hop_bridges; ++n) {
    const auto ca = static_cast<std::size_t>(uniform_below(rng, ncat));
    const auto cb = static_cast<std::size_t>(uniform_below(rng, ncat));
    const auto q1 = queries.reserved_query(ca);
    const auto q3 = queries.reserved_query(ca);
    const auto q2 = queries.reserved_query(cb);
    const auto x = planted_item(ca, q1 + " " + q3);
    const auto y = planted_item(cb, q3 + " " + q2);
    const auto s1 = slots[next_slot++];
    const auto s3 = slots[next_slot++];
    const auto s2 = slots[next_slot++];
    emit(session_id(s1), session_start(s1), q1, ca, {{x, signal::kClick}});
    emit(session_id(s3), session_start(s3), q3, ca, {{x, signal::kClick}, {y, signal::kClick}});
    emit(session_id(s2), session_start(s2), q2, cb, {{y, signal::kClick}});
    result.manifest.push_back(
        {Provenance::CrossSessionOneHop, std::min(q1, q2), std::max(q1, q2)});
    result.manifest.push_back(
        {Provenance::CrossSessionCoEngaged, std::min(q1, q3), std::max(q1, q3)});
    result.manifest.push_back(
        {Provenance::CrossSessionCoEngaged, std::min(q3, q2), std::max(q3, q2)});
  }

  // Background sessions only touch pool queries and general items.
  while (next_slot < slots.size()) {
    const auto slot = slots[next_slot++];
    const auto sid = session_id(slot);
    auto ts = session_start(slot);
    const auto count = uniform_between(rng, 1, spec.noise_max_events);
    const auto c = static_cast<std::size_t>(uniform_below(rng, ncat));
    for (std::uint64_t e = 0; e < count; ++e) {
      std::vector<Engagement> eng;
      if (bernoulli(rng, spec.noise_click_probability)) {
        const auto clicks = uniform_between(rng, 1, 2);
        for (std::uint64_t k = 0; k < clicks; ++k) eng.push_back({general_item(c), signal::kClick});
        if (bernoulli(rng, spec.noise_purchase_probability)) {
          eng.push_back({eng.front().item_id, signal::kBought});
        }
      }
      emit(sid, ts, queries.pool_query(c), c, std::move(eng));
      ts += step();
    }
  }

  std::sort(events.begin(), events.end(), [](const SessionEvent& a, const SessionEvent& b) {
    return std::tie(a.session_id, a.ts) < std::tie(b.session_id, b.ts);
  });
  result.log = SessionLog::from_events(std::move(events));

  std::sort(result.manifest.begin(), result.manifest.end());
  result.manifest.erase(std::unique(result.manifest.begin(), result.manifest.end()),
                        result.manifest.end());
  for (auto& [id, item] : inventory) result.inventory.push_back(std::move(item));
  return result;
}

inline void write_manifest(const std::vector<PlantedPair>& manifest, std::ostream& out) {
  for (const auto& p : manifest) {
    out << to_string(p.provenance) << '\t' << p.source << '\t' << p.target << '\n';
  }
}

inline std::vector<PlantedPair> read_manifest(std::istream& in) {
  std::vector<PlantedPair> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto fields = split(line, '\t');
    const auto prov = fields.size() == 3 ? parse_provenance(fields[0]) : std::nullopt;
    if (!prov) {
      throw Error(ErrorKind::Validation, "manifest line " + std::to_string(lineno) + ": malformed",
                  lineno);
    }
    out.push_back({*prov, fields[1], fields[2]});
  }
  return out;
}

/// Inventory file: `item_id <TAB> category <TAB> title` per line.
inline void write_inventory(const std::vector<InventoryItem>& items, std::ostream& out) {
  for (const auto& it : items) {
    out << it.item_id << '\t' << it.category_id << '\t' << it.title << '\n';
  }
}

inline std::vector<InventoryItem> read_inventory(std::istream& in,
                                                 const std::string& origin = "<inventory>") {
  std::vector<InventoryItem> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty() || line.front() == '#') continue;
    auto fields = split(line, '\t');
    if (fields.size() != 3 || fields[0].empty()) {
      throw Error(ErrorKind::Validation,
                  origin + ":" + std::to_string(lineno) + ": expected item_id<TAB>category<TAB>title",
                  lineno);
    }
    out.push_back({fields[0], fields[1], fields[2]});
  }
  return out;
}

inline std::vector<InventoryItem> load_inventory(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) io_error("cannot open inventory file '" + path + "'");
  return read_inventory(in, path);
}

}  // namespace qref
