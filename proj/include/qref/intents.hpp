#pragma once

// Post-filtering of mined pairs into Same / Similar / Inspired intent buckets,
// and export of intent-tagged training data.

#include <algorithm>
#include <cctype>
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
#include <tuple>
#include <variant>
#include <vector>

#include <json.hpp>

#include "qref/corpus.hpp"
#include "qref/generator.hpp"
#include "qref/labels.hpp"
#include "qref/miner.hpp"

namespace qref {

// ---------------------------------------------------------------------------
// Aspect lexicon

/// One element of a pattern: a literal token, or a token made of
/// prefix + digits + suffix when `numeric` is set (written `<num>gb`).
struct PatternElement {
  std::string prefix;
  std::string suffix;
  bool numeric = false;

  bool matches(std::string_view token) const {
    if (!numeric) return token == prefix;
    if (token.size() <= prefix.size() + suffix.size()) return false;
    if (token.substr(0, prefix.size()) != prefix) return false;
    if (token.substr(token.size() - suffix.size()) != suffix) return false;
    const auto digits = token.substr(prefix.size(), token.size() - prefix.size() - suffix.size());
    return std::all_of(digits.begin(), digits.end(),
                       [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
  }
};

using AspectPattern = std::vector<PatternElement>;

inline AspectPattern parse_pattern(std::string_view text) {
  NormalizeConfig keep_angles;
  std::erase_if(keep_angles.punctuation, [](char c) { return c == '<' || c == '>'; });
  auto literal = [](std::string_view s) { return join_tokens(normalize(s)); };
  AspectPattern pattern;
  for (const auto& tok : normalize(text, keep_angles)) {
    PatternElement el;
    const auto pos = tok.find("<num>");
    if (pos == std::string::npos) {
      el.prefix = literal(tok);
      if (el.prefix.empty()) continue;
    } else {
      el.numeric = true;
      el.prefix = tok.substr(0, pos);
      el.suffix = tok.substr(pos + 5);
    }
    pattern.push_back(std::move(el));
  }
  return pattern;
}

struct AspectTags {
  std::map<std::string, Tokens> aspects;  // aspect -> tokens, in query order
  Tokens residual;

  friend bool operator==(const AspectTags&, const AspectTags&) = default;
};

/// Pattern lexicon standing in for an aspect NER model. Aspects are tried in
/// declaration order and patterns in listed order; a token is claimed by the
/// first pattern that matches it.
///
/// File format, one aspect per line (an aspect may span several lines):
///   size: size <num> | <num>w
///   storage: <num>gb | <num> gb
class AspectLexicon {
 public:
  static AspectLexicon parse(std::istream& in, const std::string& origin = "<lexicon>") {
    AspectLexicon lex;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      auto view = trim(line);
      if (view.empty() || view.front() == '#') continue;
      const auto colon = view.find(':');
      if (colon == std::string_view::npos || trim(view.substr(0, colon)).empty()) {
        throw Error(ErrorKind::Config,
                    origin + ":" + std::to_string(lineno) + ": expected 'aspect: pattern | ...'",
                    lineno);
      }
      const std::string aspect(trim(view.substr(0, colon)));
      for (const auto& alt : split(view.substr(colon + 1), '|')) {
        auto pattern = parse_pattern(alt);
        if (pattern.empty()) {
          throw Error(ErrorKind::Config,
                      origin + ":" + std::to_string(lineno) + ": empty pattern for '" + aspect + "'",
                      lineno);
        }
        lex.add(aspect, std::move(pattern));
      }
    }
    return lex;
  }

  static AspectLexicon load(const std::string& path) {
    std::ifstream in(path);
    if (!in) io_error("cannot open lexicon file '" + path + "'");
    return parse(in, path);
  }

  void add(const std::string& aspect, AspectPattern pattern) {
    auto it = std::find_if(entries_.begin(), entries_.end(),
                           [&](const auto& e) { return e.first == aspect; });
    if (it == entries_.end()) {
      entries_.push_back({aspect, {}});
      it = std::prev(entries_.end());
    }
    it->second.push_back(std::move(pattern));
  }

  bool empty() const { return entries_.empty(); }

  const std::vector<std::pair<std::string, std::vector<AspectPattern>>>& entries() const {
    return entries_;
  }

 private:
  std::vector<std::pair<std::string, std::vector<AspectPattern>>> entries_;
};

inline AspectTags tag_aspects(std::span<const std::string> tokens, const AspectLexicon& lex) {
  std::vector<int> owner(tokens.size(), -1);
  const auto& entries = lex.entries();
  for (std::size_t a = 0; a < entries.size(); ++a) {
    for (const auto& pattern : entries[a].second) {
      const std::size_t len = pattern.size();
      for (std::size_t i = 0; i + len <= tokens.size();) {
        bool hit = true;
        for (std::size_t k = 0; k < len && hit; ++k) {
          hit = owner[i + k] < 0 && pattern[k].matches(tokens[i + k]);
        }
        if (!hit) {
          ++i;
          continue;
        }
        for (std::size_t k = 0; k < len; ++k) owner[i + k] = static_cast<int>(a);
        i += len;
      }
    }
  }
  AspectTags tags;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (owner[i] < 0) {
      tags.residual.push_back(tokens[i]);
    } else {
      tags.aspects[entries[owner[i]].first].push_back(tokens[i]);
    }
  }
  return tags;
}

// ---------------------------------------------------------------------------
// Retrieval index

/// Inverted index over an item inventory. Items are ranked by how many
/// distinct query tokens their title contains; ties go to the smaller id.
class RetrievalIndex {
 public:
  RetrievalIndex() = default;

  explicit RetrievalIndex(const std::vector<InventoryItem>& items) {
    for (const auto& it : items) add_item(it.item_id, normalize(it.title));
  }

  void add_item(const std::string& item_id, const Tokens& tokens) {
    if (!items_.emplace(item_id, tokens).second) {
      validation_error("duplicate inventory item '" + item_id + "'");
    }
    for (const auto& t : std::set<std::string>(tokens.begin(), tokens.end())) {
      postings_[t].push_back(item_id);
    }
  }

  std::size_t size() const { return items_.size(); }

  const std::map<std::string, Tokens>& items() const { return items_; }

  std::vector<std::string> recall_set(std::span<const std::string> query, std::size_t k) const {
    if (k < 1) config_error("recall set size K must be >= 1");
    std::map<std::string, std::size_t> matched;
    for (const auto& t : std::set<std::string>(query.begin(), query.end())) {
      auto it = postings_.find(t);
      if (it == postings_.end()) continue;
      for (const auto& item : it->second) ++matched[item];
    }
    std::vector<std::pair<std::size_t, std::string>> ranked;
    ranked.reserve(matched.size());
    for (auto& [item, n] : matched) ranked.emplace_back(n, item);
    const auto keep = std::min(k, ranked.size());
    std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(keep),
                      ranked.end(), [](const auto& a, const auto& b) {
                        return a.first != b.first ? a.first > b.first : a.second < b.second;
                      });
    std::vector<std::string> out;
    out.reserve(keep);
    for (std::size_t i = 0; i < keep; ++i) out.push_back(std::move(ranked[i].second));
    return out;
  }

 private:
  std::map<std::string, Tokens> items_;
  std::map<std::string, std::vector<std::string>> postings_;
};

/// Jaccard index of two sets; 0 when both are empty.
template <typename Set>
double jaccard(const Set& a, const Set& b) {
  std::size_t inter = 0;
  for (const auto& x : a) inter += b.count(x);
  const std::size_t uni = a.size() + b.size() - inter;
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

inline double token_jaccard(std::span<const std::string> a, std::span<const std::string> b) {
  return jaccard(std::set<std::string>(a.begin(), a.end()),
                 std::set<std::string>(b.begin(), b.end()));
}

/// Overlap of the top-K recall sets; K is the buffer.
inline double recall_similarity(std::span<const std::string> source,
                                std::span<const std::string> target, const RetrievalIndex& index,
                                std::size_t k) {
  const auto a = index.recall_set(source, k);
  const auto b = index.recall_set(target, k);
  return jaccard(std::set<std::string>(a.begin(), a.end()),
                 std::set<std::string>(b.begin(), b.end()));
}

// ---------------------------------------------------------------------------
// Bucket assignment

struct IntentThresholds {
  double tau_same = 0.5;
  double tau_sim = 0.2;
  double tau_core = 0.5;
  std::size_t delta_len = 1;
  std::size_t recall_k = 50;

  void validate() const {
    auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!unit(tau_same) || !unit(tau_sim) || !unit(tau_core)) {
      config_error("intent thresholds must lie in [0, 1]");
    }
    if (tau_sim > tau_same) config_error("intent.tau_sim must not exceed intent.tau_same");
    if (recall_k < 1) config_error("intent.recall_k must be >= 1");
  }

  friend bool operator==(const IntentThresholds&, const IntentThresholds&) = default;
};

/// The constraint that stopped a pair from entering any bucket.
enum class RejectionReason {
  CategoryAlignment,     // rule 1: not the same leaf category
  TokenSimilarity,       // rule 1: token overlap below tau_same
  LengthCompatibility,   // rule 1: length difference above delta_len
  RecallGuard,           // rule 3: no token overlap and no shared recall
};

inline std::string_view to_string(RejectionReason r) {
  switch (r) {
    case RejectionReason::CategoryAlignment: return "category_alignment";
    case RejectionReason::TokenSimilarity: return "token_similarity";
    case RejectionReason::LengthCompatibility: return "length_compatibility";
    case RejectionReason::RecallGuard: return "recall_guard";
  }
  return "";
}

using BucketDecision = std::variant<IntentBucket, RejectionReason>;

struct IntentContext {
  const Taxonomy& taxonomy;
  const AspectLexicon& lexicon;
  const RetrievalIndex& index;
  IntentThresholds thresholds;
};

/// First matching rule wins:
///   1. Same: same leaf, token Jaccard >= tau_same, |len diff| <= delta_len.
///   2. Similar: same leaf or meta category, and either the aspect tags differ
///      while residual tokens overlap >= tau_core, or token Jaccard lies in
///      [tau_sim, tau_same).
///   3. Inspired: one-hop provenance, or token Jaccard < tau_sim. Pairs with
///      no token overlap and no shared recall that are not one-hop are
///      rejected here.
///   4. Otherwise rejected with the first failed rule-1 constraint.
inline BucketDecision assign_bucket(const QueryPair& pair, const IntentContext& ctx) {
  const auto& tax = ctx.taxonomy;
  const auto& th = ctx.thresholds;
  if (!tax.contains(pair.source_category)) {
    validation_error("pair '" + pair.source_query + "' has unknown category '" +
                     pair.source_category + "'");
  }
  if (!tax.contains(pair.target_category)) {
    validation_error("pair '" + pair.target_query + "' has unknown category '" +
                     pair.target_category + "'");
  }

  const double overlap = token_jaccard(pair.source_tokens, pair.target_tokens);
  const bool same_leaf = pair.source_category == pair.target_category;
  const bool same_meta =
      same_leaf || tax.meta_category(pair.source_category) == tax.meta_category(pair.target_category);
  const auto len_src = pair.source_tokens.size();
  const auto len_tgt = pair.target_tokens.size();
  const std::size_t len_diff = len_src > len_tgt ? len_src - len_tgt : len_tgt - len_src;

  if (same_leaf && overlap >= th.tau_same && len_diff <= th.delta_len) {
    return IntentBucket::SameIntent;
  }

  if (same_meta) {
    if (overlap >= th.tau_sim && overlap < th.tau_same) return IntentBucket::SimilarIntent;
    const auto src_tags = tag_aspects(pair.source_tokens, ctx.lexicon);
    const auto tgt_tags = tag_aspects(pair.target_tokens, ctx.lexicon);
    if (src_tags.aspects != tgt_tags.aspects &&
        token_jaccard(src_tags.residual, tgt_tags.residual) >= th.tau_core) {
      return IntentBucket::SimilarIntent;
    }
  }

  const bool one_hop = pair.provenance == Provenance::CrossSessionOneHop;
  if (one_hop) return IntentBucket::InspiredIntent;
  if (overlap < th.tau_sim) {
    if (overlap == 0.0 &&
        recall_similarity(pair.source_tokens, pair.target_tokens, ctx.index, th.recall_k) == 0.0) {
      return RejectionReason::RecallGuard;
    }
    return IntentBucket::InspiredIntent;
  }

  if (!same_leaf) return RejectionReason::CategoryAlignment;
  if (overlap < th.tau_same) return RejectionReason::TokenSimilarity;
  return RejectionReason::LengthCompatibility;
}

struct BucketizeResult {
  std::vector<QueryPair> accepted;  // bucket set, input order
  std::vector<std::pair<QueryPair, RejectionReason>> rejected;
};

inline BucketizeResult bucketize(std::span<const QueryPair> pairs, const IntentContext& ctx) {
  BucketizeResult out;
  for (const auto& p : pairs) {
    auto decision = assign_bucket(p, ctx);
    if (const auto* b = std::get_if<IntentBucket>(&decision)) {
      auto copy = p;
      copy.bucket = *b;
      out.accepted.push_back(std::move(copy));
    } else {
      out.rejected.emplace_back(p, std::get<RejectionReason>(decision));
    }
  }
  return out;
}

inline void write_rejections(const std::vector<std::pair<QueryPair, RejectionReason>>& rejected,
                             std::ostream& out) {
  for (const auto& [pair, reason] : rejected) {
    out << to_string(pair.provenance) << '\t' << pair.source_query << '\t' << pair.target_query
        << '\t' << to_string(reason) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Dataset export: `<tag> TAB source TAB target` per line.

struct DatasetRecord {
  IntentBucket bucket;
  std::string source;
  std::string target;

  friend auto operator<=>(const DatasetRecord&, const DatasetRecord&) = default;
};

struct DatasetManifest {
  std::map<IntentBucket, std::size_t> counts;
  std::size_t total = 0;
};

inline std::vector<DatasetRecord> dataset_records(std::span<const QueryPair> pairs) {
  std::vector<DatasetRecord> records;
  records.reserve(pairs.size());
  for (const auto& p : pairs) {
    if (!p.bucket) {
      validation_error("cannot export unbucketed pair '" + p.source_query + "' -> '" +
                       p.target_query + "'");
    }
    records.push_back({*p.bucket, p.source_query, p.target_query});
  }
  // Two miners can surface the same pair; the dataset keeps it once.
  std::sort(records.begin(), records.end());
  records.erase(std::unique(records.begin(), records.end()), records.end());
  return records;
}

inline DatasetManifest export_dataset(std::span<const QueryPair> pairs, std::ostream& out) {
  DatasetManifest manifest;
  for (auto b : kAllBuckets) manifest.counts[b] = 0;
  for (const auto& r : dataset_records(pairs)) {
    out << intent_tag(r.bucket) << '\t' << r.source << '\t' << r.target << '\n';
    ++manifest.counts[r.bucket];
    ++manifest.total;
  }
  return manifest;
}

inline std::string manifest_json(const DatasetManifest& m) {
  nlohmann::ordered_json j;
  for (auto b : kAllBuckets) {
    auto it = m.counts.find(b);
    j[std::string(to_string(b))] = it == m.counts.end() ? 0 : it->second;
  }
  j["total"] = m.total;
  return j.dump(2) + "\n";
}

/// Writes `path` and its sibling `<path>.manifest.json`.
inline DatasetManifest export_dataset(std::span<const QueryPair> pairs,
                                      const std::filesystem::path& path) {
  std::ostringstream body;
  const auto manifest = export_dataset(pairs, body);
  std::ofstream out(path, std::ios::binary);
  if (!out) io_error("cannot write dataset '" + path.string() + "'");
  out << body.str();
  std::ofstream mf(path.string() + ".manifest.json", std::ios::binary);
  if (!mf) io_error("cannot write dataset manifest for '" + path.string() + "'");
  mf << manifest_json(manifest);
  return manifest;
}

inline std::vector<DatasetRecord> read_dataset(std::istream& in,
                                               const std::string& origin = "<dataset>") {
  std::vector<DatasetRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto fields = split(line, '\t');
    const auto bucket = fields.size() == 3 ? parse_intent_tag(fields[0]) : std::nullopt;
    if (!bucket || normalize(fields[1]).empty() || normalize(fields[2]).empty()) {
      throw Error(ErrorKind::Validation,
                  origin + ":" + std::to_string(lineno) +
                      ": expected '<tag><TAB>source<TAB>target' with a known intent tag",
                  lineno);
    }
    out.push_back({*bucket, fields[1], fields[2]});
  }
  return out;
}

}  // namespace qref
