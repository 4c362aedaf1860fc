#pragma once

// Evaluation of rewrite predictions: coverage, token recall/precision with a
// per-rewrite-type breakdown, corpus BLEU, ROUGE-L, rewrite type agreement
// (rats) and type-frequency-weighted recall/precision, all with top-k support.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "qref/corpus.hpp"
#include "qref/labels.hpp"
#include "qref/rewrite_type.hpp"

namespace qref {

struct EvalInstance {
  Tokens source;
  Tokens gold;
  std::vector<Tokens> candidates;  // ranked; an empty candidate means "no rewrite"

  RewriteType gold_type() const { return classify(source, gold); }
};

struct RecallPrecision {
  double recall = 0.0;
  double precision = 0.0;

  friend bool operator==(const RecallPrecision&, const RecallPrecision&) = default;
};

struct EvalReport {
  std::size_t n = 0;
  std::size_t k = 1;
  double cov = 0.0;
  double rec = 0.0;
  double pre = 0.0;
  double bleu = 0.0;    // [0, 100]
  double rouge_l = 0.0;
  double rats = 0.0;
  double rtfw_rec = 0.0;
  double rtfw_pre = 0.0;
  std::map<RewriteType, RecallPrecision> per_type;  // observed breakdown types only
  std::map<RewriteType, double> prediction_histogram;  // percent
  std::map<RewriteType, double> gold_histogram;        // percent

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

namespace detail {

/// Sum that does not depend on the order of the inputs.
inline double stable_sum(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  double s = 0.0;
  for (double v : values) s += v;
  return s;
}

inline double stable_mean(std::vector<double> values) {
  if (values.empty()) return 0.0;
  const auto n = static_cast<double>(values.size());
  return stable_sum(std::move(values)) / n;
}

inline std::size_t multiset_overlap(std::span<const std::string> a, std::span<const std::string> b) {
  return token_diff(a, b).kept;
}

inline void require_instances(std::span<const EvalInstance> instances) {
  if (instances.empty()) validation_error("evaluation needs at least one instance");
  for (const auto& inst : instances) {
    if (inst.source.empty()) validation_error("evaluation instance with empty source");
    if (inst.gold.empty()) validation_error("evaluation instance with empty gold rewrite");
    if (inst.candidates.empty()) validation_error("evaluation instance without candidates");
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Per-pair scores

inline double token_recall(std::span<const std::string> gold, std::span<const std::string> pred) {
  if (gold.empty()) validation_error("token recall needs a non-empty gold rewrite");
  return static_cast<double>(detail::multiset_overlap(gold, pred)) /
         static_cast<double>(gold.size());
}

/// 0 for an empty prediction.
inline double token_precision(std::span<const std::string> gold, std::span<const std::string> pred) {
  if (gold.empty()) validation_error("token precision needs a non-empty gold rewrite");
  if (pred.empty()) return 0.0;
  return static_cast<double>(detail::multiset_overlap(gold, pred)) /
         static_cast<double>(pred.size());
}

inline double token_f1(std::span<const std::string> gold, std::span<const std::string> pred) {
  const double r = token_recall(gold, pred);
  const double p = token_precision(gold, pred);
  return r + p == 0.0 ? 0.0 : 2.0 * r * p / (r + p);
}

inline std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

/// LCS-based F-measure with beta = 1.
inline double rouge_l_pair(std::span<const std::string> gold, std::span<const std::string> pred) {
  const auto lcs = lcs_length(gold, pred);
  if (lcs == 0) return 0.0;
  const double p = static_cast<double>(lcs) / static_cast<double>(pred.size());
  const double r = static_cast<double>(lcs) / static_cast<double>(gold.size());
  return 2.0 * p * r / (p + r);
}

// ---------------------------------------------------------------------------
// Corpus scores over (gold, prediction) pairs

using ScoredPair = std::pair<Tokens, Tokens>;  // (gold, prediction)

/// Corpus BLEU with n-grams up to 4 and the brevity penalty. Orders 2-4 with
/// no matches use add-one smoothing, (0 + 1) / (total + 1); unigrams are not
/// smoothed.
inline double bleu(std::span<const ScoredPair> corpus) {
  if (corpus.empty()) validation_error("BLEU of an empty corpus");
  constexpr std::size_t kMaxOrder = 4;
  std::array<std::uint64_t, kMaxOrder> matches{}, totals{};
  std::uint64_t pred_len = 0, gold_len = 0;
  for (const auto& [gold, pred] : corpus) {
    pred_len += pred.size();
    gold_len += gold.size();
    for (std::size_t n = 1; n <= kMaxOrder; ++n) {
      if (pred.size() < n) continue;
      std::map<std::vector<std::string_view>, std::size_t> gold_counts;
      for (std::size_t i = 0; i + n <= gold.size(); ++i) {
        ++gold_counts[std::vector<std::string_view>(gold.begin() + i, gold.begin() + i + n)];
      }
      std::map<std::vector<std::string_view>, std::size_t> pred_counts;
      for (std::size_t i = 0; i + n <= pred.size(); ++i) {
        ++pred_counts[std::vector<std::string_view>(pred.begin() + i, pred.begin() + i + n)];
      }
      for (const auto& [gram, c] : pred_counts) {
        auto it = gold_counts.find(gram);
        if (it != gold_counts.end()) matches[n - 1] += std::min(c, it->second);
      }
      totals[n - 1] += pred.size() - n + 1;
    }
  }
  if (pred_len == 0 || matches[0] == 0) return 0.0;
  double log_sum = 0.0;
  for (std::size_t n = 0; n < kMaxOrder; ++n) {
    double p;
    if (n == 0 || matches[n] > 0) {
      p = static_cast<double>(matches[n]) / static_cast<double>(totals[n]);
    } else {
      p = 1.0 / static_cast<double>(totals[n] + 1);
    }
    log_sum += std::log(p);
  }
  const double bp =
      pred_len > gold_len
          ? 1.0
          : std::exp(1.0 - static_cast<double>(gold_len) / static_cast<double>(pred_len));
  return 100.0 * bp * std::exp(log_sum / static_cast<double>(kMaxOrder));
}

/// Mean per-pair ROUGE-L F-measure.
inline double rouge_l(std::span<const ScoredPair> corpus) {
  if (corpus.empty()) validation_error("ROUGE-L of an empty corpus");
  std::vector<double> scores;
  scores.reserve(corpus.size());
  for (const auto& [gold, pred] : corpus) scores.push_back(rouge_l_pair(gold, pred));
  return detail::stable_mean(std::move(scores));
}

// ---------------------------------------------------------------------------
// Instance metrics. Each uses the first candidate unless a k is given.

inline std::size_t effective_k(const EvalInstance& inst, std::size_t k) {
  return std::min(k, inst.candidates.size());
}

/// Index of the candidate among the first k with the best token F1 against
/// gold; the earliest wins ties.
inline std::size_t best_candidate(const EvalInstance& inst, std::size_t k) {
  std::size_t best = 0;
  double best_f1 = -1.0;
  for (std::size_t c = 0; c < effective_k(inst, k); ++c) {
    const double f1 = token_f1(inst.gold, inst.candidates[c]);
    if (f1 > best_f1) {
      best = c;
      best_f1 = f1;
    }
  }
  return best;
}

inline bool is_nontrivial(RewriteType t) {
  return t != RewriteType::Empty && t != RewriteType::Same;
}

/// Fraction of instances with a non-trivial rewrite among the first k candidates.
inline double coverage(std::span<const EvalInstance> instances, std::size_t k = 1) {
  detail::require_instances(instances);
  std::size_t hits = 0;
  for (const auto& inst : instances) {
    for (std::size_t c = 0; c < effective_k(inst, k); ++c) {
      if (is_nontrivial(classify(inst.source, inst.candidates[c]))) {
        ++hits;
        break;
      }
    }
  }
  return static_cast<double>(hits) / static_cast<double>(instances.size());
}

/// Fraction of instances where a prediction's rewrite type equals the gold
/// rewrite's type (any of the first k candidates).
inline double rats(std::span<const EvalInstance> instances, std::size_t k = 1) {
  detail::require_instances(instances);
  std::size_t hits = 0;
  for (const auto& inst : instances) {
    const auto gold_type = inst.gold_type();
    for (std::size_t c = 0; c < effective_k(inst, k); ++c) {
      if (classify(inst.source, inst.candidates[c]) == gold_type) {
        ++hits;
        break;
      }
    }
  }
  return static_cast<double>(hits) / static_cast<double>(instances.size());
}

namespace detail {

struct TypeGroup {
  std::vector<double> recalls;
  std::vector<double> precisions;
};

inline std::map<RewriteType, TypeGroup> group_by_gold_type(std::span<const EvalInstance> instances,
                                                            std::size_t k) {
  std::map<RewriteType, TypeGroup> groups;
  for (const auto& inst : instances) {
    const auto& pred = inst.candidates[best_candidate(inst, k)];
    auto& g = groups[inst.gold_type()];
    g.recalls.push_back(token_recall(inst.gold, pred));
    g.precisions.push_back(token_precision(inst.gold, pred));
  }
  return groups;
}

}  // namespace detail

/// Mean recall/precision per gold rewrite type, for the five breakdown types
/// present in the instances.
inline std::map<RewriteType, RecallPrecision> per_type_breakdown(
    std::span<const EvalInstance> instances, std::size_t k = 1) {
  detail::require_instances(instances);
  std::map<RewriteType, RecallPrecision> out;
  for (auto& [type, g] : detail::group_by_gold_type(instances, k)) {
    if (std::find(kBreakdownTypes.begin(), kBreakdownTypes.end(), type) == kBreakdownTypes.end()) {
      continue;
    }
    out[type] = {detail::stable_mean(g.recalls), detail::stable_mean(g.precisions)};
  }
  return out;
}

/// Per-type recall/precision weighted by the gold type frequencies, over all
/// observed gold types.
inline RecallPrecision rtfw(std::span<const EvalInstance> instances, std::size_t k = 1) {
  detail::require_instances(instances);
  const auto n = static_cast<double>(instances.size());
  std::vector<double> rec_terms, pre_terms;
  for (auto& [type, g] : detail::group_by_gold_type(instances, k)) {
    const double freq = static_cast<double>(g.recalls.size()) / n;
    rec_terms.push_back(freq * detail::stable_mean(g.recalls));
    pre_terms.push_back(freq * detail::stable_mean(g.precisions));
  }
  return {detail::stable_sum(rec_terms), detail::stable_sum(pre_terms)};
}

inline std::map<RewriteType, double> percent_histogram(const std::map<RewriteType, std::size_t>& c,
                                                       std::size_t n) {
  std::map<RewriteType, double> out;
  for (const auto& [t, count] : c) {
    out[t] = 100.0 * static_cast<double>(count) / static_cast<double>(n);
  }
  return out;
}

/// Full report. Token-level metrics use, per instance, the candidate among
/// the first k with the best token F1; rats and coverage count a hit when any
/// of the first k candidates qualifies. k = 1 is single-output evaluation.
inline EvalReport evaluate_at_k(std::span<const EvalInstance> instances, std::size_t k) {
  if (k < 1) config_error("evaluation k must be >= 1");
  detail::require_instances(instances);
  EvalReport r;
  r.n = instances.size();
  r.k = k;

  std::vector<ScoredPair> corpus;
  std::vector<double> recalls, precisions;
  std::map<RewriteType, std::size_t> pred_counts, gold_counts;
  corpus.reserve(instances.size());
  for (const auto& inst : instances) {
    const auto& pred = inst.candidates[best_candidate(inst, k)];
    corpus.emplace_back(inst.gold, pred);
    recalls.push_back(token_recall(inst.gold, pred));
    precisions.push_back(token_precision(inst.gold, pred));
    ++pred_counts[classify(inst.source, pred)];
    ++gold_counts[inst.gold_type()];
  }
  r.cov = coverage(instances, k);
  r.rec = detail::stable_mean(recalls);
  r.pre = detail::stable_mean(precisions);
  r.bleu = bleu(corpus);
  r.rouge_l = rouge_l(corpus);
  r.rats = rats(instances, k);
  const auto weighted = rtfw(instances, k);
  r.rtfw_rec = weighted.recall;
  r.rtfw_pre = weighted.precision;
  r.per_type = per_type_breakdown(instances, k);
  r.prediction_histogram = percent_histogram(pred_counts, r.n);
  r.gold_histogram = percent_histogram(gold_counts, r.n);
  return r;
}

inline EvalReport evaluate(std::span<const EvalInstance> instances) {
  return evaluate_at_k(instances, 1);
}

// ---------------------------------------------------------------------------
// Predictions file: source TAB gold TAB intent-tag TAB cand1 [TAB cand2 ...].
// An empty candidate field is an empty prediction.

struct PredictionRecord {
  std::string source;
  std::string gold;
  std::string tag;
  std::vector<std::string> candidates;

  friend bool operator==(const PredictionRecord&, const PredictionRecord&) = default;
};

inline void write_prediction(const PredictionRecord& rec, std::ostream& out) {
  out << rec.source << '\t' << rec.gold << '\t' << rec.tag;
  for (const auto& c : rec.candidates) out << '\t' << c;
  out << '\n';
}

inline std::vector<PredictionRecord> read_predictions(std::istream& in,
                                                      const std::string& origin = "<predictions>") {
  std::vector<PredictionRecord> out;
  std::string line;
  std::size_t lineno = 0;
  auto fail = [&](const std::string& why) {
    throw Error(ErrorKind::Validation, origin + ":" + std::to_string(lineno) + ": " + why, lineno);
  };
  while (std::getline(in, line)) {
    ++lineno;
    auto f = split(line, '\t');
    if (f.size() < 4) fail("expected source, gold, intent tag and at least one candidate");
    if (!parse_intent_tag(f[2])) fail("unknown intent tag '" + f[2] + "'");
    if (normalize(f[0]).empty()) fail("empty source query");
    if (normalize(f[1]).empty()) fail("empty gold query");
    out.push_back({f[0], f[1], f[2], std::vector<std::string>(f.begin() + 3, f.end())});
  }
  return out;
}

inline std::vector<EvalInstance> to_instances(std::span<const PredictionRecord> records) {
  std::vector<EvalInstance> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    EvalInstance inst;
    inst.source = normalize(r.source);
    inst.gold = normalize(r.gold);
    for (const auto& c : r.candidates) inst.candidates.push_back(normalize(c));
    out.push_back(std::move(inst));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reports

inline nlohmann::ordered_json report_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["n"] = r.n;
  j["k"] = r.k;
  j["cov"] = r.cov;
  j["rec"] = r.rec;
  j["pre"] = r.pre;
  j["bleu"] = r.bleu;
  j["rougeL"] = r.rouge_l;
  j["rats"] = r.rats;
  j["rtfw_rec"] = r.rtfw_rec;
  j["rtfw_pre"] = r.rtfw_pre;
  auto per_type = nlohmann::ordered_json::object();
  for (auto t : kBreakdownTypes) {
    auto it = r.per_type.find(t);
    if (it == r.per_type.end()) continue;
    per_type[std::string(to_string(t))] = {{"rec", it->second.recall},
                                           {"pre", it->second.precision}};
  }
  j["per_type"] = per_type;
  auto hist = [](const std::map<RewriteType, double>& h) {
    nlohmann::ordered_json out;
    for (auto t : kAllRewriteTypes) {
      auto it = h.find(t);
      out[std::string(to_string(t))] = it == h.end() ? 0.0 : it->second;
    }
    return out;
  };
  j["prediction_types"] = hist(r.prediction_histogram);
  j["gold_types"] = hist(r.gold_histogram);
  return j;
}

namespace detail {

inline std::string fixed(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

inline std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

}  // namespace detail

/// Two text tables: rewrite-type frequencies (first row is the test data's
/// gold distribution), then the metric table.
inline std::string render_tables(const std::vector<std::pair<std::string, EvalReport>>& models) {
  std::ostringstream os;
  std::size_t name_w = 10;
  for (const auto& [name, r] : models) name_w = std::max(name_w, name.size() + 2);

  os << "Rewrite type frequency (%)\n";
  os << detail::pad("", name_w);
  for (auto t : kAllRewriteTypes) os << detail::pad(std::string(to_string(t)), 11);
  os << '\n';
  auto hist_row = [&](const std::string& label, const std::map<RewriteType, double>& h) {
    os << detail::pad(label, name_w);
    for (auto t : kAllRewriteTypes) {
      auto it = h.find(t);
      os << detail::pad(detail::fixed(it == h.end() ? 0.0 : it->second, 2), 11);
    }
    os << '\n';
  };
  if (!models.empty()) hist_row("Test Data", models.front().second.gold_histogram);
  for (const auto& [name, r] : models) hist_row(name, r.prediction_histogram);

  auto breakdown = [&](const EvalReport& r, bool recall) {
    std::string s = detail::fixed(recall ? r.rec : r.pre, 2) + " (";
    for (std::size_t i = 0; i < kBreakdownTypes.size(); ++i) {
      if (i) s += ", ";
      auto it = r.per_type.find(kBreakdownTypes[i]);
      s += it == r.per_type.end()
               ? std::string("-")
               : detail::fixed(recall ? it->second.recall : it->second.precision, 2);
    }
    return s + ")";
  };

  os << "\nMetrics\n";
  os << detail::pad("", name_w) << detail::pad("cov.", 7)
     << detail::pad("rec. (Sb, Rp, Sp, SbRp, SpRp)", 38)
     << detail::pad("pre. (Sb, Rp, Sp, SbRp, SpRp)", 38) << detail::pad("bleu", 8)
     << detail::pad("rougeL", 8) << "| " << detail::pad("rats", 7) << detail::pad("rtfw_rec.", 11)
     << "rtfw_pre.\n";
  for (const auto& [name, r] : models) {
    os << detail::pad(name, name_w) << detail::pad(detail::fixed(r.cov, 2), 7)
       << detail::pad(breakdown(r, true), 38) << detail::pad(breakdown(r, false), 38)
       << detail::pad(detail::fixed(r.bleu, 2), 8) << detail::pad(detail::fixed(r.rouge_l, 2), 8)
       << "| " << detail::pad(detail::fixed(r.rats, 2), 7)
       << detail::pad(detail::fixed(r.rtfw_rec, 2), 11) << detail::fixed(r.rtfw_pre, 2) << '\n';
  }
  return os.str();
}

}  // namespace qref
