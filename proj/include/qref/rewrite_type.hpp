#pragma once

// Eight-way structural classification of a rewrite against its source query,
// using multiset (order-insensitive) token semantics.

#include <algorithm>
#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qref/corpus.hpp"
#include "qref/error.hpp"

namespace qref {

enum class RewriteType { Empty, Same, SuperSet, SubSet, Replace, SubSetRep, SupSetRep, Other };

inline constexpr std::array<RewriteType, 8> kAllRewriteTypes = {
    RewriteType::Empty,   RewriteType::Same,      RewriteType::SuperSet,  RewriteType::SubSet,
    RewriteType::Replace, RewriteType::SubSetRep, RewriteType::SupSetRep, RewriteType::Other};

/// The five types that carry a per-type breakdown in reports.
inline constexpr std::array<RewriteType, 5> kBreakdownTypes = {
    RewriteType::SubSet, RewriteType::Replace, RewriteType::SuperSet, RewriteType::SubSetRep,
    RewriteType::SupSetRep};

inline std::string_view to_string(RewriteType t) {
  switch (t) {
    case RewriteType::Empty: return "Empty";
    case RewriteType::Same: return "Same";
    case RewriteType::SuperSet: return "SuperSet";
    case RewriteType::SubSet: return "SubSet";
    case RewriteType::Replace: return "Replace";
    case RewriteType::SubSetRep: return "SubSetRep";
    case RewriteType::SupSetRep: return "SupSetRep";
    case RewriteType::Other: return "Other";
  }
  return "";
}

inline std::optional<RewriteType> parse_rewrite_type(std::string_view s) {
  for (auto t : kAllRewriteTypes) {
    if (to_string(t) == s) return t;
  }
  return std::nullopt;
}

/// Short column labels used in the per-type breakdown.
inline std::string_view short_label(RewriteType t) {
  switch (t) {
    case RewriteType::SubSet: return "Sb";
    case RewriteType::Replace: return "Rp";
    case RewriteType::SuperSet: return "Sp";
    case RewriteType::SubSetRep: return "SbRp";
    case RewriteType::SupSetRep: return "SpRp";
    default: return to_string(t);
  }
}

/// Multiset overlap of two token lists.
struct TokenDiff {
  std::size_t kept = 0;
  std::size_t dropped = 0;  // in source, not in prediction
  std::size_t added = 0;    // in prediction, not in source
};

inline TokenDiff token_diff(std::span<const std::string> source,
                            std::span<const std::string> prediction) {
  std::vector<std::string_view> s(source.begin(), source.end());
  std::vector<std::string_view> p(prediction.begin(), prediction.end());
  std::sort(s.begin(), s.end());
  std::sort(p.begin(), p.end());
  TokenDiff d;
  std::size_t i = 0, j = 0;
  while (i < s.size() && j < p.size()) {
    if (s[i] == p[j]) {
      ++d.kept;
      ++i;
      ++j;
    } else if (s[i] < p[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  d.dropped = s.size() - d.kept;
  d.added = p.size() - d.kept;
  return d;
}

inline RewriteType classify(std::span<const std::string> source,
                            std::span<const std::string> prediction) {
  if (source.empty()) validation_error("rewrite classification needs a non-empty source");
  if (prediction.empty()) return RewriteType::Empty;
  const auto d = token_diff(source, prediction);
  if (d.dropped == 0 && d.added == 0) return RewriteType::Same;
  if (d.dropped == 0) return RewriteType::SuperSet;
  if (d.added == 0) return RewriteType::SubSet;
  if (d.kept == 0) return RewriteType::Other;
  if (prediction.size() == source.size()) return RewriteType::Replace;
  return prediction.size() < source.size() ? RewriteType::SubSetRep : RewriteType::SupSetRep;
}

/// Percentage of pairs per rewrite type. Only observed types appear.
inline std::map<RewriteType, double> type_histogram(
    std::span<const std::pair<Tokens, Tokens>> pairs) {
  if (pairs.empty()) validation_error("type histogram of an empty pair list");
  std::map<RewriteType, std::size_t> counts;
  for (const auto& [src, pred] : pairs) ++counts[classify(src, pred)];
  std::map<RewriteType, double> out;
  for (const auto& [t, n] : counts) {
    out[t] = 100.0 * static_cast<double>(n) / static_cast<double>(pairs.size());
  }
  return out;
}

}  // namespace qref
