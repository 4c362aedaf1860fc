#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace qref {

/// Which miner produced a query pair.
enum class Provenance { InSession, CrossSessionCoEngaged, CrossSessionOneHop };

enum class IntentBucket { SameIntent, SimilarIntent, InspiredIntent };

inline constexpr std::array<Provenance, 3> kAllProvenances = {
    Provenance::InSession, Provenance::CrossSessionCoEngaged, Provenance::CrossSessionOneHop};

inline constexpr std::array<IntentBucket, 3> kAllBuckets = {
    IntentBucket::SameIntent, IntentBucket::SimilarIntent, IntentBucket::InspiredIntent};

inline std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::InSession: return "in_session";
    case Provenance::CrossSessionCoEngaged: return "co_engaged";
    case Provenance::CrossSessionOneHop: return "one_hop";
  }
  return "";
}

inline std::optional<Provenance> parse_provenance(std::string_view s) {
  for (auto p : kAllProvenances) {
    if (to_string(p) == s) return p;
  }
  return std::nullopt;
}

inline std::string_view to_string(IntentBucket b) {
  switch (b) {
    case IntentBucket::SameIntent: return "same";
    case IntentBucket::SimilarIntent: return "similar";
    case IntentBucket::InspiredIntent: return "inspired";
  }
  return "";
}

inline std::optional<IntentBucket> parse_bucket(std::string_view s) {
  for (auto b : kAllBuckets) {
    if (to_string(b) == s) return b;
  }
  return std::nullopt;
}

/// Training-data tag token: <same>, <similar>, <inspired>.
inline std::string intent_tag(IntentBucket b) {
  return "<" + std::string(to_string(b)) + ">";
}

inline std::optional<IntentBucket> parse_intent_tag(std::string_view tag) {
  if (tag.size() < 3 || tag.front() != '<' || tag.back() != '>') return std::nullopt;
  return parse_bucket(tag.substr(1, tag.size() - 2));
}

}  // namespace qref
