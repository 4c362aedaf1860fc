#pragma once

// Model-free reformulators: random token drop and identity.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "qref/corpus.hpp"
#include "qref/intents.hpp"
#include "qref/metrics.hpp"
#include "qref/random.hpp"

namespace qref {

enum class BaselineKind { RandomDrop, Identity };

inline std::string_view to_string(BaselineKind k) {
  return k == BaselineKind::RandomDrop ? "random_drop" : "identity";
}

inline std::optional<BaselineKind> parse_baseline_kind(std::string_view s) {
  if (s == "random_drop") return BaselineKind::RandomDrop;
  if (s == "identity") return BaselineKind::Identity;
  return std::nullopt;
}

struct BaselineConfig {
  BaselineKind kind = BaselineKind::RandomDrop;
  std::uint64_t seed = 0;
  double max_drop_fraction = 0.5;
  std::size_t min_tokens_to_drop_from = 4;

  void validate() const {
    if (!(max_drop_fraction > 0.0 && max_drop_fraction < 1.0)) {
      config_error("baseline.max_drop_fraction must lie in (0, 1)");
    }
    if (min_tokens_to_drop_from < 2) config_error("baseline.min_tokens_to_drop_from must be >= 2");
  }

  friend bool operator==(const BaselineConfig&, const BaselineConfig&) = default;
};

/// Largest number of tokens the random-drop baseline may delete from a query
/// of `length` tokens; at least one for eligible queries.
inline std::size_t max_drop_count(std::size_t length, const BaselineConfig& cfg) {
  const auto cap = static_cast<std::size_t>(std::floor(cfg.max_drop_fraction * static_cast<double>(length)));
  return std::max<std::size_t>(cap, 1);
}

/// Random token drop. Queries shorter than min_tokens_to_drop_from come back
/// unchanged; longer ones lose d tokens, d uniform in [1, max_drop_count],
/// positions uniform without replacement, survivors keep their order.
/// The randomness is a function of (cfg.seed, instance).
inline Tokens theta_r(std::span<const std::string> source, const BaselineConfig& cfg,
                      std::uint64_t instance) {
  if (source.empty()) validation_error("random drop baseline needs a non-empty source");
  Tokens out(source.begin(), source.end());
  if (source.size() < cfg.min_tokens_to_drop_from) return out;

  SplitMix64 rng(derive_seed(cfg.seed, instance));
  const auto drop = uniform_between(rng, 1, max_drop_count(source.size(), cfg));
  std::vector<std::size_t> positions(source.size());
  for (std::size_t i = 0; i < positions.size(); ++i) positions[i] = i;
  // Partial Fisher-Yates: the first `drop` slots become the removed positions.
  for (std::size_t i = 0; i < drop; ++i) {
    const auto j = i + static_cast<std::size_t>(uniform_below(rng, positions.size() - i));
    std::swap(positions[i], positions[j]);
  }
  std::vector<bool> removed(source.size(), false);
  for (std::size_t i = 0; i < drop; ++i) removed[positions[i]] = true;
  out.clear();
  for (std::size_t i = 0; i < source.size(); ++i) {
    if (!removed[i]) out.push_back(source[i]);
  }
  return out;
}

inline Tokens identity(std::span<const std::string> source) {
  if (source.empty()) validation_error("identity baseline needs a non-empty source");
  return Tokens(source.begin(), source.end());
}

inline Tokens run_baseline_once(std::span<const std::string> source, const BaselineConfig& cfg,
                                std::uint64_t instance) {
  return cfg.kind == BaselineKind::RandomDrop ? theta_r(source, cfg, instance) : identity(source);
}

/// Reads a dataset and writes one prediction line per dataset line, in order.
inline std::size_t run_baseline(std::istream& dataset, const BaselineConfig& cfg, std::ostream& out,
                                const std::string& origin = "<dataset>") {
  cfg.validate();
  const auto records = read_dataset(dataset, origin);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    const auto pred = run_baseline_once(normalize(r.source), cfg, i);
    write_prediction({r.source, r.target, intent_tag(r.bucket), {join_tokens(pred)}}, out);
  }
  return records.size();
}

}  // namespace qref
