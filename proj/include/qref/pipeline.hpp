#pragma once

// Pipeline configuration: one key=value file that wires paths, thresholds,
// signal weights, the baseline and the evaluation depth together.

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "qref/baselines.hpp"
#include "qref/corpus.hpp"
#include "qref/intents.hpp"
#include "qref/keyvalue.hpp"
#include "qref/miner.hpp"

namespace qref {

struct PipelineConfig {
  // Paths as written in the file; relative ones resolve against base_dir.
  std::string taxonomy;
  std::string lexicon;
  std::string inventory;
  std::string log;
  std::string workdir;
  std::filesystem::path base_dir;  // not serialized

  MinerConfig miner;
  IntentThresholds intent;
  SignalWeights weights = SignalWeights::defaults();
  BaselineConfig baseline;
  std::size_t eval_k = 1;

  std::filesystem::path resolve(const std::string& path) const {
    if (path.empty()) return {};
    std::filesystem::path p(path);
    return p.is_absolute() || base_dir.empty() ? p : base_dir / p;
  }

  void validate() const {
    if (miner.max_hops < 1) config_error("miner.max_hops must be >= 1");
    if (miner.min_shared < 1) config_error("miner.min_shared must be >= 1");
    if (!(miner.engagement_threshold >= 0.0)) config_error("miner.engagement_threshold must be >= 0");
    if (miner.signal_filter.empty()) config_error("miner.signals must name at least one signal");
    for (const auto& s : miner.signal_filter) {
      if (!weights.contains(s)) config_error("miner.signals names unknown signal '" + s + "'");
    }
    intent.validate();
    baseline.validate();
    if (eval_k < 1) config_error("eval.k must be >= 1");
    for (const auto* path : {&taxonomy, &lexicon, &inventory, &log}) {
      if (!path->empty() && !std::filesystem::exists(resolve(*path))) {
        config_error("configured file '" + resolve(*path).string() + "' does not exist");
      }
    }
  }

  static PipelineConfig parse(KeyValueDoc& doc, std::filesystem::path base_dir = {}) {
    PipelineConfig c;
    c.base_dir = std::move(base_dir);
    c.taxonomy = doc.get_string("paths.taxonomy", "");
    c.lexicon = doc.get_string("paths.lexicon", "");
    c.inventory = doc.get_string("paths.inventory", "");
    c.log = doc.get_string("paths.log", "");
    c.workdir = doc.get_string("paths.workdir", "");

    c.miner.max_hops = doc.get_uint("miner.max_hops", c.miner.max_hops);
    c.miner.engagement_threshold =
        doc.get_double("miner.engagement_threshold", c.miner.engagement_threshold);
    c.miner.min_shared = doc.get_uint("miner.min_shared", c.miner.min_shared);
    if (doc.has("miner.signals")) {
      c.miner.signal_filter.clear();
      for (const auto& s : split(doc.get_string("miner.signals", ""), ',')) {
        if (!trim(s).empty()) c.miner.signal_filter.insert(std::string(trim(s)));
      }
    }

    c.intent.tau_same = doc.get_double("intent.tau_same", c.intent.tau_same);
    c.intent.tau_sim = doc.get_double("intent.tau_sim", c.intent.tau_sim);
    c.intent.tau_core = doc.get_double("intent.tau_core", c.intent.tau_core);
    c.intent.delta_len = doc.get_uint("intent.delta_len", c.intent.delta_len);
    c.intent.recall_k = doc.get_uint("intent.recall_k", c.intent.recall_k);

    for (const auto& key : doc.keys_with_prefix("signal.")) {
      c.weights.set(key.substr(7), doc.get_double(key, 0.0));
    }

    if (doc.has("baseline.kind")) {
      const auto kind = parse_baseline_kind(doc.get_string("baseline.kind", ""));
      if (!kind) doc.fail("baseline.kind", "expected random_drop or identity");
      c.baseline.kind = *kind;
    }
    c.baseline.seed = doc.get_uint("baseline.seed", c.baseline.seed);
    c.baseline.max_drop_fraction =
        doc.get_double("baseline.max_drop_fraction", c.baseline.max_drop_fraction);
    c.baseline.min_tokens_to_drop_from =
        doc.get_uint("baseline.min_tokens_to_drop_from", c.baseline.min_tokens_to_drop_from);

    c.eval_k = doc.get_uint("eval.k", c.eval_k);
    doc.finish();
    c.validate();
    return c;
  }

  static PipelineConfig parse_string(const std::string& text, std::filesystem::path base_dir = {}) {
    auto doc = KeyValueDoc::parse_string(text);
    return parse(doc, std::move(base_dir));
  }

  static PipelineConfig load(const std::filesystem::path& path) {
    auto doc = KeyValueDoc::load(path.string());
    return parse(doc, path.parent_path());
  }

  /// Canonical text form; parse(serialize()) reproduces the config.
  std::string serialize() const {
    std::ostringstream os;
    auto line = [&](const std::string& key, const std::string& value) {
      os << key << " = " << value << '\n';
    };
    if (!taxonomy.empty()) line("paths.taxonomy", taxonomy);
    if (!lexicon.empty()) line("paths.lexicon", lexicon);
    if (!inventory.empty()) line("paths.inventory", inventory);
    if (!log.empty()) line("paths.log", log);
    if (!workdir.empty()) line("paths.workdir", workdir);
    line("miner.max_hops", std::to_string(miner.max_hops));
    line("miner.engagement_threshold", format_double(miner.engagement_threshold));
    line("miner.min_shared", std::to_string(miner.min_shared));
    std::string signals;
    for (const auto& s : miner.signal_filter) signals += (signals.empty() ? "" : ",") + s;
    line("miner.signals", signals);
    line("intent.tau_same", format_double(intent.tau_same));
    line("intent.tau_sim", format_double(intent.tau_sim));
    line("intent.tau_core", format_double(intent.tau_core));
    line("intent.delta_len", std::to_string(intent.delta_len));
    line("intent.recall_k", std::to_string(intent.recall_k));
    for (const auto& [kind, w] : weights.all()) line("signal." + kind, format_double(w));
    line("baseline.kind", std::string(to_string(baseline.kind)));
    line("baseline.seed", std::to_string(baseline.seed));
    line("baseline.max_drop_fraction", format_double(baseline.max_drop_fraction));
    line("baseline.min_tokens_to_drop_from", std::to_string(baseline.min_tokens_to_drop_from));
    line("eval.k", std::to_string(eval_k));
    return os.str();
  }

  friend bool operator==(const PipelineConfig& a, const PipelineConfig& b) {
    return a.taxonomy == b.taxonomy && a.lexicon == b.lexicon && a.inventory == b.inventory &&
           a.log == b.log && a.workdir == b.workdir && a.miner == b.miner &&
           a.intent == b.intent && a.weights == b.weights && a.baseline == b.baseline &&
           a.eval_k == b.eval_k;
  }
};

}  // namespace qref
