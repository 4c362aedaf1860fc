// qref: mine, bucket, export, run baselines on, and evaluate query
// reformulation data.
//
//   qref [--config F] [--seed N] [--force] [--workdir D] <command> ...
//
//   gen       SPEC OUT         synthetic log OUT + OUT.manifest.tsv + OUT.inventory.tsv
//   mine      LOG OUT          pairs file OUT + OUT.counts.json
//   bucketize PAIRS OUT        bucketed pairs OUT + OUT.rejected.tsv
//   export    BUCKETED OUT     dataset OUT + OUT.manifest.json
//   baseline  DATASET OUT      predictions OUT
//   eval      OUT PRED...      OUT.json + OUT.txt
//
// Exit codes: 0 ok, 2 config, 3 validation, 4 io, 64 usage.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qref/qref.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitValidation = 3;
constexpr int kExitIo = 4;
constexpr int kExitUsage = 64;

struct GlobalOptions {
  std::string config;
  std::uint64_t seed = 0;
  bool force = false;
  std::string workdir;
};

/// Collects every output of a command and writes them only after all of them
/// are known not to clobber existing files (unless --force).
class Outputs {
 public:
  explicit Outputs(bool force) : force_(force) {}

  void add(fs::path path, std::string content) {
    files_.emplace_back(std::move(path), std::move(content));
  }

  void commit() const {
    for (const auto& [path, content] : files_) {
      if (!force_ && fs::exists(path)) {
        qref::io_error("refusing to overwrite '" + path.string() + "' (use --force)");
      }
    }
    for (const auto& [path, content] : files_) {
      if (path.has_parent_path()) fs::create_directories(path.parent_path());
      const auto tmp = path.string() + ".tmp";
      {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) qref::io_error("cannot write '" + tmp + "'");
        out << content;
        if (!out) qref::io_error("failed writing '" + tmp + "'");
      }
      fs::rename(tmp, path);
    }
  }

 private:
  bool force_;
  std::vector<std::pair<fs::path, std::string>> files_;
};

class Context {
 public:
  explicit Context(const GlobalOptions& opts) : opts_(opts) {
    if (!opts.config.empty()) {
      const auto path = resolve(opts.config);
      if (!fs::exists(path)) qref::config_error("config file '" + path.string() + "' not found");
      cfg_ = qref::PipelineConfig::load(path);
    }
  }

  const qref::PipelineConfig& config() const { return cfg_; }
  const GlobalOptions& options() const { return opts_; }

  /// CLI paths are relative to --workdir when given, else to the config's
  /// paths.workdir, else to the current directory.
  fs::path resolve(const std::string& path) const {
    fs::path p(path);
    if (p.is_absolute()) return p;
    if (!opts_.workdir.empty()) return fs::path(opts_.workdir) / p;
    if (!cfg_.workdir.empty()) return cfg_.resolve(cfg_.workdir) / p;
    return p;
  }

  std::optional<qref::Taxonomy> taxonomy() const {
    if (cfg_.taxonomy.empty()) return std::nullopt;
    return qref::Taxonomy::load(cfg_.resolve(cfg_.taxonomy).string());
  }

  Outputs outputs() const { return Outputs(opts_.force); }

 private:
  GlobalOptions opts_;
  qref::PipelineConfig cfg_;
};

std::ifstream open_input(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) qref::io_error("cannot open '" + path.string() + "'");
  return in;
}

// ---------------------------------------------------------------------------

void cmd_gen(const Context& ctx, const std::string& spec_path, const std::string& out_path) {
  const auto spec = qref::GeneratorSpec::load(ctx.resolve(spec_path).string());
  if (const auto tax = ctx.taxonomy()) {
    for (const auto& c : spec.categories) {
      if (!tax->contains(c.category_id)) {
        qref::config_error("generator category '" + c.category_id + "' is not in the taxonomy");
      }
    }
  }
  const auto generated = qref::generate_synthetic_log(spec, ctx.options().seed);
  std::ostringstream log, manifest, inventory;
  qref::write_log(generated.log, log);
  qref::write_manifest(generated.manifest, manifest);
  qref::write_inventory(generated.inventory, inventory);

  const auto out = ctx.resolve(out_path);
  auto outputs = ctx.outputs();
  outputs.add(out, log.str());
  outputs.add(out.string() + ".manifest.tsv", manifest.str());
  outputs.add(out.string() + ".inventory.tsv", inventory.str());
  outputs.commit();
  std::cerr << "gen: " << generated.log.session_count() << " sessions, "
            << generated.log.event_count() << " events, " << generated.manifest.size()
            << " planted pairs\n";
}

void cmd_mine(const Context& ctx, const std::string& log_path, const std::string& out_path) {
  const auto tax = ctx.taxonomy();
  auto in = open_input(ctx.resolve(log_path));
  const auto log = qref::load_log(in, tax ? &*tax : nullptr);
  const auto& cfg = ctx.config();
  const auto mined = qref::mine_all(log, cfg.miner, cfg.weights);

  std::ostringstream pairs;
  qref::write_pairs(mined.all(), pairs);
  nlohmann::ordered_json counts;
  counts["in_session"] = mined.in_session.size();
  counts["co_engaged"] = mined.co_engaged.size();
  counts["one_hop"] = mined.one_hop.size();
  counts["total"] = mined.in_session.size() + mined.co_engaged.size() + mined.one_hop.size();

  const auto out = ctx.resolve(out_path);
  auto outputs = ctx.outputs();
  outputs.add(out, pairs.str());
  outputs.add(out.string() + ".counts.json", counts.dump(2) + "\n");
  outputs.commit();
  std::cerr << "mine: " << counts.dump() << '\n';
}

void cmd_bucketize(const Context& ctx, const std::string& pairs_path, const std::string& out_path,
                   const std::string& inventory_opt) {
  const auto& cfg = ctx.config();
  const auto tax = ctx.taxonomy();
  if (!tax) qref::config_error("bucketize needs paths.taxonomy in --config");
  const auto lexicon = cfg.lexicon.empty() ? qref::AspectLexicon{}
                                           : qref::AspectLexicon::load(cfg.resolve(cfg.lexicon).string());
  qref::RetrievalIndex index;
  if (!inventory_opt.empty()) {
    index = qref::RetrievalIndex(qref::load_inventory(ctx.resolve(inventory_opt).string()));
  } else if (!cfg.inventory.empty()) {
    index = qref::RetrievalIndex(qref::load_inventory(cfg.resolve(cfg.inventory).string()));
  }

  auto in = open_input(ctx.resolve(pairs_path));
  const auto pairs = qref::read_pairs(in, pairs_path);
  const qref::IntentContext ictx{*tax, lexicon, index, cfg.intent};
  const auto result = qref::bucketize(pairs, ictx);

  std::ostringstream accepted, rejected;
  qref::write_pairs(result.accepted, accepted, /*with_bucket=*/true);
  qref::write_rejections(result.rejected, rejected);
  const auto out = ctx.resolve(out_path);
  auto outputs = ctx.outputs();
  outputs.add(out, accepted.str());
  outputs.add(out.string() + ".rejected.tsv", rejected.str());
  outputs.commit();
  std::cerr << "bucketize: " << result.accepted.size() << " accepted, " << result.rejected.size()
            << " rejected\n";
}

void cmd_export(const Context& ctx, const std::string& pairs_path, const std::string& out_path) {
  auto in = open_input(ctx.resolve(pairs_path));
  const auto pairs = qref::read_pairs(in, pairs_path);
  std::ostringstream body;
  const auto manifest = qref::export_dataset(pairs, body);
  const auto out = ctx.resolve(out_path);
  auto outputs = ctx.outputs();
  outputs.add(out, body.str());
  outputs.add(out.string() + ".manifest.json", qref::manifest_json(manifest));
  outputs.commit();
  std::cerr << "export: " << manifest.total << " records\n";
}

void cmd_baseline(const Context& ctx, const std::string& dataset_path, const std::string& out_path,
                  const std::string& kind) {
  auto cfg = ctx.config().baseline;
  cfg.seed = ctx.options().seed;
  if (!kind.empty()) {
    const auto parsed = qref::parse_baseline_kind(kind);
    if (!parsed) qref::config_error("unknown baseline kind '" + kind + "'");
    cfg.kind = *parsed;
  }
  auto in = open_input(ctx.resolve(dataset_path));
  std::ostringstream preds;
  const auto n = qref::run_baseline(in, cfg, preds, dataset_path);
  auto outputs = ctx.outputs();
  outputs.add(ctx.resolve(out_path), preds.str());
  outputs.commit();
  std::cerr << "baseline: " << n << " predictions (" << qref::to_string(cfg.kind) << ")\n";
}

void cmd_eval(const Context& ctx, const std::string& out_path,
              const std::vector<std::string>& prediction_files, std::size_t k_opt) {
  const std::size_t k = k_opt > 0 ? k_opt : ctx.config().eval_k;
  std::vector<std::pair<std::string, qref::EvalReport>> rows;
  nlohmann::ordered_json models = nlohmann::ordered_json::array();
  for (const auto& spec : prediction_files) {
    std::string name, path = spec;
    if (const auto eq = spec.find('='); eq != std::string::npos) {
      name = spec.substr(0, eq);
      path = spec.substr(eq + 1);
    } else {
      name = fs::path(spec).stem().string();
    }
    auto in = open_input(ctx.resolve(path));
    const auto records = qref::read_predictions(in, path);
    const auto instances = qref::to_instances(records);
    auto add = [&](const std::string& label, const qref::EvalReport& report) {
      rows.emplace_back(label, report);
      auto j = qref::report_json(report);
      nlohmann::ordered_json entry;
      entry["name"] = label;
      entry.update(j);
      models.push_back(std::move(entry));
    };
    add(name, qref::evaluate(instances));
    if (k > 1) add(name + "@" + std::to_string(k), qref::evaluate_at_k(instances, k));
  }
  nlohmann::ordered_json doc;
  doc["models"] = std::move(models);

  const auto out = ctx.resolve(out_path);
  auto outputs = ctx.outputs();
  outputs.add(out.string() + ".json", doc.dump(2) + "\n");
  outputs.add(out.string() + ".txt", qref::render_tables(rows));
  outputs.commit();
  std::cout << qref::render_tables(rows);
}

void report_error(const char* kind, const std::string& message, std::optional<std::size_t> line = {},
                  std::optional<std::uint64_t> offset = {}) {
  nlohmann::ordered_json j;
  j["error"] = kind;
  j["message"] = message;
  if (line) j["line"] = *line;
  if (offset) j["offset"] = *offset;
  std::cerr << j.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Query reformulation mining and evaluation"};
  app.require_subcommand(1);
  GlobalOptions opts;
  app.add_option("--config", opts.config, "Pipeline config file (key = value)");
  app.add_option("--seed", opts.seed, "Seed for all randomness");
  app.add_flag("--force", opts.force, "Overwrite existing outputs");
  app.add_option("--workdir", opts.workdir, "Base directory for relative input/output paths");
  app.fallthrough();

  std::string a, b, inventory, kind;
  std::vector<std::string> predictions;
  std::size_t k = 0;

  auto* gen = app.add_subcommand("gen", "Generate a synthetic session log");
  gen->add_option("spec", a, "Generator spec file")->required();
  gen->add_option("out", b, "Output log path")->required();

  auto* mine = app.add_subcommand("mine", "Mine in-session, co-engaged and one-hop pairs");
  mine->add_option("log", a, "Session log (JSON lines)")->required();
  mine->add_option("out", b, "Output pairs file")->required();

  auto* bucket = app.add_subcommand("bucketize", "Assign intent buckets to mined pairs");
  bucket->add_option("pairs", a, "Pairs file")->required();
  bucket->add_option("out", b, "Output bucketed pairs file")->required();
  bucket->add_option("--inventory", inventory, "Inventory file for recall similarity");

  auto* exp = app.add_subcommand("export", "Write the intent-tagged dataset");
  exp->add_option("pairs", a, "Bucketed pairs file")->required();
  exp->add_option("out", b, "Output dataset file")->required();

  auto* base = app.add_subcommand("baseline", "Run a baseline reformulator over a dataset");
  base->add_option("dataset", a, "Dataset file")->required();
  base->add_option("out", b, "Output predictions file")->required();
  base->add_option("--kind", kind, "random_drop or identity (default from config)");

  auto* eval = app.add_subcommand("eval", "Evaluate one or more predictions files");
  eval->add_option("out", b, "Output prefix (writes OUT.json and OUT.txt)")->required();
  eval->add_option("predictions", predictions, "Predictions files, optionally name=path")
      ->required();
  eval->add_option("--k", k, "Top-k depth (default from config)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report_error("usage", e.what());
    return kExitUsage;
  }

  try {
    const Context ctx(opts);
    if (gen->parsed()) cmd_gen(ctx, a, b);
    if (mine->parsed()) cmd_mine(ctx, a, b);
    if (bucket->parsed()) cmd_bucketize(ctx, a, b, inventory);
    if (exp->parsed()) cmd_export(ctx, a, b);
    if (base->parsed()) cmd_baseline(ctx, a, b, kind);
    if (eval->parsed()) cmd_eval(ctx, b, predictions, k);
  } catch (const qref::Error& e) {
    report_error(qref::to_string(e.kind()), e.what(), e.line(), e.offset());
    switch (e.kind()) {
      case qref::ErrorKind::Config: return kExitConfig;
      case qref::ErrorKind::Validation: return kExitValidation;
      case qref::ErrorKind::Io: return kExitIo;
    }
  } catch (const fs::filesystem_error& e) {
    report_error("io", e.what());
    return kExitIo;
  }
  return 0;
}
