#include <gtest/gtest.h>

#include <nlohmann/json.hpp>
#include <sstream>

#include "qref/qref.hpp"
#include "test_util.hpp"

using namespace qref;
using testutil::run_cli;
using testutil::slurp;
using testutil::spit;

namespace {

std::string quoted(const std::filesystem::path& p) { return "\"" + p.string() + "\""; }

nlohmann::json error_json(const testutil::CliResult& r) {
  const auto first = r.err.substr(0, r.err.find('\n'));
  return nlohmann::json::parse(first);
}

}  // namespace

TEST(Cli, FullPipelineProducesEveryArtifact) {
  testutil::TempDir dir;
  const auto files = testutil::run_pipeline(dir.path(), 42);
  ASSERT_FALSE(files.empty());
  for (const char* name :
       {"log.jsonl", "log.jsonl.manifest.tsv", "log.jsonl.inventory.tsv", "pairs.tsv",
        "pairs.tsv.counts.json", "bucketed.tsv", "bucketed.tsv.rejected.tsv", "dataset.tsv",
        "dataset.tsv.manifest.json", "drop.tsv", "ident.tsv", "report.json", "report.txt"}) {
    EXPECT_TRUE(files.count(name)) << name;
  }
  for (const auto& [name, _] : files) EXPECT_EQ(name.find(".tmp"), std::string::npos) << name;

  const auto counts = nlohmann::json::parse(files.at("pairs.tsv.counts.json"));
  EXPECT_EQ(counts["total"].get<int>(), counts["in_session"].get<int>() +
                                            counts["co_engaged"].get<int>() +
                                            counts["one_hop"].get<int>());

  std::istringstream ds(files.at("dataset.tsv"));
  const auto records = read_dataset(ds);
  const auto manifest = nlohmann::json::parse(files.at("dataset.tsv.manifest.json"));
  EXPECT_EQ(manifest["total"].get<std::size_t>(), records.size());
  EXPECT_GT(records.size(), 0u);

  std::istringstream drop(files.at("drop.tsv"));
  EXPECT_EQ(read_predictions(drop).size(), records.size());

  const auto report = nlohmann::json::parse(files.at("report.json"));
  ASSERT_EQ(report["models"].size(), 2u);
  EXPECT_EQ(report["models"][0]["name"], "drop");
  EXPECT_EQ(report["models"][1]["name"], "ident");
  EXPECT_EQ(report["models"][1]["cov"].get<double>(), 0.0);
}

TEST(Cli, RerunWithSameSeedIsByteIdentical) {
  testutil::TempDir a, b;
  const auto first = testutil::run_pipeline(a.path(), 7);
  const auto second = testutil::run_pipeline(b.path(), 7);
  ASSERT_FALSE(first.empty());
  EXPECT_EQ(first, second);
  testutil::TempDir c;
  const auto other = testutil::run_pipeline(c.path(), 8);
  EXPECT_NE(first.at("log.jsonl"), other.at("log.jsonl"));
}

TEST(Cli, RefusesToOverwriteWithoutForce) {
  testutil::TempDir dir;
  const auto spec = testutil::data_dir() / "demo/generator.conf";
  const auto out = dir / "log.jsonl";
  spit(out, "keep me");
  auto r = run_cli("gen " + quoted(spec) + " " + quoted(out), dir.path());
  EXPECT_EQ(r.code, 4);
  EXPECT_EQ(slurp(out), "keep me");
  EXPECT_FALSE(std::filesystem::exists(dir / "log.jsonl.manifest.tsv"));
  r = run_cli("--force gen " + quoted(spec) + " " + quoted(out), dir.path());
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(slurp(out), "keep me");
}

TEST(Cli, UsageErrors) {
  testutil::TempDir dir;
  EXPECT_EQ(run_cli("", dir.path()).code, 64);
  EXPECT_EQ(run_cli("frobnicate", dir.path()).code, 64);
  const auto r = run_cli("mine onlyone", dir.path());
  EXPECT_EQ(r.code, 64);
  EXPECT_EQ(error_json(r)["error"], "usage");
  EXPECT_EQ(run_cli("--seed notanumber mine a b", dir.path()).code, 64);
}

TEST(Cli, ConfigErrors) {
  testutil::TempDir dir;
  spit(dir / "bad.conf", "miner.max_hops = many\n");
  auto r = run_cli("--config " + quoted(dir / "bad.conf") + " mine x.jsonl y.tsv", dir.path());
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(error_json(r)["error"], "config");
  EXPECT_EQ(error_json(r)["line"], 1);

  r = run_cli("--config " + quoted(dir / "missing.conf") + " mine x y", dir.path());
  EXPECT_EQ(r.code, 2);

  // bucketize needs a taxonomy.
  spit(dir / "pairs.tsv", "");
  spit(dir / "empty.conf", "");
  r = run_cli("--config " + quoted(dir / "empty.conf") + " --workdir " + quoted(dir.path()) +
                  " bucketize pairs.tsv out.tsv",
              dir.path());
  EXPECT_EQ(r.code, 2);
}

TEST(Cli, ValidationErrorCarriesLineAndOffset) {
  testutil::TempDir dir;
  const std::string good =
      R"({"session_id":"s1","ts":1,"query":"a b","category":"hats","engagements":[]})";
  spit(dir / "log.jsonl", good + "\n{\"session_id\":\"s1\"}\n");
  const auto r = run_cli("--workdir " + quoted(dir.path()) + " mine log.jsonl pairs.tsv", dir.path());
  EXPECT_EQ(r.code, 3);
  const auto j = error_json(r);
  EXPECT_EQ(j["error"], "validation");
  EXPECT_EQ(j["line"], 2);
  EXPECT_EQ(j["offset"].get<std::size_t>(), good.size() + 1);
  EXPECT_FALSE(j["message"].get<std::string>().empty());
  EXPECT_FALSE(std::filesystem::exists(dir / "pairs.tsv"));
}

TEST(Cli, MissingInputIsIo) {
  testutil::TempDir dir;
  const auto r = run_cli("--workdir " + quoted(dir.path()) + " mine nope.jsonl pairs.tsv", dir.path());
  EXPECT_EQ(r.code, 4);
  EXPECT_EQ(error_json(r)["error"], "io");
}

TEST(Cli, EvalAtKAddsRow) {
  testutil::TempDir dir;
  spit(dir / "p.tsv", "a b c\ta b\t<same>\ta b c\ta b\n");
  const auto r = run_cli("--workdir " + quoted(dir.path()) + " eval rep p.tsv --k 2", dir.path());
  ASSERT_EQ(r.code, 0) << r.err;
  const auto report = nlohmann::json::parse(slurp(dir / "rep.json"));
  ASSERT_EQ(report["models"].size(), 2u);
  EXPECT_EQ(report["models"][0]["name"], "p");
  EXPECT_EQ(report["models"][1]["name"], "p@2");
  EXPECT_EQ(report["models"][0]["rec"].get<double>(), 1.0);
  EXPECT_EQ(report["models"][1]["rec"].get<double>(), 1.0);
}
