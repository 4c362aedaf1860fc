#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "qref/baselines.hpp"

using namespace qref;
using T = RewriteType;

namespace {

Tokens toks(const std::string& s) { return normalize(s); }

BaselineConfig drop(std::uint64_t seed) {
  BaselineConfig cfg;
  cfg.seed = seed;
  return cfg;
}

std::string dataset_of(const std::vector<std::string>& sources) {
  std::string out;
  for (const auto& s : sources) out += "<same>\t" + s + "\t" + s + " x\n";
  return out;
}

}  // namespace

TEST(ThetaR, ShortQueriesUnchanged) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    EXPECT_EQ(theta_r(toks("a b c"), drop(seed), seed), toks("a b c"));
    EXPECT_EQ(theta_r(toks("a"), drop(seed), 0), toks("a"));
  }
}

TEST(ThetaR, FourTokensEnumeration) {
  // d is 1 or 2; every outcome is an order-preserving subsequence of length 2 or 3.
  std::set<Tokens> allowed;
  const auto src = toks("a b c d");
  for (unsigned mask = 0; mask < 16; ++mask) {
    Tokens keep;
    for (unsigned i = 0; i < 4; ++i) {
      if (mask & (1u << i)) keep.push_back(src[i]);
    }
    if (keep.size() == 2 || keep.size() == 3) allowed.insert(keep);
  }
  ASSERT_EQ(allowed.size(), 10u);
  std::set<Tokens> seen;
  for (std::uint64_t i = 0; i < 4000; ++i) {
    const auto out = theta_r(src, drop(7), i);
    EXPECT_TRUE(allowed.count(out));
    seen.insert(out);
  }
  EXPECT_EQ(seen, allowed);
}

TEST(ThetaR, DropCountIsUniform) {
  // Eight tokens: d uniform on {1..4}.
  const auto src = toks("a b c d e f g h");
  std::map<std::size_t, int> counts;
  const int n = 40000;
  for (int i = 0; i < n; ++i) ++counts[src.size() - theta_r(src, drop(3), i).size()];
  ASSERT_EQ(counts.size(), 4u);
  for (const auto& [d, c] : counts) {
    EXPECT_GE(d, 1u);
    EXPECT_LE(d, 4u);
    EXPECT_NEAR(c / static_cast<double>(n), 0.25, 0.015);
  }
}

TEST(ThetaR, OnlySameOrSubset) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 20000; ++i) {
    const auto src = oracle::random_tokens(rng, 1, 12, 5);
    const auto out = theta_r(src, drop(rng()), i);
    const auto t = classify(src, out);
    EXPECT_TRUE(t == T::Same || t == T::SubSet);
    EXPECT_EQ(t == T::SubSet, src.size() >= 4);
    // Survivors keep their order.
    std::size_t j = 0;
    for (const auto& tok : src) {
      if (j < out.size() && out[j] == tok) ++j;
    }
    EXPECT_EQ(j, out.size());
  }
}

TEST(ThetaR, DeterministicPerSeedAndInstance) {
  const auto src = toks("a b c d e f g");
  EXPECT_EQ(theta_r(src, drop(5), 9), theta_r(src, drop(5), 9));
  bool differs = false;
  for (std::uint64_t i = 0; i < 20 && !differs; ++i) {
    differs = theta_r(src, drop(5), i) != theta_r(src, drop(6), i);
  }
  EXPECT_TRUE(differs);
  EXPECT_THROW(theta_r(Tokens{}, drop(1), 0), Error);
}

TEST(MaxDropCount, FloorWithFloorOfOne) {
  BaselineConfig cfg;
  EXPECT_EQ(max_drop_count(4, cfg), 2u);
  EXPECT_EQ(max_drop_count(5, cfg), 2u);
  EXPECT_EQ(max_drop_count(9, cfg), 4u);
  cfg.max_drop_fraction = 0.2;
  EXPECT_EQ(max_drop_count(4, cfg), 1u);
}

TEST(BaselineConfig, Validation) {
  BaselineConfig cfg;
  cfg.max_drop_fraction = 1.0;
  EXPECT_THROW(cfg.validate(), Error);
  cfg.max_drop_fraction = 0.0;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = {};
  cfg.min_tokens_to_drop_from = 1;
  EXPECT_THROW(cfg.validate(), Error);
}

TEST(Identity, Anchors) {
  EXPECT_EQ(identity(toks("x")), toks("x"));
  EXPECT_THROW(identity(Tokens{}), Error);
}

TEST(RunBaseline, EmptyDataset) {
  std::istringstream in("");
  std::ostringstream out;
  EXPECT_EQ(run_baseline(in, drop(1), out), 0u);
  EXPECT_EQ(out.str(), "");
}

TEST(RunBaseline, OneLinePerRecordAndDeterministic) {
  const auto text = dataset_of({"a b c d e", "a b", "nike air max womens size 9"});
  std::istringstream in1(text), in2(text);
  std::ostringstream out1, out2;
  EXPECT_EQ(run_baseline(in1, drop(4), out1), 3u);
  run_baseline(in2, drop(4), out2);
  EXPECT_EQ(out1.str(), out2.str());
  std::istringstream parsed(out1.str());
  const auto records = read_predictions(parsed);
  ASSERT_EQ(records.size(), 3u);
  EXPECT_EQ(records[1].candidates[0], "a b");
  EXPECT_EQ(records[0].gold, "a b c d e x");
  EXPECT_EQ(records[0].tag, "<same>");
}

TEST(RunBaseline, MalformedLine) {
  std::istringstream in("<same>\ta\tb\nnot a record\n");
  std::ostringstream out;
  try {
    run_baseline(in, drop(1), out);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(RunBaseline, HistogramMatchesAnalyticExpectation) {
  // 100 queries with lengths 2..9. A query of length n >= 4 is always SubSet.
  std::mt19937_64 rng(7);
  std::vector<std::string> sources;
  std::size_t eligible = 0;
  for (int i = 0; i < 100; ++i) {
    const auto t = oracle::random_tokens(rng, 2, 9, 20);
    eligible += t.size() >= 4;
    sources.push_back(join_tokens(t));
  }
  std::istringstream in(dataset_of(sources));
  std::ostringstream out;
  run_baseline(in, drop(7), out);
  std::istringstream parsed(out.str());
  const auto report = evaluate(to_instances(read_predictions(parsed)));
  EXPECT_NEAR(report.prediction_histogram.at(T::SubSet), static_cast<double>(eligible), 3.0);
  EXPECT_EQ(report.prediction_histogram.size(), eligible == 100 ? 1u : 2u);
}

TEST(RunBaseline, IdentityHasZeroCoverageAndLowerBleu) {
  const auto text = dataset_of({"a b c d e", "a b", "x y z"});
  std::istringstream in(text);
  std::ostringstream out;
  BaselineConfig cfg;
  cfg.kind = BaselineKind::Identity;
  run_baseline(in, cfg, out);
  std::istringstream parsed(out.str());
  auto instances = to_instances(read_predictions(parsed));
  const auto report = evaluate(instances);
  EXPECT_EQ(report.cov, 0.0);
  for (auto& e : instances) e.candidates = {e.gold};
  EXPECT_LT(report.bleu, evaluate(instances).bleu);
  EXPECT_EQ(report.rats, 0.0);
}
