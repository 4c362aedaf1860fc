#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "qref/rewrite_type.hpp"

using namespace qref;
using T = RewriteType;

namespace {
Tokens toks(const std::string& s) { return normalize(s); }
}  // namespace

TEST(Classify, ExamplePairStrings) {
  EXPECT_EQ(classify(toks("nike air jordan 4"), toks("nike air jordan 11")), T::Replace);
  EXPECT_EQ(classify(toks("nike womens size 9"), toks("nike womens air max size 9")), T::SuperSet);
}

TEST(Classify, Anchors) {
  EXPECT_EQ(classify(toks("a b"), Tokens{}), T::Empty);
  EXPECT_EQ(classify(toks("a b"), toks("c d")), T::Other);
  EXPECT_EQ(classify(toks("a b"), toks("b a")), T::Same);
  EXPECT_EQ(classify(toks("nike 9 womens size"), toks("nike womens size 9")), T::Same);
  EXPECT_EQ(classify(toks("a b c"), toks("a b")), T::SubSet);
  EXPECT_EQ(classify(toks("a b c"), toks("a x")), T::SubSetRep);
  EXPECT_EQ(classify(toks("a b"), toks("a x y")), T::SupSetRep);
  EXPECT_EQ(classify(toks("a b"), toks("a x")), T::Replace);
}

TEST(Classify, MultisetSemantics) {
  EXPECT_EQ(classify(toks("a a b"), toks("a b")), T::SubSet);
  EXPECT_EQ(classify(toks("a b"), toks("a a b")), T::SuperSet);
  EXPECT_EQ(classify(toks("a a"), toks("a b")), T::Replace);
}

TEST(Classify, EmptySourceIsError) {
  try {
    classify(Tokens{}, toks("a"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Validation);
  }
}

TEST(Classify, SameOnIdentity) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 2000; ++i) {
    const auto x = oracle::random_tokens(rng, 1, 8, 6);
    EXPECT_EQ(classify(x, x), T::Same);
  }
}

TEST(Classify, AgreesWithIndependentPredicates) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 20000; ++i) {
    const auto src = oracle::random_tokens(rng, 1, 6, 5);
    const auto pred = oracle::random_tokens(rng, 0, 6, 5);
    const auto types = oracle::matching_types(src, pred);
    ASSERT_EQ(types.size(), 1u);
    EXPECT_EQ(classify(src, pred), types[0]);
  }
}

TEST(Labels, NamesRoundTrip) {
  for (auto t : kAllRewriteTypes) EXPECT_EQ(parse_rewrite_type(to_string(t)), t);
  EXPECT_FALSE(parse_rewrite_type("Nope").has_value());
  EXPECT_EQ(short_label(T::SubSet), "Sb");
  EXPECT_EQ(short_label(T::SupSetRep), "SpRp");
}

TEST(TypeHistogram, Anchors) {
  std::vector<std::pair<Tokens, Tokens>> pairs = {{toks("a b"), toks("a b")},
                                                  {toks("a b"), toks("b a")},
                                                  {toks("a b"), toks("a")},
                                                  {toks("a b c"), toks("c")}};
  EXPECT_EQ(type_histogram(pairs), (std::map<T, double>{{T::Same, 50.0}, {T::SubSet, 50.0}}));
  std::vector<std::pair<Tokens, Tokens>> empties = {{toks("a"), {}}, {toks("b"), {}}};
  EXPECT_EQ(type_histogram(empties), (std::map<T, double>{{T::Empty, 100.0}}));
  EXPECT_THROW(type_histogram(std::vector<std::pair<Tokens, Tokens>>{}), Error);
}

TEST(TypeHistogram, SumsToHundred) {
  std::mt19937_64 rng(5);
  for (int round = 0; round < 50; ++round) {
    std::vector<std::pair<Tokens, Tokens>> pairs;
    for (int i = 0; i < 1 + static_cast<int>(rng() % 300); ++i) {
      pairs.emplace_back(oracle::random_tokens(rng, 1, 5, 4), oracle::random_tokens(rng, 0, 5, 4));
    }
    double sum = 0;
    for (const auto& [t, pct] : type_histogram(pairs)) sum += pct;
    EXPECT_NEAR(sum, 100.0, 0.01);
  }
}
