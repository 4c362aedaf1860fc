#pragma once

// Nine hand-checked example pairs, three per bucket, on the shipped fixture
// taxonomy, lexicon and inventory.

#include <fstream>
#include <string>
#include <vector>

#include "qref/qref.hpp"
#include "test_util.hpp"

namespace fixtures {

struct ExamplePairs {
  qref::Taxonomy taxonomy;
  qref::AspectLexicon lexicon;
  qref::RetrievalIndex index;
  std::vector<qref::QueryPair> pairs;
  std::vector<qref::IntentBucket> expected;

  qref::IntentContext context(qref::IntentThresholds th = {}) const {
    return {taxonomy, lexicon, index, th};
  }
};

inline ExamplePairs example_pairs() {
  const auto data = testutil::data_dir();
  ExamplePairs t{qref::Taxonomy::load((data / "demo/taxonomy.txt").string()),
           qref::AspectLexicon::load((data / "demo/lexicon.txt").string()),
           qref::RetrievalIndex(qref::load_inventory((data / "fixtures/inventory.tsv").string())),
           {},
           {}};
  std::ifstream in(data / "fixtures/example_pairs.tsv");
  t.pairs = qref::read_pairs(in, "example_pairs.tsv");
  using B = qref::IntentBucket;
  t.expected = {B::SameIntent,    B::SameIntent,    B::SameIntent,
                B::SimilarIntent, B::SimilarIntent, B::SimilarIntent,
                B::InspiredIntent, B::InspiredIntent, B::InspiredIntent};
  return t;
}

}  // namespace fixtures
