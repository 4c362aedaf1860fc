// Classify a handful of rewrites and score two toy models against them.

#include <iostream>

#include "qref/qref.hpp"

int main() {
  using namespace qref;

  const std::vector<std::pair<std::string, std::string>> rewrites = {
      {"nike air jordan 4", "nike air jordan 11"},
      {"nike womens size 9", "nike womens air max size 9"},
      {"iphone 14 plus case", "phone case with stand"},
      {"transformers logo stickers", "white autobot sticker"},
  };
  for (const auto& [src, tgt] : rewrites) {
    std::cout << src << "  ->  " << tgt << "  [" << to_string(classify(normalize(src), normalize(tgt)))
              << "]\n";
  }

  std::vector<EvalInstance> echo, dropper;
  BaselineConfig cfg;
  cfg.seed = 42;
  for (std::size_t i = 0; i < rewrites.size(); ++i) {
    const auto src = normalize(rewrites[i].first);
    const auto gold = normalize(rewrites[i].second);
    echo.push_back({src, gold, {identity(src)}});
    dropper.push_back({src, gold, {theta_r(src, cfg, i)}});
  }
  std::cout << '\n' << render_tables({{"identity", evaluate(echo)}, {"random_drop", evaluate(dropper)}});
  return 0;
}
