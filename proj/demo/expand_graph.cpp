// Expansion over an in-memory suggestion table, no files or network.

#include <iostream>

#include "kbqgen/kbqgen.hpp"

int main() {
  kbqgen::StaticProvider provider({
      {"how to use jigsaw", {"how to use a jigsaw for curves", "jigsaw vs circular saw"}},
      {"how to use a jigsaw for curves", {"best jigsaw blade for curves"}},
      {"jigsaw vs circular saw", {"how to use jigsaw", "circular saw safety tips"}},
  });
  const kbqgen::KnowledgeBase kb({{"jigsaw", "performsActivity", "CurveCut"}});
  const auto seeds = kbqgen::generate_seeds(kb, {{"performsActivity", "how to use #X#"}});

  kbqgen::ExpansionConfig config;
  config.max_iterations = 10;
  const auto result = kbqgen::expand(seeds, provider, config);
  for (const auto &q : result.questions)
    std::cout << q.generation << '\t' << kbqgen::to_string(q.provenance) << '\t' << q.text << '\n';
  std::cout << result.iterations << " queries\n";
}
