// Scores questions read from stdin against a language model and a domain
// centroid built from the seeds of a KB.
//
//   score_questions KB TEMPLATES LM_CORPUS VECTORS < questions.txt

#include <iomanip>
#include <iostream>
#include <string>

#include "kbqgen/kbqgen.hpp"

int main(int argc, char **argv) {
  if (argc != 5) {
    std::cerr << "usage: " << argv[0] << " KB TEMPLATES LM_CORPUS VECTORS < questions.txt\n";
    return 2;
  }
  try {
    const auto kb = kbqgen::load_kb(argv[1]);
    const auto seeds = kbqgen::generate_seeds(kb, kbqgen::load_templates(argv[2]));
    const auto model = kbqgen::train_ngram_file(argv[3], 3);
    const auto table = kbqgen::load_embeddings(argv[4]);
    const auto centroid = kbqgen::seed_centroid(table, seeds);

    std::vector<kbqgen::Question> questions;
    for (std::string line; std::getline(std::cin, line);)
      if (!kbqgen::normalize(line).empty())
        questions.push_back(kbqgen::Question::expanded(kbqgen::normalize(line), 1, "stdin"));

    std::cout << std::fixed << std::setprecision(4);
    for (const auto &q : kbqgen::score_all(questions, model, table, centroid))
      std::cout << *q.rel_score << '\t' << *q.flu_score << '\t' << q.text << '\n';
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
