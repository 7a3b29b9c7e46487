// Command-line front end for the question generation pipeline.
//
// Every option lives on the top-level app so a flat config file
// (--config, "key = value" per line) can set any of them; subcommands fall
// through to it. Stage subcommands share the run directory: `seeds` writes
// seeds.jsonl, `expand` reads it and writes expanded.jsonl, `score` writes
// scored.jsonl, `select` writes selected.jsonl. `pipeline` does all four.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "kbqgen/kbqgen.hpp"

namespace fs = std::filesystem;
using namespace kbqgen;

namespace {

struct Options {
  PipelineConfig pipeline;
  std::string kb_format = "auto";
  std::string provider = "mock";
  std::string seed_order = "fifo";
  std::string parser = "json_string_array";
  std::string t_rel;
  std::string t_flu;
  std::string input;
  int verbosity = 0;
  bool quiet = false;

  // classify
  std::string train;
  std::string test;
  std::string text;
  std::string domains;
  std::string save_domains;
  std::string data_format = "tsv";

  // arpa
  std::string arpa_out;
};

std::optional<double> parse_threshold(const std::string &s) {
  if (s.empty()) return std::nullopt;
  char *end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (*end != '\0') throw StageError(Stage::config, "bad threshold: " + s);
  return v;
}

PipelineConfig resolve(Options &o) {
  return run_stage(Stage::config, [&] {
    PipelineConfig c = o.pipeline;
    c.provider = parse_provider_kind(o.provider);
    c.expansion.queue_discipline = parse_queue_discipline(o.seed_order);
    c.http_format = parse_suggestion_format(o.parser);
    c.t_rel = parse_threshold(o.t_rel);
    c.t_flu = parse_threshold(o.t_flu);
    return c;
  });
}

KnowledgeBase read_kb(const Options &o, const PipelineConfig &c) {
  return run_stage(Stage::load_kb, [&] {
    return o.kb_format == "auto" ? load_kb(c.kb_path)
                                 : load_kb(c.kb_path, parse_kb_format(o.kb_format));
  });
}

fs::path out_dir(const PipelineConfig &c) {
  return run_stage(Stage::persist, [&] {
    fs::create_directories(c.out_dir);
    return fs::path(c.out_dir);
  });
}

std::vector<Question> read_stage(Stage stage, const fs::path &path) {
  return run_stage(stage, [&] { return read_questions(path.string()); });
}

int cmd_seeds(Options &o) {
  const auto c = resolve(o);
  const auto kb = read_kb(o, c);
  const auto templates = run_stage(Stage::load_templates, [&] { return load_templates(c.templates_path); });
  const auto seeds = run_stage(Stage::seeds, [&] { return generate_seeds(kb, templates); });
  const auto dir = out_dir(c);
  run_stage(Stage::persist, [&] { write_questions(seeds, (dir / "seeds.jsonl").string()); });
  const auto s = kb_stats(kb);
  std::cout << "triples " << s.triple_count << ", predicates " << s.predicate_count
            << ", subjects " << s.subject_count << ", objects " << s.object_count << '\n'
            << "templates " << templates.size() << ", seeds " << seeds.size() << '\n';
  return 0;
}

int cmd_expand(Options &o) {
  const auto c = resolve(o);
  const auto dir = out_dir(c);
  const auto seeds = read_stage(Stage::expand, o.input.empty() ? dir / "seeds.jsonl" : fs::path(o.input));
  const auto result = run_stage(Stage::expand, [&] {
    auto provider = make_provider(c);
    return expand(seeds, *provider, c.expansion);
  });
  std::vector<Question> fresh(result.questions.begin() + static_cast<std::ptrdiff_t>(seeds.size()),
                              result.questions.end());
  run_stage(Stage::persist, [&] { write_questions(fresh, (dir / "expanded.jsonl").string()); });
  std::cout << "queries " << result.iterations << ", failed " << result.failed_queries
            << ", new questions " << fresh.size() << '\n';
  return result.status == ExpansionStatus::ok ? 0 : static_cast<int>(Stage::expand);
}

int cmd_score(Options &o) {
  const auto c = resolve(o);
  const auto dir = out_dir(c);
  auto questions = read_stage(Stage::score, o.input.empty() ? dir / "seeds.jsonl" : fs::path(o.input));
  if (o.input.empty() && fs::exists(dir / "expanded.jsonl")) {
    auto more = read_stage(Stage::score, dir / "expanded.jsonl");
    questions.insert(questions.end(), more.begin(), more.end());
  }
  const auto model = run_stage(Stage::lm, [&] { return load_language_model(c); });
  const auto table = run_stage(Stage::embeddings, [&] { return load_embeddings(c.embeddings_path); });
  const auto scored = run_stage(Stage::score, [&] {
    return score_all(questions, model, table, seed_centroid(table, questions));
  });
  run_stage(Stage::persist, [&] { write_questions(scored, (dir / "scored.jsonl").string()); });
  std::cout << "scored " << scored.size() << '\n';
  return 0;
}

void print_selection(const ScoredQuestionSet &set, const Thresholds &t) {
  const auto &n = set.counts;
  std::cout << "t_rel " << t.t_rel << ", t_flu " << t.t_flu << '\n'
            << "seeds " << n.seeds << ", expanded " << n.expanded << ", below t_rel "
            << n.filtered_rel << ", below t_flu " << n.filtered_flu << ", selected " << n.selected
            << '\n';
  for (const auto &q : set.questions)
    std::cout << *q.flu_score << '\t' << *q.rel_score << '\t' << to_string(q.provenance) << '\t'
              << q.text << '\n';
}

int cmd_select(Options &o) {
  const auto c = resolve(o);
  const auto dir = out_dir(c);
  const auto scored = read_stage(Stage::select, o.input.empty() ? dir / "scored.jsonl" : fs::path(o.input));
  const auto thresholds = run_stage(Stage::select, [&] { return resolve_thresholds(c, scored); });
  const auto set = run_stage(Stage::select, [&] {
    return filter_and_select(scored, thresholds.t_rel, thresholds.t_flu, c.top_k);
  });
  run_stage(Stage::persist, [&] { write_questions(set.questions, (dir / "selected.jsonl").string()); });
  print_selection(set, thresholds);
  return 0;
}

int cmd_pipeline(Options &o) {
  const auto result = run_pipeline(resolve(o));
  print_selection(result.selected, result.thresholds);
  return 0;
}

int cmd_classify(Options &o) {
  const auto &c = o.pipeline;
  const auto table = run_stage(Stage::embeddings, [&] { return load_embeddings(c.embeddings_path); });
  const auto domains = run_stage(Stage::classify, [&] {
    if (!o.domains.empty()) return load_domain_documents(o.domains);
    if (o.train.empty()) throw Error("need --train or --domains");
    return build_domain_documents(table, read_labeled_documents(o.train, parse_labeled_format(o.data_format)));
  });
  if (!o.save_domains.empty())
    run_stage(Stage::persist, [&] { save_domain_documents(domains, o.save_domains); });

  return run_stage(Stage::classify, [&] {
    if (!o.text.empty()) {
      const auto r = classify_scored(domains, table, o.text);
      std::cout << r.label << '\t' << r.score << '\n';
    }
    if (!o.test.empty()) {
      const auto e = evaluate_classifier(
          domains, table, read_labeled_documents(o.test, parse_labeled_format(o.data_format)));
      std::cout << "documents " << e.total << ", uncovered " << e.uncovered << ", correct "
                << e.correct << '\n'
                << "precision " << e.precision() << '\n';
    }
    return 0;
  });
}

int cmd_arpa(Options &o) {
  const auto c = resolve(o);
  const auto model = run_stage(Stage::lm, [&] { return load_language_model(c); });
  run_stage(Stage::persist, [&] { export_arpa(model, o.arpa_out); });
  for (int k = 1; k <= model.order(); ++k) std::cout << "ngram " << k << '=' << model.size(k) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Generate questions from a knowledge base of triples"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Flat key = value file; command-line flags override it");

  Options o;
  auto &c = o.pipeline;
  app.add_option("--kb", c.kb_path, "Triples file (.tsv or .jsonl)");
  app.add_option("--kb-format", o.kb_format, "auto, tsv or jsonl")->check(CLI::IsMember({"auto", "tsv", "jsonl"}));
  app.add_option("--templates", c.templates_path, "Template TSV: predicate<TAB>pattern");
  app.add_option("--lm", c.lm_path, "LM training corpus or ARPA file");
  app.add_option("--lm-order", c.lm_order, "n-gram order when training")->capture_default_str();
  app.add_option("--lm-min-count", c.lm_min_count, "Words below this count become <unk>")->capture_default_str();
  app.add_option("--embeddings", c.embeddings_path, "Word vectors in text format");
  app.add_option("--provider", o.provider, "Suggestion provider")
      ->check(CLI::IsMember({"mock", "http", "cached"}))->capture_default_str();
  app.add_option("--corpus", c.mock_corpus_path, "Question corpus for the mock provider");
  app.add_option("--mock-k", c.mock_k, "Suggestions per query from the mock provider")->capture_default_str();
  app.add_option("--endpoint", c.endpoint, "HTTP endpoint template with a {query} slot");
  app.add_option("--parser", o.parser, "HTTP body format")
      ->check(CLI::IsMember({"json_string_array", "json_nested_array"}))->capture_default_str();
  app.add_option("--cache", c.cache_path, "Suggestion cache (JSON-lines)");
  app.add_option("--max-iter", c.expansion.max_iterations, "Maximum provider queries")->capture_default_str();
  app.add_option("--seed-order", o.seed_order, "Expansion queue discipline")
      ->check(CLI::IsMember({"fifo", "lifo"}))->capture_default_str();
  app.add_option("--per-query-limit", c.expansion.per_query_limit, "Suggestions consumed per query")->capture_default_str();
  app.add_option("--rate-limit-ms", c.expansion.rate_limit_ms, "Minimum delay between live calls")->capture_default_str();
  app.add_option("--t-rel", o.t_rel, "Relevance threshold (default: seed percentile)");
  app.add_option("--t-flu", o.t_flu, "Fluency threshold (default: seed percentile)");
  app.add_option("--percentile", c.threshold_percentile, "Seed percentile for default thresholds")->capture_default_str();
  app.add_option("--top-k", c.top_k, "Questions to keep")->capture_default_str();
  app.add_option("--out-dir", c.out_dir, "Run directory")->capture_default_str();
  app.add_option("--input", o.input, "Override the stage input file");
  app.add_option("--train", o.train, "classify: labeled training documents");
  app.add_option("--test", o.test, "classify: labeled test documents");
  app.add_option("--text", o.text, "classify: a single text");
  app.add_option("--domains", o.domains, "classify: saved domain documents");
  app.add_option("--save-domains", o.save_domains, "classify: write domain documents here");
  app.add_option("--data-format", o.data_format, "classify: tsv (label<TAB>text) or snippet (label last)")
      ->check(CLI::IsMember({"tsv", "snippet"}));
  app.add_option("--arpa-out", o.arpa_out, "arpa: output file");
  app.add_flag("-v,--verbose", o.verbosity, "More logging");
  app.add_flag("-q,--quiet", o.quiet, "Errors only");

  struct Sub {
    const char *name;
    const char *help;
    int (*fn)(Options &);
  };
  const Sub subs[] = {
      {"seeds", "Instantiate templates against the KB", cmd_seeds},
      {"expand", "Expand seeds through the suggestion provider", cmd_expand},
      {"score", "Score seeds and expanded questions", cmd_score},
      {"select", "Filter by thresholds and keep the top-k", cmd_select},
      {"classify", "Nearest domain-document classification", cmd_classify},
      {"pipeline", "Run every stage", cmd_pipeline},
      {"arpa", "Train or load an LM and write it as ARPA", cmd_arpa},
  };
  std::vector<CLI::App *> handles;
  for (const auto &s : subs) handles.push_back(app.add_subcommand(s.name, s.help)->fallthrough());

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    return app.exit(e);
  }

  log::set_level(o.quiet ? log::Level::error
                         : o.verbosity >= 2 ? log::Level::debug
                         : o.verbosity == 1 ? log::Level::info
                                            : log::Level::warn);
  try {
    for (std::size_t i = 0; i < handles.size(); ++i)
      if (handles[i]->parsed()) return subs[i].fn(o);
  } catch (const StageError &e) {
    std::cerr << "error in stage " << e.what() << '\n';
    return e.exit_code();
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
