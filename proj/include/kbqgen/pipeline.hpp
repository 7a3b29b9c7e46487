#ifndef KBQGEN_PIPELINE_HPP
#define KBQGEN_PIPELINE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "kbqgen/arpa.hpp"
#include "kbqgen/embeddings.hpp"
#include "kbqgen/error.hpp"
#include "kbqgen/expander.hpp"
#include "kbqgen/http_provider.hpp"
#include "kbqgen/kb.hpp"
#include "kbqgen/lm.hpp"
#include "kbqgen/log.hpp"
#include "kbqgen/templates.hpp"

namespace kbqgen {

/// Pipeline stages, numbered by the process exit code used when they fail.
enum class Stage : int {
  config = 1,
  load_kb = 2,
  load_templates = 3,
  seeds = 4,
  expand = 5,
  lm = 6,
  embeddings = 7,
  score = 8,
  select = 9,
  classify = 10,
  persist = 11,
};

inline std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::config: return "config";
    case Stage::load_kb: return "load_kb";
    case Stage::load_templates: return "load_templates";
    case Stage::seeds: return "seeds";
    case Stage::expand: return "expand";
    case Stage::lm: return "lm";
    case Stage::embeddings: return "embeddings";
    case Stage::score: return "score";
    case Stage::select: return "select";
    case Stage::classify: return "classify";
    case Stage::persist: return "persist";
  }
  return "unknown";
}

class StageError : public Error {
 public:
  StageError(Stage stage, const std::string &what)
      : Error(std::string(to_string(stage)) + ": " + what), stage_(stage) {}
  Stage stage() const noexcept { return stage_; }
  int exit_code() const noexcept { return static_cast<int>(stage_); }

 private:
  Stage stage_;
};

/// Runs fn, rethrowing any failure as a StageError for `stage`.
template <typename Fn>
auto run_stage(Stage stage, Fn &&fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError &) {
    throw;
  } catch (const std::exception &e) {
    throw StageError(stage, e.what());
  }
}

enum class ProviderKind { mock, http, cached };

inline ProviderKind parse_provider_kind(std::string_view s) {
  if (s == "mock") return ProviderKind::mock;
  if (s == "http") return ProviderKind::http;
  if (s == "cached") return ProviderKind::cached;
  throw Error("unknown provider: " + std::string(s));
}

inline std::string_view to_string(ProviderKind k) {
  switch (k) {
    case ProviderKind::mock: return "mock";
    case ProviderKind::http: return "http";
    case ProviderKind::cached: return "cached";
  }
  return "unknown";
}

struct PipelineConfig {
  std::string kb_path;
  std::string templates_path;
  std::string lm_path;  // training corpus or ARPA file
  int lm_order = 4;
  std::uint64_t lm_min_count = 1;
  std::string embeddings_path;

  ProviderKind provider = ProviderKind::mock;
  std::string mock_corpus_path;
  std::size_t mock_k = 10;
  std::string endpoint;
  SuggestionFormat http_format = SuggestionFormat::json_string_array;
  std::string cache_path;  // wraps the provider when set; required for "cached"
  ExpansionConfig expansion;

  // Unset thresholds default to a low percentile of the seed scores.
  std::optional<double> t_rel;
  std::optional<double> t_flu;
  double threshold_percentile = 5.0;
  std::size_t top_k = 500;

  std::string out_dir = "run";

  void validate() const {
    if (top_k < 1) throw Error("top_k must be >= 1");
    if (threshold_percentile < 0.0 || threshold_percentile > 100.0)
      throw Error("threshold percentile must be in [0, 100]");
    expansion.validate();
    namespace fs = std::filesystem;
    auto need = [](const std::string &path, const char *what) {
      if (path.empty()) throw Error(std::string("missing path: ") + what);
      if (!fs::exists(path)) throw Error(std::string(what) + " not found: " + path);
    };
    need(kb_path, "kb");
    need(templates_path, "templates");
    need(lm_path, "lm");
    need(embeddings_path, "embeddings");
    if (provider == ProviderKind::mock) need(mock_corpus_path, "mock corpus");
    if (provider == ProviderKind::http && endpoint.empty())
      throw Error("http provider needs an endpoint");
    if (provider == ProviderKind::cached) need(cache_path, "cache");
  }
};

inline nlohmann::ordered_json to_json(const PipelineConfig &c) {
  nlohmann::ordered_json j;
  j["kb"] = c.kb_path;
  j["templates"] = c.templates_path;
  j["lm"] = c.lm_path;
  j["lm_order"] = c.lm_order;
  j["lm_min_count"] = c.lm_min_count;
  j["embeddings"] = c.embeddings_path;
  j["provider"] = std::string(to_string(c.provider));
  j["mock_corpus"] = c.mock_corpus_path;
  j["mock_k"] = c.mock_k;
  j["endpoint"] = c.endpoint;
  j["cache"] = c.cache_path;
  j["max_iter"] = c.expansion.max_iterations;
  j["seed_order"] = std::string(to_string(c.expansion.queue_discipline));
  j["per_query_limit"] = c.expansion.per_query_limit;
  j["rate_limit_ms"] = c.expansion.rate_limit_ms;
  j["t_rel"] = c.t_rel ? nlohmann::ordered_json(*c.t_rel) : nlohmann::ordered_json();
  j["t_flu"] = c.t_flu ? nlohmann::ordered_json(*c.t_flu) : nlohmann::ordered_json();
  j["threshold_percentile"] = c.threshold_percentile;
  j["top_k"] = c.top_k;
  return j;
}

/// Percentile with linear interpolation between closest ranks.
inline double percentile(std::vector<double> values, double p) {
  if (values.empty()) throw Error("percentile of an empty set");
  std::sort(values.begin(), values.end());
  const double rank = p / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = rank - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

// Relevance assigned to a question with no in-vocabulary tokens.
inline constexpr double kNoCoverageRelevance = -1.0;

/// The in-domain centroid: all seed texts concatenated into one document.
inline Vector seed_centroid(const EmbeddingTable &table, const std::vector<Question> &seeds) {
  std::vector<std::pair<std::string, std::string>> docs;
  for (const auto &q : seeds)
    if (q.provenance == Provenance::seed) docs.emplace_back("in-domain", q.text);
  if (docs.empty()) throw Error("no seed questions to build the domain centroid from");
  return build_domain_documents(table, docs).front().centroid;
}

/// Attaches relevance and fluency to every question, preserving order.
inline std::vector<Question> score_all(std::vector<Question> questions, const NgramModel &model,
                                       const EmbeddingTable &table,
                                       std::span<const double> centroid) {
  if (norm(centroid) == 0.0) throw Error("domain centroid has zero norm");
  for (auto &q : questions) {
    auto sum = sum_tokens(table, q.text);
    if (sum.covered == 0 || norm(sum.sum) == 0.0) {
      log::warn("no covered tokens, relevance set to -1: " + q.text);
      q.rel_score = kNoCoverageRelevance;
    } else {
      for (double &x : sum.sum) x /= static_cast<double>(sum.covered);
      q.rel_score = cosine(sum.sum, centroid);
    }
    q.flu_score = sentence_logprob(model, q.text).avg;
  }
  return questions;
}

struct ProvenanceCounts {
  std::size_t seeds = 0;
  std::size_t expanded = 0;
  std::size_t filtered_rel = 0;
  std::size_t filtered_flu = 0;
  std::size_t selected = 0;
};

struct ScoredQuestionSet {
  std::vector<Question> questions;  // selected, best first
  ProvenanceCounts counts;
};

/// Drops questions below t_rel, then below t_flu, ranks the rest by fluency
/// (ties: higher relevance, then input order) and keeps the first top_k.
inline ScoredQuestionSet filter_and_select(const std::vector<Question> &scored, double t_rel,
                                           double t_flu, std::size_t top_k) {
  ScoredQuestionSet out;
  std::vector<Question> survivors;
  for (const auto &q : scored) {
    if (!q.rel_score || !q.flu_score) throw Error("unscored question: " + q.text);
    (q.provenance == Provenance::seed ? out.counts.seeds : out.counts.expanded)++;
    if (*q.rel_score < t_rel) {
      ++out.counts.filtered_rel;
    } else if (*q.flu_score < t_flu) {
      ++out.counts.filtered_flu;
    } else {
      survivors.push_back(q);
    }
  }
  std::stable_sort(survivors.begin(), survivors.end(), [](const Question &a, const Question &b) {
    if (*a.flu_score != *b.flu_score) return *a.flu_score > *b.flu_score;
    return *a.rel_score > *b.rel_score;
  });
  if (survivors.size() < top_k)
    log::info("only " + std::to_string(survivors.size()) + " question(s) survive filtering (top_k " +
              std::to_string(top_k) + ")");
  else
    survivors.resize(top_k);
  out.counts.selected = survivors.size();
  out.questions = std::move(survivors);
  return out;
}

inline ScoredQuestionSet filter_and_select(const std::vector<Question> &scored,
                                           const PipelineConfig &config) {
  const double ninf = -std::numeric_limits<double>::infinity();
  return filter_and_select(scored, config.t_rel.value_or(ninf), config.t_flu.value_or(ninf),
                           config.top_k);
}

struct Thresholds {
  double t_rel = 0.0;
  double t_flu = 0.0;
};

/// Explicit thresholds win; otherwise the configured percentile of the
/// scored seeds.
inline Thresholds resolve_thresholds(const PipelineConfig &config,
                                     const std::vector<Question> &scored) {
  std::vector<double> rel, flu;
  for (const auto &q : scored) {
    if (q.provenance != Provenance::seed) continue;
    rel.push_back(*q.rel_score);
    flu.push_back(*q.flu_score);
  }
  Thresholds t;
  t.t_rel = config.t_rel ? *config.t_rel : percentile(rel, config.threshold_percentile);
  t.t_flu = config.t_flu ? *config.t_flu : percentile(flu, config.threshold_percentile);
  return t;
}

inline std::unique_ptr<SuggestionProvider> make_provider(const PipelineConfig &config) {
  std::unique_ptr<SuggestionProvider> inner;
  switch (config.provider) {
    case ProviderKind::mock:
      inner = mock_provider_from_corpus(config.mock_corpus_path, config.mock_k);
      break;
    case ProviderKind::http:
      inner = http_provider(config.endpoint, config.http_format, config.expansion);
      break;
    case ProviderKind::cached:
      if (config.cache_path.empty()) throw Error("cached provider needs a cache path");
      return cached_provider(nullptr, config.cache_path);
  }
  if (!config.cache_path.empty()) return cached_provider(std::move(inner), config.cache_path);
  return inner;
}

inline NgramModel load_language_model(const PipelineConfig &config) {
  if (looks_like_arpa(config.lm_path)) return import_arpa(config.lm_path);
  return train_ngram_file(config.lm_path, config.lm_order, config.lm_min_count);
}

struct PipelineResult {
  ScoredQuestionSet selected;
  Thresholds thresholds;
  std::vector<Question> seeds;
  std::vector<Question> scored;
  ExpansionResult expansion;
};

/// Ordered, deterministic run log; nothing time-dependent goes in here.
class RunLog {
 public:
  void note(const std::string &line) {
    log::info(line);
    lines_.push_back(line);
  }
  void write(const std::string &path) const {
    std::ofstream out(path, std::ios::binary);
    for (const auto &l : lines_) out << l << '\n';
  }

 private:
  std::vector<std::string> lines_;
};

/// Seeds -> expansion -> scoring -> selection. Every stage's output is
/// written under config.out_dir (seeds.jsonl, expanded.jsonl, scored.jsonl,
/// selected.jsonl, run-config.json, run.log); earlier artifacts survive a
/// later stage's failure.
inline PipelineResult run_pipeline(const PipelineConfig &config) {
  namespace fs = std::filesystem;
  run_stage(Stage::config, [&] {
    config.validate();
    fs::create_directories(config.out_dir);
  });
  const fs::path dir(config.out_dir);
  RunLog runlog;
  auto persist = [&](auto &&fn) { run_stage(Stage::persist, fn); };
  persist([&] {
    std::ofstream out(dir / "run-config.json", std::ios::binary);
    out << to_json(config).dump(2) << '\n';
  });

  PipelineResult result;
  const auto kb = run_stage(Stage::load_kb, [&] { return load_kb(config.kb_path); });
  const auto stats = kb_stats(kb);
  runlog.note("kb: " + std::to_string(stats.triple_count) + " triples, " +
              std::to_string(stats.predicate_count) + " predicates, " +
              std::to_string(stats.subject_count) + " subjects, " +
              std::to_string(stats.object_count) + " objects");
  const auto templates =
      run_stage(Stage::load_templates, [&] { return load_templates(config.templates_path); });
  runlog.note("templates: " + std::to_string(templates.size()));

  result.seeds = run_stage(Stage::seeds, [&] {
    auto s = generate_seeds(kb, templates);
    if (s.empty()) throw Error("no seed questions generated");
    return s;
  });
  persist([&] { write_questions(result.seeds, (dir / "seeds.jsonl").string()); });
  runlog.note("seeds: " + std::to_string(result.seeds.size()));

  result.expansion = run_stage(Stage::expand, [&] {
    auto provider = make_provider(config);
    return expand(result.seeds, *provider, config.expansion);
  });
  const auto &all = result.expansion.questions;
  persist([&] {
    std::vector<Question> fresh(all.begin() + static_cast<std::ptrdiff_t>(result.seeds.size()),
                                all.end());
    write_questions(fresh, (dir / "expanded.jsonl").string());
  });
  runlog.note("expand: " + std::to_string(result.expansion.iterations) + " queries, " +
              std::to_string(result.expansion.failed_queries) + " failed, " +
              std::to_string(result.expansion.expanded_count()) + " new questions");
  if (result.expansion.status == ExpansionStatus::all_queries_failed)
    runlog.note("warning: every provider query failed");

  const auto model = run_stage(Stage::lm, [&] { return load_language_model(config); });
  runlog.note("lm: order " + std::to_string(model.order()) + ", vocabulary " +
              std::to_string(model.vocab_size()));
  const auto table = run_stage(Stage::embeddings, [&] { return load_embeddings(config.embeddings_path); });
  runlog.note("embeddings: " + std::to_string(table.size()) + " words, dim " +
              std::to_string(table.dim()));

  result.scored = run_stage(Stage::score, [&] {
    const auto centroid = seed_centroid(table, result.seeds);
    return score_all(all, model, table, centroid);
  });
  persist([&] { write_questions(result.scored, (dir / "scored.jsonl").string()); });

  result.thresholds = run_stage(Stage::select, [&] { return resolve_thresholds(config, result.scored); });
  {
    std::ostringstream msg;
    msg.precision(17);
    msg << "thresholds: t_rel " << result.thresholds.t_rel << ", t_flu " << result.thresholds.t_flu;
    runlog.note(msg.str());
  }
  result.selected = run_stage(Stage::select, [&] {
    return filter_and_select(result.scored, result.thresholds.t_rel, result.thresholds.t_flu,
                             config.top_k);
  });
  persist([&] { write_questions(result.selected.questions, (dir / "selected.jsonl").string()); });
  const auto &c = result.selected.counts;
  runlog.note("select: " + std::to_string(c.seeds) + " seeds, " + std::to_string(c.expanded) +
              " expanded, " + std::to_string(c.filtered_rel) + " below t_rel, " +
              std::to_string(c.filtered_flu) + " below t_flu, " + std::to_string(c.selected) +
              " selected");
  persist([&] { runlog.write((dir / "run.log").string()); });
  return result;
}

}  // namespace kbqgen

#endif
