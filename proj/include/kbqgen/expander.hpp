#ifndef KBQGEN_EXPANDER_HPP
#define KBQGEN_EXPANDER_HPP

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "kbqgen/error.hpp"
#include "kbqgen/log.hpp"
#include "kbqgen/templates.hpp"
#include "kbqgen/text.hpp"

namespace kbqgen {

enum class QueueDiscipline { fifo, lifo };

inline QueueDiscipline parse_queue_discipline(std::string_view s) {
  if (s == "fifo") return QueueDiscipline::fifo;
  if (s == "lifo") return QueueDiscipline::lifo;
  throw Error("unknown queue discipline: " + std::string(s));
}

inline std::string_view to_string(QueueDiscipline d) {
  return d == QueueDiscipline::fifo ? "fifo" : "lifo";
}

struct ExpansionConfig {
  std::int64_t max_iterations = 1000;
  QueueDiscipline queue_discipline = QueueDiscipline::fifo;
  std::int64_t per_query_limit = 10;
  std::int64_t rate_limit_ms = 0;

  void validate() const {
    if (max_iterations < 1) throw Error("max_iterations must be >= 1");
    if (per_query_limit < 1) throw Error("per_query_limit must be >= 1");
    if (rate_limit_ms < 0) throw Error("rate_limit must be >= 0");
  }
};

/// Maps a query to an ordered list of related questions. Implementations
/// throw TransportError for a query they cannot serve.
class SuggestionProvider {
 public:
  virtual ~SuggestionProvider() = default;
  virtual std::vector<std::string> suggest(const std::string &query) = 0;
};

/// Fixed query -> suggestions table; unknown queries yield nothing.
class StaticProvider : public SuggestionProvider {
 public:
  StaticProvider() = default;
  explicit StaticProvider(std::map<std::string, std::vector<std::string>> table)
      : table_(std::move(table)) {}

  std::vector<std::string> suggest(const std::string &query) override {
    ++calls_;
    auto it = table_.find(query);
    return it == table_.end() ? std::vector<std::string>{} : it->second;
  }

  std::size_t calls() const noexcept { return calls_; }

 private:
  std::map<std::string, std::vector<std::string>> table_;
  std::size_t calls_ = 0;
};

/// Offline stand-in for a search engine's related-questions panel: returns
/// the k corpus lines with the highest token-set Jaccard similarity to the
/// query. Zero-overlap lines and exact matches of the query are excluded;
/// ties go to the earlier line.
class CorpusProvider : public SuggestionProvider {
 public:
  CorpusProvider(std::vector<std::string> corpus, std::size_t k) : k_(k) {
    if (k == 0) throw Error("corpus provider k must be >= 1");
    for (auto &line : corpus) {
      std::string text = normalize(line);
      if (text.empty()) continue;
      auto toks = split_ws(text);
      token_sets_.emplace_back(toks.begin(), toks.end());
      lines_.push_back(std::move(text));
    }
  }

  std::vector<std::string> suggest(const std::string &query) override {
    const std::string q = normalize(query);
    const auto qt = split_ws(q);
    const std::set<std::string> qset(qt.begin(), qt.end());
    if (qset.empty()) return {};

    struct Hit {
      double score;
      std::size_t index;
    };
    std::vector<Hit> hits;
    for (std::size_t i = 0; i < lines_.size(); ++i) {
      if (lines_[i] == q) continue;
      const auto &ls = token_sets_[i];
      std::size_t inter = 0;
      for (const auto &t : qset) inter += ls.count(t);
      if (inter == 0) continue;
      const std::size_t uni = qset.size() + ls.size() - inter;
      hits.push_back({static_cast<double>(inter) / static_cast<double>(uni), i});
    }
    std::stable_sort(hits.begin(), hits.end(),
                     [](const Hit &a, const Hit &b) { return a.score > b.score; });
    std::vector<std::string> out;
    for (std::size_t i = 0; i < hits.size() && out.size() < k_; ++i)
      out.push_back(lines_[hits[i].index]);
    return out;
  }

  std::size_t size() const noexcept { return lines_.size(); }

 private:
  std::vector<std::string> lines_;
  std::vector<std::set<std::string>> token_sets_;
  std::size_t k_;
};

/// One question per line; an empty corpus gives a provider that never
/// suggests anything.
inline std::unique_ptr<SuggestionProvider> mock_provider_from_corpus(const std::string &path,
                                                                     std::size_t k) {
  return std::make_unique<CorpusProvider>(read_lines(path), k);
}

/// Replay layer over another provider. Records are kept in a JSON-lines
/// file of {"query", "suggestions"}; misses call the inner provider and
/// append. With no inner provider, misses throw TransportError, which makes
/// this a pure offline replay.
class CachedProvider : public SuggestionProvider {
 public:
  CachedProvider(std::unique_ptr<SuggestionProvider> inner, std::string cache_path)
      : inner_(std::move(inner)), path_(std::move(cache_path)) {
    std::ifstream probe(path_);
    if (!probe) return;
    probe.close();
    const auto lines = read_lines(path_);
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (trim(lines[i]).empty()) continue;
      try {
        auto j = nlohmann::json::parse(lines[i]);
        auto query = j.at("query").get<std::string>();
        auto suggestions = j.at("suggestions").get<std::vector<std::string>>();
        entries_.try_emplace(std::move(query), std::move(suggestions));
      } catch (const std::exception &e) {
        throw ParseError("corrupted cache " + path_ + ": " + e.what(), i + 1);
      }
    }
  }

  std::vector<std::string> suggest(const std::string &query) override {
    std::lock_guard lock(mutex_);
    if (auto it = entries_.find(query); it != entries_.end()) {
      ++hits_;
      return it->second;
    }
    if (!inner_) throw TransportError("cache miss in offline replay: " + query);
    ++live_calls_;
    auto result = inner_->suggest(query);
    append(query, result);
    entries_.emplace(query, result);
    return result;
  }

  std::size_t live_calls() const noexcept { return live_calls_; }
  std::size_t hits() const noexcept { return hits_; }
  std::size_t size() const noexcept { return entries_.size(); }

 private:
  void append(const std::string &query, const std::vector<std::string> &suggestions) {
    std::ofstream out(path_, std::ios::binary | std::ios::app);
    nlohmann::ordered_json j;
    j["query"] = query;
    j["suggestions"] = suggestions;
    out << j.dump() << '\n';
    out.flush();
    if (!out) throw Error("cannot write cache file: " + path_);
  }

  std::unique_ptr<SuggestionProvider> inner_;
  std::string path_;
  std::unordered_map<std::string, std::vector<std::string>> entries_;
  std::mutex mutex_;
  std::size_t live_calls_ = 0;
  std::size_t hits_ = 0;
};

inline std::unique_ptr<SuggestionProvider> cached_provider(
    std::unique_ptr<SuggestionProvider> inner, const std::string &cache_path) {
  return std::make_unique<CachedProvider>(std::move(inner), cache_path);
}

enum class ExpansionStatus { ok, all_queries_failed };

struct ExpansionResult {
  std::vector<Question> questions;  // seeds first, then expanded in insertion order
  std::int64_t iterations = 0;      // pops == provider queries issued
  std::int64_t failed_queries = 0;
  ExpansionStatus status = ExpansionStatus::ok;

  std::size_t expanded_count() const {
    return static_cast<std::size_t>(
        std::count_if(questions.begin(), questions.end(),
                      [](const Question &q) { return q.provenance == Provenance::expanded; }));
  }
};

/// Grows the seed set by repeatedly querying the provider with questions
/// already obtained. Each loop iteration pops one question, so the number
/// of provider queries never exceeds max_iterations. Suggestions are
/// normalized; empty ones are dropped and at most per_query_limit of the
/// remainder are considered. A TransportError skips that query but still
/// counts as an iteration.
inline ExpansionResult expand(const std::vector<Question> &seeds, SuggestionProvider &provider,
                              const ExpansionConfig &config) {
  config.validate();
  if (seeds.empty()) throw Error("expand: seed set is empty");

  ExpansionResult result;
  auto &expanded = result.questions;
  std::unordered_set<std::string> known;
  std::deque<std::size_t> frontier;
  for (const auto &s : seeds) {
    if (!known.insert(s.text).second) throw Error("expand: duplicate seed: " + s.text);
    frontier.push_back(expanded.size());
    expanded.push_back(s);
  }

  while (!frontier.empty() && result.iterations < config.max_iterations) {
    ++result.iterations;
    std::size_t cur;
    if (config.queue_discipline == QueueDiscipline::fifo) {
      cur = frontier.front();
      frontier.pop_front();
    } else {
      cur = frontier.back();
      frontier.pop_back();
    }
    const std::string query = expanded[cur].text;
    const int next_generation = expanded[cur].generation + 1;

    std::vector<std::string> suggestions;
    try {
      suggestions = provider.suggest(query);
    } catch (const TransportError &e) {
      ++result.failed_queries;
      log::warn("query skipped: \"" + query + "\": " + e.what());
      continue;
    }

    std::int64_t consumed = 0;
    for (const auto &raw : suggestions) {
      std::string text = normalize(raw);
      if (text.empty()) continue;
      if (consumed++ >= config.per_query_limit) break;
      if (!known.insert(text).second) continue;
      frontier.push_back(expanded.size());
      expanded.push_back(Question::expanded(std::move(text), next_generation, query));
    }
  }

  if (result.iterations > 0 && result.failed_queries == result.iterations) {
    result.status = ExpansionStatus::all_queries_failed;
    log::warn("every provider query failed; returning the seed set unchanged");
  }
  return result;
}

}  // namespace kbqgen

#endif
