#ifndef KBQGEN_LM_HPP
#define KBQGEN_LM_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "kbqgen/error.hpp"
#include "kbqgen/log.hpp"
#include "kbqgen/templates.hpp"
#include "kbqgen/text.hpp"

namespace kbqgen {

inline constexpr std::string_view kBos = "<s>";
inline constexpr std::string_view kEos = "</s>";
inline constexpr std::string_view kUnk = "<unk>";

// ARPA convention for events that are never predicted (<s>) or missing.
inline constexpr double kLogProbFloor = -99.0;

/// A backoff n-gram table in log10 space. An interpolated Kneser-Ney model
/// is stored in this form: each observed n-gram holds its full interpolated
/// probability and each observed context holds its interpolation weight as
/// the backoff, so lookups follow the usual ARPA backoff rule exactly.
class NgramModel {
 public:
  using WordId = std::uint32_t;
  using Gram = std::vector<WordId>;

  struct Entry {
    double logprob = kLogProbFloor;
    std::optional<double> backoff;
  };

  explicit NgramModel(int order = 1) : order_(order), tables_(static_cast<std::size_t>(order)) {
    if (order < 1) throw Error("n-gram order must be >= 1");
    add_word(std::string(kUnk));
    add_word(std::string(kBos));
    add_word(std::string(kEos));
  }

  int order() const noexcept { return order_; }
  const std::vector<std::string> &words() const noexcept { return words_; }
  std::size_t vocab_size() const noexcept { return words_.size(); }

  WordId unk() const noexcept { return 0; }
  WordId bos() const noexcept { return 1; }
  WordId eos() const noexcept { return 2; }

  WordId add_word(std::string word) {
    auto [it, inserted] = index_.try_emplace(word, static_cast<WordId>(words_.size()));
    if (inserted) words_.push_back(std::move(word));
    return it->second;
  }

  std::optional<WordId> find(std::string_view word) const {
    auto it = index_.find(std::string(word));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  /// Maps out-of-vocabulary words to <unk>.
  WordId id(std::string_view word) const { return find(word).value_or(unk()); }

  const std::string &word(WordId id) const { return words_.at(id); }

  /// Every word the model can predict: the vocabulary minus <s>.
  std::vector<WordId> predictable() const {
    std::vector<WordId> out;
    for (WordId i = 0; i < words_.size(); ++i)
      if (i != bos()) out.push_back(i);
    return out;
  }

  std::size_t size(int k) const { return table(k).size(); }

  const Entry *entry(std::span<const WordId> gram) const {
    if (gram.empty() || gram.size() > static_cast<std::size_t>(order_)) return nullptr;
    const auto &t = table(static_cast<int>(gram.size()));
    auto it = t.find(Gram(gram.begin(), gram.end()));
    return it == t.end() ? nullptr : &it->second;
  }

  void set_logprob(const Gram &gram, double logprob) { mutable_table(gram)[gram].logprob = logprob; }

  void set_backoff(const Gram &gram, double backoff) { mutable_table(gram)[gram].backoff = backoff; }

  /// log10 P(word | context). Only the last order-1 context words are used.
  double log10_prob(std::span<const WordId> context, WordId word) const {
    const std::size_t keep = std::min<std::size_t>(context.size(), static_cast<std::size_t>(order_ - 1));
    Gram gram(context.end() - static_cast<std::ptrdiff_t>(keep), context.end());
    gram.push_back(word);

    double acc = 0.0;
    for (std::size_t start = 0; start < gram.size(); ++start) {
      std::span<const WordId> g(gram.data() + start, gram.size() - start);
      if (const Entry *e = entry(g)) return acc + e->logprob;
      std::span<const WordId> ctx = g.first(g.size() - 1);
      if (const Entry *c = entry(ctx); c && c->backoff) acc += *c->backoff;
    }
    return kLogProbFloor;
  }

  double log10_prob(const std::vector<std::string> &context, std::string_view word) const {
    Gram ids;
    for (const auto &w : context) ids.push_back(w == kBos ? bos() : id(w));
    return log10_prob(ids, id(word));
  }

  /// Entries of order k sorted by their word strings.
  std::vector<std::pair<Gram, Entry>> sorted_entries(int k) const {
    const auto &t = table(k);
    std::vector<std::pair<Gram, Entry>> out(t.begin(), t.end());
    std::sort(out.begin(), out.end(), [this](const auto &a, const auto &b) {
      return std::lexicographical_compare(
          a.first.begin(), a.first.end(), b.first.begin(), b.first.end(),
          [this](WordId x, WordId y) { return words_[x] < words_[y]; });
    });
    return out;
  }

  /// Contexts of length k (1 <= k < order) that carry a backoff weight.
  std::vector<Gram> contexts(int k) const {
    std::vector<Gram> out;
    for (const auto &[g, e] : table(k))
      if (e.backoff) out.push_back(g);
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  struct GramHash {
    std::size_t operator()(const Gram &g) const noexcept {
      std::uint64_t h = 1469598103934665603ull;
      for (WordId w : g) {
        h ^= w;
        h *= 1099511628211ull;
      }
      return static_cast<std::size_t>(h);
    }
  };
  using Table = std::unordered_map<Gram, Entry, GramHash>;

  const Table &table(int k) const {
    if (k < 1 || k > order_) throw Error("n-gram length out of range: " + std::to_string(k));
    return tables_[static_cast<std::size_t>(k - 1)];
  }

  Table &mutable_table(const Gram &gram) {
    if (gram.empty() || gram.size() > static_cast<std::size_t>(order_))
      throw Error("n-gram length out of range: " + std::to_string(gram.size()));
    return tables_[gram.size() - 1];
  }

  int order_;
  std::vector<std::string> words_;
  std::unordered_map<std::string, WordId> index_;
  std::vector<Table> tables_;
};

/// Absolute discount from count-of-counts; 0.5 when no count equals one.
inline double kn_discount(std::uint64_t n1, std::uint64_t n2) {
  if (n1 == 0) return 0.5;
  return static_cast<double>(n1) / static_cast<double>(n1 + 2 * n2);
}

/// Estimates an interpolated Kneser-Ney model with one discount per order.
///
/// Sentences are padded as "<s> w1 ... wm </s>" and words seen fewer than
/// min_count times become <unk>. The highest order uses raw counts; lower
/// orders use continuation counts (number of distinct left neighbours),
/// except n-grams starting with <s>, which have no left neighbour and keep
/// their raw counts. For a context h with counts c(hw):
///
///   P(w|h) = max(c(hw) - D, 0) / c(h.) + D * N1+(h.) / c(h.) * P(w|h')
///
/// where h' drops the oldest word of h. The unigram level interpolates with
/// the uniform distribution over the vocabulary (minus <s>), so <unk> always
/// has non-zero mass.
inline NgramModel train_ngram(const std::vector<std::string> &lines, int order,
                              std::uint64_t min_count = 1) {
  if (order < 1 || order > 5) throw Error("order must be in [1, 5]");
  if (min_count < 1) throw Error("min_count must be >= 1");

  std::vector<std::vector<std::string>> sentences;
  std::map<std::string, std::uint64_t> word_counts;
  std::size_t longest = 0;
  for (const auto &line : lines) {
    auto toks = tokenize(line);
    if (toks.empty()) continue;
    for (const auto &t : toks) ++word_counts[t];
    longest = std::max(longest, toks.size());
    sentences.push_back(std::move(toks));
  }
  if (sentences.empty()) throw Error("empty training corpus");
  if (static_cast<std::size_t>(order) > longest + 1)
    log::warn("order " + std::to_string(order) + " exceeds longest sentence + 1 (" +
              std::to_string(longest + 1) + ")");

  NgramModel model(order);
  for (const auto &[w, c] : word_counts)
    if (c >= min_count && w != kBos && w != kEos) model.add_word(w);

  using Gram = NgramModel::Gram;
  using WordId = NgramModel::WordId;
  struct Hash {
    std::size_t operator()(const Gram &g) const noexcept {
      std::uint64_t h = 1469598103934665603ull;
      for (WordId w : g) h = (h ^ w) * 1099511628211ull;
      return static_cast<std::size_t>(h);
    }
  };
  using Counts = std::unordered_map<Gram, std::uint64_t, Hash>;
  const auto n = static_cast<std::size_t>(order);
  const WordId bos = model.bos();

  std::vector<Counts> raw(n + 1);
  for (const auto &s : sentences) {
    Gram seq;
    seq.reserve(s.size() + 2);
    seq.push_back(bos);
    for (const auto &w : s) seq.push_back(model.id(w));
    seq.push_back(model.eos());
    for (std::size_t k = 1; k <= n; ++k) {
      for (std::size_t i = 0; i + k <= seq.size(); ++i) {
        if (k == 1 && seq[i] == bos) continue;
        ++raw[k][Gram(seq.begin() + static_cast<std::ptrdiff_t>(i),
                      seq.begin() + static_cast<std::ptrdiff_t>(i + k))];
      }
    }
  }

  // Counts actually used at each order.
  std::vector<Counts> used(n + 1);
  used[n] = raw[n];
  for (std::size_t k = 1; k < n; ++k) {
    for (const auto &[g, c] : raw[k])
      if (g.front() == bos) used[k][g] = c;
    for (const auto &[g, c] : raw[k + 1]) ++used[k][Gram(g.begin() + 1, g.end())];
  }

  std::vector<double> discount(n + 1, 0.0);
  for (std::size_t k = 1; k <= n; ++k) {
    std::uint64_t n1 = 0, n2 = 0;
    for (const auto &[g, c] : used[k]) {
      n1 += (c == 1);
      n2 += (c == 2);
    }
    discount[k] = kn_discount(n1, n2);
    log::debug("order " + std::to_string(k) + " discount " + std::to_string(discount[k]));
  }

  // Unigrams: interpolate with uniform over every predictable word.
  {
    const auto predictable = model.predictable();
    const double d = discount[1];
    std::uint64_t total = 0, types = 0;
    for (WordId w : predictable) {
      auto it = used[1].find(Gram{w});
      if (it != used[1].end()) {
        total += it->second;
        ++types;
      }
    }
    const double uniform_mass = d * static_cast<double>(types) / static_cast<double>(total) /
                                static_cast<double>(predictable.size());
    for (WordId w : predictable) {
      auto it = used[1].find(Gram{w});
      const double c = it == used[1].end() ? 0.0 : static_cast<double>(it->second);
      const double p = std::max(c - d, 0.0) / static_cast<double>(total) + uniform_mass;
      model.set_logprob(Gram{w}, std::log10(p));
    }
    model.set_logprob(Gram{bos}, kLogProbFloor);
  }

  for (std::size_t k = 2; k <= n; ++k) {
    const double d = discount[k];
    struct ContextStats {
      std::uint64_t total = 0;
      std::uint64_t types = 0;
    };
    std::unordered_map<Gram, ContextStats, Hash> stats;
    for (const auto &[g, c] : used[k]) {
      auto &s = stats[Gram(g.begin(), g.end() - 1)];
      s.total += c;
      ++s.types;
    }
    // Backoff weights of this order's contexts must be in place before the
    // probabilities of order k+1 query them, but they do not affect order k.
    std::vector<std::pair<Gram, double>> probs;
    probs.reserve(used[k].size());
    for (const auto &[g, c] : used[k]) {
      const auto &s = stats.at(Gram(g.begin(), g.end() - 1));
      const double gamma = d * static_cast<double>(s.types) / static_cast<double>(s.total);
      std::span<const WordId> lower_ctx(g.data() + 1, g.size() - 2);
      const double lower = std::pow(10.0, model.log10_prob(lower_ctx, g.back()));
      const double p =
          std::max(static_cast<double>(c) - d, 0.0) / static_cast<double>(s.total) + gamma * lower;
      probs.emplace_back(g, std::log10(p));
    }
    for (auto &[g, lp] : probs) model.set_logprob(g, lp);
    for (const auto &[ctx, s] : stats)
      model.set_backoff(ctx, std::log10(d * static_cast<double>(s.types) /
                                        static_cast<double>(s.total)));
  }
  return model;
}

inline NgramModel train_ngram_file(const std::string &corpus_path, int order,
                                   std::uint64_t min_count = 1) {
  return train_ngram(read_lines(corpus_path), order, min_count);
}

/// Sentence log-probability and its per-word average.
struct FluencyScore {
  double logprob = 0.0;  // log10, including the </s> event
  std::size_t length = 0;  // words, boundary symbols excluded
  double avg = 0.0;        // logprob / length
};

inline FluencyScore sentence_logprob(const NgramModel &model, std::string_view text) {
  const auto tokens = tokenize(text);
  if (tokens.empty()) throw Error("cannot score an empty sentence");
  NgramModel::Gram history{model.bos()};
  double total = 0.0;
  for (const auto &t : tokens) {
    const auto w = model.id(t);
    total += model.log10_prob(history, w);
    history.push_back(w);
  }
  total += model.log10_prob(history, model.eos());
  FluencyScore s;
  s.logprob = total;
  s.length = tokens.size();
  s.avg = total / static_cast<double>(s.length);
  return s;
}

inline FluencyScore sentence_logprob(const NgramModel &model, const Question &q) {
  return sentence_logprob(model, q.text);
}

}  // namespace kbqgen

#endif
