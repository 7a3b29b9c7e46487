#ifndef KBQGEN_EMBEDDINGS_HPP
#define KBQGEN_EMBEDDINGS_HPP

#include <cmath>
#include <cstddef>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "kbqgen/error.hpp"
#include "kbqgen/text.hpp"

namespace kbqgen {

using Vector = std::vector<double>;

/// Word -> dense vector lookup with a fixed dimensionality. Vectors live in
/// one contiguous row-major buffer.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  explicit EmbeddingTable(std::size_t dim) : dim_(dim) {
    if (dim == 0) throw Error("embedding dimension must be >= 1");
  }

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return words_.size(); }
  const std::vector<std::string> &words() const noexcept { return words_; }

  /// Returns false (and keeps the existing vector) for a repeated word.
  bool add(std::string word, std::span<const double> v) {
    if (v.size() != dim_)
      throw Error("vector for \"" + word + "\" has " + std::to_string(v.size()) +
                  " components, expected " + std::to_string(dim_));
    for (double x : v)
      if (!std::isfinite(x)) throw Error("non-finite component in vector for \"" + word + "\"");
    if (!index_.try_emplace(word, words_.size()).second) return false;
    words_.push_back(std::move(word));
    data_.insert(data_.end(), v.begin(), v.end());
    return true;
  }

  std::optional<std::span<const double>> find(std::string_view word) const {
    auto it = index_.find(std::string(word));
    if (it == index_.end()) return std::nullopt;
    return std::span<const double>(data_.data() + it->second * dim_, dim_);
  }

  bool contains(std::string_view word) const { return index_.count(std::string(word)) > 0; }

  /// Multiplies every vector by c.
  EmbeddingTable scaled(double c) const {
    EmbeddingTable out = *this;
    for (double &x : out.data_) x *= c;
    return out;
  }

 private:
  std::size_t dim_ = 0;
  std::vector<std::string> words_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<double> data_;
};

/// Word-vector text format: optional "count dim" header, then
/// "word v1 ... vdim" rows. The first row fixes dim when there is no header.
inline EmbeddingTable parse_embeddings(const std::vector<std::string> &lines) {
  EmbeddingTable table;
  bool have_dim = false;
  std::size_t first = 0;
  while (first < lines.size() && trim(lines[first]).empty()) ++first;
  if (first < lines.size()) {
    auto f = split_ws(lines[first]);
    if (f.size() == 2) {
      char *end = nullptr;
      const auto dim = std::strtoull(f[1].c_str(), &end, 10);
      if (*end == '\0' && dim > 0 && f[0].find_first_not_of("0123456789") == std::string::npos) {
        table = EmbeddingTable(dim);
        have_dim = true;
        ++first;
      }
    }
  }

  std::vector<double> v;
  for (std::size_t i = first; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    auto f = split_ws(lines[i]);
    if (f.size() < 2) throw ParseError("expected a word followed by components", i + 1);
    if (!have_dim) {
      table = EmbeddingTable(f.size() - 1);
      have_dim = true;
    }
    if (f.size() - 1 != table.dim())
      throw ParseError("expected " + std::to_string(table.dim()) + " components, got " +
                           std::to_string(f.size() - 1),
                       i + 1);
    v.clear();
    for (std::size_t c = 1; c < f.size(); ++c) {
      char *end = nullptr;
      const double x = std::strtod(f[c].c_str(), &end);
      if (*end != '\0' || !std::isfinite(x))
        throw ParseError("bad vector component \"" + f[c] + "\"", i + 1);
      v.push_back(x);
    }
    table.add(f[0], v);
  }
  if (!have_dim) throw ParseError("no vectors in embedding file");
  return table;
}

inline EmbeddingTable load_embeddings(const std::string &path) {
  return parse_embeddings(read_lines(path));
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

/// Cosine similarity; throws on a zero-norm argument.
inline double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error("cosine: dimension mismatch");
  const double na = norm(a), nb = norm(b);
  if (na == 0.0 || nb == 0.0) throw Error("cosine: zero-norm vector");
  return dot(a, b) / (na * nb);
}

/// Sum of the in-vocabulary token vectors and how many were covered.
struct TokenSum {
  Vector sum;
  std::size_t covered = 0;
};

inline TokenSum sum_tokens(const EmbeddingTable &table, std::string_view text) {
  TokenSum s{Vector(table.dim(), 0.0), 0};
  for (const auto &tok : tokenize(text)) {
    auto v = table.find(tok);
    if (!v) continue;
    for (std::size_t i = 0; i < s.sum.size(); ++i) s.sum[i] += (*v)[i];
    ++s.covered;
  }
  return s;
}

/// Mean of the vectors of the covered tokens; repeated tokens count each
/// time and out-of-vocabulary tokens are skipped.
inline Vector doc_embedding(const EmbeddingTable &table, std::string_view text) {
  auto s = sum_tokens(table, text);
  if (s.covered == 0) throw Error("no covered tokens");
  for (double &x : s.sum) x /= static_cast<double>(s.covered);
  return s.sum;
}

/// Domain relevance of a text: cosine between its averaged embedding and a
/// domain centroid.
inline double relevance(const EmbeddingTable &table, std::string_view text,
                        std::span<const double> centroid) {
  return cosine(doc_embedding(table, text), centroid);
}

struct DomainDocument {
  std::string label;
  Vector centroid;
  std::size_t word_count = 0;
};

/// Concatenates the texts of each label into one document and embeds it.
/// Labels keep their first-appearance order.
inline std::vector<DomainDocument> build_domain_documents(
    const EmbeddingTable &table, const std::vector<std::pair<std::string, std::string>> &labeled) {
  std::vector<std::string> order;
  std::map<std::string, std::string> concatenated;
  for (const auto &[label, text] : labeled) {
    auto [it, inserted] = concatenated.try_emplace(label, text);
    if (inserted) {
      order.push_back(label);
    } else {
      it->second += ' ';
      it->second += text;
    }
  }
  std::vector<DomainDocument> out;
  for (const auto &label : order) {
    auto s = sum_tokens(table, concatenated[label]);
    if (s.covered == 0) throw Error("domain \"" + label + "\" has no covered tokens");
    for (double &x : s.sum) x /= static_cast<double>(s.covered);
    out.push_back({label, std::move(s.sum), s.covered});
  }
  return out;
}

struct Classification {
  std::size_t index = 0;
  std::string label;
  double score = 0.0;
};

/// Nearest domain document by cosine; the first of equally close labels wins.
inline Classification classify_scored(const std::vector<DomainDocument> &domains,
                                      const EmbeddingTable &table, std::string_view text) {
  if (domains.empty()) throw Error("classify: no domain documents");
  const Vector v = doc_embedding(table, text);
  Classification best;
  for (std::size_t i = 0; i < domains.size(); ++i) {
    const double s = cosine(v, domains[i].centroid);
    if (i == 0 || s > best.score) best = {i, domains[i].label, s};
  }
  return best;
}

inline std::string classify(const std::vector<DomainDocument> &domains,
                            const EmbeddingTable &table, std::string_view text) {
  return classify_scored(domains, table, text).label;
}

enum class LabeledFormat { tsv, snippet };

inline LabeledFormat parse_labeled_format(std::string_view s) {
  if (s == "tsv") return LabeledFormat::tsv;
  if (s == "snippet") return LabeledFormat::snippet;
  throw Error("unknown labeled data format: " + std::string(s));
}

/// Labeled documents as (label, text) pairs. tsv rows are label<TAB>text;
/// snippet rows are whitespace-separated words with the label last.
inline std::vector<std::pair<std::string, std::string>> read_labeled_documents(
    const std::string &path, LabeledFormat format) {
  std::vector<std::pair<std::string, std::string>> out;
  const auto lines = read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    if (format == LabeledFormat::tsv) {
      auto tab = lines[i].find('\t');
      if (tab == std::string::npos) throw ParseError(path + ": expected label<TAB>text", i + 1);
      out.emplace_back(std::string(trim(lines[i].substr(0, tab))), lines[i].substr(tab + 1));
    } else {
      auto toks = split_ws(lines[i]);
      if (toks.size() < 2) throw ParseError(path + ": expected words then a label", i + 1);
      std::string label = toks.back();
      toks.pop_back();
      out.emplace_back(std::move(label), join(toks));
    }
  }
  return out;
}

struct ClassifierEvaluation {
  std::size_t total = 0;
  std::size_t uncovered = 0;  // no in-vocabulary tokens; counted as wrong
  std::size_t correct = 0;
  double precision() const {
    return total ? 100.0 * static_cast<double>(correct) / static_cast<double>(total) : 0.0;
  }
};

inline ClassifierEvaluation evaluate_classifier(
    const std::vector<DomainDocument> &domains, const EmbeddingTable &table,
    const std::vector<std::pair<std::string, std::string>> &labeled) {
  ClassifierEvaluation e;
  for (const auto &[label, text] : labeled) {
    ++e.total;
    if (sum_tokens(table, text).covered == 0) {
      ++e.uncovered;
      continue;
    }
    e.correct += classify(domains, table, text) == label;
  }
  return e;
}

inline void save_domain_documents(const std::vector<DomainDocument> &docs, const std::string &path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write file: " + path);
  for (const auto &d : docs) {
    nlohmann::ordered_json j;
    j["label"] = d.label;
    j["centroid"] = d.centroid;
    j["word_count"] = d.word_count;
    out << j.dump() << '\n';
  }
  if (!out) throw Error("write failed: " + path);
}

inline std::vector<DomainDocument> load_domain_documents(const std::string &path) {
  std::vector<DomainDocument> out;
  const auto lines = read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    try {
      auto j = nlohmann::json::parse(lines[i]);
      DomainDocument d{j.at("label").get<std::string>(), j.at("centroid").get<Vector>(),
                       j.at("word_count").get<std::size_t>()};
      if (d.word_count == 0) throw Error("word_count must be >= 1");
      out.push_back(std::move(d));
    } catch (const std::exception &e) {
      throw ParseError(path + ": " + e.what(), i + 1);
    }
  }
  return out;
}

}  // namespace kbqgen

#endif
