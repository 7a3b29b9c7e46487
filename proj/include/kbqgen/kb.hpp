#ifndef KBQGEN_KB_HPP
#define KBQGEN_KB_HPP

#include <cstddef>
#include <fstream>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "kbqgen/error.hpp"
#include "kbqgen/log.hpp"
#include "kbqgen/text.hpp"

namespace kbqgen {

/// One <subject, predicate, object> edge. Entity strings keep the casing of
/// the source file; predicates compare case-sensitively.
struct Triple {
  std::string subject;
  std::string predicate;
  std::string object;

  friend auto operator<=>(const Triple &, const Triple &) = default;
};

enum class KbFormat { tsv, jsonl };

inline KbFormat parse_kb_format(std::string_view name) {
  if (name == "tsv") return KbFormat::tsv;
  if (name == "jsonl") return KbFormat::jsonl;
  throw Error("unknown KB format: " + std::string(name));
}

/// ".jsonl"/".json" select jsonl, everything else tsv.
inline KbFormat kb_format_from_path(std::string_view path) {
  auto ends_with = [&](std::string_view suffix) {
    return path.size() >= suffix.size() && path.substr(path.size() - suffix.size()) == suffix;
  };
  return (ends_with(".jsonl") || ends_with(".json")) ? KbFormat::jsonl : KbFormat::tsv;
}

struct KbStats {
  std::size_t triple_count = 0;
  std::size_t predicate_count = 0;
  std::size_t subject_count = 0;
  std::size_t object_count = 0;

  friend bool operator==(const KbStats &, const KbStats &) = default;
};

/// An immutable, duplicate-free list of triples plus the distinct
/// predicate/subject/object sets projected from it.
class KnowledgeBase {
 public:
  KnowledgeBase() = default;

  /// Drops exact duplicates, keeping first-occurrence order.
  explicit KnowledgeBase(std::vector<Triple> triples) {
    std::set<Triple> seen;
    for (auto &t : triples) {
      if (!seen.insert(t).second) {
        ++duplicates_dropped_;
        continue;
      }
      predicates_.insert(t.predicate);
      subjects_.insert(t.subject);
      objects_.insert(t.object);
      triples_.push_back(std::move(t));
    }
  }

  const std::vector<Triple> &triples() const noexcept { return triples_; }
  const std::set<std::string> &predicates() const noexcept { return predicates_; }
  const std::set<std::string> &subjects() const noexcept { return subjects_; }
  const std::set<std::string> &objects() const noexcept { return objects_; }
  std::size_t duplicates_dropped() const noexcept { return duplicates_dropped_; }
  bool empty() const noexcept { return triples_.empty(); }

  friend bool operator==(const KnowledgeBase &a, const KnowledgeBase &b) {
    return a.triples_ == b.triples_;
  }

 private:
  std::vector<Triple> triples_;
  std::set<std::string> predicates_;
  std::set<std::string> subjects_;
  std::set<std::string> objects_;
  std::size_t duplicates_dropped_ = 0;
};

inline KbStats kb_stats(const KnowledgeBase &kb) {
  return {kb.triples().size(), kb.predicates().size(), kb.subjects().size(),
          kb.objects().size()};
}

namespace detail {

inline Triple make_triple(std::string_view s, std::string_view p, std::string_view o,
                          std::size_t line_no) {
  Triple t{std::string(trim(s)), std::string(trim(p)), std::string(trim(o))};
  if (t.subject.empty() || t.predicate.empty() || t.object.empty())
    throw ParseError("empty triple field", line_no);
  return t;
}

inline Triple parse_tsv_row(std::string_view line, std::size_t line_no) {
  auto fields = split_char(line, '\t');
  if (fields.size() != 3)
    throw ParseError("expected 3 tab-separated fields, got " + std::to_string(fields.size()),
                     line_no);
  return make_triple(fields[0], fields[1], fields[2], line_no);
}

inline Triple parse_jsonl_row(std::string_view line, std::size_t line_no) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error &e) {
    throw ParseError(std::string("invalid JSON: ") + e.what(), line_no);
  }
  if (!j.is_object()) throw ParseError("expected a JSON object", line_no);
  auto field = [&](const char *key) -> std::string {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string())
      throw ParseError(std::string("missing string key \"") + key + "\"", line_no);
    return it->get<std::string>();
  };
  return make_triple(field("subject"), field("predicate"), field("object"), line_no);
}

}  // namespace detail

/// Parses a KB from text lines. Blank lines are skipped in both formats;
/// '#'-prefixed lines are comments in TSV.
inline KnowledgeBase parse_kb(const std::vector<std::string> &lines, KbFormat format) {
  std::vector<Triple> triples;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::string_view line = lines[i];
    if (trim(line).empty()) continue;
    if (format == KbFormat::tsv) {
      if (line.front() == '#') continue;
      triples.push_back(detail::parse_tsv_row(line, i + 1));
    } else {
      triples.push_back(detail::parse_jsonl_row(line, i + 1));
    }
  }
  if (triples.empty()) throw ParseError("empty KB");
  KnowledgeBase kb(std::move(triples));
  if (kb.duplicates_dropped() > 0)
    log::warn("dropped " + std::to_string(kb.duplicates_dropped()) + " duplicate triple(s)");
  return kb;
}

inline KnowledgeBase load_kb(const std::string &path, KbFormat format) {
  return parse_kb(read_lines(path), format);
}

inline KnowledgeBase load_kb(const std::string &path) {
  return load_kb(path, kb_format_from_path(path));
}

inline void save_kb(const KnowledgeBase &kb, const std::string &path, KbFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write file: " + path);
  for (const auto &t : kb.triples()) {
    if (format == KbFormat::tsv) {
      out << t.subject << '\t' << t.predicate << '\t' << t.object << '\n';
    } else {
      nlohmann::ordered_json j;
      j["subject"] = t.subject;
      j["predicate"] = t.predicate;
      j["object"] = t.object;
      out << j.dump() << '\n';
    }
  }
  if (!out) throw Error("write failed: " + path);
}

}  // namespace kbqgen

#endif
