#ifndef KBQGEN_TEMPLATES_HPP
#define KBQGEN_TEMPLATES_HPP

#include <cctype>
#include <cmath>
#include <limits>
#include <cstddef>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <variant>
#include <vector>

#include <json.hpp>

#include "kbqgen/error.hpp"
#include "kbqgen/kb.hpp"
#include "kbqgen/log.hpp"
#include "kbqgen/text.hpp"

namespace kbqgen {

inline constexpr std::string_view kSubjectSlot = "#X#";
inline constexpr std::string_view kObjectSlot = "#Y#";

/// A hand-written question pattern for one predicate, e.g.
/// performsActivity -> "how to use #X#".
struct QuestionTemplate {
  std::string predicate;
  std::string pattern;

  bool has_subject() const { return pattern.find(kSubjectSlot) != std::string::npos; }
  bool has_object() const { return pattern.find(kObjectSlot) != std::string::npos; }

  friend bool operator==(const QuestionTemplate &, const QuestionTemplate &) = default;
};

/// Checks the placeholder rules: non-empty pattern, "#X#" and "#Y#" at most
/// once each, and no other #TOKEN# placeholder. Throws ParseError.
inline void validate_template(const QuestionTemplate &t, std::size_t line_no = 0) {
  if (trim(t.predicate).empty()) throw ParseError("empty predicate", line_no);
  if (trim(t.pattern).empty()) throw ParseError("empty pattern", line_no);

  std::string_view p = t.pattern;
  int subject_hits = 0;
  int object_hits = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] != '#') continue;
    std::size_t j = i + 1;
    while (j < p.size() && (std::isalnum(static_cast<unsigned char>(p[j])) || p[j] == '_')) ++j;
    if (j == i + 1 || j >= p.size() || p[j] != '#') continue;
    std::string_view token = p.substr(i, j - i + 1);
    if (token == kSubjectSlot) {
      ++subject_hits;
    } else if (token == kObjectSlot) {
      ++object_hits;
    } else {
      throw ParseError("unknown placeholder " + std::string(token), line_no);
    }
    i = j;
  }
  if (subject_hits > 1) throw ParseError("placeholder #X# repeated", line_no);
  if (object_hits > 1) throw ParseError("placeholder #Y# repeated", line_no);
}

/// A comment is a line starting with "# " or made of '#' characters only.
inline bool is_template_comment(std::string_view line) {
  if (line.empty() || line.front() != '#') return false;
  if (line.size() > 1 && line[1] == ' ') return true;
  return line.find_first_not_of('#') == std::string_view::npos;
}

inline std::vector<QuestionTemplate> parse_templates(const std::vector<std::string> &lines) {
  std::vector<QuestionTemplate> out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::string_view line = lines[i];
    if (trim(line).empty() || is_template_comment(line)) continue;
    auto fields = split_char(line, '\t');
    if (fields.size() != 2)
      throw ParseError("expected predicate<TAB>pattern, got " + std::to_string(fields.size()) +
                           " field(s)",
                       i + 1);
    QuestionTemplate t{std::string(trim(fields[0])), std::string(trim(fields[1]))};
    validate_template(t, i + 1);
    if (t.has_object() && !t.has_subject())
      log::info("line " + std::to_string(i + 1) + ": object-only template for " + t.predicate);
    out.push_back(std::move(t));
  }
  return out;
}

inline std::vector<QuestionTemplate> load_templates(const std::string &path) {
  return parse_templates(read_lines(path));
}

/// Substitutes the triple's subject/object into the pattern in one pass and
/// normalizes the result.
inline std::string instantiate(const QuestionTemplate &t, const Triple &triple) {
  std::string filled;
  std::string_view p = t.pattern;
  std::size_t i = 0;
  while (i < p.size()) {
    if (p.substr(i, kSubjectSlot.size()) == kSubjectSlot) {
      filled += triple.subject;
      i += kSubjectSlot.size();
    } else if (p.substr(i, kObjectSlot.size()) == kObjectSlot) {
      filled += triple.object;
      i += kObjectSlot.size();
    } else {
      filled.push_back(p[i++]);
    }
  }
  return normalize(filled);
}

enum class Provenance { seed, expanded };

inline std::string_view to_string(Provenance p) {
  return p == Provenance::seed ? "seed" : "expanded";
}

/// Where a seed came from: the template applied to the triple.
struct SeedSource {
  QuestionTemplate tmpl;
  Triple triple;

  friend bool operator==(const SeedSource &, const SeedSource &) = default;
};

/// A candidate question. Seeds carry generation 0 and a SeedSource;
/// expanded questions carry the query text that retrieved them.
struct Question {
  std::string text;
  Provenance provenance = Provenance::seed;
  int generation = 0;
  std::variant<SeedSource, std::string> source;
  std::optional<double> rel_score;
  std::optional<double> flu_score;

  static Question seed(std::string text, const QuestionTemplate &t, const Triple &triple) {
    return {std::move(text), Provenance::seed, 0, SeedSource{t, triple}, {}, {}};
  }

  static Question expanded(std::string text, int generation, std::string query) {
    return {std::move(text), Provenance::expanded, generation, std::move(query), {}, {}};
  }

  const SeedSource *seed_source() const { return std::get_if<SeedSource>(&source); }
  const std::string *source_query() const { return std::get_if<std::string>(&source); }

  friend bool operator==(const Question &, const Question &) = default;
};

/// Applies every template to every triple with the same predicate. Output
/// order is triple-major then template order; duplicates by normalized text
/// keep the first occurrence.
inline std::vector<Question> generate_seeds(const KnowledgeBase &kb,
                                            const std::vector<QuestionTemplate> &templates) {
  std::map<std::string, std::vector<const QuestionTemplate *>> by_predicate;
  for (const auto &t : templates) by_predicate[t.predicate].push_back(&t);

  std::vector<Question> seeds;
  std::unordered_set<std::string> seen;
  for (const auto &triple : kb.triples()) {
    auto it = by_predicate.find(triple.predicate);
    if (it == by_predicate.end()) continue;
    for (const QuestionTemplate *t : it->second) {
      std::string text = instantiate(*t, triple);
      // Lowercasing means the uppercase slot literals cannot survive here.
      if (text.empty()) continue;
      if (!seen.insert(text).second) continue;
      seeds.push_back(Question::seed(std::move(text), *t, triple));
    }
  }
  return seeds;
}

// JSON-lines form: {"text", "provenance", "generation", "source", "rel_score"?, "flu_score"?}.
// A seed's source is {"predicate", "template", "subject", "object"}; an
// expanded question's source is the query string. Non-finite scores are
// written as null.

inline nlohmann::ordered_json to_json(const Question &q) {
  nlohmann::ordered_json j;
  j["text"] = q.text;
  j["provenance"] = std::string(to_string(q.provenance));
  j["generation"] = q.generation;
  if (const auto *s = q.seed_source()) {
    nlohmann::ordered_json src;
    src["predicate"] = s->tmpl.predicate;
    src["template"] = s->tmpl.pattern;
    src["subject"] = s->triple.subject;
    src["object"] = s->triple.object;
    j["source"] = std::move(src);
  } else {
    j["source"] = *q.source_query();
  }
  auto score = [](const std::optional<double> &v) -> nlohmann::ordered_json {
    if (std::isfinite(*v)) return *v;
    return nullptr;
  };
  if (q.rel_score) j["rel_score"] = score(q.rel_score);
  if (q.flu_score) j["flu_score"] = score(q.flu_score);
  return j;
}

inline Question question_from_json(const nlohmann::json &j) {
  Question q;
  q.text = j.at("text").get<std::string>();
  const auto prov = j.at("provenance").get<std::string>();
  if (prov == "seed") {
    q.provenance = Provenance::seed;
  } else if (prov == "expanded") {
    q.provenance = Provenance::expanded;
  } else {
    throw Error("unknown provenance: " + prov);
  }
  q.generation = j.at("generation").get<int>();
  const auto &src = j.at("source");
  if (src.is_object()) {
    SeedSource s;
    s.tmpl.predicate = src.at("predicate").get<std::string>();
    s.tmpl.pattern = src.at("template").get<std::string>();
    s.triple = {src.at("subject").get<std::string>(), s.tmpl.predicate,
                src.at("object").get<std::string>()};
    q.source = std::move(s);
  } else {
    q.source = src.get<std::string>();
  }
  auto score = [&](const char *key) -> std::optional<double> {
    auto it = j.find(key);
    if (it == j.end()) return std::nullopt;
    if (it->is_null()) return -std::numeric_limits<double>::infinity();
    return it->get<double>();
  };
  q.rel_score = score("rel_score");
  q.flu_score = score("flu_score");
  if (q.text.empty()) throw Error("question text is empty");
  if ((q.provenance == Provenance::seed) != (q.generation == 0))
    throw Error("provenance/generation mismatch for: " + q.text);
  return q;
}

inline void write_questions(const std::vector<Question> &questions, const std::string &path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write file: " + path);
  for (const auto &q : questions) out << to_json(q).dump() << '\n';
  if (!out) throw Error("write failed: " + path);
}

inline std::vector<Question> read_questions(const std::string &path) {
  std::vector<Question> out;
  const auto lines = read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    try {
      out.push_back(question_from_json(nlohmann::json::parse(lines[i])));
    } catch (const std::exception &e) {
      throw ParseError(path + ": " + e.what(), i + 1);
    }
  }
  return out;
}

}  // namespace kbqgen

#endif
