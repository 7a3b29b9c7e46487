#ifndef KBQGEN_ARPA_HPP
#define KBQGEN_ARPA_HPP

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "kbqgen/error.hpp"
#include "kbqgen/lm.hpp"
#include "kbqgen/text.hpp"

namespace kbqgen {

namespace detail {

inline std::string format_log10(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

inline double parse_log10(std::string_view s, std::size_t line_no) {
  // from_chars for double is missing in older libstdc++; strtod needs a
  // terminated buffer.
  std::string tmp(s);
  char *end = nullptr;
  const double v = std::strtod(tmp.c_str(), &end);
  if (end != tmp.c_str() + tmp.size() || tmp.empty())
    throw ParseError("bad number \"" + tmp + "\"", line_no);
  return v;
}

}  // namespace detail

/// Writes the model as an ARPA file: \data\ counts, then one section per
/// order with "logprob<TAB>words[<TAB>backoff]" rows, then \end\.
inline void write_arpa(const NgramModel &model, std::ostream &out) {
  out << "\n\\data\\\n";
  for (int k = 1; k <= model.order(); ++k) out << "ngram " << k << '=' << model.size(k) << '\n';
  for (int k = 1; k <= model.order(); ++k) {
    out << "\n\\" << k << "-grams:\n";
    for (const auto &[gram, e] : model.sorted_entries(k)) {
      out << detail::format_log10(e.logprob) << '\t';
      for (std::size_t i = 0; i < gram.size(); ++i) {
        if (i) out << ' ';
        out << model.word(gram[i]);
      }
      if (e.backoff) out << '\t' << detail::format_log10(*e.backoff);
      out << '\n';
    }
  }
  out << "\n\\end\\\n";
}

inline void export_arpa(const NgramModel &model, const std::string &path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write file: " + path);
  write_arpa(model, out);
  if (!out) throw Error("write failed: " + path);
}

/// Parses ARPA text. Fields may be separated by tabs or spaces. The model
/// order is the highest order with a non-zero declared count; declared
/// counts must match the rows of each section.
inline NgramModel parse_arpa(const std::vector<std::string> &lines) {
  std::size_t i = 0;
  auto skip_blank = [&] {
    while (i < lines.size() && trim(lines[i]).empty()) ++i;
  };

  skip_blank();
  if (i >= lines.size() || trim(lines[i]) != "\\data\\")
    throw ParseError("expected \\data\\ header", i < lines.size() ? i + 1 : 0);
  ++i;

  std::vector<std::size_t> declared;
  for (; i < lines.size(); ++i) {
    std::string_view line = trim(lines[i]);
    if (line.empty()) break;
    if (line.substr(0, 6) != "ngram ") throw ParseError("expected \"ngram k=count\"", i + 1);
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected \"ngram k=count\"", i + 1);
    std::size_t k = 0, count = 0;
    auto ks = trim(line.substr(6, eq - 6));
    auto cs = trim(line.substr(eq + 1));
    if (std::from_chars(ks.data(), ks.data() + ks.size(), k).ec != std::errc{} ||
        std::from_chars(cs.data(), cs.data() + cs.size(), count).ec != std::errc{})
      throw ParseError("bad ngram count line", i + 1);
    if (k != declared.size() + 1) throw ParseError("ngram orders out of sequence", i + 1);
    declared.push_back(count);
  }
  if (declared.empty()) throw ParseError("no ngram counts in \\data\\ section", i + 1);

  int order = 1;
  for (std::size_t k = 0; k < declared.size(); ++k)
    if (declared[k] > 0) order = static_cast<int>(k + 1);
  NgramModel model(order);

  for (std::size_t k = 1; k <= declared.size(); ++k) {
    skip_blank();
    const std::string header = "\\" + std::to_string(k) + "-grams:";
    if (i >= lines.size() || trim(lines[i]) != header)
      throw ParseError("expected " + header, i < lines.size() ? i + 1 : 0);
    const std::size_t header_line = i + 1;
    ++i;
    std::size_t rows = 0;
    for (; i < lines.size(); ++i) {
      std::string_view line = trim(lines[i]);
      if (line.empty() || line.front() == '\\') break;
      auto fields = split_ws(line);
      if (fields.size() != k + 1 && fields.size() != k + 2)
        throw ParseError("expected " + std::to_string(k) + " word(s) plus probabilities", i + 1);
      NgramModel::Gram gram;
      for (std::size_t w = 1; w <= k; ++w) gram.push_back(model.add_word(fields[w]));
      model.set_logprob(gram, detail::parse_log10(fields[0], i + 1));
      if (fields.size() == k + 2) model.set_backoff(gram, detail::parse_log10(fields[k + 1], i + 1));
      ++rows;
    }
    if (rows != declared[k - 1])
      throw ParseError(header + " declares " + std::to_string(declared[k - 1]) + " entries, found " +
                           std::to_string(rows),
                       header_line);
  }
  skip_blank();
  if (i >= lines.size() || trim(lines[i]) != "\\end\\")
    throw ParseError("expected \\end\\", i < lines.size() ? i + 1 : 0);
  return model;
}

inline NgramModel import_arpa(const std::string &path) { return parse_arpa(read_lines(path)); }

/// True when the first non-blank line is the ARPA "\data\" marker.
inline bool looks_like_arpa(const std::string &path) {
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    auto t = trim(line);
    if (t.empty()) continue;
    return t == "\\data\\";
  }
  return false;
}

}  // namespace kbqgen

#endif
