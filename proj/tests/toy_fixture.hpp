// Shared setup for tests that run the whole pipeline on the toy data.

#ifndef KBQGEN_TESTS_TOY_FIXTURE_HPP
#define KBQGEN_TESTS_TOY_FIXTURE_HPP

#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>

#include "kbqgen/pipeline.hpp"

namespace toy {

inline const std::string kData = KBQGEN_TEST_DATA_DIR;

class TempDir {
 public:
  explicit TempDir(const std::string &tag = "run")
      : path_(std::filesystem::temp_directory_path() /
              ("kbqgen_" + tag + "_" + std::to_string(std::random_device{}()))) {
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  TempDir(const TempDir &) = delete;
  TempDir &operator=(const TempDir &) = delete;

  std::string path(const std::string &name) const { return (path_ / name).string(); }
  std::string file(const std::string &name, const std::string &content) const {
    std::ofstream(path_ / name, std::ios::binary) << content;
    return path(name);
  }

 private:
  std::filesystem::path path_;
};

inline kbqgen::PipelineConfig config(const std::string &out_dir) {
  kbqgen::PipelineConfig c;
  c.kb_path = kData + "/toy/kb.tsv";
  c.templates_path = kData + "/toy/templates.tsv";
  c.lm_path = kData + "/toy/lm_corpus.txt";
  c.lm_order = 3;
  c.embeddings_path = kData + "/toy/embeddings.txt";
  c.provider = kbqgen::ProviderKind::mock;
  c.mock_corpus_path = kData + "/toy/suggestions.txt";
  c.expansion.max_iterations = 200;
  c.top_k = 100;
  c.out_dir = out_dir;
  return c;
}

inline std::string slurp(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace toy

#endif
