#include <array>
#include <cstdio>
#include <string>
#include <sys/wait.h>

#include <gtest/gtest.h>

#include "kbqgen/templates.hpp"
#include "toy_fixture.hpp"

using namespace kbqgen;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run run(const std::string &args) {
  const std::string cmd = std::string(KBQGEN_CLI) + " " + args + " 2>&1";
  Run r;
  FILE *p = popen(cmd.c_str(), "r");
  if (!p) return r;
  std::array<char, 4096> buf;
  while (auto n = std::fread(buf.data(), 1, buf.size(), p)) r.out.append(buf.data(), n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string toy_config_file(const toy::TempDir &dir) {
  const auto &d = toy::kData;
  return dir.file("run.ini", "kb = " + d + "/toy/kb.tsv\n"
                             "templates = " + d + "/toy/templates.tsv\n"
                             "lm = " + d + "/toy/lm_corpus.txt\n"
                             "lm-order = 2\n"
                             "embeddings = " + d + "/toy/embeddings.txt\n"
                             "corpus = " + d + "/toy/suggestions.txt\n"
                             "max-iter = 40\n"
                             "top-k = 50\n");
}

}  // namespace

TEST(Cli, ConfigFileWithOverride) {
  toy::TempDir dir;
  const auto cfg = toy_config_file(dir);
  auto r = run("--config " + cfg + " pipeline --top-k 5 -q --out-dir " + dir.path("out"));
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(read_questions(dir.path("out/selected.jsonl")).size(), 5u);
  EXPECT_NE(toy::slurp(dir.path("out/run-config.json")).find("\"top_k\": 5"), std::string::npos);
}

TEST(Cli, StagesMatchPipeline) {
  toy::TempDir dir;
  const auto cfg = "--config " + toy_config_file(dir) + " -q ";
  ASSERT_EQ(run(cfg + "pipeline --out-dir " + dir.path("all")).code, 0);
  const auto staged = " --out-dir " + dir.path("staged");
  for (const char *stage : {"seeds", "expand", "score", "select"}) {
    auto r = run(cfg + stage + staged);
    ASSERT_EQ(r.code, 0) << stage << "\n" << r.out;
  }
  for (const char *f : {"seeds.jsonl", "expanded.jsonl", "scored.jsonl", "selected.jsonl"})
    EXPECT_EQ(toy::slurp(dir.path("all/") + f), toy::slurp(dir.path("staged/") + f)) << f;
}

TEST(Cli, ExitCodes) {
  toy::TempDir dir;
  const auto cfg = "--config " + toy_config_file(dir) + " -q --out-dir " + dir.path("out") + " ";
  EXPECT_EQ(run(cfg + "pipeline --kb " + dir.path("missing.tsv")).code, 1);
  EXPECT_EQ(run(cfg + "pipeline --kb " + dir.file("bad.tsv", "only\ttwo\n")).code, 2);
  EXPECT_EQ(run(cfg + "pipeline --templates " + dir.file("bad.tpl", "p\t#Q#\n")).code, 3);
  EXPECT_EQ(run(cfg + "pipeline --t-rel abc").code, 1);
  EXPECT_NE(run("pipeline --no-such-flag").code, 0);
}

TEST(Cli, Classify) {
  toy::TempDir dir;
  const auto train = dir.file("train.tsv", "tools\tjigsaw saw blade\nsurfaces\tdeck wood\n");
  const auto test = dir.file("test.tsv", "tools\tcircular saw\nsurfaces\twood deck\n");
  auto r = run("classify --embeddings " + toy::kData + "/toy/embeddings.txt --train " + train +
               " --test " + test + " --save-domains " + dir.path("domains.jsonl"));
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("precision 100"), std::string::npos) << r.out;
  r = run("classify --embeddings " + toy::kData + "/toy/embeddings.txt --domains " +
          dir.path("domains.jsonl") + " --text \"saw blade\"");
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(r.out.substr(0, 6), "tools\t");
}

TEST(Cli, ArpaExport) {
  toy::TempDir dir;
  const auto corpus = dir.file("c.txt", "a b\na b\na c\n");
  auto r = run("arpa --lm " + corpus + " --lm-order 2 --arpa-out " + dir.path("m.arpa"));
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(toy::slurp(dir.path("m.arpa")).find("\\data\\\nngram 1=6\nngram 2=5\n"), std::string::npos)
      << toy::slurp(dir.path("m.arpa"));
}
