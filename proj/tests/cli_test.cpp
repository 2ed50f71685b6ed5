#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <string>
#include <sys/wait.h>

namespace {

struct Run {
  int exit_code;
  std::string out;
};

// Runs the CLI through the shell. stderr is dropped unless merged.
Run run(const std::string& args, const std::string& stdin_text = "", bool merge_stderr = false) {
  std::string cmd = std::string(CSMITH_CLI_PATH) + " " + args;
  if (!stdin_text.empty()) cmd = "printf '%s' '" + stdin_text + "' | " + cmd;
  FILE* pipe = popen((cmd + (merge_stderr ? " 2>&1" : " 2>/dev/null")).c_str(), "r");
  std::string out;
  std::array<char, 4096> buf{};
  while (auto n = fread(buf.data(), 1, buf.size(), pipe)) out.append(buf.data(), n);
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

const std::string kData = std::string(CSMITH_SOURCE_DIR) + "/data/";

TEST(Cli, ValidateFromStdin) {
  EXPECT_EQ(run("validate --pattern 'a+'", "aaa\n").exit_code, 0);
  EXPECT_EQ(run("validate --pattern 'a+'", "aab\n").exit_code, 1);
  const auto r = run("validate --json --pattern 'a+' --text aab");
  EXPECT_EQ(r.out, "{\"first_reject_offset\":2,\"valid\":false}\n");
}

TEST(Cli, GenerateIsReproducible) {
  const std::string args = "generate --constraints " + kData + "sentiment.json --prompt 'Review: dull.' --seed 7";
  const auto a = run(args);
  const auto b = run(args);
  EXPECT_EQ(a.exit_code, 0);
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(a.out.rfind("Sentiment : ", 0), 0u);
}

TEST(Cli, CompileRejectsBackreference) {
  const auto r = run("compile --pattern '(a)\\1'", "", true);
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_NE(r.out.find("UnsupportedFeature"), std::string::npos);
}

TEST(Cli, CompileSpecFile) {
  const auto r = run("compile --constraints " + kData + "sentiment.json");
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_EQ(r.out, "Sentiment : (?:positive|negative|neutral)\n");
}

TEST(Cli, BudgetFailureExitsTwo) {
  EXPECT_EQ(run("generate --constraints " + kData + "character.json --max-tokens 1").exit_code, 2);
}

TEST(Cli, BadArguments) {
  EXPECT_EQ(run("compile --pattern a --constraints x.json").exit_code, 1);
  EXPECT_EQ(run("compile").exit_code, 1);
  EXPECT_EQ(run("compile --constraints /nonexistent.json").exit_code, 1);
}

TEST(Cli, ExportedVocabularyMatchesBundledFile) {
  const auto r = run("export-vocab");
  FILE* f = fopen((kData + "test_vocab.json").c_str(), "rb");
  ASSERT_NE(f, nullptr);
  std::string file;
  std::array<char, 4096> buf{};
  while (auto n = fread(buf.data(), 1, buf.size(), f)) file.append(buf.data(), n);
  fclose(f);
  EXPECT_EQ(r.out, file);
}

}  // namespace
