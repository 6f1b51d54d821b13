#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "msb/cli/cli.hpp"
#include "msb/service/api.hpp"
#include "support/fixtures.hpp"

using namespace msb;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

class Cli : public ::testing::Test {
 protected:
  fx::TempDir dir;

  void SetUp() override {
    setenv("MSB_DATA_DIR", (dir / "data").c_str(), 1);
    write("train.csv",
          "text,label\n"
          "sunny day,0.6\nwarm night,0.4\nsunny and warm,0.9\ngrey,0.1\nsunny again,0.6\nwarm hum,0.4\n");
    write("test.csv", "text,label\nsunny,0.6\nwarm,0.4\ncold,0.1\nsunny warm,0.9\n");
    write("lex.tsv", "sunny\tsunny\nwarm\twarm\n");
  }
  void TearDown() override { unsetenv("MSB_DATA_DIR"); }

  std::string write(const std::string& name, const std::string& text) {
    std::ofstream(dir / name) << text;
    return (dir / name).string();
  }

  Result run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
  }

  void init() {
    const auto r = run({"init", "--goal", "pleasant weather", "--schema", "text:text,label:ground_truth",
                        "--dataset", "train=" + (dir / "train.csv").string(), "--id", "wx"});
    ASSERT_EQ(r.code, 0) << r.err;
    ASSERT_EQ(r.out, "wx\n");
  }
};

}  // namespace

TEST_F(Cli, ScriptedSession) {
  init();
  auto r = run({"add-dataset", "--name", "test", "--csv", (dir / "test.csv").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "test: 4 rows\n");
  r = run({"add-backend", "lexicon:lex:" + (dir / "lex.tsv").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  r = run({"concept", "create", "--term", "sunny", "--field", "text", "--backend", "lex", "--id", "sun"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "sun\n");
  r = run({"concept", "create", "--term", "warm", "--field", "text", "--backend", "lex", "--id", "warm"});
  ASSERT_EQ(r.code, 0) << r.err;
  r = run({"sketch", "create", "--concepts", "sun,warm", "--id", "fit"});
  ASSERT_EQ(r.code, 0) << r.err;

  r = run({"-o", "json", "sketch", "test", "--sketch", "fit"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto tested = Json::parse(r.out);
  EXPECT_EQ(tested["dataset"], "test");
  EXPECT_LT(tested["metrics"]["mae"].get<double>(), 1e-9);

  r = run({"sketch", "test", "--sketch", "fit"});
  EXPECT_NE(r.out.find("mae: "), std::string::npos);

  const auto out = (dir / "wx.json").string();
  r = run({"export", "--out", out});
  ASSERT_EQ(r.code, 0) << r.err;
  std::ifstream in(out);
  const auto doc = Json::parse(in);
  EXPECT_EQ(doc["id"], "wx");
  EXPECT_EQ(doc["concepts"].size(), 2u);

  r = run({"history"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("SketchTrained"), std::string::npos);
}

TEST_F(Cli, JsonOutputMatchesApi) {
  init();
  run({"add-backend", "lexicon:lex:" + (dir / "lex.tsv").string()});
  run({"concept", "create", "--term", "sunny", "--field", "text", "--backend", "lex", "--id", "sun"});
  const auto r = run({"-o", "json", "concept", "view", "--concept", "sun"});
  ASSERT_EQ(r.code, 0) << r.err;

  service::Store store(dir / "data");
  scoring::ScorerRegistry scorers;
  service::JobManager jobs(1);
  service::Api api(store, scorers, jobs);
  const auto direct = api.handle({"GET", "/sketchbooks/wx/concepts/sun/view", {{"desc", "true"}}, {}, {}});
  EXPECT_EQ(Json::parse(r.out), direct.body);
}

TEST_F(Cli, UsageErrors) {
  auto r = run({"frobnicate"});
  EXPECT_EQ(r.code, cli::kExitUsage);
  EXPECT_NE(r.err.find("Usage"), std::string::npos);
  r = run({});
  EXPECT_EQ(r.code, cli::kExitUsage);
  r = run({"concept", "create", "--term", "x"});
  EXPECT_EQ(r.code, cli::kExitUsage);
  EXPECT_EQ(run({"--help"}).code, cli::kExitOk);
}

TEST_F(Cli, DomainErrorsExitOne) {
  auto r = run({"concept", "list"});
  EXPECT_EQ(r.code, cli::kExitDomainError);
  EXPECT_NE(r.err.find("UnknownSketchbook"), std::string::npos);
  init();
  r = run({"concept", "create", "--term", "x", "--field", "nope", "--backend", "lex"});
  EXPECT_EQ(r.code, cli::kExitDomainError);
  EXPECT_NE(r.err.find("UnknownField"), std::string::npos);
  r = run({"-o", "json", "sketch", "view", "--sketch", "ghost"});
  EXPECT_EQ(r.code, cli::kExitDomainError);
  EXPECT_EQ(Json::parse(r.err)["error"]["code"], "UnknownSketch");
}

TEST_F(Cli, ImportRoundTrip) {
  init();
  const auto out = (dir / "doc.json").string();
  ASSERT_EQ(run({"export", "--out", out}).code, 0);
  std::ifstream in(out);
  auto doc = Json::parse(in);
  doc["id"] = "wx_copy";
  std::ofstream(out) << doc.dump();
  auto r = run({"import", "--file", out});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "wx_copy\n");
  std::ofstream(out) << "{broken";
  r = run({"import", "--file", out});
  EXPECT_EQ(r.code, cli::kExitDomainError);
  EXPECT_NE(r.err.find("CorruptDocument"), std::string::npos);
}

TEST_F(Cli, Brainstorm) {
  const auto r = run({"brainstorm", "--term", "hate"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("hatred"), std::string::npos);
}

TEST_F(Cli, BenchSynthetic) {
  const std::string config = std::string(MSB_SOURCE_DIR) + "/bench/synthetic/config.json";
  const auto report = (dir / "report.json").string();
  const auto r = run({"bench", config, "--out", report});
  ASSERT_EQ(r.code, 0) << r.err << r.out;
  EXPECT_NE(r.out.find("passed"), std::string::npos);
  std::ifstream in(report);
  EXPECT_LT(Json::parse(in)["value"].get<double>(), 1e-9);
}

TEST_F(Cli, BenchConfigErrors) {
  EXPECT_EQ(run({"bench", (dir / "missing.json").string()}).code, cli::kExitUsage);
  const auto bad = write("bad.json", R"({"name": "x"})");
  EXPECT_EQ(run({"bench", bad}).code, cli::kExitUsage);
}

TEST_F(Cli, LiveBenchNeedsCredentials) {
  const char* saved = std::getenv("MSB_COMPLETIONS_KEY");
  const std::string keep = saved ? saved : "";
  unsetenv("MSB_COMPLETIONS_KEY");
  const auto r = run({"bench", std::string(MSB_SOURCE_DIR) + "/bench/imdb/config.json"});
  if (!keep.empty()) setenv("MSB_COMPLETIONS_KEY", keep.c_str(), 1);
  EXPECT_EQ(r.code, cli::kExitDomainError);
  EXPECT_NE(r.err.find("MissingCredentials"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("MSB_COMPLETIONS_KEY"), std::string::npos);
}
