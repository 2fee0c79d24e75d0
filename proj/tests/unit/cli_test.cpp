#include <gtest/gtest.h>

#include <sstream>

#include "disc_forge/cli.hpp"
#include "test_support.hpp"

using namespace disc_forge;
using disc_forge::testing::TempDir;
using disc_forge::testing::fixture;
using disc_forge::testing::write_text;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "disc-forge");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

// mine + link over the toml4j fixture; returns the linked dataset path
struct Pipeline {
  TempDir dir;
  std::filesystem::path mined = dir.path() / "mined";
  std::filesystem::path linked = dir.path() / "linked.jsonl";
  std::filesystem::path dropped = dir.path() / "dropped.jsonl";
  std::string root = fixture("toml4j").string();

  Result mine() {
    return run({"mine", "--projects", root + "/projects.txt", "--since", "2015-01-01", "--until",
                "2016-01-01", "--archive", root + "/archive", "--commits", root + "/commits.jsonl",
                "--out", mined.string(), "--log", (dir.path() / "mine.log").string()});
  }
  Result link() {
    return run({"link", "--examples", root + "/bfp_examples.jsonl", "--links",
                (mined / "links.jsonl").string(), "--discussions", mined.string(), "--out",
                linked.string(), "--dropped", dropped.string(), "--log",
                (dir.path() / "link.log").string()});
  }
};

}  // namespace

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"frobnicate"}).code, 2);
  EXPECT_EQ(run({"eval", "--refs"}).code, 2);
  EXPECT_EQ(run({"context", "--dataset", "x"}).code, 2);
  EXPECT_EQ(run({"--help"}).code, 0);
}

TEST(Cli, MissingInputIsConfigurationError) {
  TempDir dir;
  auto r = run({"eval", "--refs", (dir.path() / "none.jsonl").string(), "--candidates",
                (dir.path() / "none2.jsonl").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("none.jsonl"), std::string::npos);
}

TEST(Cli, MineAndLinkToml4j) {
  Pipeline p;
  ASSERT_EQ(p.mine().code, 0);
  auto report = Json::parse(read_file(p.mined / "mine-report.json"));
  EXPECT_EQ(report["fetched"], 1);
  EXPECT_EQ(report["linked"], 1);
  EXPECT_EQ(report["pull_requests_excluded"], 1);
  EXPECT_EQ(report["outside_window"], 1);
  EXPECT_TRUE(std::filesystem::exists(p.mined / "mwanji__toml4j.discussions.jsonl"));
  auto links = load_links(p.mined / "links.jsonl");
  ASSERT_EQ(links.size(), 1u);
  EXPECT_EQ(links[0].link_source, LinkSource::message_reference);

  ASSERT_EQ(p.link().code, 0);
  auto linked = load_dataset(p.linked);
  ASSERT_EQ(linked.size(), 1u);
  EXPECT_EQ(linked[0].discussion_ids, (std::vector<std::string>{"mwanji/toml4j#18"}));
  EXPECT_EQ(load_dataset(p.dropped).size(), 1u);
}

TEST(Cli, MineIsIdempotent) {
  Pipeline p;
  ASSERT_EQ(p.mine().code, 0);
  auto first = read_file(p.mined / "mwanji__toml4j.discussions.jsonl");
  auto first_links = read_file(p.mined / "links.jsonl");
  ASSERT_EQ(p.mine().code, 0);
  EXPECT_EQ(read_file(p.mined / "mwanji__toml4j.discussions.jsonl"), first);
  EXPECT_EQ(read_file(p.mined / "links.jsonl"), first_links);
}

TEST(Cli, MineNeedsArchiveOrToken) {
  Pipeline p;
  auto r = run({"mine", "--projects", p.root + "/projects.txt", "--since", "2015-01-01", "--until",
                "2016-01-01", "--token-env", "DISC_FORGE_SURELY_UNSET_VAR", "--out", p.mined.string()});
  EXPECT_EQ(r.code, 2);
  r = run({"mine", "--projects", p.root + "/projects.txt", "--since", "last year", "--until",
           "2016-01-01", "--archive", p.root + "/archive", "--out", p.mined.string()});
  EXPECT_EQ(r.code, 2);
}

TEST(Cli, ContextAndEval) {
  Pipeline p;
  ASSERT_EQ(p.mine().code, 0);
  ASSERT_EQ(p.link().code, 0);
  auto ctx_out = p.dir.path() / "title.jsonl";
  auto r = run({"context", "--dataset", p.linked.string(), "--repr", "title", "--discussions",
                p.mined.string(), "--out", ctx_out.string(), "--log", (p.dir.path() / "c.log").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  auto rec = Json::parse(read_file(ctx_out));
  EXPECT_EQ(rec["repr"], "title");
  EXPECT_EQ(rec["input_tokens"].back(), "newlines");

  for (auto [source, rate] : {std::pair{"fixed", 100.0}, std::pair{"buggy", 0.0}}) {
    auto res = run({"eval", "--refs", p.linked.string(), "--candidates",
                    p.root + "/candidates/" + source + ".jsonl", "--log",
                    (p.dir.path() / "e.log").string()});
    ASSERT_EQ(res.code, 0) << res.err;
    auto j = Json::parse(res.out);
    EXPECT_EQ(j["exact_match_rate"].get<double>(), rate);
    EXPECT_EQ(j["representation"], source);
    EXPECT_EQ(j["inputs"]["refs"].get<std::string>().rfind("sha256:", 0), 0u);
  }
}

TEST(Cli, AttendedWithoutTracesIsConfigError) {
  Pipeline p;
  ASSERT_EQ(p.mine().code, 0);
  ASSERT_EQ(p.link().code, 0);
  auto r = run({"context", "--dataset", p.linked.string(), "--repr", "attended", "--discussions",
                p.mined.string(), "--out", (p.dir.path() / "a.jsonl").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("trace"), std::string::npos);
  r = run({"context", "--dataset", p.linked.string(), "--repr", "bogus", "--discussions",
           p.mined.string(), "--out", (p.dir.path() / "a.jsonl").string()});
  EXPECT_EQ(r.code, 2);
}

TEST(Cli, SkipRatioControlsExitCode) {
  Pipeline p;
  ASSERT_EQ(p.mine().code, 0);
  ASSERT_EQ(p.link().code, 0);
  auto skipped = p.dir.path() / "skipped.jsonl";
  std::vector<std::string> args{"context", "--dataset", p.dropped.string(), "--repr", "title",
                                "--discussions", p.mined.string(), "--out",
                                (p.dir.path() / "t.jsonl").string(), "--skipped", skipped.string(),
                                "--log", (p.dir.path() / "s.log").string()};
  EXPECT_EQ(run(args).code, 1);
  auto rec = Json::parse(read_file(skipped));
  EXPECT_EQ(rec["example_id"], "mwanji/toml4j@bbbbbbb@0");
  args.insert(args.begin(), {"--max-skip-ratio", "1.0"});
  EXPECT_EQ(run(args).code, 0);
}

TEST(Cli, ConfigFileFlagsWin) {
  Pipeline p;
  ASSERT_EQ(p.mine().code, 0);
  ASSERT_EQ(p.link().code, 0);
  auto cfg = p.dir.path() / "run.toml";
  write_text(cfg, "[context]\nrepr = \"title\"\nlimit = 5\n");
  auto out = p.dir.path() / "cfg.jsonl";
  std::vector<std::string> base{"context", "--dataset", p.linked.string(), "--discussions",
                                p.mined.string(), "--out", out.string(), "--config", cfg.string(),
                                "--log", (p.dir.path() / "cfg.log").string()};
  ASSERT_EQ(run(base).code, 0);
  auto rec = Json::parse(read_file(out));
  EXPECT_EQ(rec["repr"], "title");
  EXPECT_EQ(rec["input_tokens"].size(), 5u);
  base.insert(base.end(), {"--limit", "7"});
  ASSERT_EQ(run(base).code, 0);
  EXPECT_EQ(Json::parse(read_file(out))["input_tokens"].size(), 7u);
}

TEST(Cli, CompareSwapsAndRequiresSeedInCi) {
  Pipeline p;
  ASSERT_EQ(p.mine().code, 0);
  ASSERT_EQ(p.link().code, 0);
  std::vector<std::string> args{"compare", "--refs", p.linked.string(), "--a",
                                p.root + "/candidates/buggy.jsonl", "--b",
                                p.root + "/candidates/fixed.jsonl", "--samples", "200", "--size",
                                "10", "--log", (p.dir.path() / "cmp.log").string()};
  std::vector<std::string> ci = args;
  ci.insert(ci.begin(), "--ci");
  EXPECT_EQ(run(ci).code, 2);
  args.insert(args.end(), {"--seed", "3"});
  auto r = run(args);
  ASSERT_EQ(r.code, 0) << r.err;
  auto j = Json::parse(r.out);
  EXPECT_TRUE(j["swapped"].get<bool>());
  EXPECT_EQ(j["system_a"], "fixed");
  EXPECT_EQ(j["seed"], 3);
  EXPECT_EQ(Json::parse(run(args).out)["p_value"], j["p_value"]);
}

TEST(Cli, TokenizeModes) {
  TempDir dir;
  write_text(dir.path() / "in.txt", "fooBar(x);\n**bold** [a](b)\n");
  auto out = dir.path() / "out.jsonl";
  ASSERT_EQ(run({"tokenize", "--mode", "subtoken", "--in", (dir.path() / "in.txt").string(), "--out",
                 out.string(), "--log", (dir.path() / "l").string()})
                .code,
            0);
  std::istringstream lines(read_file(out));
  std::string first;
  std::getline(lines, first);
  EXPECT_EQ(Json::parse(first), Json::parse(R"j(["foo","Bar","(","x",")",";"])j"));
  EXPECT_EQ(run({"tokenize", "--mode", "nope", "--in", "a", "--out", "b"}).code, 2);
}

TEST(Cli, StatsOnTableFixture) {
  std::string root = fixture("stats_corpus").string();
  TempDir dir;
  auto r = run({"stats", "--dataset", root + "/dataset.jsonl", "--discussions", root + "/discussions",
                "--traces", root + "/traces", "--desc", root + "/descriptions.jsonl", "--log",
                (dir.path() / "l").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  auto j = Json::parse(r.out);
  EXPECT_EQ(j["table"]["#Ex"], 10);
  EXPECT_EQ(j["table"]["Title"].get<double>(), 6.5);
}
