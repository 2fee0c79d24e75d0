#include <gtest/gtest.h>

#include "disc_forge/corpus.hpp"
#include "test_support.hpp"

using namespace disc_forge;
using disc_forge::testing::TempDir;
using disc_forge::testing::write_text;

namespace {

BugFixExample make_example(const std::string& id) {
  BugFixExample e;
  e.id = id;
  e.project = "o/p";
  e.commit_sha = "abcdef0123";
  e.commit_timestamp = Timestamp::parse("2016-01-02T03:04:05Z");
  e.split = Split::test;
  e.buggy_tokens = {"a", "(", ")", ";"};
  e.fixed_tokens = {"b", "(", ")", ";"};
  e.method_tokens = {"void", "m", "(", ")", "{", "a", "(", ")", ";", "}"};
  e.discussion_ids = {"o/p#1"};
  return e;
}

std::string example_line(const std::string& id, const std::string& extra = "") {
  return R"({"id":")" + id +
         R"(","project":"o/p","commit_sha":"abc1234","commit_timestamp":"2016-01-01T00:00:00Z","split":"train","buggy_tokens":["a"],"fixed_tokens":["b"],"method_tokens":["m"])" +
         extra + "}\n";
}

}  // namespace

TEST(Timestamp, ParsesAndNormalizesOffsets) {
  EXPECT_EQ(Timestamp::parse("2015-02-10T12:00:00Z").str(), "2015-02-10T12:00:00Z");
  EXPECT_EQ(Timestamp::parse("2015-02-10T14:00:00+02:00").str(), "2015-02-10T12:00:00Z");
  EXPECT_EQ(Timestamp::parse("2015-02-10T12:00:00.987Z").str(), "2015-02-10T12:00:00Z");
  EXPECT_EQ(Timestamp::parse("1969-12-31T23:59:59Z").epoch_seconds(), -1);
  EXPECT_FALSE(Timestamp::try_parse("2015-02-30T00:00:00Z"));
  EXPECT_FALSE(Timestamp::try_parse("2015-02-10T12:00:00"));
  EXPECT_FALSE(Timestamp::try_parse("yesterday"));
}

TEST(Timestamp, CanonicalStringsSortLikeInstants) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<std::int64_t> secs(0, 4'000'000'000LL);
  for (int i = 0; i < 500; ++i) {
    Timestamp a{secs(rng)}, b{secs(rng)};
    EXPECT_EQ(a < b, a.str() < b.str());
    EXPECT_EQ(Timestamp::parse(a.str()), a);
  }
}

TEST(LoadDataset, ReadsAllValidRecords) {
  TempDir dir;
  write_text(dir / "d.jsonl", example_line("x1") + example_line("x2") + "\n" + example_line("x3"));
  auto ds = load_dataset(dir / "d.jsonl");
  ASSERT_EQ(ds.size(), 3u);
  EXPECT_EQ(ds[2].id, "x3");
  EXPECT_TRUE(ds[0].discussion_ids.empty());
}

TEST(LoadDataset, MissingFieldNamesLineAndField) {
  TempDir dir;
  std::string bad =
      R"({"id":"x2","project":"o/p","commit_sha":"abc1234","commit_timestamp":"2016-01-01T00:00:00Z","split":"train","buggy_tokens":["a"],"method_tokens":["m"]})";
  write_text(dir / "d.jsonl", example_line("x1") + bad + "\n");
  try {
    load_dataset(dir / "d.jsonl");
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_EQ(e.field(), "fixed_tokens");
  }
}

TEST(LoadDataset, RejectsNoOpFix) {
  TempDir dir;
  std::string same =
      R"({"id":"x","project":"o/p","commit_sha":"abc1234","commit_timestamp":"2016-01-01T00:00:00Z","split":"train","buggy_tokens":["a",";"],"fixed_tokens":["a",";"],"method_tokens":["m"]})";
  write_text(dir / "d.jsonl", same + "\n");
  EXPECT_THROW(load_dataset(dir / "d.jsonl"), InvariantError);
}

TEST(LoadDataset, RejectsDuplicateIdsAndDiscussionIds) {
  TempDir dir;
  write_text(dir / "dup.jsonl", example_line("x") + example_line("x"));
  EXPECT_THROW(load_dataset(dir / "dup.jsonl"), FormatError);
  write_text(dir / "dd.jsonl", example_line("y", R"(,"discussion_ids":["a","a"])"));
  EXPECT_THROW(load_dataset(dir / "dd.jsonl"), InvariantError);
}

TEST(LoadDataset, RejectsBadJsonAndSplit) {
  TempDir dir;
  write_text(dir / "a.jsonl", "{not json\n");
  EXPECT_THROW(load_dataset(dir / "a.jsonl"), FormatError);
  auto line = example_line("z");
  line.replace(line.find("train"), 5, "dev");
  write_text(dir / "b.jsonl", line);
  EXPECT_THROW(load_dataset(dir / "b.jsonl"), FormatError);
  EXPECT_THROW(load_dataset(dir / "missing.jsonl"), IoError);
}

TEST(SaveDataset, EmptyListRoundTrips) {
  TempDir dir;
  save_dataset({}, dir / "e.jsonl");
  EXPECT_EQ(read_file(dir / "e.jsonl"), "");
  EXPECT_TRUE(load_dataset(dir / "e.jsonl").empty());
}

TEST(SaveDataset, SeparatorTokensSurviveRoundTrip) {
  TempDir dir;
  std::vector<BugFixExample> ds{make_example("a"), make_example("b"), make_example("c")};
  ds[1].oracle_msg_tokens = TokenList{"fix", "<s>", "two words", "ünïcödé", "\"q\""};
  ds[2].method_tokens.push_back("<s>");
  save_dataset(ds, dir / "r.jsonl");
  auto back = load_dataset(dir / "r.jsonl");
  EXPECT_EQ(back, ds);
  EXPECT_EQ((*back[1].oracle_msg_tokens)[1], "<s>");
}

TEST(SaveDataset, UnwritablePathFails) {
  TempDir dir;
  write_text(dir.path() / "plain", "not a directory");
  std::vector<BugFixExample> ds{make_example("a")};
  EXPECT_THROW(save_dataset(ds, dir.path() / "plain" / "y.jsonl"), IoError);
}

TEST(Discussions, InvariantsEnforcedOnLoad) {
  TempDir dir;
  auto rec = [](const std::string& title, const std::string& t0, const std::string& t1,
                int idx1) {
    return R"({"id":"o/p#1","project":"o/p","issue_number":1,"title":")" + title +
           R"(","created_at":"2016-01-01T00:00:00Z","utterances":[{"index":0,"author":"a","created_at":")" +
           t0 + R"(","body_raw":"x"},{"index":)" + std::to_string(idx1) +
           R"(,"author":"b","created_at":")" + t1 + R"(","body_raw":"y <s> z"}]})" + "\n";
  };
  write_text(dir / "ok.discussions.jsonl", rec("T", "2016-01-01T00:00:00Z", "2016-01-02T00:00:00Z", 1));
  auto ds = load_discussions(dir.path());
  ASSERT_EQ(ds.size(), 1u);
  EXPECT_EQ(ds.at("o/p#1").last_activity_at().str(), "2016-01-02T00:00:00Z");
  EXPECT_EQ(ds.at("o/p#1").utterances[1].body_raw, "y <s> z");

  write_text(dir / "a.jsonl", rec("  ", "2016-01-01T00:00:00Z", "2016-01-02T00:00:00Z", 1));
  EXPECT_THROW(load_discussion_file(dir / "a.jsonl"), InvariantError);
  write_text(dir / "b.jsonl", rec("T", "2016-01-03T00:00:00Z", "2016-01-02T00:00:00Z", 1));
  EXPECT_THROW(load_discussion_file(dir / "b.jsonl"), InvariantError);
  write_text(dir / "c.jsonl", rec("T", "2016-01-01T00:00:00Z", "2016-01-02T00:00:00Z", 2));
  EXPECT_THROW(load_discussion_file(dir / "c.jsonl"), InvariantError);
}

TEST(Discussions, LastActivityFallsBackToCreation) {
  Discussion d;
  d.created_at = Timestamp::parse("2016-01-01T00:00:00Z");
  EXPECT_EQ(d.last_activity_at(), d.created_at);
}

TEST(AttentionTraceFile, ValidTwoStepTrace) {
  TempDir dir;
  write_text(dir / "t.json", R"({"example_id":"e","num_input_tokens":4,
    "segments":[{"segment_id":0,"kind":"title","discussion_id":"d","token_start":0,"token_end":2}],
    "weights":[[0.7,0.1,0.1,0.1],[0.25,0.25,0.25,0.25]]})");
  auto t = load_attention_trace(dir / "t.json");
  EXPECT_EQ(t.steps(), 2u);
  EXPECT_DOUBLE_EQ(t.row(1)[3], 0.25);
}

TEST(AttentionTraceFile, RowSumOutsideToleranceIsNormalizationError) {
  TempDir dir;
  write_text(dir / "t.json", R"({"example_id":"e","num_input_tokens":4,"segments":[],
    "weights":[[0.2,0.1,0.1,0.1]]})");
  EXPECT_THROW(load_attention_trace(dir / "t.json"), NormalizationError);
  // within 1e-3 is accepted
  write_text(dir / "u.json", R"({"example_id":"e","num_input_tokens":2,"segments":[],
    "weights":[[0.5,0.5009]]})");
  EXPECT_NO_THROW(load_attention_trace(dir / "u.json"));
}

TEST(AttentionTraceFile, SegmentBeyondInputIsBoundsError) {
  TempDir dir;
  write_text(dir / "t.json", R"({"example_id":"e","num_input_tokens":4,
    "segments":[{"segment_id":0,"kind":"title","discussion_id":"d","token_start":2,"token_end":5}],
    "weights":[[0.25,0.25,0.25,0.25]]})");
  EXPECT_THROW(load_attention_trace(dir / "t.json"), BoundsError);
}

TEST(AttentionTraceFile, OverlappingSegmentsAndRaggedRowsRejected) {
  TempDir dir;
  write_text(dir / "o.json", R"({"example_id":"e","num_input_tokens":4,
    "segments":[{"segment_id":0,"kind":"title","discussion_id":"d","token_start":0,"token_end":3},
                {"segment_id":1,"kind":"utterance","utterance_index":0,"discussion_id":"d","token_start":2,"token_end":4}],
    "weights":[[0.25,0.25,0.25,0.25]]})");
  EXPECT_THROW(load_attention_trace(dir / "o.json"), InvariantError);
  write_text(dir / "r.json", R"({"example_id":"e","num_input_tokens":2,"segments":[],
    "weights":[[0.5,0.5],[1.0]]})");
  EXPECT_THROW(load_attention_trace(dir / "r.json"), FormatError);
}

TEST(AttentionTraceFile, RoundTripUsesDecimalNotation) {
  TempDir dir;
  AttentionTrace t;
  t.example_id = "e";
  t.num_input_tokens = 3;
  t.segments = {{0, SegmentKind::utterance, "d", 2, 1, 3}};
  t.weights = {1e-7, 0.5, 0.5 - 1e-7};
  t.metadata = Json{{"head_aggregation", "mean"}};
  save_attention_trace(t, dir / "t.json");
  auto text = read_file(dir / "t.json");
  EXPECT_EQ(text.find("e-"), std::string::npos) << text;
  EXPECT_EQ(load_attention_trace(dir / "t.json"), t);
}

TEST(Candidates, RoundTripAndSchema) {
  TempDir dir;
  std::vector<Candidate> cs{{"e1", {"a", "<s>", "ß"}, "title"}, {"e2", {}, "title"}};
  save_candidates(cs, dir / "c.jsonl");
  EXPECT_EQ(load_candidates(dir / "c.jsonl"), cs);
  write_text(dir / "bad.jsonl", R"({"example_id":"e1","candidate_tokens":"a b","source":"x"})" "\n");
  EXPECT_THROW(load_candidates(dir / "bad.jsonl"), FormatError);
}

TEST(ContextKinds, NamesRoundTripAndAliases) {
  for (auto k : kAllContextKinds) EXPECT_EQ(parse_context_kind(to_string(k)), k);
  EXPECT_EQ(parse_context_kind("attended"), ContextKind::attended_segments);
  EXPECT_FALSE(parse_context_kind("nonsense"));
}
