#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "disc_forge/error.hpp"
#include "disc_forge/jsonl.hpp"
#include "disc_forge/timestamp.hpp"

namespace disc_forge {

inline constexpr std::string_view kSeparator = "<s>";
inline constexpr double kAttentionTolerance = 1e-3;

struct Utterance {
  std::size_t index = 0;
  std::string author;
  Timestamp created_at;
  std::string body_raw;
  std::optional<TokenList> body_tokens;

  friend bool operator==(const Utterance&, const Utterance&) = default;
};

// A bug report: title plus time-ordered utterances. The report body, when
// present, is utterance 0.
struct Discussion {
  std::string id;
  std::string project;
  std::int64_t issue_number = 0;
  std::string title;
  Timestamp created_at;
  std::vector<Utterance> utterances;

  // Latest utterance timestamp, or created_at with no utterances.
  Timestamp last_activity_at() const {
    Timestamp latest = created_at;
    if (!utterances.empty()) {
      latest = utterances.front().created_at;
      for (const auto& u : utterances) latest = std::max(latest, u.created_at);
    }
    return latest;
  }

  friend bool operator==(const Discussion&, const Discussion&) = default;
};

enum class Split { train, valid, test };

inline std::string_view to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::valid: return "valid";
    case Split::test: return "test";
  }
  return "train";
}

inline std::optional<Split> parse_split(std::string_view s) {
  if (s == "train") return Split::train;
  if (s == "valid") return Split::valid;
  if (s == "test") return Split::test;
  return std::nullopt;
}

struct BugFixExample {
  std::string id;
  std::string project;
  std::string commit_sha;
  Timestamp commit_timestamp;
  Split split = Split::train;
  TokenList buggy_tokens;
  TokenList fixed_tokens;
  TokenList method_tokens;
  std::optional<TokenList> oracle_msg_tokens;
  std::vector<std::string> discussion_ids;

  friend bool operator==(const BugFixExample&, const BugFixExample&) = default;
};

enum class SegmentKind { title, utterance };

struct Segment {
  std::size_t segment_id = 0;
  SegmentKind kind = SegmentKind::title;
  std::string discussion_id;
  std::optional<std::size_t> utterance_index;
  std::size_t token_start = 0;  // inclusive
  std::size_t token_end = 0;    // exclusive

  bool contains(std::size_t token) const { return token >= token_start && token < token_end; }

  friend bool operator==(const Segment&, const Segment&) = default;
};

// Decoder attention over the input tokens of the description generator.
// Weights are stored row-major: one row per decoding step.
struct AttentionTrace {
  std::string example_id;
  std::size_t num_input_tokens = 0;
  std::vector<Segment> segments;
  std::vector<double> weights;
  // Producer-supplied details such as head aggregation; carried verbatim.
  Json metadata;

  std::size_t steps() const { return num_input_tokens == 0 ? 0 : weights.size() / num_input_tokens; }

  std::span<const double> row(std::size_t step) const {
    return {weights.data() + step * num_input_tokens, num_input_tokens};
  }

  friend bool operator==(const AttentionTrace&, const AttentionTrace&) = default;
};

enum class ContextKind {
  without_nl,
  oracle_msg,
  whole_discussion,
  title,
  last_utterance,
  soln_desc,
  soln_desc_plus_title,
  attended_segments,
};

inline constexpr ContextKind kAllContextKinds[] = {
    ContextKind::without_nl,    ContextKind::oracle_msg,     ContextKind::whole_discussion,
    ContextKind::title,         ContextKind::last_utterance, ContextKind::soln_desc,
    ContextKind::soln_desc_plus_title, ContextKind::attended_segments,
};

inline std::string_view to_string(ContextKind k) {
  switch (k) {
    case ContextKind::without_nl: return "without_nl";
    case ContextKind::oracle_msg: return "oracle_msg";
    case ContextKind::whole_discussion: return "whole_discussion";
    case ContextKind::title: return "title";
    case ContextKind::last_utterance: return "last_utterance";
    case ContextKind::soln_desc: return "soln_desc";
    case ContextKind::soln_desc_plus_title: return "soln_desc_plus_title";
    case ContextKind::attended_segments: return "attended_segments";
  }
  return "without_nl";
}

// Canonical names plus a few short aliases ("attended", "desc+title").
inline std::optional<ContextKind> parse_context_kind(std::string_view s) {
  for (ContextKind k : kAllContextKinds)
    if (s == to_string(k)) return k;
  if (s == "attended" || s == "attended_seg") return ContextKind::attended_segments;
  if (s == "whole" || s == "discussion") return ContextKind::whole_discussion;
  if (s == "last") return ContextKind::last_utterance;
  if (s == "oracle") return ContextKind::oracle_msg;
  if (s == "desc") return ContextKind::soln_desc;
  if (s == "desc+title" || s == "soln_desc+title") return ContextKind::soln_desc_plus_title;
  return std::nullopt;
}

struct ContextSpec {
  ContextKind kind = ContextKind::without_nl;
  std::size_t token_limit = 1024;
};

// One candidate fix produced by some model/representation.
struct Candidate {
  std::string example_id;
  TokenList candidate_tokens;
  std::string source;

  friend bool operator==(const Candidate&, const Candidate&) = default;
};

// Generated solution description for one (example, discussion) pair.
struct SolutionDescription {
  std::string example_id;
  std::string discussion_id;
  TokenList description_tokens;

  friend bool operator==(const SolutionDescription&, const SolutionDescription&) = default;
};

// ---------------------------------------------------------------------------
// Validation

inline bool is_hex(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f') || (c >= 'A' && c <= 'F');
  });
}

inline void validate(const Discussion& d) {
  auto blank = d.title.find_first_not_of(" \t\r\n\f\v") == std::string::npos;
  if (blank) throw InvariantError("discussion '" + d.id + "': title is empty");
  if (d.issue_number <= 0)
    throw InvariantError("discussion '" + d.id + "': issue_number must be positive");
  for (std::size_t i = 0; i < d.utterances.size(); ++i) {
    if (d.utterances[i].index != i)
      throw InvariantError("discussion '" + d.id + "': utterance indices are not consecutive from 0");
    if (i > 0 && d.utterances[i].created_at < d.utterances[i - 1].created_at)
      throw InvariantError("discussion '" + d.id + "': utterance timestamps decrease at index " +
                           std::to_string(i));
  }
}

inline void validate(const BugFixExample& e) {
  auto fail = [&](const std::string& why) {
    throw InvariantError("example '" + e.id + "': " + why);
  };
  if (e.buggy_tokens.empty()) fail("buggy_tokens is empty");
  if (e.fixed_tokens.empty()) fail("fixed_tokens is empty");
  if (e.method_tokens.empty()) fail("method_tokens is empty");
  if (e.buggy_tokens == e.fixed_tokens) fail("buggy_tokens equals fixed_tokens");
  if (!is_hex(e.commit_sha)) fail("commit_sha is not hexadecimal");
  std::set<std::string_view> seen;
  for (const auto& id : e.discussion_ids)
    if (!seen.insert(id).second) fail("duplicate discussion id '" + id + "'");
}

inline void validate(const AttentionTrace& t, double tolerance = kAttentionTolerance) {
  const std::string who = "trace '" + t.example_id + "': ";
  if (t.num_input_tokens == 0) throw InvariantError(who + "num_input_tokens must be positive");
  if (t.weights.size() % t.num_input_tokens != 0)
    throw InvariantError(who + "weight rows must have num_input_tokens columns");
  for (std::size_t step = 0; step < t.steps(); ++step) {
    double sum = 0.0;
    for (double w : t.row(step)) {
      if (!std::isfinite(w) || w < 0.0)
        throw InvariantError(who + "negative or non-finite weight in row " + std::to_string(step));
      sum += w;
    }
    if (std::fabs(sum - 1.0) > tolerance)
      throw NormalizationError(who + "row " + std::to_string(step) + " sums to " +
                               detail::decimal(sum));
  }
  for (std::size_t i = 0; i < t.segments.size(); ++i) {
    const Segment& s = t.segments[i];
    if (s.token_start >= s.token_end)
      throw InvariantError(who + "segment " + std::to_string(s.segment_id) + " is empty");
    if (s.token_end > t.num_input_tokens)
      throw BoundsError(who + "segment " + std::to_string(s.segment_id) + " ends at " +
                        std::to_string(s.token_end) + " beyond " +
                        std::to_string(t.num_input_tokens) + " input tokens");
    if ((s.kind == SegmentKind::utterance) != s.utterance_index.has_value())
      throw InvariantError(who + "segment " + std::to_string(s.segment_id) +
                           ": utterance_index must be present iff kind is utterance");
    if (i > 0 && s.token_start < t.segments[i - 1].token_end)
      throw InvariantError(who + "segments overlap or are out of order");
  }
}

// ---------------------------------------------------------------------------
// JSON conversion

inline Json to_json(const Utterance& u) {
  Json j;
  j["index"] = u.index;
  j["author"] = u.author;
  j["created_at"] = u.created_at.str();
  j["body_raw"] = u.body_raw;
  if (u.body_tokens) j["body_tokens"] = *u.body_tokens;
  return j;
}

inline Json to_json(const Discussion& d) {
  Json j;
  j["id"] = d.id;
  j["project"] = d.project;
  j["issue_number"] = d.issue_number;
  j["title"] = d.title;
  j["created_at"] = d.created_at.str();
  j["utterances"] = Json::array();
  for (const auto& u : d.utterances) j["utterances"].push_back(to_json(u));
  j["last_activity_at"] = d.last_activity_at().str();
  return j;
}

inline Json to_json(const BugFixExample& e) {
  Json j;
  j["id"] = e.id;
  j["project"] = e.project;
  j["commit_sha"] = e.commit_sha;
  j["commit_timestamp"] = e.commit_timestamp.str();
  j["split"] = to_string(e.split);
  j["buggy_tokens"] = e.buggy_tokens;
  j["fixed_tokens"] = e.fixed_tokens;
  j["method_tokens"] = e.method_tokens;
  if (e.oracle_msg_tokens) j["oracle_msg_tokens"] = *e.oracle_msg_tokens;
  j["discussion_ids"] = e.discussion_ids;
  return j;
}

inline Json to_json(const Segment& s) {
  Json j;
  j["segment_id"] = s.segment_id;
  j["kind"] = s.kind == SegmentKind::title ? "title" : "utterance";
  j["discussion_id"] = s.discussion_id;
  if (s.utterance_index) j["utterance_index"] = *s.utterance_index;
  j["token_start"] = s.token_start;
  j["token_end"] = s.token_end;
  return j;
}

inline Json to_json(const Candidate& c) {
  Json j;
  j["example_id"] = c.example_id;
  j["candidate_tokens"] = c.candidate_tokens;
  j["source"] = c.source;
  return j;
}

inline Json to_json(const SolutionDescription& d) {
  Json j;
  j["example_id"] = d.example_id;
  j["discussion_id"] = d.discussion_id;
  j["description_tokens"] = d.description_tokens;
  return j;
}

namespace detail {

inline std::size_t get_size(const Json& obj, const char* field, std::size_t line) {
  auto v = get_int(obj, field, line);
  if (v < 0) throw FormatError(line, field, "must be non-negative");
  return static_cast<std::size_t>(v);
}

}  // namespace detail

inline Utterance utterance_from_json(const Json& j, std::size_t line) {
  using namespace detail;
  Utterance u;
  u.index = get_size(j, "index", line);
  u.author = get_string(j, "author", line);
  u.created_at = get_timestamp(j, "created_at", line);
  u.body_raw = get_string(j, "body_raw", line);
  u.body_tokens = get_optional_tokens(j, "body_tokens", line);
  return u;
}

inline Discussion discussion_from_json(const Json& j, std::size_t line) {
  using namespace detail;
  Discussion d;
  d.id = get_string(j, "id", line);
  d.project = get_string(j, "project", line);
  d.issue_number = get_int(j, "issue_number", line);
  d.title = get_string(j, "title", line);
  d.created_at = get_timestamp(j, "created_at", line);
  const Json& utts = require_field(j, "utterances", line);
  if (!utts.is_array()) throw FormatError(line, "utterances", "expected an array");
  for (const auto& u : utts) d.utterances.push_back(utterance_from_json(u, line));
  if (auto it = j.find("last_activity_at"); it != j.end() && !it->is_null()) {
    Timestamp stored = get_timestamp(j, "last_activity_at", line);
    if (stored != d.last_activity_at())
      throw FormatError(line, "last_activity_at", "does not match the latest utterance");
  }
  try {
    validate(d);
  } catch (const InvariantError& e) {
    throw InvariantError("line " + std::to_string(line) + ": " + e.what());
  }
  return d;
}

inline BugFixExample example_from_json(const Json& j, std::size_t line) {
  using namespace detail;
  BugFixExample e;
  e.id = get_string(j, "id", line);
  e.project = get_string(j, "project", line);
  e.commit_sha = get_string(j, "commit_sha", line);
  e.commit_timestamp = get_timestamp(j, "commit_timestamp", line);
  std::string split = get_string(j, "split", line);
  auto s = parse_split(split);
  if (!s) throw FormatError(line, "split", "must be train, valid or test");
  e.split = *s;
  e.buggy_tokens = get_tokens(j, "buggy_tokens", line);
  e.fixed_tokens = get_tokens(j, "fixed_tokens", line);
  e.method_tokens = get_tokens(j, "method_tokens", line);
  e.oracle_msg_tokens = get_optional_tokens(j, "oracle_msg_tokens", line);
  if (j.contains("discussion_ids")) e.discussion_ids = get_tokens(j, "discussion_ids", line);
  try {
    validate(e);
  } catch (const InvariantError& err) {
    throw InvariantError("line " + std::to_string(line) + ": " + err.what());
  }
  return e;
}

inline Segment segment_from_json(const Json& j, std::size_t line) {
  using namespace detail;
  Segment s;
  s.segment_id = get_size(j, "segment_id", line);
  std::string kind = get_string(j, "kind", line);
  if (kind == "title")
    s.kind = SegmentKind::title;
  else if (kind == "utterance")
    s.kind = SegmentKind::utterance;
  else
    throw FormatError(line, "kind", "must be title or utterance");
  s.discussion_id = get_string(j, "discussion_id", line);
  if (auto it = j.find("utterance_index"); it != j.end() && !it->is_null())
    s.utterance_index = get_size(j, "utterance_index", line);
  s.token_start = get_size(j, "token_start", line);
  s.token_end = get_size(j, "token_end", line);
  return s;
}

inline Candidate candidate_from_json(const Json& j, std::size_t line) {
  using namespace detail;
  return {get_string(j, "example_id", line), get_tokens(j, "candidate_tokens", line),
          get_string(j, "source", line)};
}

inline SolutionDescription description_from_json(const Json& j, std::size_t line) {
  using namespace detail;
  return {get_string(j, "example_id", line), get_string(j, "discussion_id", line),
          get_tokens(j, "description_tokens", line)};
}

// ---------------------------------------------------------------------------
// Files

inline std::vector<BugFixExample> load_dataset(const std::filesystem::path& path) {
  std::vector<BugFixExample> out;
  std::unordered_set<std::string> ids;
  for_each_jsonl(path, [&](const Json& j, std::size_t line) {
    out.push_back(example_from_json(j, line));
    if (!ids.insert(out.back().id).second)
      throw FormatError(line, "id", "duplicate example id '" + out.back().id + "'");
  });
  return out;
}

inline void save_dataset(std::span<const BugFixExample> examples,
                         const std::filesystem::path& path) {
  for (const auto& e : examples) validate(e);
  write_jsonl(path, examples, [](const BugFixExample& e) { return to_json(e); });
}

inline std::vector<Discussion> load_discussion_file(const std::filesystem::path& path) {
  std::vector<Discussion> out;
  for_each_jsonl(path, [&](const Json& j, std::size_t line) {
    out.push_back(discussion_from_json(j, line));
  });
  return out;
}

inline void save_discussions(std::span<const Discussion> discussions,
                             const std::filesystem::path& path) {
  for (const auto& d : discussions) validate(d);
  write_jsonl(path, discussions, [](const Discussion& d) { return to_json(d); });
}

using DiscussionMap = std::map<std::string, Discussion>;

inline constexpr std::string_view kDiscussionSuffix = ".discussions.jsonl";

// Reads every "*.discussions.jsonl" file in dir (or a single file when path
// is a regular file).
inline DiscussionMap load_discussions(const std::filesystem::path& path) {
  std::vector<std::filesystem::path> files;
  if (std::filesystem::is_regular_file(path))
    files.push_back(path);
  else
    files = list_files(path, kDiscussionSuffix);
  DiscussionMap out;
  for (const auto& f : files) {
    for (auto& d : load_discussion_file(f)) {
      std::string id = d.id;
      if (!out.emplace(id, std::move(d)).second)
        throw InvariantError("duplicate discussion id '" + id + "' in '" + f.string() + "'");
    }
  }
  return out;
}

inline std::vector<Candidate> load_candidates(const std::filesystem::path& path) {
  std::vector<Candidate> out;
  for_each_jsonl(path, [&](const Json& j, std::size_t line) {
    out.push_back(candidate_from_json(j, line));
  });
  return out;
}

inline void save_candidates(std::span<const Candidate> candidates,
                            const std::filesystem::path& path) {
  write_jsonl(path, candidates, [](const Candidate& c) { return to_json(c); });
}

inline std::vector<SolutionDescription> load_descriptions(const std::filesystem::path& path) {
  std::vector<SolutionDescription> out;
  std::set<std::pair<std::string, std::string>> seen;
  for_each_jsonl(path, [&](const Json& j, std::size_t line) {
    out.push_back(description_from_json(j, line));
    if (!seen.emplace(out.back().example_id, out.back().discussion_id).second)
      throw FormatError(line, "discussion_id", "duplicate description for this example");
  });
  return out;
}

inline void save_descriptions(std::span<const SolutionDescription> descriptions,
                              const std::filesystem::path& path) {
  write_jsonl(path, descriptions, [](const SolutionDescription& d) { return to_json(d); });
}

inline AttentionTrace trace_from_json(const Json& j) {
  using namespace detail;
  AttentionTrace t;
  t.example_id = get_string(j, "example_id", 0);
  t.num_input_tokens = get_size(j, "num_input_tokens", 0);
  const Json& segs = require_field(j, "segments", 0);
  if (!segs.is_array()) throw FormatError(0, "segments", "expected an array");
  for (const auto& s : segs) t.segments.push_back(segment_from_json(s, 0));
  const Json& rows = require_field(j, "weights", 0);
  if (!rows.is_array()) throw FormatError(0, "weights", "expected an array of rows");
  t.weights.reserve(rows.size() * t.num_input_tokens);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const Json& row = rows[r];
    if (!row.is_array() || row.size() != t.num_input_tokens)
      throw FormatError(0, "weights", "row " + std::to_string(r) + " must have " +
                                          std::to_string(t.num_input_tokens) + " entries");
    for (const auto& w : row) {
      if (!w.is_number()) throw FormatError(0, "weights", "expected numbers");
      t.weights.push_back(w.get<double>());
    }
  }
  if (auto it = j.find("metadata"); it != j.end()) t.metadata = *it;
  validate(t);
  return t;
}

inline AttentionTrace load_attention_trace(const std::filesystem::path& path) {
  Json j;
  try {
    j = Json::parse(read_file(path));
  } catch (const Json::parse_error& e) {
    throw FormatError(0, "", "'" + path.string() + "': invalid JSON: " + e.what());
  }
  return trace_from_json(j);
}

// Weights are written in plain decimal notation.
inline std::string dump_trace(const AttentionTrace& t) {
  Json head;
  head["example_id"] = t.example_id;
  head["num_input_tokens"] = t.num_input_tokens;
  head["segments"] = Json::array();
  for (const auto& s : t.segments) head["segments"].push_back(to_json(s));
  if (!t.metadata.is_null()) head["metadata"] = t.metadata;
  std::string text = head.dump();
  text.pop_back();  // closing brace
  text += ",\"weights\":[";
  for (std::size_t step = 0; step < t.steps(); ++step) {
    if (step) text += ',';
    text += '[';
    bool first = true;
    for (double w : t.row(step)) {
      if (!first) text += ',';
      first = false;
      text += detail::decimal(w);
    }
    text += ']';
  }
  text += "]}\n";
  return text;
}

inline void save_attention_trace(const AttentionTrace& t, const std::filesystem::path& path) {
  validate(t);
  write_file_atomic(path, dump_trace(t));
}

using TraceMap = std::map<std::string, AttentionTrace>;

// Every "*.json" in dir is one trace, keyed by its example_id.
inline TraceMap load_traces(const std::filesystem::path& dir) {
  TraceMap out;
  for (const auto& f : list_files(dir, ".json")) {
    AttentionTrace t;
    try {
      t = load_attention_trace(f);
    } catch (const InvariantError& e) {
      throw InvariantError("'" + f.string() + "': " + e.what());
    }
    std::string id = t.example_id;
    if (!out.emplace(id, std::move(t)).second)
      throw InvariantError("duplicate trace for example '" + id + "'");
  }
  return out;
}

}  // namespace disc_forge
