#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "disc_forge/corpus.hpp"
#include "disc_forge/error.hpp"
#include "disc_forge/jsonl.hpp"
#include "disc_forge/timestamp.hpp"

namespace disc_forge {

enum class LinkSource { message_reference, timeline_event };

inline std::string_view to_string(LinkSource s) {
  return s == LinkSource::message_reference ? "message_reference" : "timeline_event";
}

struct CommitLinkEvent {
  std::string project;
  std::int64_t issue_number = 0;
  std::string commit_sha;
  Timestamp linked_at;
  LinkSource link_source = LinkSource::timeline_event;

  friend bool operator==(const CommitLinkEvent&, const CommitLinkEvent&) = default;
};

inline bool is_valid_sha(std::string_view sha) {
  return sha.size() >= 7 && sha.size() <= 40 && is_hex(sha);
}

inline Json to_json(const CommitLinkEvent& e) {
  Json j;
  j["project"] = e.project;
  j["issue_number"] = e.issue_number;
  j["commit_sha"] = e.commit_sha;
  j["linked_at"] = e.linked_at.str();
  j["link_source"] = to_string(e.link_source);
  return j;
}

inline CommitLinkEvent link_from_json(const Json& j, std::size_t line) {
  using namespace detail;
  CommitLinkEvent e;
  e.project = get_string(j, "project", line);
  e.issue_number = get_int(j, "issue_number", line);
  e.commit_sha = get_string(j, "commit_sha", line);
  if (!is_valid_sha(e.commit_sha))
    throw FormatError(line, "commit_sha", "must be 7-40 hex characters");
  e.linked_at = get_timestamp(j, "linked_at", line);
  std::string src = get_string(j, "link_source", line);
  if (src == "message_reference")
    e.link_source = LinkSource::message_reference;
  else if (src == "timeline_event")
    e.link_source = LinkSource::timeline_event;
  else
    throw FormatError(line, "link_source", "must be message_reference or timeline_event");
  return e;
}

inline std::vector<CommitLinkEvent> load_links(const std::filesystem::path& path) {
  std::vector<CommitLinkEvent> out;
  for_each_jsonl(path, [&](const Json& j, std::size_t line) { out.push_back(link_from_json(j, line)); });
  return out;
}

inline void save_links(std::span<const CommitLinkEvent> links, const std::filesystem::path& path) {
  write_jsonl(path, links, [](const CommitLinkEvent& e) { return to_json(e); });
}

// Half-open [start, end) creation-time window.
struct TimeWindow {
  Timestamp start;
  Timestamp end;

  bool contains(Timestamp t) const { return start <= t && t < end; }
};

// One issue as the tracker serves it, with its comments and timeline events
// embedded under "comments" and "timeline".
struct RawIssue {
  std::string project;
  Json payload;
};

struct FetchTally {
  std::size_t fetched = 0;
  std::size_t skipped = 0;
  std::size_t pull_requests = 0;
  std::size_t outside_window = 0;
  std::vector<std::string> warnings;

  FetchTally& operator+=(const FetchTally& o) {
    fetched += o.fetched;
    skipped += o.skipped;
    pull_requests += o.pull_requests;
    outside_window += o.outside_window;
    warnings.insert(warnings.end(), o.warnings.begin(), o.warnings.end());
    return *this;
  }
};

struct FetchResult {
  std::vector<RawIssue> issues;
  FetchTally tally;
};

inline std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

// owner/name comparison is case-insensitive on the tracker.
inline bool same_project(std::string_view a, std::string_view b) {
  return lowercase(a) == lowercase(b);
}

// "owner/name" -> "owner__name", usable as a file name.
inline std::string project_slug(std::string_view project) {
  std::string out;
  for (char c : project) {
    if (c == '/')
      out += "__";
    else if (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '.' || c == '_')
      out += c;
    else
      out += '-';
  }
  return out;
}

namespace detail {

inline std::optional<std::string> project_from_url(std::string_view url, std::string_view marker) {
  auto pos = url.find(marker);
  if (pos == std::string_view::npos) return std::nullopt;
  url.remove_prefix(pos + marker.size());
  auto slash = url.find('/');
  if (slash == std::string_view::npos || slash == 0) return std::nullopt;
  auto end = url.find('/', slash + 1);
  std::string_view proj = url.substr(0, end);
  if (proj.size() == slash + 1) return std::nullopt;
  return std::string(proj);
}

inline std::optional<std::string> string_field(const Json& obj, const char* key) {
  if (!obj.is_object()) return std::nullopt;
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) return std::nullopt;
  return it->get<std::string>();
}

}  // namespace detail

// Project named by the payload: explicit "project", else repository_url,
// else html_url.
inline std::optional<std::string> payload_project(const Json& payload) {
  if (auto p = detail::string_field(payload, "project")) return p;
  if (auto u = detail::string_field(payload, "repository_url"))
    if (auto p = detail::project_from_url(*u, "/repos/")) return p;
  if (auto u = detail::string_field(payload, "html_url"))
    if (auto p = detail::project_from_url(*u, "github.com/")) return p;
  return std::nullopt;
}

inline bool is_pull_request(const Json& payload) {
  auto it = payload.find("pull_request");
  return it != payload.end() && !it->is_null();
}

// Reads a directory tree of issue payloads ("*.json", one issue per file).
// Issues belonging to `project` and created inside `window` are returned
// sorted by issue number. Unreadable files and malformed timestamps are
// skipped and tallied; pull requests are excluded.
inline FetchResult read_issue_archive(const std::filesystem::path& root, std::string_view project,
                                      TimeWindow window) {
  if (!std::filesystem::is_directory(root))
    throw ConfigError("archive root is not a directory: '" + root.string() + "'");
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(root))
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  std::sort(files.begin(), files.end());

  FetchResult result;
  std::map<std::int64_t, RawIssue> by_number;
  const std::string slug = project_slug(project);
  for (const auto& file : files) {
    Json payload;
    try {
      payload = Json::parse(read_file(file));
    } catch (const std::exception& e) {
      result.tally.skipped++;
      result.tally.warnings.push_back("'" + file.string() + "': unreadable issue payload");
      continue;
    }
    if (!payload.is_object()) {
      result.tally.skipped++;
      result.tally.warnings.push_back("'" + file.string() + "': payload is not an object");
      continue;
    }
    auto owner = payload_project(payload);
    bool mine = owner ? same_project(*owner, project)
                      : file.parent_path().filename().string() == slug;
    if (!mine) continue;
    if (is_pull_request(payload)) {
      result.tally.pull_requests++;
      continue;
    }
    auto created = detail::string_field(payload, "created_at");
    auto ts = created ? Timestamp::try_parse(*created) : std::nullopt;
    auto num = payload.find("number");
    if (!ts || num == payload.end() || !num->is_number_integer()) {
      result.tally.skipped++;
      result.tally.warnings.push_back("'" + file.string() + "': " +
                                      (ts ? "missing issue number" : "malformed created_at"));
      continue;
    }
    if (!window.contains(*ts)) {
      result.tally.outside_window++;
      continue;
    }
    std::int64_t number = num->get<std::int64_t>();
    if (by_number.count(number)) {
      result.tally.skipped++;
      result.tally.warnings.push_back("'" + file.string() + "': duplicate issue #" +
                                      std::to_string(number));
      continue;
    }
    by_number.emplace(number, RawIssue{std::string(project), std::move(payload)});
  }
  for (auto& [n, issue] : by_number) result.issues.push_back(std::move(issue));
  result.tally.fetched = result.issues.size();
  return result;
}

// Issue body (when non-blank) becomes utterance 0, comments follow in
// creation order. Ties keep payload order.
inline Discussion normalize_issue(const RawIssue& raw) {
  const Json& p = raw.payload;
  auto title = detail::string_field(p, "title");
  if (!title || title->find_first_not_of(" \t\r\n\f\v") == std::string::npos)
    throw FormatError(0, "title", "issue has no title");
  auto num = p.find("number");
  if (num == p.end() || !num->is_number_integer() || num->get<std::int64_t>() <= 0)
    throw FormatError(0, "number", "missing or non-positive issue number");
  auto created = detail::string_field(p, "created_at");
  auto created_ts = created ? Timestamp::try_parse(*created) : std::nullopt;
  if (!created_ts) throw FormatError(0, "created_at", "malformed timestamp");

  auto login = [](const Json& obj) -> std::string {
    auto it = obj.find("user");
    if (it != obj.end() && it->is_object())
      if (auto l = detail::string_field(*it, "login")) return *l;
    return {};
  };

  Discussion d;
  d.project = raw.project;
  d.issue_number = num->get<std::int64_t>();
  d.id = d.project + "#" + std::to_string(d.issue_number);
  d.title = *title;
  d.created_at = *created_ts;

  std::vector<Utterance> utts;
  auto body = detail::string_field(p, "body");
  if (body && body->find_first_not_of(" \t\r\n\f\v") != std::string::npos)
    utts.push_back({0, login(p), *created_ts, *body, std::nullopt});
  if (auto it = p.find("comments"); it != p.end() && it->is_array()) {
    for (const auto& c : *it) {
      auto cts = detail::string_field(c, "created_at");
      auto t = cts ? Timestamp::try_parse(*cts) : std::nullopt;
      if (!t) throw FormatError(0, "comments.created_at", "malformed timestamp");
      utts.push_back({0, login(c), *t, detail::string_field(c, "body").value_or(""), std::nullopt});
    }
  }
  std::stable_sort(utts.begin(), utts.end(),
                   [](const Utterance& a, const Utterance& b) { return a.created_at < b.created_at; });
  for (std::size_t i = 0; i < utts.size(); ++i) utts[i].index = i;
  d.utterances = std::move(utts);
  validate(d);
  return d;
}

struct CommitMessage {
  std::string message;
  std::optional<Timestamp> committed_at;
};

// Issue numbers of `project` referenced by a commit message, in order of
// appearance: "#N", "owner/name#N" and ".../owner/name/issues/N" URLs.
// Qualified references to other projects and HTML entities ("&#39;") are
// ignored.
inline std::vector<std::int64_t> referenced_issues(std::string_view message,
                                                   std::string_view project) {
  auto is_word = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; };
  auto is_qual = [&](char c) { return is_word(c) || c == '.' || c == '-' || c == '/'; };
  auto read_number = [&](std::size_t pos) -> std::optional<std::pair<std::int64_t, std::size_t>> {
    std::size_t end = pos;
    while (end < message.size() && std::isdigit(static_cast<unsigned char>(message[end]))) ++end;
    if (end == pos || end - pos > 12) return std::nullopt;
    if (end < message.size() && is_word(message[end])) return std::nullopt;
    return std::pair{std::stoll(std::string(message.substr(pos, end - pos))), end};
  };

  std::vector<std::int64_t> out;
  auto add = [&](std::int64_t n) {
    if (n > 0 && std::find(out.begin(), out.end(), n) == out.end()) out.push_back(n);
  };
  const std::string lower = lowercase(message);
  for (std::size_t i = 0; i < message.size(); ++i) {
    if (message[i] == '#') {
      std::size_t q = i;
      while (q > 0 && is_qual(message[q - 1])) --q;
      std::string_view qualifier = message.substr(q, i - q);
      if (q > 0 && message[q - 1] == '&') continue;
      if (!qualifier.empty()) {
        if (std::count(qualifier.begin(), qualifier.end(), '/') != 1 ||
            !same_project(qualifier, project))
          continue;
      }
      if (auto num = read_number(i + 1)) add(num->first);
    } else if (lower.compare(i, 11, "github.com/") == 0) {
      std::size_t start = i + 11;
      std::string prefix = lowercase(project) + "/issues/";
      if (lower.compare(start, prefix.size(), prefix) == 0) {
        if (auto num = read_number(start + prefix.size())) add(num->first);
      }
    }
  }
  return out;
}

// Maps issue numbers to the commits whose messages reference them. Built once
// per project so each issue lookup is a map probe.
class CommitReferenceIndex {
 public:
  CommitReferenceIndex() = default;

  CommitReferenceIndex(std::string project, const std::map<std::string, CommitMessage>& commits)
      : project_(std::move(project)) {
    for (const auto& [sha, msg] : commits) {
      if (!is_valid_sha(sha)) continue;
      for (std::int64_t n : referenced_issues(msg.message, project_))
        refs_[n].push_back({sha, msg.committed_at});
    }
  }

  struct Ref {
    std::string sha;
    std::optional<Timestamp> committed_at;
  };

  const std::vector<Ref>& for_issue(std::int64_t number) const {
    static const std::vector<Ref> none;
    auto it = refs_.find(number);
    return it == refs_.end() ? none : it->second;
  }

 private:
  std::string project_;
  std::map<std::int64_t, std::vector<Ref>> refs_;
};

inline bool sha_matches(std::string_view a, std::string_view b) {
  std::size_t n = std::min(a.size(), b.size());
  return n >= 7 && lowercase(a.substr(0, n)) == lowercase(b.substr(0, n));
}

// One event per (issue, commit): timeline commit references first, then
// commit messages that mention the issue. Unparseable references are
// dropped.
inline std::vector<CommitLinkEvent> extract_commit_links(const RawIssue& raw,
                                                         const CommitReferenceIndex& index) {
  std::vector<CommitLinkEvent> out;
  const Json& p = raw.payload;
  auto num = p.find("number");
  if (num == p.end() || !num->is_number_integer()) return out;
  const std::int64_t number = num->get<std::int64_t>();
  auto created = detail::string_field(p, "created_at");
  auto issue_ts = created ? Timestamp::try_parse(*created) : std::nullopt;

  auto seen = [&](std::string_view sha) {
    return std::any_of(out.begin(), out.end(),
                       [&](const CommitLinkEvent& e) { return sha_matches(e.commit_sha, sha); });
  };

  if (auto tl = p.find("timeline"); tl != p.end() && tl->is_array()) {
    for (const auto& ev : *tl) {
      auto sha = detail::string_field(ev, "commit_id");
      if (!sha) sha = detail::string_field(ev, "sha");
      if (!sha || !is_valid_sha(*sha) || seen(*sha)) continue;
      auto when = detail::string_field(ev, "created_at");
      auto ts = when ? Timestamp::try_parse(*when) : std::nullopt;
      if (!ts) continue;
      out.push_back({raw.project, number, lowercase(*sha), *ts, LinkSource::timeline_event});
    }
  }
  for (const auto& ref : index.for_issue(number)) {
    if (seen(ref.sha)) continue;
    auto ts = ref.committed_at ? ref.committed_at : issue_ts;
    if (!ts) continue;
    out.push_back({raw.project, number, lowercase(ref.sha), *ts, LinkSource::message_reference});
  }
  return out;
}

inline std::vector<CommitLinkEvent> extract_commit_links(
    const RawIssue& raw, const std::map<std::string, CommitMessage>& commits) {
  return extract_commit_links(raw, CommitReferenceIndex(raw.project, commits));
}

// Commit metadata file: one {project, sha, message, committed_at?} per line.
inline std::map<std::string, std::map<std::string, CommitMessage>> load_commit_messages(
    const std::filesystem::path& path) {
  std::map<std::string, std::map<std::string, CommitMessage>> out;
  for_each_jsonl(path, [&](const Json& j, std::size_t line) {
    using namespace detail;
    std::string project = lowercase(get_string(j, "project", line));
    std::string sha = get_string(j, "sha", line);
    CommitMessage msg{get_string(j, "message", line), std::nullopt};
    if (j.contains("committed_at") && !j["committed_at"].is_null())
      msg.committed_at = get_timestamp(j, "committed_at", line);
    out[project][sha] = std::move(msg);
  });
  return out;
}

// Token-bucket pacing. `rate` tokens accrue per second up to `capacity`.
class TokenBucket {
 public:
  using Clock = std::chrono::steady_clock;
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  TokenBucket(double rate, double capacity, Sleeper sleep = {})
      : rate_(rate), capacity_(capacity), tokens_(capacity), last_(Clock::now()),
        sleep_(sleep ? std::move(sleep) : Sleeper([](std::chrono::milliseconds d) {
          std::this_thread::sleep_for(d);
        })) {}

  // Blocks until one token is available and consumes it. Returns the time
  // spent waiting.
  std::chrono::milliseconds acquire() {
    refill();
    std::chrono::milliseconds waited{0};
    if (tokens_ < 1.0 && rate_ > 0) {
      auto need = std::chrono::milliseconds(
          static_cast<std::int64_t>(std::ceil((1.0 - tokens_) / rate_ * 1000.0)));
      sleep_(need);
      waited = need;
      tokens_ += static_cast<double>(need.count()) / 1000.0 * rate_;
      tokens_ = std::min(tokens_, capacity_);
      last_ = Clock::now();
    }
    tokens_ -= 1.0;
    return waited;
  }

 private:
  void refill() {
    auto now = Clock::now();
    double secs = std::chrono::duration<double>(now - last_).count();
    tokens_ = std::min(capacity_, tokens_ + secs * rate_);
    last_ = now;
  }

  double rate_;
  double capacity_;
  double tokens_;
  Clock::time_point last_;
  Sleeper sleep_;
};

}  // namespace disc_forge
