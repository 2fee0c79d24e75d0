#pragma once

// Online issue mining against the GitHub REST API. Fetched issues are
// spooled to disk as an issue archive, so an interrupted run resumes from the
// persisted cursor and the final read goes through the archive reader.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <functional>
#include <string>
#include <thread>

#include "httplib.h"

#include "disc_forge/error.hpp"
#include "disc_forge/ingestion.hpp"
#include "disc_forge/jsonl.hpp"

namespace disc_forge {

struct OnlineOptions {
  std::string api_base = "https://api.github.com";
  std::string token;
  std::filesystem::path spool_dir;
  std::filesystem::path cursor_path;
  int max_retries = 5;
  std::chrono::milliseconds base_backoff{1000};
  std::chrono::milliseconds max_wait{std::chrono::minutes(60)};
  // 5,000 requests/hour is the authenticated REST budget.
  double requests_per_second = 1.35;
  double burst = 10;
  int per_page = 100;
  TokenBucket::Sleeper sleep;
};

// Per-project paging state, written atomically after every completed page.
class ResumeCursor {
 public:
  explicit ResumeCursor(std::filesystem::path path) : path_(std::move(path)) {
    if (!path_.empty() && std::filesystem::exists(path_)) {
      try {
        state_ = Json::parse(read_file(path_));
      } catch (const Json::parse_error&) {
        throw ConfigError("corrupt resume cursor '" + path_.string() + "'");
      }
    }
    if (!state_.is_object()) state_ = Json::object();
  }

  struct Entry {
    int next_page = 1;
    bool complete = false;
    std::size_t pull_requests = 0;
  };

  Entry get(const std::string& project) const {
    Entry e;
    if (auto it = state_.find(project); it != state_.end()) {
      e.next_page = it->value("next_page", 1);
      e.complete = it->value("complete", false);
      e.pull_requests = it->value("pull_requests", std::size_t{0});
    }
    return e;
  }

  void set(const std::string& project, const Entry& e) {
    state_[project] = Json{{"next_page", e.next_page},
                           {"complete", e.complete},
                           {"pull_requests", e.pull_requests}};
    if (!path_.empty()) write_file_atomic(path_, state_.dump(2) + "\n");
  }

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  Json state_;
};

class GitHubClient {
 public:
  explicit GitHubClient(OnlineOptions opts)
      : opts_(std::move(opts)),
        sleep_(opts_.sleep ? opts_.sleep : TokenBucket::Sleeper([](std::chrono::milliseconds d) {
          std::this_thread::sleep_for(d);
        })),
        bucket_(opts_.requests_per_second, opts_.burst, sleep_),
        http_(opts_.api_base) {
    if (opts_.token.empty()) throw ConfigError("online mining requires an access token");
    http_.set_connection_timeout(10, 0);
    http_.set_read_timeout(60, 0);
    http_.set_follow_location(true);
  }

  // GET with pacing, rate-limit waits and exponential backoff on transient
  // failures.
  Json get(const std::string& path) {
    httplib::Headers headers{
        {"Accept", "application/vnd.github+json"},
        {"Authorization", "Bearer " + opts_.token},
        {"X-GitHub-Api-Version", "2022-11-28"},
        {"User-Agent", "disc-forge"},
    };
    std::string last_error;
    for (int attempt = 0;; ++attempt) {
      bucket_.acquire();
      auto res = http_.Get(path, headers);
      std::chrono::milliseconds wait{0};
      if (!res) {
        last_error = "request failed: " + httplib::to_string(res.error());
      } else if (res->status == 200) {
        try {
          return Json::parse(res->body);
        } catch (const Json::parse_error&) {
          last_error = "unparseable response body";
        }
      } else if (res->status == 401) {
        throw ConfigError("authentication failed (HTTP 401) for " + path);
      } else if (res->status == 403 || res->status == 429) {
        auto limited = res->status == 429 || res->get_header_value("x-ratelimit-remaining") == "0" ||
                       res->has_header("retry-after");
        if (!limited) throw ConfigError("access forbidden (HTTP 403) for " + path);
        last_error = "rate limited (HTTP " + std::to_string(res->status) + ")";
        wait = rate_limit_wait(*res);
      } else if (res->status == 404) {
        throw Error("not found (HTTP 404): " + path);
      } else if (res->status >= 500) {
        last_error = "server error (HTTP " + std::to_string(res->status) + ")";
      } else {
        throw Error("unexpected HTTP " + std::to_string(res->status) + " for " + path);
      }
      if (attempt >= opts_.max_retries)
        throw TransientError(last_error + " after " + std::to_string(attempt) + " retries: " + path);
      if (wait.count() == 0) wait = opts_.base_backoff * (1LL << std::min(attempt, 20));
      sleep_(std::min(wait, opts_.max_wait));
    }
  }

  // Concatenates all pages of an array-valued endpoint.
  Json get_all(const std::string& path) {
    Json all = Json::array();
    const char sep = path.find('?') == std::string::npos ? '?' : '&';
    for (int page = 1;; ++page) {
      Json items = get(path + sep + "per_page=" + std::to_string(opts_.per_page) +
                       "&page=" + std::to_string(page));
      if (!items.is_array()) throw Error("expected an array from " + path);
      for (auto& item : items) all.push_back(std::move(item));
      if (static_cast<int>(items.size()) < opts_.per_page) break;
    }
    return all;
  }

  const OnlineOptions& options() const { return opts_; }

 private:
  std::chrono::milliseconds rate_limit_wait(const httplib::Response& res) const {
    if (res.has_header("retry-after")) {
      try {
        return std::chrono::seconds(std::stoll(res.get_header_value("retry-after")));
      } catch (const std::exception&) {
      }
    }
    if (res.has_header("x-ratelimit-reset")) {
      try {
        auto reset = std::stoll(res.get_header_value("x-ratelimit-reset"));
        auto now = static_cast<long long>(std::time(nullptr));
        return std::chrono::seconds(std::max(1LL, reset - now));
      } catch (const std::exception&) {
      }
    }
    return std::chrono::milliseconds{0};
  }

  OnlineOptions opts_;
  TokenBucket::Sleeper sleep_;
  TokenBucket bucket_;
  httplib::Client http_;
};

// Downloads issues of `project` created in `window` into
// spool_dir/<owner__name>/<number>.json (with comments and timeline embedded)
// and returns them via the archive reader. Pages already recorded in the
// cursor are not requested again.
inline FetchResult fetch_issues_online(const std::string& project, TimeWindow window,
                                       const OnlineOptions& opts) {
  if (opts.spool_dir.empty()) throw ConfigError("online mining needs a spool directory");
  GitHubClient client(opts);
  ResumeCursor cursor(opts.cursor_path);
  auto entry = cursor.get(project);
  const auto dir = opts.spool_dir / project_slug(project);
  std::filesystem::create_directories(dir);
  const std::string base = "/repos/" + project;

  while (!entry.complete) {
    Json items = client.get(base + "/issues?state=all&sort=created&direction=asc&since=" +
                            window.start.str() + "&per_page=" + std::to_string(opts.per_page) +
                            "&page=" + std::to_string(entry.next_page));
    if (!items.is_array()) throw Error("expected an array of issues for " + project);
    bool past_window = false;
    for (auto& item : items) {
      if (is_pull_request(item)) {
        entry.pull_requests++;
        continue;
      }
      auto created = detail::string_field(item, "created_at");
      auto ts = created ? Timestamp::try_parse(*created) : std::nullopt;
      auto num = item.find("number");
      if (ts && *ts >= window.end) past_window = true;
      // malformed records are spooled as-is; the archive reader tallies them
      if (ts && !window.contains(*ts)) continue;
      if (num == item.end() || !num->is_number_integer()) continue;
      std::string n = std::to_string(num->get<std::int64_t>());
      item["comments"] = client.get_all(base + "/issues/" + n + "/comments");
      item["timeline"] = client.get_all(base + "/issues/" + n + "/timeline");
      item["project"] = project;
      write_file_atomic(dir / (n + ".json"), item.dump() + "\n");
    }
    entry.next_page++;
    entry.complete = past_window || static_cast<int>(items.size()) < opts.per_page;
    cursor.set(project, entry);
  }
  auto result = read_issue_archive(dir, project, window);
  result.tally.pull_requests += entry.pull_requests;
  return result;
}

enum class FetchMode { online, archive };

struct FetchOptions {
  FetchMode mode = FetchMode::archive;
  std::filesystem::path archive_root;
  OnlineOptions online;
};

inline FetchResult fetch_issues(const std::string& project, TimeWindow window,
                                const FetchOptions& opts) {
  if (window.end <= window.start) return {};
  if (opts.mode == FetchMode::archive) return read_issue_archive(opts.archive_root, project, window);
  return fetch_issues_online(project, window, opts.online);
}

}  // namespace disc_forge
