#pragma once

#include <algorithm>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "disc_forge/corpus.hpp"
#include "disc_forge/error.hpp"
#include "disc_forge/ingestion.hpp"

namespace disc_forge {

// Keeps utterances strictly earlier than the commit. The title is always
// kept. Utterances are time-sorted, so the survivors are a prefix and keep
// consecutive indices.
inline Discussion temporal_filter(Discussion discussion, Timestamp commit_timestamp) {
  auto& u = discussion.utterances;
  u.erase(std::remove_if(u.begin(), u.end(),
                         [&](const Utterance& x) { return !(x.created_at < commit_timestamp); }),
          u.end());
  return discussion;
}

// Most recent activity first; ties by higher issue number, then input order.
inline std::vector<Discussion> order_discussions(std::vector<Discussion> discussions) {
  std::stable_sort(discussions.begin(), discussions.end(),
                   [](const Discussion& a, const Discussion& b) {
                     auto ta = a.last_activity_at(), tb = b.last_activity_at();
                     if (ta != tb) return ta > tb;
                     return a.issue_number > b.issue_number;
                   });
  return discussions;
}

// The example's discussions as the model sees them: filtered to the commit
// time and ordered. Unknown ids make the example unusable.
inline std::vector<Discussion> prepare_discussions(const BugFixExample& example,
                                                   const DiscussionMap& discussions) {
  std::vector<Discussion> out;
  out.reserve(example.discussion_ids.size());
  for (const auto& id : example.discussion_ids) {
    auto it = discussions.find(id);
    if (it == discussions.end())
      throw SkipError("example '" + example.id + "': unknown discussion id '" + id + "'");
    out.push_back(temporal_filter(it->second, example.commit_timestamp));
  }
  return order_discussions(std::move(out));
}

struct AttachResult {
  std::vector<BugFixExample> linked;
  std::vector<BugFixExample> dropped;
  std::vector<std::string> warnings;
};

// Sets each example's discussion_ids to the discussions linked to its commit
// (same project, equal shas or one a prefix of the other, at least 7 hex
// digits), ordered as prepare_discussions would order them. Examples with no
// linked discussion go to `dropped`.
inline AttachResult attach_discussions(std::span<const BugFixExample> examples,
                                       std::span<const CommitLinkEvent> links,
                                       const DiscussionMap& discussions) {
  AttachResult result;

  std::map<std::pair<std::string, std::int64_t>, std::string> by_issue;
  for (const auto& [id, d] : discussions) by_issue[{lowercase(d.project), d.issue_number}] = id;

  // links bucketed by the first 7 sha digits
  std::unordered_map<std::string, std::vector<std::pair<const CommitLinkEvent*, std::string>>> by_prefix;
  for (const auto& link : links) {
    auto it = by_issue.find({lowercase(link.project), link.issue_number});
    if (it == by_issue.end()) {
      result.warnings.push_back("link to unknown discussion '" + link.project + "#" +
                                std::to_string(link.issue_number) + "' ignored");
      continue;
    }
    if (link.commit_sha.size() < 7) continue;
    by_prefix[lowercase(link.commit_sha.substr(0, 7))].emplace_back(&link, it->second);
  }

  for (const auto& example : examples) {
    BugFixExample e = example;
    e.discussion_ids.clear();
    if (example.commit_sha.size() >= 7) {
      auto bucket = by_prefix.find(lowercase(example.commit_sha.substr(0, 7)));
      if (bucket != by_prefix.end()) {
        for (const auto& [link, disc_id] : bucket->second) {
          if (!same_project(link->project, example.project)) continue;
          if (!sha_matches(link->commit_sha, example.commit_sha)) continue;
          if (std::find(e.discussion_ids.begin(), e.discussion_ids.end(), disc_id) ==
              e.discussion_ids.end())
            e.discussion_ids.push_back(disc_id);
        }
      }
    }
    if (e.discussion_ids.empty()) {
      result.dropped.push_back(std::move(e));
      continue;
    }
    std::vector<std::string> ordered;
    for (const auto& d : prepare_discussions(e, discussions)) ordered.push_back(d.id);
    e.discussion_ids = std::move(ordered);
    result.linked.push_back(std::move(e));
  }
  return result;
}

}  // namespace disc_forge
