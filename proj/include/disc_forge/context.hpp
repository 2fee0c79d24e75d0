#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "disc_forge/corpus.hpp"
#include "disc_forge/error.hpp"
#include "disc_forge/linker.hpp"
#include "disc_forge/textproc.hpp"

namespace disc_forge {

// example_id -> [(discussion_id, description tokens)]
using DescriptionIndex = std::map<std::string, std::vector<std::pair<std::string, TokenList>>>;

inline DescriptionIndex index_descriptions(std::span<const SolutionDescription> descriptions) {
  DescriptionIndex out;
  for (const auto& d : descriptions) out[d.example_id].emplace_back(d.discussion_id, d.description_tokens);
  return out;
}

// Every listed discussion must belong to its example.
inline void validate_descriptions(const DescriptionIndex& index,
                                  std::span<const BugFixExample> examples) {
  std::map<std::string_view, const BugFixExample*> by_id;
  for (const auto& e : examples) by_id[e.id] = &e;
  for (const auto& [example_id, entries] : index) {
    auto it = by_id.find(example_id);
    if (it == by_id.end()) continue;  // descriptions for examples outside this dataset
    const auto& ids = it->second->discussion_ids;
    for (const auto& [disc_id, tokens] : entries)
      if (std::find(ids.begin(), ids.end(), disc_id) == ids.end())
        throw InvariantError("description for example '" + example_id + "' names discussion '" +
                             disc_id + "' that is not linked to it");
  }
}

struct ContextAux {
  const DescriptionIndex* descriptions = nullptr;
  const TraceMap* traces = nullptr;
};

inline TokenList title_tokens(const Discussion& d) { return process_discussion_text(d.title); }

inline TokenList utterance_tokens(const Utterance& u) {
  return u.body_tokens ? *u.body_tokens : process_discussion_text(u.body_raw);
}

// For each decoding step, the argmax input token (lowest index on ties) is
// mapped to its segment; distinct segments are returned in order of first
// win. Tokens outside every segment are ignored.
inline std::vector<Segment> extract_attended_segments(const AttentionTrace& trace) {
  std::vector<Segment> out;
  const auto& segs = trace.segments;
  for (std::size_t step = 0; step < trace.steps(); ++step) {
    auto row = trace.row(step);
    std::size_t best = std::max_element(row.begin(), row.end()) - row.begin();
    // segments are ordered and disjoint
    auto it = std::upper_bound(segs.begin(), segs.end(), best,
                               [](std::size_t tok, const Segment& s) { return tok < s.token_start; });
    if (it == segs.begin()) continue;
    const Segment& seg = *std::prev(it);
    if (!seg.contains(best)) continue;
    if (std::find(out.begin(), out.end(), seg) == out.end()) out.push_back(seg);
  }
  return out;
}

inline bool requires_discussion(ContextKind kind) {
  return kind != ContextKind::without_nl && kind != ContextKind::oracle_msg;
}

// Configuration checks that do not depend on the example.
inline void check_context_inputs(const ContextSpec& spec, const ContextAux& aux) {
  if (spec.token_limit < 1) throw ConfigError("token limit must be at least 1");
  auto kind = std::string(to_string(spec.kind));
  if ((spec.kind == ContextKind::soln_desc || spec.kind == ContextKind::soln_desc_plus_title) &&
      !aux.descriptions)
    throw ConfigError("representation '" + kind + "' requires solution descriptions");
  if (spec.kind == ContextKind::attended_segments && !aux.traces)
    throw ConfigError("representation '" + kind + "' requires attention traces");
}

namespace detail {

inline const TokenList* find_description(const ContextAux& aux, const std::string& example_id,
                                         const std::string& discussion_id) {
  auto it = aux.descriptions->find(example_id);
  if (it == aux.descriptions->end()) return nullptr;
  for (const auto& [id, tokens] : it->second)
    if (id == discussion_id) return &tokens;
  return nullptr;
}

inline std::vector<TokenList> nl_parts(const BugFixExample& ex, ContextKind kind,
                                       std::span<const Discussion> discussions,
                                       const ContextAux& aux) {
  auto skip = [&](const std::string& why) -> SkipError {
    return SkipError("example '" + ex.id + "' (" + std::string(to_string(kind)) + "): " + why);
  };
  std::vector<TokenList> parts;
  switch (kind) {
    case ContextKind::without_nl:
      break;
    case ContextKind::oracle_msg:
      if (!ex.oracle_msg_tokens) throw skip("no oracle commit message");
      parts.push_back(*ex.oracle_msg_tokens);
      break;
    case ContextKind::whole_discussion:
      for (const auto& d : discussions) {
        parts.push_back(title_tokens(d));
        for (const auto& u : d.utterances) parts.push_back(utterance_tokens(u));
      }
      break;
    case ContextKind::title:
      for (const auto& d : discussions) parts.push_back(title_tokens(d));
      break;
    case ContextKind::last_utterance:
      for (const auto& d : discussions)
        if (!d.utterances.empty()) parts.push_back(utterance_tokens(d.utterances.back()));
      if (parts.empty()) throw skip("no utterance precedes the commit");
      break;
    case ContextKind::soln_desc:
    case ContextKind::soln_desc_plus_title: {
      bool any = false;
      for (const auto& d : discussions) {
        const TokenList* desc = find_description(aux, ex.id, d.id);
        if (desc) {
          parts.push_back(*desc);
          any = true;
        }
        if (kind == ContextKind::soln_desc_plus_title) parts.push_back(title_tokens(d));
      }
      if (!any) throw skip("no solution description");
      break;
    }
    case ContextKind::attended_segments: {
      auto it = aux.traces->find(ex.id);
      if (it == aux.traces->end()) throw skip("no attention trace");
      for (const auto& seg : extract_attended_segments(it->second)) {
        auto d = std::find_if(discussions.begin(), discussions.end(),
                              [&](const Discussion& x) { return x.id == seg.discussion_id; });
        if (d == discussions.end()) continue;
        if (seg.kind == SegmentKind::title) {
          parts.push_back(title_tokens(*d));
        } else if (*seg.utterance_index < d->utterances.size()) {
          // utterances removed by the temporal filter are never emitted
          parts.push_back(utterance_tokens(d->utterances[*seg.utterance_index]));
        }
      }
      break;
    }
  }
  return parts;
}

}  // namespace detail

// buggy <s> method [<s> NL parts...], truncated from the end to the limit.
// `discussions` must already be filtered and ordered (prepare_discussions).
inline TokenList build_context(const BugFixExample& example, const ContextSpec& spec,
                               std::span<const Discussion> discussions, const ContextAux& aux = {}) {
  check_context_inputs(spec, aux);
  if (requires_discussion(spec.kind) && discussions.empty())
    throw SkipError("example '" + example.id + "' has no discussion");
  std::vector<TokenList> parts{example.buggy_tokens, example.method_tokens};
  for (auto& p : detail::nl_parts(example, spec.kind, discussions, aux)) parts.push_back(std::move(p));
  return truncate_from_end(concat_with_separator(parts), spec.token_limit);
}

inline TokenList build_context(const BugFixExample& example, const ContextSpec& spec,
                               const DiscussionMap& discussions, const ContextAux& aux = {}) {
  auto prepared = prepare_discussions(example, discussions);
  return build_context(example, spec, std::span<const Discussion>(prepared), aux);
}

struct SegmentDescriptor {
  std::string discussion_id;
  SegmentKind kind = SegmentKind::title;
  std::optional<std::size_t> utterance_index;

  friend bool operator==(const SegmentDescriptor&, const SegmentDescriptor&) = default;
};

struct SegmentContext {
  SegmentDescriptor segment;
  TokenList tokens;
};

// buggy <s> method <s> segment for the title and every retained utterance of
// every discussion, in discussion order.
inline std::vector<SegmentContext> enumerate_segment_contexts(const BugFixExample& example,
                                                              std::span<const Discussion> discussions,
                                                              std::size_t token_limit = 1024) {
  std::vector<SegmentContext> out;
  auto make = [&](TokenList nl) {
    return truncate_from_end(concat_with_separator({example.buggy_tokens, example.method_tokens, nl}),
                             token_limit);
  };
  for (const auto& d : discussions) {
    out.push_back({{d.id, SegmentKind::title, std::nullopt}, make(title_tokens(d))});
    for (const auto& u : d.utterances)
      out.push_back({{d.id, SegmentKind::utterance, u.index}, make(utterance_tokens(u))});
  }
  return out;
}

}  // namespace disc_forge
