#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "disc_forge/context.hpp"
#include "disc_forge/corpus.hpp"
#include "disc_forge/error.hpp"
#include "disc_forge/linker.hpp"
#include "disc_forge/parallel.hpp"
#include "disc_forge/textproc.hpp"

namespace disc_forge {

// tokens: both sides re-split with code_tokenize before comparing, so token
// granularity and whitespace do not matter. raw: element-wise comparison of
// the lists as given.
enum class MatchMode { tokens, raw };

inline bool exact_match(std::span<const std::string> candidate, std::span<const std::string> reference) {
  return std::equal(candidate.begin(), candidate.end(), reference.begin(), reference.end());
}

inline TokenList normalize_code_tokens(std::span<const std::string> tokens) {
  TokenList out;
  for (const auto& t : tokens) {
    auto pieces = code_tokenize(t);
    out.insert(out.end(), std::make_move_iterator(pieces.begin()), std::make_move_iterator(pieces.end()));
  }
  return out;
}

inline bool exact_match(std::span<const std::string> candidate, std::span<const std::string> reference,
                        MatchMode mode) {
  if (mode == MatchMode::raw) return exact_match(candidate, reference);
  return exact_match(normalize_code_tokens(candidate), normalize_code_tokens(reference));
}

// Source text comparison under code_tokenize.
inline bool exact_match_text(std::string_view candidate, std::string_view reference) {
  return exact_match(code_tokenize(candidate), code_tokenize(reference));
}

// Percentages are reported to one decimal place.
inline double round_rate(double pct) { return std::round(pct * 10.0) / 10.0; }

inline double percentage(std::size_t hits, std::size_t n) {
  return n == 0 ? 0.0 : 100.0 * static_cast<double>(hits) / static_cast<double>(n);
}

struct EvalReport {
  std::string representation;
  std::map<std::string, bool> per_example;
  double exact_match_rate = 0.0;  // unrounded; use round_rate for display
  std::size_t n = 0;
  std::size_t matched = 0;
  std::size_t missing = 0;
};

// Scores one candidate per reference example. Examples without a candidate
// count as misses.
inline EvalReport corpus_exact_match(std::span<const Candidate> candidates,
                                     std::span<const BugFixExample> references,
                                     MatchMode mode = MatchMode::tokens,
                                     std::string representation = {}, unsigned jobs = 1) {
  std::map<std::string_view, std::size_t> index;
  for (std::size_t i = 0; i < references.size(); ++i) index.emplace(references[i].id, i);
  std::vector<const Candidate*> by_ref(references.size(), nullptr);
  for (const auto& c : candidates) {
    auto it = index.find(c.example_id);
    if (it == index.end()) throw Error("candidate for unknown example '" + c.example_id + "'");
    if (by_ref[it->second])
      throw Error("more than one candidate for example '" + c.example_id + "'");
    by_ref[it->second] = &c;
  }
  std::vector<char> hit(references.size(), 0);
  parallel_for(references.size(), jobs, [&](std::size_t i) {
    if (by_ref[i])
      hit[i] = exact_match(by_ref[i]->candidate_tokens, references[i].fixed_tokens, mode);
  });

  EvalReport r;
  r.representation = std::move(representation);
  r.n = references.size();
  for (std::size_t i = 0; i < references.size(); ++i) {
    r.per_example[references[i].id] = hit[i] != 0;
    r.matched += hit[i] != 0;
    r.missing += by_ref[i] == nullptr;
  }
  r.exact_match_rate = percentage(r.matched, r.n);
  return r;
}

struct OutcomeVector {
  std::string system;
  std::vector<std::string> ids;
  std::vector<std::uint8_t> outcomes;

  double rate() const {
    return percentage(static_cast<std::size_t>(std::count(outcomes.begin(), outcomes.end(), 1)),
                      outcomes.size());
  }
};

inline OutcomeVector outcome_vector(const EvalReport& report, std::string system) {
  OutcomeVector v{std::move(system), {}, {}};
  for (const auto& [id, ok] : report.per_example) {
    v.ids.push_back(id);
    v.outcomes.push_back(ok ? 1 : 0);
  }
  return v;
}

struct BootstrapConfig {
  std::size_t n_samples = 10000;
  std::size_t sample_size = 5000;
  std::uint64_t seed = 0;
  unsigned jobs = 1;
};

struct BootstrapResult {
  double p_value = 1.0;
  double delta = 0.0;          // rate(a) - rate(b), as a fraction
  std::size_t exceeded = 0;    // resamples with delta* > 2 delta
  std::size_t ties = 0;        // resamples with delta* == 2 delta
  std::size_t n_samples = 0;
  std::size_t sample_size = 0;
  std::uint64_t seed = 0;
};

inline constexpr const char* kBootstrapRng =
    "mt19937_64 per resample, seeded with splitmix64(seed ^ splitmix64(resample_index)); "
    "indices by Lemire multiply-shift rejection";

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Unbiased integer in [0, n).
template <class Engine>
std::uint64_t bounded_index(Engine& rng, std::uint64_t n) {
  using u128 = unsigned __int128;
  u128 m = static_cast<u128>(rng()) * n;
  auto low = static_cast<std::uint64_t>(m);
  if (low < n) {
    std::uint64_t threshold = -n % n;
    while (low < threshold) {
      m = static_cast<u128>(rng()) * n;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

// Paired bootstrap test in the Berg-Kirkpatrick form: resample example
// indices with replacement, count resamples whose difference exceeds twice
// the observed difference. Resamples landing exactly on 2*delta count one
// half, which keeps identical systems at p = 0.5 instead of 0. Each resample
// has its own derived seed, so the result is identical for any job count.
inline BootstrapResult paired_bootstrap(const OutcomeVector& a, const OutcomeVector& b,
                                        const BootstrapConfig& cfg) {
  if (a.outcomes.size() != b.outcomes.size())
    throw Error("outcome vectors differ in length (" + std::to_string(a.outcomes.size()) + " vs " +
                std::to_string(b.outcomes.size()) + ")");
  if (!a.ids.empty() && !b.ids.empty() && a.ids != b.ids)
    throw Error("outcome vectors are not aligned to the same example order");
  if (cfg.n_samples == 0) throw ConfigError("bootstrap needs at least one resample");
  if (cfg.sample_size == 0) throw ConfigError("bootstrap sample size must be positive");
  const std::size_t n = a.outcomes.size();
  if (n == 0) throw Error("cannot bootstrap empty outcome vectors");

  std::vector<std::int8_t> diff(n);
  std::int64_t total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    diff[i] = static_cast<std::int8_t>((a.outcomes[i] != 0) - (b.outcomes[i] != 0));
    total += diff[i];
  }
  if (total < 0)
    throw Error("system '" + a.system + "' scores below '" + b.system +
                "'; pass the better system first");

  // delta* > 2 delta  <=>  S * n > 2 * total * size   (exact integer test)
  const std::int64_t threshold = 2 * total * static_cast<std::int64_t>(cfg.sample_size);
  const auto nn = static_cast<std::int64_t>(n);
  std::vector<std::int8_t> verdict(cfg.n_samples);
  parallel_for(cfg.n_samples, cfg.jobs, [&](std::size_t s) {
    std::mt19937_64 rng(splitmix64(cfg.seed ^ splitmix64(s)));
    std::int64_t sum = 0;
    for (std::size_t k = 0; k < cfg.sample_size; ++k) sum += diff[bounded_index(rng, n)];
    std::int64_t lhs = sum * nn;
    verdict[s] = lhs > threshold ? 2 : (lhs == threshold ? 1 : 0);
  });

  BootstrapResult r;
  r.n_samples = cfg.n_samples;
  r.sample_size = cfg.sample_size;
  r.seed = cfg.seed;
  r.delta = static_cast<double>(total) / static_cast<double>(n);
  for (auto v : verdict) {
    r.exceeded += v == 2;
    r.ties += v == 1;
  }
  r.p_value = (static_cast<double>(r.exceeded) + 0.5 * static_cast<double>(r.ties)) /
              static_cast<double>(cfg.n_samples);
  return r;
}

struct BestMatchReport {
  std::map<std::string, bool> per_example;
  double rate = 0.0;
  std::size_t n = 0;
  std::size_t matched = 0;
};

// Share of reference examples for which at least one candidate matches.
inline BestMatchReport best_exact_match(
    const std::map<std::string, std::vector<TokenList>>& per_segment_candidates,
    std::span<const BugFixExample> references, MatchMode mode = MatchMode::tokens) {
  BestMatchReport r;
  r.n = references.size();
  for (const auto& ref : references) {
    bool ok = false;
    if (auto it = per_segment_candidates.find(ref.id); it != per_segment_candidates.end())
      ok = std::any_of(it->second.begin(), it->second.end(),
                       [&](const TokenList& c) { return exact_match(c, ref.fixed_tokens, mode); });
    r.per_example[ref.id] = ok;
    r.matched += ok;
  }
  r.rate = percentage(r.matched, r.n);
  return r;
}

inline std::map<std::string, std::vector<TokenList>> group_candidates(std::span<const Candidate> cands) {
  std::map<std::string, std::vector<TokenList>> out;
  for (const auto& c : cands) out[c.example_id].push_back(c.candidate_tokens);
  return out;
}

// ---------------------------------------------------------------------------
// Corpus statistics

struct Mean {
  double sum = 0.0;
  std::size_t count = 0;

  void add(double v) {
    sum += v;
    ++count;
  }
  std::optional<double> value() const {
    return count == 0 ? std::nullopt : std::optional<double>(sum / static_cast<double>(count));
  }
};

struct CorpusStats {
  std::size_t examples = 0;
  Mean discussions_per_example;
  Mean utterances_per_discussion;
  Mean attended_segments_per_example;
  Mean buggy, fixed, method, oracle_msg, title, utterance, last_utterance, soln_desc;
};

struct StatsReport {
  std::map<std::string, CorpusStats> by_split;  // train/valid/test present only if non-empty
  CorpusStats overall;
};

// Length under code_tokenize, the "split by punctuation and spacing" unit.
inline std::size_t code_length(std::string_view text) { return code_tokenize(text).size(); }
inline std::size_t code_length(std::span<const std::string> tokens) {
  return normalize_code_tokens(tokens).size();
}

inline StatsReport dataset_stats(std::span<const BugFixExample> examples, const DiscussionMap& discussions,
                                 const TraceMap* traces = nullptr,
                                 const DescriptionIndex* descriptions = nullptr) {
  StatsReport report;
  auto accumulate = [&](CorpusStats& s, const BugFixExample& e, std::span<const Discussion> ds) {
    s.examples++;
    s.discussions_per_example.add(static_cast<double>(ds.size()));
    s.buggy.add(static_cast<double>(code_length(e.buggy_tokens)));
    s.fixed.add(static_cast<double>(code_length(e.fixed_tokens)));
    s.method.add(static_cast<double>(code_length(e.method_tokens)));
    if (e.oracle_msg_tokens) s.oracle_msg.add(static_cast<double>(code_length(*e.oracle_msg_tokens)));
    for (const auto& d : ds) {
      s.utterances_per_discussion.add(static_cast<double>(d.utterances.size()));
      s.title.add(static_cast<double>(code_length(d.title)));
      for (const auto& u : d.utterances) s.utterance.add(static_cast<double>(code_length(u.body_raw)));
      if (!d.utterances.empty())
        s.last_utterance.add(static_cast<double>(code_length(d.utterances.back().body_raw)));
    }
    if (traces)
      if (auto it = traces->find(e.id); it != traces->end())
        s.attended_segments_per_example.add(
            static_cast<double>(extract_attended_segments(it->second).size()));
    if (descriptions)
      if (auto it = descriptions->find(e.id); it != descriptions->end())
        for (const auto& [disc, tokens] : it->second)
          s.soln_desc.add(static_cast<double>(code_length(tokens)));
  };
  for (const auto& e : examples) {
    auto ds = prepare_discussions(e, discussions);
    accumulate(report.by_split[std::string(to_string(e.split))], e, ds);
    accumulate(report.overall, e, ds);
  }
  return report;
}

}  // namespace disc_forge
