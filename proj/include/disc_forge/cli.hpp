#pragma once

// disc-forge command line: mine -> link -> tokenize -> context ->
// eval / compare / oracle-eval / stats.
//
// Exit codes: 0 success, 1 per-record failures above --max-skip-ratio (or an
// interrupted mining run), 2 configuration or input errors.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "CLI11.hpp"

#include "disc_forge/context.hpp"
#include "disc_forge/corpus.hpp"
#include "disc_forge/digest.hpp"
#include "disc_forge/error.hpp"
#include "disc_forge/eval.hpp"
#include "disc_forge/github.hpp"
#include "disc_forge/ingestion.hpp"
#include "disc_forge/linker.hpp"
#include "disc_forge/parallel.hpp"
#include "disc_forge/textproc.hpp"

namespace disc_forge::cli {

inline constexpr const char* kTokenEnvVar = "DISC_FORGE_TOKEN_ENV";

// Machine-readable run log: one JSON object per line, to --log or stderr.
class RunLog {
 public:
  explicit RunLog(std::ostream& fallback) : out_(&fallback) {}

  void open(const std::string& path) {
    if (path.empty()) return;
    file_.open(path, std::ios::trunc);
    if (!file_) throw ConfigError("cannot open log file '" + path + "'");
    out_ = &file_;
  }

  void set_command(std::string command) { command_ = std::move(command); }

  void warn(const std::string& message) { write("warning", message); }
  void error(const std::string& message) { write("error", message); }

  void summary(Json tallies, int exit_code) {
    Json j;
    j["level"] = "summary";
    j["command"] = command_;
    j["tallies"] = std::move(tallies);
    j["exit_code"] = exit_code;
    *out_ << j.dump() << '\n';
    out_->flush();
  }

 private:
  void write(const char* level, const std::string& message) {
    Json j;
    j["level"] = level;
    j["command"] = command_;
    j["message"] = message;
    *out_ << j.dump(-1, ' ', false, Json::error_handler_t::replace) << '\n';
  }

  std::ostream* out_;
  std::ofstream file_;
  std::string command_;
};

struct Globals {
  unsigned jobs = default_jobs();
  std::string log_path;
  double max_skip_ratio = 0.5;
  bool ci = false;
};

namespace detail {

inline Timestamp parse_time_flag(const std::string& flag, const std::string& value) {
  if (auto t = Timestamp::try_parse(value)) return *t;
  // bare dates are accepted as midnight UTC
  if (auto t = Timestamp::try_parse(value + "T00:00:00Z")) return *t;
  throw ConfigError(flag + ": malformed timestamp '" + value + "'");
}

inline std::vector<std::string> read_projects(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open projects file '" + path + "'");
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    auto e = line.find_last_not_of(" \t\r");
    std::string p = line.substr(b, e - b + 1);
    if (std::count(p.begin(), p.end(), '/') != 1)
      throw ConfigError("projects file: '" + p + "' is not owner/name");
    out.push_back(p);
  }
  return out;
}

inline std::vector<BugFixExample> select_split(std::vector<BugFixExample> examples,
                                               const std::string& split) {
  if (split.empty() || split == "all") return examples;
  auto s = parse_split(split);
  if (!s) throw ConfigError("--split must be train, valid, test or all");
  std::erase_if(examples, [&](const BugFixExample& e) { return e.split != *s; });
  return examples;
}

inline double round4(double p) { return std::round(p * 10000.0) / 10000.0; }

inline void write_report(const std::string& path, const Json& report, std::ostream& out) {
  std::string text = report.dump(2) + "\n";
  if (path.empty() || path == "-")
    out << text;
  else
    write_file_atomic(path, text);
}

inline Json optional_number(const std::optional<double>& v) {
  return v ? Json(*v) : Json(nullptr);
}

inline Json optional_rounded(const std::optional<double>& v) {
  return v ? Json(round_rate(*v)) : Json(nullptr);
}

inline int skip_exit(std::size_t skipped, std::size_t total, const Globals& g) {
  if (total == 0) return 0;
  return static_cast<double>(skipped) / static_cast<double>(total) > g.max_skip_ratio ? 1 : 0;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// mine

struct MineArgs {
  std::string projects, since, until, archive, token_env, commits, out;
  std::string api_base = "https://api.github.com";
  int max_retries = 5;
  int backoff_ms = 1000;
  double rate = 1.35;
};

inline int cmd_mine(const MineArgs& a, const Globals& g, RunLog& log) {
  Timestamp since = detail::parse_time_flag("--since", a.since);
  Timestamp until = detail::parse_time_flag("--until", a.until);
  if (!a.archive.empty() && !a.token_env.empty())
    throw ConfigError("--archive and --token-env are mutually exclusive");

  FetchOptions fetch;
  std::filesystem::create_directories(a.out);
  if (!a.archive.empty()) {
    fetch.mode = FetchMode::archive;
    fetch.archive_root = a.archive;
  } else {
    std::string var = a.token_env;
    if (var.empty())
      if (const char* named = std::getenv(kTokenEnvVar)) var = named;
    if (var.empty())
      throw ConfigError("online mining needs --token-env <VAR> (or " + std::string(kTokenEnvVar) +
                        "); use --archive for offline input");
    const char* token = std::getenv(var.c_str());
    if (!token || !*token) throw ConfigError("environment variable " + var + " holds no token");
    fetch.mode = FetchMode::online;
    fetch.online.token = token;
    fetch.online.api_base = a.api_base;
    fetch.online.spool_dir = std::filesystem::path(a.out) / "raw";
    fetch.online.cursor_path = std::filesystem::path(a.out) / "cursor.json";
    fetch.online.max_retries = a.max_retries;
    fetch.online.base_backoff = std::chrono::milliseconds(a.backoff_ms);
    fetch.online.requests_per_second = a.rate;
  }

  std::map<std::string, std::map<std::string, CommitMessage>> commits;
  if (!a.commits.empty()) commits = load_commit_messages(a.commits);

  Json report;
  report["since"] = since.str();
  report["until"] = until.str();
  report["mode"] = fetch.mode == FetchMode::archive ? "archive" : "online";
  Json per_project = Json::object();
  FetchTally total;
  std::size_t linked = 0, discussions_written = 0, failed_projects = 0;
  std::vector<CommitLinkEvent> all_links;
  int exit_code = 0;

  for (const auto& project : detail::read_projects(a.projects)) {
    FetchResult fetched;
    try {
      fetched = fetch_issues(project, {since, until}, fetch);
    } catch (const TransientError& e) {
      log.error(project + ": " + e.what() + "; resume cursor saved");
      exit_code = 1;
      ++failed_projects;
      break;
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      log.error(project + ": " + e.what());
      ++failed_projects;
      continue;
    }
    for (const auto& w : fetched.tally.warnings) log.warn(project + ": " + w);

    CommitReferenceIndex index(project, commits.count(lowercase(project))
                                            ? commits.at(lowercase(project))
                                            : std::map<std::string, CommitMessage>{});
    std::vector<Discussion> discussions;
    std::vector<CommitLinkEvent> links;
    std::size_t normalize_skips = 0;
    for (const auto& raw : fetched.issues) {
      try {
        discussions.push_back(normalize_issue(raw));
      } catch (const Error& e) {
        ++normalize_skips;
        log.warn(project + ": issue skipped: " + e.what());
        continue;
      }
      for (auto& l : extract_commit_links(raw, index)) links.push_back(std::move(l));
    }
    fetched.tally.skipped += normalize_skips;
    fetched.tally.fetched -= normalize_skips;
    save_discussions(discussions,
                     std::filesystem::path(a.out) / (project_slug(project) + std::string(kDiscussionSuffix)));
    per_project[project] = Json{{"fetched", fetched.tally.fetched},
                                {"skipped", fetched.tally.skipped},
                                {"pull_requests_excluded", fetched.tally.pull_requests},
                                {"outside_window", fetched.tally.outside_window},
                                {"linked", links.size()}};
    discussions_written += discussions.size();
    linked += links.size();
    total += fetched.tally;
    all_links.insert(all_links.end(), links.begin(), links.end());
  }
  std::stable_sort(all_links.begin(), all_links.end(), [](const auto& x, const auto& y) {
    return std::tie(x.project, x.issue_number) < std::tie(y.project, y.issue_number);
  });
  save_links(all_links, std::filesystem::path(a.out) / "links.jsonl");

  report["fetched"] = total.fetched;
  report["skipped"] = total.skipped;
  report["linked"] = linked;
  report["pull_requests_excluded"] = total.pull_requests;
  report["outside_window"] = total.outside_window;
  report["failed_projects"] = failed_projects;
  report["projects"] = per_project;
  write_file_atomic(std::filesystem::path(a.out) / "mine-report.json", report.dump(2) + "\n");

  if (exit_code == 0) exit_code = detail::skip_exit(total.skipped, total.fetched + total.skipped, g);
  if (exit_code == 0 && failed_projects > 0) exit_code = 1;
  log.summary(Json{{"fetched", total.fetched}, {"skipped", total.skipped}, {"linked", linked},
                   {"discussions", discussions_written}},
              exit_code);
  return exit_code;
}

// ---------------------------------------------------------------------------
// link

struct LinkArgs {
  std::string examples, links, discussions, out, dropped;
};

inline int cmd_link(const LinkArgs& a, const Globals&, RunLog& log) {
  auto examples = load_dataset(a.examples);
  auto links = load_links(a.links);
  auto discussions = load_discussions(a.discussions);
  auto result = attach_discussions(examples, links, discussions);
  for (const auto& w : result.warnings) log.warn(w);
  save_dataset(result.linked, a.out);
  if (!a.dropped.empty()) save_dataset(result.dropped, a.dropped);
  log.summary(Json{{"examples", examples.size()}, {"linked", result.linked.size()},
                   {"dropped", result.dropped.size()}, {"ignored_links", result.warnings.size()}},
              0);
  return 0;
}

// ---------------------------------------------------------------------------
// tokenize

struct TokenizeArgs {
  std::string mode = "code";
  std::string in, out;
};

inline int cmd_tokenize(const TokenizeArgs& a, const Globals&, RunLog& log) {
  std::ifstream in(a.in, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + a.in + "'");
  std::string text, line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    TokenList tokens;
    if (a.mode == "code") {
      tokens = code_tokenize(line);
    } else if (a.mode == "subtoken") {
      tokens = subtokenize(line);
    } else {
      std::vector<std::string> warnings;
      tokens = process_discussion_text(line, &warnings);
      for (const auto& w : warnings) log.warn("line " + std::to_string(lineno) + ": " + w);
    }
    text += Json(tokens).dump(-1, ' ', false, Json::error_handler_t::strict) + "\n";
  }
  write_file_atomic(a.out, text);
  log.summary(Json{{"documents", lineno}}, 0);
  return 0;
}

// ---------------------------------------------------------------------------
// context

struct ContextArgs {
  std::string dataset, repr, discussions, desc, traces, out, skipped, split;
  std::size_t limit = 1024;
  bool per_segment = false;
};

inline int cmd_context(const ContextArgs& a, const Globals& g, RunLog& log) {
  auto kind = parse_context_kind(a.repr);
  if (!kind && !a.per_segment) throw ConfigError("--repr: unknown representation '" + a.repr + "'");
  ContextSpec spec{kind.value_or(ContextKind::whole_discussion), a.limit};

  auto examples = detail::select_split(load_dataset(a.dataset), a.split);
  auto discussions = load_discussions(a.discussions);
  std::optional<DescriptionIndex> descriptions;
  std::optional<TraceMap> traces;
  if (!a.desc.empty()) {
    descriptions = index_descriptions(load_descriptions(a.desc));
    validate_descriptions(*descriptions, examples);
  }
  if (!a.traces.empty()) traces = load_traces(a.traces);
  ContextAux aux{descriptions ? &*descriptions : nullptr, traces ? &*traces : nullptr};
  if (!a.per_segment) check_context_inputs(spec, aux);

  using Built = std::variant<std::vector<Json>, std::string>;
  std::vector<Built> built(examples.size());
  parallel_for(examples.size(), g.jobs, [&](std::size_t i) {
    const auto& ex = examples[i];
    try {
      auto prepared = prepare_discussions(ex, discussions);
      std::vector<Json> records;
      if (a.per_segment) {
        for (auto& sc : enumerate_segment_contexts(ex, prepared, spec.token_limit)) {
          Json seg;
          seg["discussion_id"] = sc.segment.discussion_id;
          seg["kind"] = sc.segment.kind == SegmentKind::title ? "title" : "utterance";
          if (sc.segment.utterance_index) seg["utterance_index"] = *sc.segment.utterance_index;
          records.push_back(Json{{"example_id", ex.id},
                                 {"input_tokens", std::move(sc.tokens)},
                                 {"repr", "segment"},
                                 {"segment", std::move(seg)}});
        }
      } else {
        records.push_back(Json{{"example_id", ex.id},
                               {"input_tokens", build_context(ex, spec, prepared, aux)},
                               {"repr", to_string(spec.kind)}});
      }
      built[i] = std::move(records);
    } catch (const SkipError& e) {
      built[i] = std::string(e.what());
    }
  });

  std::string out, skipped;
  std::size_t n_skipped = 0, n_written = 0;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    if (auto* records = std::get_if<std::vector<Json>>(&built[i])) {
      for (const auto& r : *records) out += r.dump(-1, ' ', false, Json::error_handler_t::strict) + "\n";
      ++n_written;
    } else {
      const auto& reason = std::get<std::string>(built[i]);
      ++n_skipped;
      log.warn(reason);
      skipped += Json{{"example_id", examples[i].id}, {"reason", reason}}.dump() + "\n";
    }
  }
  write_file_atomic(a.out, out);
  if (!a.skipped.empty()) write_file_atomic(a.skipped, skipped);
  int code = detail::skip_exit(n_skipped, examples.size(), g);
  log.summary(Json{{"examples", examples.size()}, {"written", n_written}, {"skipped", n_skipped}}, code);
  return code;
}

// ---------------------------------------------------------------------------
// eval / compare / oracle-eval

struct EvalArgs {
  std::string refs, candidates, out, split, repr;
  bool raw = false;
};

inline Json eval_json(const EvalReport& r, MatchMode mode) {
  Json j;
  j["representation"] = r.representation;
  j["n"] = r.n;
  j["matched"] = r.matched;
  j["missing"] = r.missing;
  j["exact_match_rate"] = round_rate(r.exact_match_rate);
  j["match_mode"] = mode == MatchMode::raw ? "raw" : "tokens";
  Json per = Json::object();
  for (const auto& [id, ok] : r.per_example) per[id] = ok;
  j["per_example"] = per;
  return j;
}

inline std::string source_label(const std::vector<Candidate>& cands, const std::string& fallback) {
  if (!fallback.empty()) return fallback;
  std::set<std::string> sources;
  for (const auto& c : cands) sources.insert(c.source);
  if (sources.size() == 1) return *sources.begin();
  return {};
}

inline int cmd_eval(const EvalArgs& a, const Globals& g, RunLog& log, std::ostream& out) {
  auto refs = detail::select_split(load_dataset(a.refs), a.split);
  auto cands = load_candidates(a.candidates);
  std::erase_if(cands, [&](const Candidate& c) {
    return std::none_of(refs.begin(), refs.end(), [&](const auto& e) { return e.id == c.example_id; }) &&
           !a.split.empty() && a.split != "all";
  });
  MatchMode mode = a.raw ? MatchMode::raw : MatchMode::tokens;
  auto report = corpus_exact_match(cands, refs, mode, source_label(cands, a.repr), g.jobs);
  Json j = eval_json(report, mode);
  j["inputs"] = Json{{"refs", file_digest(a.refs)}, {"candidates", file_digest(a.candidates)}};
  detail::write_report(a.out, j, out);
  if (report.missing) log.warn(std::to_string(report.missing) + " example(s) have no candidate");
  log.summary(Json{{"n", report.n}, {"matched", report.matched}, {"missing", report.missing}}, 0);
  return 0;
}

struct CompareArgs {
  std::string refs, a, b, out, split;
  std::size_t samples = 10000;
  std::size_t size = 5000;
  std::optional<std::uint64_t> seed;
  bool raw = false;
};

inline int cmd_compare(const CompareArgs& args, const Globals& g, RunLog& log, std::ostream& out) {
  if (g.ci && !args.seed) throw ConfigError("--seed is required in CI mode");
  auto refs = detail::select_split(load_dataset(args.refs), args.split);
  MatchMode mode = args.raw ? MatchMode::raw : MatchMode::tokens;
  auto score = [&](const std::string& path) {
    auto cands = load_candidates(path);
    if (!args.split.empty() && args.split != "all")
      std::erase_if(cands, [&](const Candidate& c) {
        return std::none_of(refs.begin(), refs.end(), [&](const auto& e) { return e.id == c.example_id; });
      });
    auto label = source_label(cands, "");
    return outcome_vector(corpus_exact_match(cands, refs, mode, label, g.jobs),
                          label.empty() ? path : label);
  };
  OutcomeVector va = score(args.a), vb = score(args.b);
  bool swapped = false;
  if (va.rate() < vb.rate()) {
    std::swap(va, vb);
    swapped = true;
    log.warn("system B scores higher than system A; operands swapped");
  }
  BootstrapConfig cfg{args.samples, args.size, args.seed.value_or(0), g.jobs};
  auto r = paired_bootstrap(va, vb, cfg);

  Json j;
  j["system_a"] = va.system;
  j["system_b"] = vb.system;
  j["swapped"] = swapped;
  j["n"] = va.outcomes.size();
  j["rate_a"] = round_rate(va.rate());
  j["rate_b"] = round_rate(vb.rate());
  j["delta"] = round_rate(100.0 * r.delta);
  j["p_value"] = detail::round4(r.p_value);
  j["significant"] = r.p_value < 0.05;
  j["alpha"] = 0.05;
  j["samples"] = r.n_samples;
  j["sample_size"] = r.sample_size;
  j["seed"] = r.seed;
  j["rng"] = kBootstrapRng;
  j["inputs"] = Json{{"refs", file_digest(args.refs)},
                     {"a", file_digest(swapped ? args.b : args.a)},
                     {"b", file_digest(swapped ? args.a : args.b)}};
  detail::write_report(args.out, j, out);
  log.summary(Json{{"n", va.outcomes.size()}, {"p_value", detail::round4(r.p_value)}}, 0);
  return 0;
}

struct OracleArgs {
  std::string refs, candidates, out, split;
  bool raw = false;
};

inline int cmd_oracle(const OracleArgs& a, const Globals&, RunLog& log, std::ostream& out) {
  auto refs = detail::select_split(load_dataset(a.refs), a.split);
  std::vector<std::filesystem::path> files;
  if (std::filesystem::is_directory(a.candidates))
    files = list_files(a.candidates, ".jsonl");
  else
    files.push_back(a.candidates);
  std::set<std::string> known;
  for (const auto& e : refs) known.insert(e.id);

  std::vector<Candidate> all;
  std::map<std::string, std::vector<Candidate>> by_source;
  for (const auto& f : files)
    for (auto& c : load_candidates(f)) {
      if (!known.count(c.example_id)) {
        if (!a.split.empty() && a.split != "all") continue;
        throw Error("candidate for unknown example '" + c.example_id + "'");
      }
      by_source[c.source].push_back(c);
      all.push_back(std::move(c));
    }
  MatchMode mode = a.raw ? MatchMode::raw : MatchMode::tokens;
  auto best = best_exact_match(group_candidates(all), refs, mode);

  Json j;
  j["n"] = best.n;
  j["matched"] = best.matched;
  j["best_exact_match"] = round_rate(best.rate);
  j["match_mode"] = mode == MatchMode::raw ? "raw" : "tokens";
  Json sources = Json::object();
  for (const auto& [src, cands] : by_source) {
    auto r = best_exact_match(group_candidates(cands), refs, mode);
    sources[src] = Json{{"best_exact_match", round_rate(r.rate)}, {"matched", r.matched},
                        {"candidates", cands.size()}};
  }
  j["sources"] = sources;
  Json per = Json::object();
  for (const auto& [id, ok] : best.per_example) per[id] = ok;
  j["per_example"] = per;
  j["inputs"] = Json{{"refs", file_digest(a.refs)}, {"candidates", file_digest(a.candidates)}};
  detail::write_report(a.out, j, out);
  log.summary(Json{{"n", best.n}, {"matched", best.matched}, {"candidates", all.size()}}, 0);
  return 0;
}

// ---------------------------------------------------------------------------
// stats

struct StatsArgs {
  std::string dataset, discussions, traces, desc, out;
};

inline Json stats_json(const CorpusStats& s) {
  using detail::optional_number;
  Json j;
  j["#Ex"] = s.examples;
  j["#Discussions/Ex"] = optional_number(s.discussions_per_example.value());
  j["#Utterance/Discussion"] = optional_number(s.utterances_per_discussion.value());
  j["#Attn Segments/Ex"] = optional_number(s.attended_segments_per_example.value());
  j["Buggy"] = optional_number(s.buggy.value());
  j["Fixed"] = optional_number(s.fixed.value());
  j["Method"] = optional_number(s.method.value());
  j["Oracle Msg"] = optional_number(s.oracle_msg.value());
  j["Title"] = optional_number(s.title.value());
  j["Utterance"] = optional_number(s.utterance.value());
  j["Last Utterance"] = optional_number(s.last_utterance.value());
  j["Soln Desc"] = optional_number(s.soln_desc.value());
  return j;
}

// Same fields rounded to one decimal, as printed in the corpus table.
inline Json stats_table(const CorpusStats& s) {
  Json j = stats_json(s);
  for (auto& [k, v] : j.items())
    if (v.is_number_float()) v = round_rate(v.get<double>());
  return j;
}

inline int cmd_stats(const StatsArgs& a, const Globals&, RunLog& log, std::ostream& out) {
  auto examples = load_dataset(a.dataset);
  auto discussions = load_discussions(a.discussions);
  std::optional<TraceMap> traces;
  std::optional<DescriptionIndex> descriptions;
  if (!a.traces.empty()) traces = load_traces(a.traces);
  if (!a.desc.empty()) {
    descriptions = index_descriptions(load_descriptions(a.desc));
    validate_descriptions(*descriptions, examples);
  }
  auto report = dataset_stats(examples, discussions, traces ? &*traces : nullptr,
                              descriptions ? &*descriptions : nullptr);
  Json j;
  j["overall"] = stats_json(report.overall);
  Json splits = Json::object();
  for (const auto& [name, s] : report.by_split) splits[name] = stats_json(s);
  j["splits"] = splits;
  j["table"] = stats_table(report.overall);
  j["token_unit"] = "code_tokenize (split by punctuation and whitespace)";
  Json inputs{{"dataset", file_digest(a.dataset)}, {"discussions", file_digest(a.discussions)}};
  if (!a.traces.empty()) inputs["traces"] = file_digest(a.traces);
  if (!a.desc.empty()) inputs["desc"] = file_digest(a.desc);
  j["inputs"] = inputs;
  detail::write_report(a.out, j, out);
  log.summary(Json{{"examples", report.overall.examples}}, 0);
  return 0;
}

// ---------------------------------------------------------------------------

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  CLI::App app{"disc-forge: discussion-augmented bug-fix corpus toolkit", "disc-forge"};
  app.set_config("--config", "", "TOML/INI file mirroring the command-line flags (flags win)");
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--jobs", g.jobs, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--log", g.log_path, "Run log (JSON lines); default stderr");
  app.add_option("--max-skip-ratio", g.max_skip_ratio,
                 "Exit 1 when skipped/total records exceeds this fraction")
      ->check(CLI::Range(0.0, 1.0));
  app.add_flag("--ci", g.ci, "CI mode: randomness must be explicitly seeded");

  MineArgs mine;
  auto* c_mine = app.add_subcommand("mine", "Mine issue reports and commit links");
  c_mine->add_option("--projects", mine.projects, "File with one owner/name per line")->required();
  c_mine->add_option("--since", mine.since, "Window start (inclusive), ISO-8601")->required();
  c_mine->add_option("--until", mine.until, "Window end (exclusive), ISO-8601")->required();
  c_mine->add_option("--archive", mine.archive, "Directory of pre-downloaded issue payloads");
  c_mine->add_option("--token-env", mine.token_env, "Environment variable holding the API token");
  c_mine->add_option("--commits", mine.commits, "Commit messages (JSON lines: project, sha, message)");
  c_mine->add_option("--out", mine.out, "Output directory")->required();
  c_mine->add_option("--api-base", mine.api_base, "Tracker API base URL");
  c_mine->add_option("--max-retries", mine.max_retries, "Retries per request");
  c_mine->add_option("--backoff-ms", mine.backoff_ms, "Initial retry backoff");
  c_mine->add_option("--rate", mine.rate, "Requests per second");

  LinkArgs link;
  auto* c_link = app.add_subcommand("link", "Attach discussions to bug-fix examples");
  c_link->add_option("--examples", link.examples, "Bug-fix example records")->required();
  c_link->add_option("--links", link.links, "links.jsonl from mine")->required();
  c_link->add_option("--discussions", link.discussions, "Discussion directory or file")->required();
  c_link->add_option("--out", link.out, "Linked dataset")->required();
  c_link->add_option("--dropped", link.dropped, "Examples without discussions");

  TokenizeArgs tok;
  auto* c_tok = app.add_subcommand("tokenize", "Tokenize one document per line");
  c_tok->add_option("--mode", tok.mode, "code, subtoken or markdown")
      ->check(CLI::IsMember({"code", "subtoken", "markdown"}));
  c_tok->add_option("--in", tok.in)->required();
  c_tok->add_option("--out", tok.out)->required();

  ContextArgs ctx;
  auto* c_ctx = app.add_subcommand("context", "Build model inputs for one representation");
  c_ctx->add_option("--dataset", ctx.dataset)->required();
  c_ctx->add_option("--repr", ctx.repr, "Context representation");
  c_ctx->add_option("--discussions", ctx.discussions)->required();
  c_ctx->add_option("--desc", ctx.desc, "Solution descriptions (JSON lines)");
  c_ctx->add_option("--traces", ctx.traces, "Directory of attention traces");
  c_ctx->add_option("--limit", ctx.limit, "Token limit")->check(CLI::PositiveNumber);
  c_ctx->add_option("--out", ctx.out)->required();
  c_ctx->add_option("--skipped", ctx.skipped, "Skipped examples with reasons");
  c_ctx->add_option("--split", ctx.split, "Restrict to train, valid or test");
  c_ctx->add_flag("--per-segment", ctx.per_segment, "One input per title/utterance segment");

  EvalArgs ev;
  auto* c_eval = app.add_subcommand("eval", "Exact-match accuracy of a candidate file");
  c_eval->add_option("--refs", ev.refs)->required();
  c_eval->add_option("--candidates", ev.candidates)->required();
  c_eval->add_option("--out", ev.out, "Report path (default stdout)");
  c_eval->add_option("--split", ev.split);
  c_eval->add_option("--repr", ev.repr, "Label recorded in the report");
  c_eval->add_flag("--raw", ev.raw, "Compare token lists as given, without re-tokenizing");

  CompareArgs cmp;
  auto* c_cmp = app.add_subcommand("compare", "Paired bootstrap significance test");
  c_cmp->add_option("--refs", cmp.refs)->required();
  c_cmp->add_option("--a", cmp.a)->required();
  c_cmp->add_option("--b", cmp.b)->required();
  c_cmp->add_option("--samples", cmp.samples)->check(CLI::PositiveNumber);
  c_cmp->add_option("--size", cmp.size)->check(CLI::PositiveNumber);
  c_cmp->add_option("--seed", cmp.seed);
  c_cmp->add_option("--out", cmp.out);
  c_cmp->add_option("--split", cmp.split);
  c_cmp->add_flag("--raw", cmp.raw);

  OracleArgs orc;
  auto* c_orc = app.add_subcommand("oracle-eval", "Best exact match over per-segment candidates");
  c_orc->add_option("--refs", orc.refs)->required();
  c_orc->add_option("--candidates", orc.candidates, "Directory of candidate files")->required();
  c_orc->add_option("--out", orc.out);
  c_orc->add_option("--split", orc.split);
  c_orc->add_flag("--raw", orc.raw);

  StatsArgs st;
  auto* c_st = app.add_subcommand("stats", "Corpus statistics");
  c_st->add_option("--dataset", st.dataset)->required();
  c_st->add_option("--discussions", st.discussions)->required();
  c_st->add_option("--traces", st.traces);
  c_st->add_option("--desc", st.desc);
  c_st->add_option("--out", st.out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, err, err);
    err << app.help();
    return 2;
  }

  RunLog log(err);
  try {
    log.open(g.log_path);
    if (c_mine->parsed()) return log.set_command("mine"), cmd_mine(mine, g, log);
    if (c_link->parsed()) return log.set_command("link"), cmd_link(link, g, log);
    if (c_tok->parsed()) return log.set_command("tokenize"), cmd_tokenize(tok, g, log);
    if (c_ctx->parsed()) return log.set_command("context"), cmd_context(ctx, g, log);
    if (c_eval->parsed()) return log.set_command("eval"), cmd_eval(ev, g, log, out);
    if (c_cmp->parsed()) return log.set_command("compare"), cmd_compare(cmp, g, log, out);
    if (c_orc->parsed()) return log.set_command("oracle-eval"), cmd_oracle(orc, g, log, out);
    if (c_st->parsed()) return log.set_command("stats"), cmd_stats(st, g, log, out);
  } catch (const ConfigError& e) {
    log.error(e.what());
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const FormatError& e) {
    log.error(e.what());
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    log.error(e.what());
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const InvariantError& e) {
    log.error(e.what());
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    log.error(e.what());
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace disc_forge::cli
