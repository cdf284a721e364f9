#include "protocheck/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "protocheck/analytics.hpp"
#include "protocheck/debrief.hpp"
#include "protocheck/errors.hpp"
#include "protocheck/monitor.hpp"
#include "protocheck/predicate.hpp"
#include "protocheck/simgen.hpp"
#include "protocheck/specdsl.hpp"
#include "protocheck/trace.hpp"
#include "protocheck/triage.hpp"

namespace protocheck::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class IoFailure : public Error {
 public:
  using Error::Error;
};

// Failed or errored checks, reported after the output has been written.
struct CheckStatus {
  bool failed = false;
  bool errored = false;
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoFailure("cannot read " + path.string());
  return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
  out.flush();
  if (!out) throw IoFailure("cannot write " + path.string());
}

// Spec files get their path prepended to parse errors.
spec::RequirementSet load_spec(const std::string& path) {
  const std::string text = read_file(path);
  try {
    auto set = spec::parse_spec(text);
    spec::validate(set);
    return set;
  } catch (const ParseError& e) {
    throw ParseError(e.line(), e.column(), path + ": " + e.message());
  }
}

struct BackendChoice {
  std::string kind = "lexicon";
  std::string lexicon_path;
};

LexiconBackend::Lexicon load_lexicon(const BackendChoice& choice) {
  if (choice.lexicon_path.empty()) return builtin_lexicon();
  return parse_lexicon(read_file(choice.lexicon_path));
}

std::shared_ptr<const PredicateBackend> make_backend(const BackendChoice& choice) {
  if (choice.kind == "external") {
    return std::make_shared<ExternalModelBackend>(ExternalModelConfig::from_environment());
  }
  return std::make_shared<LexiconBackend>(load_lexicon(choice));
}

void add_backend_options(CLI::App* cmd, BackendChoice& choice) {
  cmd->add_option("--lexicon", choice.lexicon_path, "Lexicon JSON (default: built-in lexicon)");
  cmd->add_option("--backend", choice.kind, "Predicate backend")
      ->check(CLI::IsMember({"lexicon", "external"}))
      ->capture_default_str();
}

ScenarioContext load_context(const std::optional<std::string>& explicit_path, const fs::path& transcript) {
  fs::path sidecar = transcript;
  sidecar.replace_extension(".context.json");
  if (fs::exists(sidecar)) return parse_context(read_file(sidecar));
  if (explicit_path) return parse_context(read_file(*explicit_path));
  return {};
}

std::vector<fs::path> transcripts_in(const fs::path& input) {
  if (!fs::exists(input)) throw IoFailure("no such file or directory: " + input.string());
  if (!fs::is_directory(input)) return {input};
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(input)) {
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl") out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  if (out.empty()) throw IoFailure("no .jsonl transcripts in " + input.string());
  return out;
}

std::string percent(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f%%", v * 100.0);
  return buf;
}

std::string assessment_text(const Assessment& a) {
  std::string out = "session " + a.session_id + ": ";
  out += a.score ? "score " + percent(*a.score) : std::string("not scored");
  out += "\n";
  for (const auto& v : a.verdicts) out += "  " + v.rationale + "\n";
  return out;
}

void note_status(const Assessment& a, CheckStatus& status, std::ostream& err) {
  for (const auto& v : a.verdicts) {
    if (v.outcome == Outcome::Errored) {
      status.errored = true;
      err << "error: " << a.session_id << " / " << v.requirement_id << ": " << v.error << "\n";
    }
    if (v.outcome == Outcome::Fail && v.severity == spec::Severity::Mandatory) status.failed = true;
  }
}

int status_code(const CheckStatus& s) {
  if (s.errored) return exit_code::kBackend;
  return s.failed ? exit_code::kCheckFailed : exit_code::kOk;
}

struct Session {
  Trace trace;
  ScenarioContext context;
  Assessment assessment;
};

Session check_one(const LinkedSet& linked, const fs::path& path, const std::optional<std::string>& context_path,
                  unsigned threads) {
  Session s;
  s.trace = parse_transcript(read_file(path), path.stem().string());
  s.context = load_context(context_path, path);
  s.assessment = evaluate_requirement_set(linked, s.trace, s.context, {threads});
  return s;
}

// ---- subcommands ----------------------------------------------------------

struct CompileArgs {
  std::string spec;
  BackendChoice backend;
};

int cmd_compile(const CompileArgs& a, std::ostream& out) {
  auto set = load_spec(a.spec);
  const std::size_t n = set.requirements.size();
  auto linked = link_requirements(std::move(set), make_backend(a.backend));
  out << n << (n == 1 ? " requirement" : " requirements") << "\n";
  for (const auto& r : linked.requirements().requirements) {
    out << "  " << r.id << " (" << spec::to_string(r.severity) << ", depth " << spec::depth(r.formula);
    if (r.guard) out << ", when " << spec::to_text(*r.guard);
    out << ")\n";
  }
  return exit_code::kOk;
}

struct CheckArgs {
  std::string spec;
  std::string input;
  std::optional<std::string> context;
  std::string format = "text";
  unsigned threads = 1;
  BackendChoice backend;
};

int cmd_check(const CheckArgs& a, std::ostream& out, std::ostream& err) {
  auto linked = link_requirements(load_spec(a.spec), make_backend(a.backend));
  const auto files = transcripts_in(a.input);
  CheckStatus status;
  json docs = json::array();
  for (const auto& path : files) {
    const Session s = check_one(linked, path, a.context, a.threads);
    note_status(s.assessment, status, err);
    if (a.format == "json") {
      docs.push_back(json::parse(assessment_to_json(s.assessment, s.trace)));
    } else {
      out << assessment_text(s.assessment);
    }
  }
  if (a.format == "json") {
    if (docs.size() == 1) {
      out << docs[0].dump(2) << "\n";
    } else {
      out << json{{"schema", "protocheck.check/1"}, {"sessions", docs}}.dump(2) << "\n";
    }
  }
  return status_code(status);
}

struct DebriefArgs {
  std::string spec;
  std::string transcript;
  std::optional<std::string> context;
  std::string format = "text";
  BackendChoice backend;
};

int cmd_debrief(const DebriefArgs& a, std::ostream& out, std::ostream& err) {
  auto linked = link_requirements(load_spec(a.spec), make_backend(a.backend));
  if (!fs::is_regular_file(a.transcript)) throw IoFailure("no such transcript: " + a.transcript);
  const Session s = check_one(linked, a.transcript, a.context, 1);
  CheckStatus status;
  note_status(s.assessment, status, err);
  const auto report = generate_report(s.assessment, linked.requirements(), s.trace, s.context);
  out << (a.format == "json" ? report_to_json(report) + "\n" : render_text(report));
  return status.errored ? exit_code::kBackend : exit_code::kOk;
}

struct SimulateArgs {
  std::optional<std::uint64_t> seed;
  std::size_t n = 100;
  std::optional<std::string> spec;
  std::int64_t tau = 4;
  std::string out_dir;
  double ci_lo = 1.0;
  double ci_hi = 2.5;
  std::size_t min_turns = 12;
  BackendChoice backend;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  if (!a.seed) throw ValidationError("simulate requires --seed");
  if (a.backend.kind != "lexicon") throw ValidationError("simulate needs the lexicon backend");
  auto set = a.spec ? load_spec(*a.spec) : spec::template_library(a.tau);
  auto linked = link_requirements(std::move(set), make_backend(a.backend));

  sim::DatasetOptions opts;
  opts.sessions = a.n;
  opts.seed = *a.seed;
  opts.complexity_lo = a.ci_lo;
  opts.complexity_hi = a.ci_hi;
  opts.min_turns = a.min_turns;
  const auto sessions = sim::generate_dataset(linked, opts);

  std::error_code ec;
  fs::create_directories(a.out_dir, ec);
  if (ec || !fs::is_directory(a.out_dir)) throw IoFailure("cannot create output directory " + a.out_dir);
  const fs::path dir = a.out_dir;
  std::vector<SessionRecord> records;
  for (const auto& ds : sessions) {
    const std::string& id = ds.record.session_id;
    write_file(dir / (id + ".jsonl"), serialize_transcript(ds.session.trace));
    write_file(dir / (id + ".context.json"), serialize_context(ds.session.context) + "\n");
    write_file(dir / (id + ".truth.json"), sim::ground_truth_to_json(id, ds.session.ground_truth) + "\n");
    records.push_back(ds.record);
  }
  write_file(dir / "dataset.csv", serialize_dataset(records));
  out << "wrote " << records.size() << " sessions to " << a.out_dir << "\n";
  return exit_code::kOk;
}

struct StatsArgs {
  std::string dataset;
  std::uint64_t min_turns = 0;
  std::uint64_t trials = 1000;
  std::uint64_t seed = 0;
  std::string format = "json";
};

std::string fmt_opt(const std::optional<double>& v) {
  if (!v) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", *v);
  return buf;
}

int cmd_stats(const StatsArgs& a, std::ostream& out) {
  const auto records = parse_dataset(read_file(a.dataset));
  StatsOptions opts;
  opts.min_turns = a.min_turns;
  opts.trials = a.trials;
  opts.seed = a.seed;
  const auto s = summarize(records, opts);
  if (a.format == "json") {
    out << summary_to_json(s, opts) << "\n";
    return exit_code::kOk;
  }
  out << "sessions: " << s.sessions << "\n";
  out << "complexity: min " << fmt_opt(s.complexity_min) << ", median " << fmt_opt(s.complexity_median) << ", mean "
      << fmt_opt(s.complexity_mean) << ", max " << fmt_opt(s.complexity_max) << "\n";
  out << "band occupancy: " << percent(s.band_occupancy) << "\n";
  out << "score vs complexity: r " << fmt_opt(s.score.r) << ", slope " << fmt_opt(s.score.slope) << ", p "
      << fmt_opt(s.score.p_value) << "\n";
  out << "dispute vs complexity: r " << fmt_opt(s.dispute.r) << ", slope " << fmt_opt(s.dispute.slope) << ", p "
      << fmt_opt(s.dispute.p_value) << "\n";
  out << "dispute rate: " << percent(s.dispute_rate) << "\n";
  return exit_code::kOk;
}

// ---- triage ---------------------------------------------------------------

ReporterRole parse_role(const std::string& name) {
  auto role = role_from_string(name);
  if (!role) throw ValidationError("unknown role '" + name + "'");
  return *role;
}

std::string report_text(const ErrorReport& r) {
  json j = {{"report_id", r.report_id},
            {"session_id", r.session_id},
            {"requirement_id", r.requirement_id ? json(*r.requirement_id) : json(nullptr)},
            {"status", to_string(r.status)}};
  if (r.resolution) j["category"] = to_string(r.resolution->category);
  return j.dump(2) + "\n";
}

struct TriageArgs {
  std::string ledger;
  // register
  std::string spec;
  std::string transcript;
  std::optional<std::string> session_id;
  std::optional<std::string> context;
  std::optional<std::string> recording;
  BackendChoice backend;
  // file / review / resolve
  std::string session;
  std::optional<std::string> requirement;
  std::string role = "trainee";
  std::string claim;
  std::string report;
  std::string category;
  std::string note;
  // summary
  std::string policy = "non_failures";
  double bucket_width = 0.25;
};

int cmd_triage_register(const TriageArgs& a, std::ostream& out) {
  const std::string spec_text = read_file(a.spec);
  auto set = load_spec(a.spec);
  const auto lexicon = load_lexicon(a.backend);
  std::shared_ptr<const PredicateBackend> backend =
      a.backend.kind == "external" ? make_backend(a.backend) : std::make_shared<LexiconBackend>(lexicon);
  auto linked = link_requirements(std::move(set), backend);

  const std::string transcript = read_file(a.transcript);
  const std::string id = a.session_id.value_or(fs::path(a.transcript).stem().string());
  Session s;
  s.trace = parse_transcript(transcript, id);
  s.context = load_context(a.context, a.transcript);
  s.assessment = evaluate_requirement_set(linked, s.trace, s.context);

  SessionEntry entry;
  entry.session_id = id;
  entry.complexity = complexity_index(
      {count_applicable(linked.requirements(), s.context), s.context.department_count,
       s.context.persona_profile_count, Eta{}});
  entry.transcript = transcript;
  entry.spec_text = spec_text;
  entry.lexicon_json = serialize_lexicon(lexicon);
  entry.context_json = serialize_context(s.context);
  entry.assessment_json = assessment_to_json(s.assessment, s.trace);
  entry.recording_ref = a.recording;

  Ledger ledger(fs::path(a.ledger));
  ledger.register_session(std::move(entry));
  out << "registered " << id << "\n";
  return exit_code::kOk;
}

int cmd_triage(const std::string& action, const TriageArgs& a, std::ostream& out) {
  if (action == "register") return cmd_triage_register(a, out);
  Ledger ledger{fs::path(a.ledger)};
  if (action == "file") {
    out << report_text(ledger.file_report(a.session, a.requirement, parse_role(a.role), a.claim));
  } else if (action == "review") {
    const auto bundle = ledger.assemble_evidence(a.report);
    json verdicts = json::array();
    for (const auto& v : bundle.verdicts) {
      verdicts.push_back({{"requirement_id", v.requirement_id}, {"outcome", to_string(v.outcome)}});
    }
    json doc = {{"report_id", a.report},
                {"status", "under_review"},
                {"turns", bundle.trace.size()},
                {"verdicts", verdicts},
                {"rationale", bundle.rationale},
                {"recording_ref", bundle.recording_ref ? json(*bundle.recording_ref) : json(nullptr)}};
    out << doc.dump(2) << "\n";
  } else if (action == "resolve") {
    const auto category = resolution_from_string(a.category);
    if (!category) throw ValidationError("unknown category '" + a.category + "'");
    out << report_text(ledger.resolve(a.report, *category, parse_role(a.role), a.note));
  } else if (action == "summary") {
    if (a.policy != "non_failures" && a.policy != "misattribution_only") {
      throw ValidationError("unknown policy '" + a.policy + "'");
    }
    const auto policy = a.policy == "non_failures" ? PhantomPolicy::NonFailures : PhantomPolicy::MisattributionOnly;
    out << summary_to_json(ledger.summary(policy, a.bucket_width)) << "\n";
  } else if (action == "compact") {
    ledger.compact();
    out << "compacted at sequence " << ledger.last_sequence() << "\n";
  }
  return exit_code::kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Protocol compliance checking for emergency call training sessions", "protocheck"};
  app.require_subcommand(1);

  CompileArgs compile_args;
  auto* compile = app.add_subcommand("compile", "Parse and link-check a requirement spec");
  compile->add_option("spec", compile_args.spec, "Spec file")->required();
  add_backend_options(compile, compile_args.backend);

  CheckArgs check_args;
  auto* check = app.add_subcommand("check", "Evaluate transcripts against a spec");
  check->add_option("input", check_args.input, "Transcript file or directory of .jsonl transcripts")->required();
  check->add_option("--spec", check_args.spec, "Spec file")->required();
  check->add_option("--context", check_args.context, "Scenario context JSON (a <name>.context.json sidecar wins)");
  check->add_option("--format", check_args.format)->check(CLI::IsMember({"text", "json"}))->capture_default_str();
  check->add_option("--threads", check_args.threads, "Requirement evaluation threads")->capture_default_str();
  add_backend_options(check, check_args.backend);

  DebriefArgs debrief_args;
  auto* debrief = app.add_subcommand("debrief", "Render a debrief report for one session");
  debrief->add_option("transcript", debrief_args.transcript)->required();
  debrief->add_option("--spec", debrief_args.spec)->required();
  debrief->add_option("--context", debrief_args.context);
  debrief->add_option("--format", debrief_args.format)->check(CLI::IsMember({"text", "json"}))->capture_default_str();
  add_backend_options(debrief, debrief_args.backend);

  SimulateArgs sim_args;
  auto* simulate = app.add_subcommand("simulate", "Generate a seeded synthetic dataset");
  simulate->add_option("--seed", sim_args.seed, "Random seed (required)");
  simulate->add_option("--n", sim_args.n, "Number of sessions")->capture_default_str()->check(CLI::PositiveNumber);
  simulate->add_option("--spec", sim_args.spec, "Spec file (default: built-in templates)");
  simulate->add_option("--tau", sim_args.tau, "Template parameter when no spec is given")->capture_default_str();
  simulate->add_option("--out", sim_args.out_dir, "Output directory")->required();
  simulate->add_option("--ci-lo", sim_args.ci_lo)->capture_default_str();
  simulate->add_option("--ci-hi", sim_args.ci_hi)->capture_default_str();
  simulate->add_option("--min-turns", sim_args.min_turns)->capture_default_str();
  add_backend_options(simulate, sim_args.backend);

  StatsArgs stats_args;
  auto* stats = app.add_subcommand("stats", "Summarize a session dataset");
  stats->add_option("--dataset", stats_args.dataset)->required();
  stats->add_option("--min-turns", stats_args.min_turns)->capture_default_str();
  stats->add_option("--trials", stats_args.trials)->capture_default_str();
  stats->add_option("--seed", stats_args.seed)->capture_default_str();
  stats->add_option("--format", stats_args.format)->check(CLI::IsMember({"text", "json"}))->capture_default_str();

  std::int64_t tau = 4;
  auto* templates = app.add_subcommand("templates", "Print the built-in rule templates as a spec");
  templates->add_option("--tau", tau)->capture_default_str();

  TriageArgs triage_args;
  auto* triage = app.add_subcommand("triage", "Operate the error-report ledger");
  triage->add_option("--ledger", triage_args.ledger)->required();
  triage->require_subcommand(1);
  auto* t_register = triage->add_subcommand("register", "Check a session and store it in the ledger");
  t_register->add_option("--spec", triage_args.spec)->required();
  t_register->add_option("--transcript", triage_args.transcript)->required();
  t_register->add_option("--session-id", triage_args.session_id);
  t_register->add_option("--context", triage_args.context);
  t_register->add_option("--recording", triage_args.recording);
  add_backend_options(t_register, triage_args.backend);
  auto* t_file = triage->add_subcommand("file", "File an error report");
  t_file->add_option("--session", triage_args.session)->required();
  t_file->add_option("--requirement", triage_args.requirement);
  t_file->add_option("--role", triage_args.role)->capture_default_str();
  t_file->add_option("--claim", triage_args.claim)->required();
  auto* t_review = triage->add_subcommand("review", "Assemble evidence and start review");
  t_review->add_option("--report", triage_args.report)->required();
  auto* t_resolve = triage->add_subcommand("resolve", "Resolve a report under review");
  t_resolve->add_option("--report", triage_args.report)->required();
  t_resolve->add_option("--category", triage_args.category)->required();
  t_resolve->add_option("--role", triage_args.role)->capture_default_str();
  t_resolve->add_option("--note", triage_args.note);
  auto* t_summary = triage->add_subcommand("summary", "Report counts and phantom rate");
  t_summary->add_option("--policy", triage_args.policy)->capture_default_str();
  t_summary->add_option("--bucket-width", triage_args.bucket_width)->capture_default_str();
  triage->add_subcommand("compact", "Rewrite the ledger as one snapshot");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_code::kOk : exit_code::kInput;
  }

  try {
    if (*compile) return cmd_compile(compile_args, out);
    if (*check) return cmd_check(check_args, out, err);
    if (*debrief) return cmd_debrief(debrief_args, out, err);
    if (*simulate) return cmd_simulate(sim_args, out);
    if (*stats) return cmd_stats(stats_args, out);
    if (*templates) {
      out << spec::serialize_spec(spec::template_library(tau));
      return exit_code::kOk;
    }
    if (*triage) {
      for (const char* name : {"register", "file", "review", "resolve", "summary", "compact"}) {
        if (triage->got_subcommand(name)) return cmd_triage(name, triage_args, out);
      }
    }
  } catch (const IoFailure& e) {
    err << "error: " << e.what() << "\n";
    return exit_code::kIo;
  } catch (const BackendError& e) {
    err << "backend error: " << e.what() << "\n";
    return exit_code::kBackend;
  } catch (const NotFoundError& e) {
    err << "rejected: " << e.what() << "\n";
    return exit_code::kRejected;
  } catch (const StateError& e) {
    err << "rejected: " << e.what() << "\n";
    return exit_code::kRejected;
  } catch (const AuthorizationError& e) {
    err << "rejected: " << e.what() << "\n";
    return exit_code::kRejected;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code::kInput;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code::kIo;
  } catch (const std::runtime_error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code::kIo;
  }
  return exit_code::kInput;
}

}  // namespace protocheck::cli
