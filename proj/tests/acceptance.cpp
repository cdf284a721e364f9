// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <json.hpp>
#include <map>
#include <sstream>
#include <string>

#include "protocheck/analytics.hpp"
#include "protocheck/cli.hpp"
#include "protocheck/debrief.hpp"
#include "protocheck/errors.hpp"
#include "protocheck/simgen.hpp"
#include "protocheck/triage.hpp"
#include "support.hpp"

using namespace protocheck;
namespace fs = std::filesystem;

namespace {

struct Result {
  bool ok = true;
  std::string detail;
};

// Collects the first failure message; later ones only bump the count.
class Tally {
 public:
  void expect(bool cond, const std::string& what) {
    if (cond) return;
    if (failures_++ == 0) first_ = what;
  }
  bool ok() const { return failures_ == 0; }
  std::string detail() const {
    return failures_ == 0 ? std::string() : std::to_string(failures_) + " failure(s), first: " + first_;
  }

 private:
  std::size_t failures_ = 0;
  std::string first_;
};

int cli_run(const std::vector<std::string>& args, std::string* out = nullptr) {
  std::ostringstream o, e;
  const int code = cli::run(args, o, e);
  if (out) *out = o.str();
  return code;
}

std::string directory_digest(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::string all;
  for (const auto& f : files) all += f.filename().string() + "\n" + testsupport::read_text(f) + "\n";
  return sha256_hex(all);
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// ---- 1 ----------------------------------------------------------------------

Result templates_roundtrip() {
  Tally t;
  const auto backend = std::make_shared<LexiconBackend>(builtin_lexicon());
  for (const auto& fx : testsupport::template_fixtures()) {
    spec::RequirementSet one;
    one.flags = spec::template_library(3).flags;
    one.requirements.push_back(fx.requirement);
    const auto text = spec::serialize_spec(one);
    const auto back = spec::parse_spec(text);
    t.expect(back == one, fx.requirement.id + " does not round-trip");
    t.expect(spec::serialize_spec(back) == text, fx.requirement.id + " serialization unstable");
    const auto linked = link_requirements(back, backend);
    const auto pass = evaluate_requirement_set(linked, fx.satisfying, fx.context);
    const auto fail = evaluate_requirement_set(linked, fx.violating, fx.context);
    t.expect(pass.verdicts.at(0).outcome == Outcome::Pass, fx.requirement.id + " satisfying trace not Pass");
    t.expect(fail.verdicts.at(0).outcome == Outcome::Fail, fx.requirement.id + " violating trace not Fail");
  }
  t.expect(spec::parse_spec(spec::serialize_spec(spec::template_library(3))) == spec::template_library(3),
           "library does not round-trip");
  return {t.ok(), t.ok() ? "10 templates, 20 traces" : t.detail()};
}

// ---- 2 ----------------------------------------------------------------------

Result oracle_equivalence() {
  const testsupport::TokenBackend tokens;
  Rng rng(20261015);
  std::size_t agree = 0;
  Tally t;
  for (int i = 0; i < 1000; ++i) {
    const auto f = testsupport::random_formula(rng, 3);
    const auto trace = testsupport::random_trace(rng, 8);
    const bool want = testsupport::oracle_holds(f, testsupport::oracle_turns(trace, tokens, {"a", "b"}));
    const bool got = evaluate(f, trace, tokens).holds;
    if (want == got) ++agree;
    t.expect(want == got, spec::to_text(f));
  }
  return {t.ok(), std::to_string(agree) + "/1000 agree" + (t.ok() ? "" : "; " + t.detail())};
}

// ---- 3 / 8 ------------------------------------------------------------------

struct PlantedRun {
  std::size_t verdicts = 0;
  std::size_t matched = 0;
  std::size_t mixed = 0;
  std::size_t balanced = 0;
  std::string digest;
  int code = 0;
};

PlantedRun planted_truth(const fs::path& dir, std::uint64_t seed) {
  PlantedRun run;
  const auto set = spec::template_library(4);
  const auto linked = link_requirements(set, std::make_shared<LexiconBackend>(builtin_lexicon()));
  const auto spec_path = dir / "rules.spec";
  const auto data = dir / "sessions";
  fs::create_directories(data);
  testsupport::write_text(spec_path, spec::serialize_spec(set));
  std::map<std::string, std::map<std::string, Outcome>> truth;
  for (std::size_t i = 0; i < 500; ++i) {
    char id[16];
    std::snprintf(id, sizeof id, "P-%04zu", i);
    sim::ScenarioConfig cfg;
    cfg.seed = derive_seed(seed, i);
    cfg.persona = sim::random_persona(derive_seed(seed, 1000 + i));
    cfg.incident_type = sim::incident_catalog()[i % sim::incident_catalog().size()];
    const auto plan = sim::random_plan(set, derive_seed(seed, 2000 + i));
    const auto g = sim::generate_session(cfg, plan, linked, id);
    testsupport::write_text(data / (std::string(id) + ".jsonl"), serialize_transcript(g.trace));
    testsupport::write_text(data / (std::string(id) + ".context.json"), serialize_context(g.context));
    truth[id] = g.ground_truth;
  }
  std::string out;
  run.code = cli_run({"check", data.string(), "--spec", spec_path.string(), "--format", "json"}, &out);
  testsupport::write_text(dir / "check.json", out);
  const auto doc = nlohmann::json::parse(out);
  for (const auto& s : doc["sessions"]) {
    const auto id = s["session_id"].get<std::string>();
    const auto assessment = assessment_from_json(s.dump());
    bool pass = false, fail = false;
    for (const auto& v : assessment.verdicts) {
      ++run.verdicts;
      if (truth.at(id).at(v.requirement_id) == v.outcome) ++run.matched;
      pass = pass || v.outcome == Outcome::Pass;
      fail = fail || v.outcome == Outcome::Fail;
    }
    if (pass && fail) {
      ++run.mixed;
      const auto trace = parse_transcript(testsupport::read_text(data / (id + ".jsonl")), id);
      const auto ctx = parse_context(testsupport::read_text(data / (id + ".context.json")));
      const auto report = generate_report(assessment, set, trace, ctx);
      const auto text = render_text(report);
      const auto well = text.find("What went well:");
      const auto work = text.find("What to work on:");
      if (!report.strengths.empty() && well != std::string::npos && work != std::string::npos && well < work)
        ++run.balanced;
    }
  }
  run.digest = directory_digest(data) + sha256_hex(out);
  return run;
}

// ---- 7 ----------------------------------------------------------------------

struct TrendRun {
  StatsSummary stats;
  std::string digest;
  int code = 0;
};

TrendRun constructed_trend(const fs::path& dir, std::uint64_t seed) {
  TrendRun run;
  const auto out = dir / "dataset";
  run.code = cli_run({"simulate", "--seed", std::to_string(seed), "--n", "200", "--out", out.string()});
  std::string stats_json;
  if (run.code == 0)
    run.code = cli_run({"stats", "--dataset", (out / "dataset.csv").string(), "--trials", "2000", "--seed", "1"},
                       &stats_json);
  StatsOptions opt;
  opt.trials = 2000;
  opt.seed = 1;
  run.stats = summarize(parse_dataset(testsupport::read_text(out / "dataset.csv")), opt);
  run.digest = directory_digest(out) + sha256_hex(stats_json);
  return run;
}

// ---- 9 ----------------------------------------------------------------------

Result triage_sequences() {
  Tally t;
  const auto set = spec::template_library(3);
  const auto fx = testsupport::template_fixtures().front();
  const auto linked = link_requirements(set, std::make_shared<LexiconBackend>(builtin_lexicon()));
  auto a = evaluate_requirement_set(linked, fx.violating, fx.context);
  SessionEntry entry;
  entry.session_id = "S";
  entry.transcript = serialize_transcript(fx.violating);
  entry.spec_text = spec::serialize_spec(set);
  entry.context_json = serialize_context(fx.context);
  entry.assessment_json = assessment_to_json(a, fx.violating);

  Rng rng(9);
  std::size_t steps = 0;
  for (int seq = 0; seq < 10000; ++seq) {
    Ledger ledger([n = std::int64_t{0}]() mutable { return ++n; });
    ledger.register_session(entry);
    std::map<std::string, ReportStatus> seen;
    std::size_t filed = 0;
    const auto length = 4 + rng.below(12);
    for (std::uint64_t k = 0; k < length; ++k, ++steps) {
      const auto all = ledger.reports();
      const std::string id =
          all.empty() || rng.below(6) == 0 ? "R-424242" : all[rng.below(all.size())].report_id;
      const auto role = static_cast<ReporterRole>(rng.below(3));
      try {
        switch (rng.below(3)) {
          case 0:
            ledger.file_report("S", std::nullopt, role, "claim");
            ++filed;
            break;
          case 1:
            ledger.assemble_evidence(id);
            break;
          default:
            ledger.resolve(id, static_cast<ResolutionCategory>(rng.below(3)), role, "");
        }
      } catch (const NotFoundError&) {
      } catch (const StateError&) {
      } catch (const AuthorizationError&) {
      }
      std::size_t counted[3] = {0, 0, 0};
      for (const auto& r : ledger.reports()) {
        const auto prev = seen.find(r.report_id);
        t.expect(prev == seen.end() || static_cast<int>(r.status) >= static_cast<int>(prev->second),
                 "backward transition on " + r.report_id);
        t.expect(!(prev != seen.end() && prev->second == ReportStatus::Resolved && r.resolution &&
                   r.resolution->resolved_at != ledger.report(r.report_id)->resolution->resolved_at),
                 "double resolution");
        t.expect(r.resolution.has_value() == (r.status == ReportStatus::Resolved), "resolution/status mismatch");
        seen[r.report_id] = r.status;
        ++counted[static_cast<int>(r.status)];
      }
      const auto s = ledger.summary();
      t.expect(s.open == counted[0] && s.under_review == counted[1] && s.resolved == counted[2], "summary drift");
      t.expect(s.open + s.under_review + s.resolved == filed, "report conservation");
    }
  }
  return {t.ok(), "10000 sequences, " + std::to_string(steps) + " operations" + (t.ok() ? "" : "; " + t.detail())};
}

// ---------------------------------------------------------------------------

struct Criterion {
  int number;
  const char* name;
  double limit_seconds;  // 0: no time limit
  std::function<Result()> body;
};

}  // namespace

int main() {
  testsupport::TempDir work;
  PlantedRun planted_a;
  TrendRun trend_a;

  std::vector<Criterion> criteria;
  criteria.push_back({1, "template coverage", 1.0, templates_roundtrip});
  criteria.push_back({2, "monitor/oracle equivalence", 10.0, oracle_equivalence});
  criteria.push_back({3, "planted-truth accuracy", 30.0, [&] {
                        planted_a = planted_truth(work / "planted-a", 77);
                        const bool ok = planted_a.verdicts > 0 && planted_a.matched == planted_a.verdicts &&
                                        planted_a.code != cli::exit_code::kBackend;
                        return Result{ok, std::to_string(planted_a.matched) + "/" +
                                                std::to_string(planted_a.verdicts) + " verdicts over 500 sessions"};
                      }});
  criteria.push_back({4, "complexity index and band", 0.0, [] {
                        Tally t;
                        t.expect(complexity_index({0, 0, 0, {}}) == 0.0, "CI(0,0,0) != 0");
                        t.expect(std::abs(Eta{}.value() - 1.0 / 15.6) <= 1e-12, "eta != 1/15.6");
                        t.expect(in_calibrated_band(1.34), "1.34 rejected");
                        t.expect(in_calibrated_band(1.57), "1.57 rejected");
                        t.expect(!in_calibrated_band(1.3399), "1.3399 accepted");
                        t.expect(!in_calibrated_band(1.5701), "1.5701 accepted");
                        return Result{t.ok(), t.ok() ? "exact" : t.detail()};
                      }});
  criteria.push_back({5, "phantom rate fixture", 0.0, [] {
                        Ledger ledger([n = std::int64_t{0}]() mutable { return ++n; });
                        ScenarioContext ctx;
                        SessionEntry e;
                        e.session_id = "S";
                        e.transcript = serialize_transcript(testsupport::make_trace({{testsupport::CT, "hello"}}));
                        e.assessment_json = assessment_to_json(Assessment{"S", {}, std::nullopt},
                                                               testsupport::make_trace({{testsupport::CT, "hello"}}));
                        ledger.register_session(e);
                        for (int i = 0; i < 85; ++i) {
                          const auto r = ledger.file_report("S", std::nullopt, ReporterRole::Trainee, "claim");
                          ledger.assemble_evidence(r.report_id);
                          ledger.resolve(r.report_id,
                                         i < 24 ? ResolutionCategory::Misattribution : ResolutionCategory::GenuineFailure,
                                         ReporterRole::QA, "");
                        }
                        const auto s = ledger.summary(PhantomPolicy::MisattributionOnly);
                        const double pct = s.phantom_rate.value_or(-1) * 100;
                        return Result{s.resolved == 85 && std::abs(pct - 28.24) <= 0.005,
                                        fmt("%.4f%% of 85 resolved", pct)};
                      }});
  criteria.push_back({6, "statistics oracles", 5.0, [] {
                        Tally t;
                        Rng rng(6);
                        double worst = 0;
                        for (int k = 0; k < 100; ++k) {
                          std::vector<double> xs(50), ys(50);
                          for (int i = 0; i < 50; ++i) {
                            xs[i] = rng.uniform() * 3;
                            ys[i] = rng.uniform() - 0.5 * xs[i];
                          }
                          long double n = 50, sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
                          for (int i = 0; i < 50; ++i) {
                            sx += xs[i];
                            sy += ys[i];
                            sxx += (long double)xs[i] * xs[i];
                            syy += (long double)ys[i] * ys[i];
                            sxy += (long double)xs[i] * ys[i];
                          }
                          const double r = static_cast<double>((n * sxy - sx * sy) /
                                                               (std::sqrt(n * sxx - sx * sx) * std::sqrt(n * syy - sy * sy)));
                          const double b = static_cast<double>((n * sxy - sx * sy) / (n * sxx - sx * sx));
                          const double dr = std::abs(*pearson(xs, ys) - r);
                          const double db = std::abs(*linear_slope(xs, ys) - b);
                          worst = std::max({worst, dr, db});
                          t.expect(dr <= 1e-9 && db <= 1e-9, "fixture " + std::to_string(k));
                          const auto p = permutation_pvalue(xs, ys, 200, 1000 + k);
                          t.expect(p == permutation_pvalue(xs, ys, 200, 1000 + k), "p-value not deterministic");
                        }
                        return Result{t.ok(), fmt("max deviation %.3g", worst) + (t.ok() ? "" : "; " + t.detail())};
                      }});
  criteria.push_back({7, "constructed trend", 10.0, [&] {
                        trend_a = constructed_trend(work / "trend-a", 7);
                        const auto& s = trend_a.stats;
                        const double rs = s.score.r.value_or(0), rd = s.dispute.r.value_or(0);
                        const double ps = s.score.p_value.value_or(1), pd = s.dispute.p_value.value_or(1);
                        const bool ok = trend_a.code == 0 && rs < -0.3 && rd > 0.3 && ps < 0.05 && pd < 0.05;
                        return Result{ok, fmt("r(score) %+.3f", rs) + fmt(" p %.4f", ps) + fmt(", r(dispute) %+.3f", rd) +
                                                fmt(" p %.4f", pd)};
                      }});
  criteria.push_back({8, "debrief balance", 0.0, [&] {
                        const bool ok = planted_a.mixed > 0 && planted_a.balanced == planted_a.mixed;
                        return Result{ok, std::to_string(planted_a.balanced) + "/" + std::to_string(planted_a.mixed) +
                                                " mixed assessments balanced"};
                      }});
  criteria.push_back({9, "triage state machine", 10.0, triage_sequences});
  criteria.push_back({10, "determinism", 0.0, [&] {
                        const auto planted_b = planted_truth(work / "planted-b", 77);
                        const auto trend_b = constructed_trend(work / "trend-b", 7);
                        const bool ok = !planted_a.digest.empty() && planted_a.digest == planted_b.digest &&
                                        !trend_a.digest.empty() && trend_a.digest == trend_b.digest;
                        return Result{ok, ok ? "reruns of 3 and 7 byte-identical" : "artifacts differ"};
                      }});

  int failed = 0;
  for (const auto& c : criteria) {
    Result result;
    const auto start = std::chrono::steady_clock::now();
    try {
      result = c.body();
    } catch (const std::exception& e) {
      result = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.limit_seconds > 0 && secs >= c.limit_seconds) {
      result.ok = false;
      result.detail += fmt("; over the %.0f s limit", c.limit_seconds);
    }
    std::printf("%s  %2d  %-28s %7.3f s  %s\n", result.ok ? "PASS" : "FAIL", c.number, c.name, secs,
                result.detail.c_str());
    std::fflush(stdout);
    failed += result.ok ? 0 : 1;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
