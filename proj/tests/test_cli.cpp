#include <doctest.h>

#include <cstdlib>
#include <json.hpp>
#include <sstream>

#include "protocheck/cli.hpp"
#include "protocheck/simgen.hpp"
#include "support.hpp"

using namespace protocheck;
namespace ec = protocheck::cli::exit_code;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

struct Workspace {
  testsupport::TempDir dir;
  std::string spec = (dir / "rules.spec").string();
  std::string good = (dir / "good.jsonl").string();
  std::string bad = (dir / "bad.jsonl").string();

  Workspace() {
    testsupport::write_text(spec, spec::serialize_spec(spec::template_library(3)));
    const auto fx = testsupport::template_fixtures().front();
    testsupport::write_text(good, serialize_transcript(fx.satisfying));
    testsupport::write_text(bad, serialize_transcript(fx.violating));
  }
};

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("compile and templates") {
    Workspace w;
    const auto c = run({"compile", w.spec});
    CHECK(c.code == ec::kOk);
    CHECK(c.out.rfind("10 requirements\n", 0) == 0);
    const auto t = run({"templates", "--tau", "5"});
    CHECK(t.code == ec::kOk);
    CHECK(spec::parse_spec(t.out) == spec::template_library(5));
  }

  TEST_CASE("exit codes") {
    Workspace w;
    // Only ask_address is kept so the good transcript fully passes.
    testsupport::write_text(w.dir / "one.spec", "req ask_address {\n  detect calltaker[0,3] \"ask address\"\n}\n");
    const std::string one = (w.dir / "one.spec").string();
    CHECK(run({"check", w.good, "--spec", one}).code == ec::kOk);
    CHECK(run({"check", w.bad, "--spec", one}).code == ec::kCheckFailed);
    testsupport::write_text(w.dir / "broken.spec", "req x {\n  detect calltaker[3,1] \"ask address\"\n}\n");
    const auto broken = run({"check", w.good, "--spec", (w.dir / "broken.spec").string()});
    CHECK(broken.code == ec::kInput);
    CHECK(broken.err.find("line 2") != std::string::npos);
    testsupport::write_text(w.dir / "unlinked.spec", "req x {\n  detect calltaker[0,3] \"juggle\"\n}\n");
    CHECK(run({"compile", (w.dir / "unlinked.spec").string()}).code == ec::kInput);
    CHECK(run({"check", (w.dir / "missing.jsonl").string(), "--spec", one}).code == ec::kIo);
    CHECK(run({"check", w.good}).code == ec::kInput);
    CHECK(run({"simulate", "--out", w.dir.path().string()}).code == ec::kInput);
    CHECK(run({"bogus"}).code == ec::kInput);

    ::setenv("PREDICATE_ENDPOINT", "http://127.0.0.1:9/judge", 1);
    ::setenv("PREDICATE_TIMEOUT_MS", "200", 1);
    ::unsetenv("PREDICATE_CACHE_DIR");
    CHECK(run({"check", w.good, "--spec", one, "--backend", "external"}).code == ec::kBackend);
    ::unsetenv("PREDICATE_ENDPOINT");
    ::unsetenv("PREDICATE_TIMEOUT_MS");
  }

  TEST_CASE("json check output") {
    Workspace w;
    const auto r = run({"check", w.good, "--spec", w.spec, "--format", "json"});
    const auto doc = nlohmann::json::parse(r.out);
    CHECK(doc["schema"] == "protocheck.assessment/1");
    CHECK(doc["session_id"] == "good");
    const auto dir = run({"check", w.dir.path().string(), "--spec", w.spec, "--format", "json"});
    const auto many = nlohmann::json::parse(dir.out);
    CHECK(many["schema"] == "protocheck.check/1");
    CHECK(many["sessions"].size() == 2);
  }

  TEST_CASE("context sidecar wins over --context") {
    Workspace w;
    testsupport::write_text(w.dir / "one.spec",
                            "flags: vehicle_involved\nreq v {\n  when vehicle_involved;\n  detect calltaker[0,3] \"ask for vehicle description\"\n}\n");
    const std::string one = (w.dir / "one.spec").string();
    ScenarioContext on;
    on.flags = {"vehicle_involved"};
    testsupport::write_text(w.dir / "on.json", serialize_context(on));
    CHECK(run({"check", w.good, "--spec", one, "--context", (w.dir / "on.json").string()}).code == ec::kCheckFailed);
    testsupport::write_text(w.dir / "good.context.json", serialize_context({}));
    CHECK(run({"check", w.good, "--spec", one, "--context", (w.dir / "on.json").string()}).code == ec::kOk);
  }

  TEST_CASE("debrief") {
    Workspace w;
    const auto r = run({"debrief", w.bad, "--spec", w.spec});
    CHECK(r.code == ec::kOk);
    CHECK(r.out.find("What to work on:") != std::string::npos);
    const auto j = run({"debrief", w.bad, "--spec", w.spec, "--format", "json"});
    CHECK(nlohmann::json::parse(j.out)["schema"] == "protocheck.debrief/1");
  }

  TEST_CASE("simulate, check and stats") {
    testsupport::TempDir dir;
    const std::string out = (dir / "data").string();
    REQUIRE(run({"simulate", "--seed", "5", "--n", "12", "--out", out}).code == ec::kOk);
    const auto csv = testsupport::read_text(dir / "data" / "dataset.csv");
    CHECK(parse_dataset(csv).size() == 12);
    const auto spec_path = (dir / "t.spec").string();
    testsupport::write_text(spec_path, spec::serialize_spec(spec::template_library(4)));
    const auto check = run({"check", out, "--spec", spec_path, "--format", "json"});
    CHECK(check.code != ec::kBackend);
    const auto doc = nlohmann::json::parse(check.out);
    REQUIRE(doc["sessions"].size() == 12);
    for (const auto& s : doc["sessions"]) {
      const auto id = s["session_id"].get<std::string>();
      const auto truth = sim::ground_truth_from_json(testsupport::read_text(dir / "data" / (id + ".truth.json")));
      for (const auto& v : s["verdicts"])
        CHECK(std::string(to_string(truth.at(v["requirement_id"].get<std::string>()))) ==
              v["outcome"].get<std::string>());
    }
    const auto stats = run({"stats", "--dataset", (dir / "data" / "dataset.csv").string(), "--trials", "200"});
    CHECK(stats.code == ec::kOk);
    CHECK(nlohmann::json::parse(stats.out).contains("score"));
    CHECK(run({"stats", "--dataset", (dir / "nope.csv").string()}).code == ec::kIo);
  }

  TEST_CASE("triage workflow") {
    Workspace w;
    const std::string ledger = (w.dir / "ledger.jsonl").string();
    CHECK(run({"triage", "--ledger", ledger, "register", "--spec", w.spec, "--transcript", w.bad}).code == ec::kOk);
    const auto filed = run({"triage", "--ledger", ledger, "file", "--session", "bad", "--requirement", "ask_address",
                            "--claim", "I asked"});
    REQUIRE(filed.code == ec::kOk);
    const auto id = nlohmann::json::parse(filed.out)["report_id"].get<std::string>();
    CHECK(run({"triage", "--ledger", ledger, "file", "--session", "ghost", "--claim", "x"}).code == ec::kRejected);
    CHECK(run({"triage", "--ledger", ledger, "resolve", "--report", id, "--category", "misattribution", "--role", "qa"})
              .code == ec::kRejected);
    CHECK(run({"triage", "--ledger", ledger, "review", "--report", id}).code == ec::kOk);
    CHECK(run({"triage", "--ledger", ledger, "resolve", "--report", id, "--category", "misattribution"}).code ==
          ec::kRejected);
    CHECK(run({"triage", "--ledger", ledger, "resolve", "--report", id, "--category", "misattribution", "--role", "qa"})
              .code == ec::kOk);
    const auto summary = run({"triage", "--ledger", ledger, "summary"});
    CHECK(nlohmann::json::parse(summary.out)["phantom_rate"] == 1.0);
    CHECK(run({"triage", "--ledger", ledger, "compact"}).code == ec::kOk);
    CHECK(run({"triage", "--ledger", ledger, "summary"}).out == summary.out);
    testsupport::write_text(ledger, "garbage\n");
    CHECK(run({"triage", "--ledger", ledger, "summary"}).code == ec::kInput);
  }
}
