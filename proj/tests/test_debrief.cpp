#include <doctest.h>

#include <algorithm>
#include <json.hpp>

#include "protocheck/debrief.hpp"
#include "protocheck/errors.hpp"
#include "protocheck/simgen.hpp"
#include "support.hpp"

using namespace protocheck;

TEST_SUITE("debrief") {
  TEST_CASE("strengths quote the witness and precede improvements") {
    const auto set = spec::template_library(3);
    const auto linked = link_requirements(set, std::make_shared<LexiconBackend>(builtin_lexicon()));
    for (const auto& fx : testsupport::template_fixtures()) {
      const Trace t = fx.satisfying;
      const auto a = evaluate_requirement_set(linked, t, fx.context);
      const auto report = generate_report(a, set, t, fx.context);
      const auto* v = a.find(fx.requirement.id);
      REQUIRE(v);
      REQUIRE(v->outcome == Outcome::Pass);
      const auto it = std::find_if(report.strengths.begin(), report.strengths.end(),
                                   [&](const Strength& s) { return s.requirement_id == fx.requirement.id; });
      REQUIRE(it != report.strengths.end());
      if (it->turn) CHECK(*it->quote == t.at(*it->turn).text);
      const std::string text = render_text(report);
      if (!report.strengths.empty() && !report.improvements.empty())
        CHECK(text.find("What went well:") < text.find("What to work on:"));
    }
  }

  TEST_CASE("complexity and band line") {
    const auto set = spec::template_library(3);
    ScenarioContext ctx;
    ctx.department_count = 1;
    Assessment a;
    a.session_id = "S";
    const auto report = generate_report(a, set, testsupport::make_trace({{testsupport::CT, "hi"}}), ctx);
    REQUIRE(report.complexity);
    CHECK(*report.complexity == doctest::Approx(complexity_index({count_applicable(set, ctx), 1, 0, {}})));
    CHECK(render_text(report).find("No applicable requirements") != std::string::npos);
    const auto doc = nlohmann::json::parse(report_to_json(report));
    CHECK(doc["schema"] == "protocheck.debrief/1");
    CHECK(doc["score"].is_null());
  }

  TEST_CASE("errored checks are listed but not scored") {
    spec::RequirementSet set;
    set.requirements.push_back({"r1", "Ask", std::nullopt, spec::detect(spec::Window::anywhere(Party::Both), "a"),
                                spec::Severity::Mandatory, {}});
    Assessment a;
    a.verdicts.push_back({"r1", spec::Severity::Mandatory, Outcome::Errored, {}, "", "timeout"});
    const auto report = generate_report(a, set, testsupport::make_trace({{testsupport::CT, "x"}}), {});
    REQUIRE(report.errored.size() == 1);
    CHECK(report.strengths.empty());
    CHECK(render_text(report).find("timeout") != std::string::npos);
  }

  TEST_CASE("integrity") {
    spec::RequirementSet set;
    Assessment a;
    a.verdicts.push_back({"ghost", spec::Severity::Mandatory, Outcome::Pass, {}, "", ""});
    CHECK_THROWS_AS(generate_report(a, set, testsupport::make_trace({{testsupport::CT, "x"}}), {}), IntegrityError);
    set.requirements.push_back({"ghost", "", std::nullopt, spec::detect(spec::Window::anywhere(Party::Both), "a"),
                                spec::Severity::Mandatory, {}});
    a.verdicts[0].witnesses = {{"detect", "a", 3}};
    CHECK_THROWS_AS(generate_report(a, set, testsupport::make_trace({{testsupport::CT, "x"}}), {}), IntegrityError);
  }

  TEST_CASE("balance over simulated sessions") {
    const auto set = spec::template_library(4);
    const auto linked = link_requirements(set, std::make_shared<LexiconBackend>(builtin_lexicon()));
    int mixed = 0;
    for (std::uint64_t seed = 0; seed < 60; ++seed) {
      sim::ScenarioConfig cfg;
      cfg.seed = seed;
      const auto plan = sim::random_plan(set, seed);
      const auto g = sim::generate_session(cfg, plan, linked, "S");
      const auto a = evaluate_requirement_set(linked, g.trace, g.context);
      const auto report = generate_report(a, set, g.trace, g.context);
      const std::string text = render_text(report);
      bool pass = false, fail = false;
      for (const auto& v : a.verdicts) {
        pass = pass || v.outcome == Outcome::Pass;
        fail = fail || v.outcome == Outcome::Fail;
      }
      if (pass && fail) {
        ++mixed;
        CHECK_FALSE(report.strengths.empty());
        CHECK(text.find("What went well:") < text.find("What to work on:"));
      }
    }
    CHECK(mixed > 10);
  }
}
