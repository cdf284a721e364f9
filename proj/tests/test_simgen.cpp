#include <doctest.h>

#include "protocheck/errors.hpp"
#include "protocheck/simgen.hpp"
#include "support.hpp"

using namespace protocheck;

namespace {

const LinkedSet& library() {
  static const LinkedSet linked =
      link_requirements(spec::template_library(4), std::make_shared<LexiconBackend>(builtin_lexicon()));
  return linked;
}

Outcome expected(sim::Planned p) {
  switch (p) {
    case sim::Planned::Satisfy: return Outcome::Pass;
    case sim::Planned::Violate: return Outcome::Fail;
    case sim::Planned::Inapplicable: return Outcome::NotApplicable;
  }
  return Outcome::Errored;
}

}  // namespace

TEST_SUITE("simgen") {
  TEST_CASE("planted outcomes hold under the monitor and the oracle") {
    const auto& linked = library();
    const auto& set = linked.requirements();
    for (std::uint64_t seed = 0; seed < 120; ++seed) {
      sim::ScenarioConfig cfg;
      cfg.seed = seed;
      cfg.persona = sim::random_persona(seed);
      const auto plan = sim::random_plan(set, seed);
      const auto g = sim::generate_session(cfg, plan, linked, "S");
      CHECK(g.trace.size() >= cfg.min_turns);
      const auto a = evaluate_requirement_set(linked, g.trace, g.context);
      for (const auto& r : set.requirements) {
        const auto it = plan.find(r.id);
        const auto want = expected(it == plan.end() ? sim::Planned::Satisfy : it->second.outcome);
        CHECK(g.ground_truth.at(r.id) == want);
        CHECK_MESSAGE(a.find(r.id)->outcome == want, r.id << " seed " << seed);
        if (want != Outcome::NotApplicable) {
          const auto turns = testsupport::oracle_turns(g.trace, linked.backend(), spec::actions(r.formula));
          CHECK(testsupport::oracle_holds(r.formula, turns) == (want == Outcome::Pass));
        }
      }
    }
  }

  TEST_CASE("seeded generation is reproducible") {
    const auto& linked = library();
    sim::ScenarioConfig cfg;
    cfg.seed = 99;
    const auto plan = sim::random_plan(linked.requirements(), 5);
    const auto a = sim::generate_session(cfg, plan, linked, "S");
    const auto b = sim::generate_session(cfg, plan, linked, "S");
    CHECK(serialize_transcript(a.trace) == serialize_transcript(b.trace));
    CHECK(a.context == b.context);
    cfg.seed = 100;
    CHECK(serialize_transcript(sim::generate_session(cfg, plan, linked, "S").trace) != serialize_transcript(a.trace));
    CHECK(sim::random_plan(linked.requirements(), 5) == plan);
    CHECK(sim::random_persona(3) == sim::random_persona(3));
  }

  TEST_CASE("placement hints are honoured") {
    const auto& linked = library();
    sim::CompliancePlan plan{{"ask_address", {sim::Planned::Satisfy, 2}}};
    const auto g = sim::generate_session({}, plan, linked, "S");
    const auto ct = project(g.trace, Party::CallTaker);
    const LexiconBackend lex(builtin_lexicon());
    CHECK(lex.evaluate(ct.at(2).text, "ask address"));
  }

  TEST_CASE("unrealizable plans") {
    const auto& linked = library();
    CHECK_THROWS_AS(sim::generate_session({}, {{"nope", {}}}, linked, "S"), ValidationError);
    CHECK_THROWS_AS(sim::generate_session({}, {{"ask_address", {sim::Planned::Violate, 1}}}, linked, "S"),
                    ValidationError);
    try {
      sim::generate_session({}, {{"ask_address", {sim::Planned::Inapplicable, {}}}}, linked, "S");
      FAIL("expected GenerationError");
    } catch (const GenerationError& e) {
      CHECK(e.requirement_id() == "ask_address");
    }
    const auto tokens = link_requirements(linked.requirements(), std::make_shared<testsupport::TokenBackend>());
    CHECK_THROWS_AS(sim::generate_session({}, {}, tokens, "S"), ValidationError);
  }

  TEST_CASE("ground truth json") {
    std::map<std::string, Outcome> truth{{"a", Outcome::Pass}, {"b", Outcome::NotApplicable}};
    CHECK(sim::ground_truth_from_json(sim::ground_truth_to_json("S", truth)) == truth);
    CHECK_THROWS_AS(sim::ground_truth_from_json("{\"outcomes\":{\"a\":\"great\"}}"), ValidationError);
    CHECK(sim::incident_catalog().size() == 57);
  }

  TEST_CASE("dataset follows the complexity schedule") {
    sim::DatasetOptions opt;
    opt.sessions = 40;
    opt.seed = 7;
    const auto data = sim::generate_dataset(library(), opt);
    REQUIRE(data.size() == 40);
    for (const auto& d : data) {
      CHECK(d.record.complexity >= 0.9);
      CHECK(d.record.complexity <= 2.6);
      CHECK(d.record.turn_count == d.session.trace.size());
      CHECK(d.record.score == doctest::Approx(compliance_score(
                                  evaluate_requirement_set(library(), d.session.trace, d.session.context).verdicts)
                                                  .value_or(1.0)));
    }
    CHECK(data.front().record.complexity < data.back().record.complexity);
  }
}
