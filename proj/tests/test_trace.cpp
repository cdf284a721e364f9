#include <doctest.h>

#include "protocheck/errors.hpp"
#include "protocheck/random.hpp"
#include "protocheck/trace.hpp"
#include "support.hpp"

using namespace protocheck;
using testsupport::CL;
using testsupport::CT;

TEST_SUITE("trace") {
  TEST_CASE("merge interleaves per the tag sequence") {
    const std::vector<Line> ct = {{"A1", std::nullopt}, {"A2", std::nullopt}};
    const std::vector<Line> cl = {{"B1", std::nullopt}};
    const std::vector<Speaker> tags = {CT, CL, CT};
    const Trace t = merge_traces(ct, cl, tags, "s");
    REQUIRE(t.size() == 3);
    CHECK(t.at(0).text == "A1");
    CHECK(t.at(1).text == "B1");
    CHECK(t.at(2).text == "A2");
    CHECK(t.at(2).global_index == 2);
    const auto proj = project(t, Party::CallTaker);
    REQUIRE(proj.size() == 2);
    CHECK(proj[0].text == "A1");
    CHECK(proj[1].text == "A2");
    CHECK(proj[1].global_index == 2);
    CHECK(project(t, Party::Both).size() == 3);
  }

  TEST_CASE("merge of nothing is the empty trace") {
    const Trace t = merge_traces({}, {}, {});
    CHECK(t.empty());
    CHECK(project(t, Party::Caller).empty());
  }

  TEST_CASE("merge rejects count mismatches") {
    const std::vector<Line> ct = {{"A1", std::nullopt}};
    const std::vector<Speaker> too_many = {CT, CT};
    CHECK_THROWS_AS(merge_traces(ct, {}, too_many), ValidationError);
    const std::vector<Speaker> wrong_party = {CL};
    CHECK_THROWS_AS(merge_traces(ct, {}, wrong_party), ValidationError);
  }

  TEST_CASE("trace invariants") {
    CHECK_THROWS_AS(Trace("s", {{0, CT, "   ", std::nullopt}}), ValidationError);
    CHECK_THROWS_AS(Trace("s", {{1, CT, "hi", std::nullopt}}), ValidationError);
    CHECK_THROWS_AS(Trace("s", {{0, CT, "a", 500}, {1, CL, "b", 100}}), ValidationError);
    CHECK_NOTHROW(Trace("s", {{0, CT, "a", 100}, {1, CL, "b", std::nullopt}, {2, CT, "c", 100}}));
  }

  TEST_CASE("projections partition the trace") {
    Rng rng(11);
    for (int i = 0; i < 200; ++i) {
      const Trace t = testsupport::random_trace(rng, 12);
      const auto ct = project(t, Party::CallTaker);
      const auto cl = project(t, Party::Caller);
      CHECK(ct.size() + cl.size() == project(t, Party::Both).size());
      std::vector<Utterance> merged(ct.begin(), ct.end());
      merged.insert(merged.end(), cl.begin(), cl.end());
      std::sort(merged.begin(), merged.end(),
                [](const Utterance& a, const Utterance& b) { return a.global_index < b.global_index; });
      CHECK(Trace(t.session_id(), merged) == t);
    }
  }

  TEST_CASE("transcript parsing") {
    const std::string text =
        "# training call 17\n"
        "{\"turn\":0,\"speaker\":\"calltaker\",\"text\":\"911, what is your emergency?\",\"t_ms\":0}\n"
        "{\"turn\":1,\"speaker\":\"caller\",\"text\":\"My neighbor's house is on fire.\",\"t_ms\":2100}\n";
    const Trace t = parse_transcript(text, "call17");
    REQUIRE(t.size() == 2);
    CHECK(t.session_id() == "call17");
    CHECK(t.at(1).speaker == CL);
    CHECK(t.at(1).timestamp_ms == 2100u);
    CHECK(parse_transcript(serialize_transcript(t), "call17") == t);
    CHECK(parse_transcript("").empty());
  }

  TEST_CASE("transcript errors carry the line") {
    const std::string empty_text =
        "{\"turn\":0,\"speaker\":\"calltaker\",\"text\":\"Hello\"}\n"
        "{\"turn\":1,\"speaker\":\"caller\",\"text\":\"\"}\n";
    try {
      parse_transcript(empty_text);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 2);
    }
    CHECK_THROWS_AS(parse_transcript("{\"turn\":0,\"speaker\":\"dispatcher\",\"text\":\"x\"}\n"), ParseError);
    CHECK_THROWS_AS(parse_transcript("not json\n"), ParseError);
    const std::string dup =
        "{\"turn\":0,\"speaker\":\"calltaker\",\"text\":\"a\"}\n"
        "{\"turn\":0,\"speaker\":\"caller\",\"text\":\"b\"}\n";
    CHECK_THROWS_AS(parse_transcript(dup), ValidationError);
  }

  TEST_CASE("scenario context") {
    ScenarioContext c;
    c.flags = {"vehicle_involved", "scene_unsafe"};
    c.incident_type = "traffic_collision";
    c.department_count = 2;
    c.persona_profile_count = 1;
    CHECK(parse_context(serialize_context(c)) == c);
    CHECK(is_flag_identifier("patient_not_breathing"));
    CHECK_FALSE(is_flag_identifier("Patient"));
    CHECK_FALSE(is_flag_identifier("two__underscores"));
    CHECK_FALSE(is_flag_identifier(""));
    CHECK_THROWS_AS(parse_context(R"({"flags":["Bad-Flag"]})"), ValidationError);
  }
}
