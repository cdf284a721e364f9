#pragma once

// Seeded synthetic sessions with planted ground truth. Generated traces are
// realized from lexicon patterns so that the lexicon backend reproduces the
// planned verdicts exactly.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "protocheck/analytics.hpp"
#include "protocheck/monitor.hpp"
#include "protocheck/predicate.hpp"
#include "protocheck/trace.hpp"

namespace protocheck::sim {

enum class Planned { Satisfy, Violate, Inapplicable };
std::string_view to_string(Planned planned) noexcept;

struct PlanEntry {
  Planned outcome = Planned::Satisfy;
  // Party-local turn for the outermost window of a satisfied requirement.
  std::optional<std::size_t> placement;

  bool operator==(const PlanEntry&) const = default;
};

using CompliancePlan = std::map<std::string, PlanEntry>;

struct Persona {
  std::string age_band = "adult";
  std::string emotional_state = "calm";
  std::string language_proficiency = "fluent";
  std::vector<std::string> vulnerability_factors;

  bool operator==(const Persona&) const = default;
};

// The seed incident types scenarios are drawn from.
const std::vector<std::string>& incident_catalog();
Persona random_persona(std::uint64_t seed);

struct ScenarioConfig {
  std::string incident_type = "medical_emergency";
  std::set<std::string> flags;  // starting flags; guard flags are adjusted to fit the plan
  Persona persona;
  std::uint64_t department_count = 1;
  std::uint64_t caller_profiles = 0;
  std::uint64_t seed = 0;
  std::size_t min_turns = 12;  // merged turns
};

struct GeneratedSession {
  Trace trace;
  ScenarioContext context;
  std::map<std::string, Outcome> ground_truth;
};

// Requirements the plan leaves out are planned as Satisfy.
// Throws GenerationError naming the requirement that cannot be realized,
// and ValidationError when the plan names unknown requirements or the
// linked backend is not a lexicon.
GeneratedSession generate_session(const ScenarioConfig& config, const CompliancePlan& plan,
                                  const LinkedSet& linked, const std::string& session_id = {});

struct PlanOdds {
  double inapplicable = 0.2;  // chance a guarded requirement is switched off
  double violate = 0.3;
};

CompliancePlan random_plan(const spec::RequirementSet& set, std::uint64_t seed, const PlanOdds& odds = {});

// {"schema":"protocheck.truth/1","session_id":..,"outcomes":{id: outcome}}.
std::string ground_truth_to_json(const std::string& session_id, const std::map<std::string, Outcome>& truth);
std::map<std::string, Outcome> ground_truth_from_json(std::string_view json_text);

struct DatasetOptions {
  std::size_t sessions = 100;
  double complexity_lo = 1.0;  // linear schedule from lo to hi
  double complexity_hi = 2.5;
  double violate_lo = 0.05;  // violation probability at lo and hi
  double violate_hi = 0.6;
  double dispute_lo = 0.02;  // dispute probability at lo and hi
  double dispute_hi = 0.85;
  std::size_t min_turns = 12;
  std::uint64_t seed = 0;
};

struct DatasetSession {
  GeneratedSession session;
  CompliancePlan plan;
  SessionRecord record;
};

// Sessions follow the complexity schedule as closely as the requirement set
// allows; scores come from the planted violations.
std::vector<DatasetSession> generate_dataset(const LinkedSet& linked, const DatasetOptions& options);

}  // namespace protocheck::sim
