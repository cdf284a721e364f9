#pragma once

// Balanced post-session debriefs: completed steps quoted back as strengths
// ahead of the missed steps.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "protocheck/monitor.hpp"
#include "protocheck/specdsl.hpp"
#include "protocheck/trace.hpp"

namespace protocheck {

struct Strength {
  std::string requirement_id;
  std::string description;
  std::optional<std::string> quote;  // absent for vacuously satisfied rules
  std::optional<std::size_t> turn;
};

struct Improvement {
  std::string requirement_id;
  std::string description;
  std::string expected_action;
  std::string window;
};

struct ErroredCheck {
  std::string requirement_id;
  std::string error;
};

struct DebriefReport {
  std::string session_id;
  std::vector<Strength> strengths;        // Pass verdicts, by requirement id
  std::vector<Improvement> improvements;  // Fail verdicts, by requirement id
  std::vector<std::string> not_applicable;
  std::vector<ErroredCheck> errored;  // infrastructure failures, never scored
  std::optional<double> score;
  std::optional<double> complexity;
};

// Throws IntegrityError when a verdict cites a turn that is not in `trace`
// or a requirement missing from `requirements`.
DebriefReport generate_report(const Assessment& assessment, const spec::RequirementSet& requirements,
                              const Trace& trace, const ScenarioContext& scenario);

std::string render_text(const DebriefReport& report);
std::string report_to_json(const DebriefReport& report, int indent = 2);

}  // namespace protocheck
