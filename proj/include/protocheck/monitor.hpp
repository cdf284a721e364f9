#pragma once

// Offline evaluation of requirement formulas over complete traces.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "protocheck/predicate.hpp"
#include "protocheck/specdsl.hpp"
#include "protocheck/trace.hpp"

namespace protocheck {

// Concrete window: positions [begin, end) of the party projection (merged
// indices when the party is Both).
struct ResolvedWindow {
  Party party = Party::Both;
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const noexcept { return end - begin; }
  bool empty() const noexcept { return begin >= end; }
  bool operator==(const ResolvedWindow&) const = default;
};

// Absolute bounds clamp to [0, party length]; `T-k` becomes max(0, len-k).
// Relative windows cover merged indices (anchor+lo, anchor+hi] and map to
// the party positions inside that span. Throws std::invalid_argument when
// a relative window is resolved without an anchor.
ResolvedWindow resolve_window(const spec::Window& window, const Trace& trace,
                              std::optional<std::size_t> anchor = std::nullopt);

struct Witness {
  std::string role;    // "detect", "trigger" or "anchor"
  std::string action;  // empty for anchors
  std::size_t global_index = 0;

  bool operator==(const Witness&) const = default;
};

struct EvalResult {
  bool holds = false;
  std::vector<Witness> witnesses;
};

// Evaluates `formula` over `trace`. Witnesses come from satisfying
// sub-evaluations; a failed whenever additionally reports the trigger it
// left unanswered. Backend failures propagate as BackendError.
EvalResult evaluate(const spec::Formula& formula, const Trace& trace, const PredicateBackend& backend);

enum class Outcome { Pass, Fail, NotApplicable, Errored };
std::string_view to_string(Outcome outcome) noexcept;

struct Verdict {
  std::string requirement_id;
  spec::Severity severity = spec::Severity::Mandatory;
  Outcome outcome = Outcome::Fail;
  std::vector<Witness> witnesses;
  std::string rationale;
  std::string error;  // set only for Errored

  bool operator==(const Verdict&) const = default;
};

struct Assessment {
  std::string session_id;
  std::vector<Verdict> verdicts;  // sorted by requirement id
  std::optional<double> score;

  const Verdict* find(std::string_view requirement_id) const;
  bool operator==(const Assessment&) const = default;
};

// Pass / (Pass + Fail) over Mandatory requirements; absent when none applies.
std::optional<double> compliance_score(const std::vector<Verdict>& verdicts);

Verdict evaluate_requirement(const spec::Requirement& requirement, const Trace& trace,
                             const ScenarioContext& context, const PredicateBackend& backend);

struct EvaluateOptions {
  unsigned threads = 1;
};

Assessment evaluate_requirement_set(const LinkedSet& linked, const Trace& trace,
                                    const ScenarioContext& context, const EvaluateOptions& options = {});

// Number of requirements whose guard activates under `context`.
std::size_t count_applicable(const spec::RequirementSet& set, const ScenarioContext& context);

// Structured form: {"schema":"protocheck.assessment/1", ...}. Witness
// entries carry the quoted utterance text from `trace`.
std::string assessment_to_json(const Assessment& assessment, const Trace& trace, int indent = 2);
Assessment assessment_from_json(std::string_view json_text);

}  // namespace protocheck
