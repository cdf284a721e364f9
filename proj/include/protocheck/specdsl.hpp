#pragma once

// Protocol requirement language: temporal formulas over party-restricted
// turn windows with an atomic DETECT predicate, scenario guards, a text
// syntax, and the built-in library of call-taking rule templates.
//
// Windows are half-open over party-local turn indices: calltaker[0,3] means
// call-taker turns 0, 1 and 2. `T` is the party length, `T-k` a suffix
// offset. Relative windows `party[t+a,t+b]` are resolved against the anchor
// bound by the nearest enclosing eventually/always/whenever and cover the
// merged indices (t+a, t+b].

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "protocheck/box.hpp"
#include "protocheck/trace.hpp"

namespace protocheck::spec {

inline constexpr std::size_t kDefaultMaxDepth = 8;

struct Bound {
  enum class Kind {
    Index,     // concrete party-local index
    End,       // T
    EndMinus,  // T - value
    Anchor,    // t + value (relative windows only)
  };
  Kind kind = Kind::Index;
  std::int64_t value = 0;

  static Bound index(std::int64_t k) { return {Kind::Index, k}; }
  static Bound end() { return {Kind::End, 0}; }
  static Bound end_minus(std::int64_t k) { return {Kind::EndMinus, k}; }
  static Bound anchor(std::int64_t k = 0) { return {Kind::Anchor, k}; }

  bool operator==(const Bound&) const = default;
};

enum class WindowMode { Absolute, RelativeToTrigger };

struct Window {
  Party party = Party::CallTaker;
  Bound lo;
  Bound hi = Bound::end();
  WindowMode mode = WindowMode::Absolute;

  static Window absolute(Party party, Bound lo, Bound hi) {
    return {party, lo, hi, WindowMode::Absolute};
  }
  static Window first(Party party, std::int64_t k) {
    return absolute(party, Bound::index(0), Bound::index(k));
  }
  static Window last(Party party, std::int64_t k) {
    return absolute(party, Bound::end_minus(k), Bound::end());
  }
  static Window anywhere(Party party) { return absolute(party, Bound::index(0), Bound::end()); }
  static Window after_anchor(Party party, std::int64_t from, std::int64_t to) {
    return {party, Bound::anchor(from), Bound::anchor(to), WindowMode::RelativeToTrigger};
  }

  bool operator==(const Window&) const = default;
};

// Describes what is wrong with a window, or nullopt when it is well formed.
std::optional<std::string> window_problem(const Window& window);

struct Formula;

struct Detect {
  Window window;
  std::string action;
  bool operator==(const Detect&) const = default;
};

struct Eventually {
  Window window;
  Box<Formula> inner;
  bool operator==(const Eventually&) const = default;
};

struct Globally {
  Window window;
  Box<Formula> inner;
  bool operator==(const Globally&) const = default;
};

// For every position t in the trigger window whose utterance satisfies the
// trigger action, `response` must hold with t as anchor.
struct Implies {
  Detect trigger;
  Box<Formula> response;
  std::int64_t horizon = 1;
  bool operator==(const Implies&) const = default;
};

struct Not {
  Box<Formula> inner;
  bool operator==(const Not&) const = default;
};

struct And {
  std::vector<Formula> terms;
  bool operator==(const And&) const;
};

struct Or {
  std::vector<Formula> terms;
  bool operator==(const Or&) const;
};

struct Formula {
  std::variant<Detect, Eventually, Globally, Implies, Not, And, Or> node;
  bool operator==(const Formula&) const = default;
};

inline bool And::operator==(const And& o) const { return terms == o.terms; }
inline bool Or::operator==(const Or& o) const { return terms == o.terms; }

Formula detect(Window window, std::string action);
Formula eventually(Window window, Formula inner);
Formula always(Window window, Formula inner);
Formula whenever(Detect trigger, Formula response, std::int64_t horizon);
Formula negate(Formula inner);
// Single-term conjunctions/disjunctions collapse to the term itself.
Formula conj(std::vector<Formula> terms);
Formula disj(std::vector<Formula> terms);

// Detect and the trigger of Implies count 1; Implies adds two levels
// (the enclosing always and the arrow).
std::size_t depth(const Formula& formula);

// Distinct action labels used anywhere in the formula, sorted.
std::set<std::string> actions(const Formula& formula);

struct Guard;
struct GuardFlag {
  std::string name;
  bool operator==(const GuardFlag&) const = default;
};
struct GuardNot {
  Box<Guard> inner;
  bool operator==(const GuardNot&) const = default;
};
struct GuardAnd {
  std::vector<Guard> terms;
  bool operator==(const GuardAnd&) const;
};
struct GuardOr {
  std::vector<Guard> terms;
  bool operator==(const GuardOr&) const;
};
struct Guard {
  std::variant<GuardFlag, GuardNot, GuardAnd, GuardOr> node;
  bool operator==(const Guard&) const = default;
};
inline bool GuardAnd::operator==(const GuardAnd& o) const { return terms == o.terms; }
inline bool GuardOr::operator==(const GuardOr& o) const { return terms == o.terms; }

Guard flag(std::string name);
bool evaluate(const Guard& guard, const ScenarioContext& context);
std::set<std::string> flags(const Guard& guard);
std::string to_text(const Guard& guard);

enum class Severity { Mandatory, Advisory };
std::string_view to_string(Severity severity) noexcept;

struct SourcePos {
  std::size_t line = 0;
  std::size_t column = 0;
};

struct Requirement {
  std::string id;
  std::string description;
  std::optional<Guard> guard;
  Formula formula;
  Severity severity = Severity::Mandatory;
  SourcePos pos;  // not part of structural equality

  bool operator==(const Requirement& o) const {
    return id == o.id && description == o.description && guard == o.guard &&
           formula == o.formula && severity == o.severity;
  }
};

struct RequirementSet {
  std::vector<std::string> flags;  // declared flag identifiers, in declaration order
  std::vector<Requirement> requirements;

  const Requirement* find(std::string_view id) const;
  bool operator==(const RequirementSet&) const = default;
};

// Throws ValidationError when a window, horizon, nesting depth, guard flag,
// or requirement id breaks the language invariants.
void validate(const RequirementSet& set, std::size_t max_depth = kDefaultMaxDepth);

struct ParseOptions {
  std::size_t max_depth = kDefaultMaxDepth;
};

// Throws ParseError carrying the offending line and column.
RequirementSet parse_spec(std::string_view text, const ParseOptions& options = {});
std::string serialize_spec(const RequirementSet& set);
std::string to_text(const Formula& formula);
std::string to_text(const Window& window);

// Plain-language window description, e.g. "last 4 call-taker turns".
std::string describe(const Window& window);
std::string describe(const Formula& formula);

// The ten reference call-taking checks.
enum class TemplateId {
  AskAddressEarly = 1,         // tau1
  CallerIdentifies = 2,        // no parameter
  FollowUpNamePhone = 3,       // tau2
  VerifyAddressAtEnd = 4,      // tau3
  SceneSafety = 5,             // tau4, guard scene_unsafe
  WarnEnergizedEquipment = 6,  // tau5, guard odor_reported
  CprInstructions = 7,         // tau6, guard patient_not_breathing
  VehicleDescription = 8,      // tau7, guard vehicle_involved
  WarnMoveHazard = 9,          // tau8, guard roadway_hazard
  PatientDemographics = 10,    // tau9, guard patient_conscious
};

inline constexpr int kTemplateCount = 10;

TemplateId template_from_number(int row);
std::optional<TemplateId> template_from_string(std::string_view name);
std::string_view template_name(TemplateId id) noexcept;
// Name of the tau parameter the template needs ("tau1".."tau9"), or empty.
std::string_view template_parameter(TemplateId id) noexcept;
std::vector<std::string> default_cpr_steps();

using TemplateParams = std::map<std::string, std::int64_t>;
// Overrides for the template's action labels. Keys: "action", "trigger",
// "response", and "step1".."stepN" for CPR instructions.
using ActionLabels = std::map<std::string, std::string>;

Requirement instantiate_template(TemplateId id, const TemplateParams& params,
                                 const ActionLabels& labels = {});

// All ten templates with the same tau for every parameter, with the guard
// flags declared.
RequirementSet template_library(std::int64_t tau);
RequirementSet template_library(const TemplateParams& params);

}  // namespace protocheck::spec
