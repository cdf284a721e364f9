#include <array>

#include "protocheck/errors.hpp"
#include "protocheck/specdsl.hpp"

namespace protocheck::spec {

namespace {

struct TemplateInfo {
  TemplateId id;
  std::string_view name;
  std::string_view parameter;  // empty when the template takes none
  std::string_view guard;      // empty when unconditional
  std::string_view action;     // primary label (trigger label for row 3)
};

constexpr std::array<TemplateInfo, kTemplateCount> kTemplates{{
    {TemplateId::AskAddressEarly, "ask_address", "tau1", "", "ask address"},
    {TemplateId::CallerIdentifies, "caller_identifies", "", "", "provide full name / phone number"},
    {TemplateId::FollowUpNamePhone, "follow_up_name_phone", "tau2", "", "provides name / phone"},
    {TemplateId::VerifyAddressAtEnd, "verify_end", "tau3", "", "ask address"},
    {TemplateId::SceneSafety, "scene_safety", "tau4", "scene_unsafe", "scene safety info obtained"},
    {TemplateId::WarnEnergizedEquipment, "warn_energized_equipment", "tau5", "odor_reported",
     "warn caller not to use energized equipment"},
    {TemplateId::CprInstructions, "cpr_instructions", "tau6", "patient_not_breathing", ""},
    {TemplateId::VehicleDescription, "vehicle_description", "tau7", "vehicle_involved",
     "ask for vehicle description"},
    {TemplateId::WarnMoveHazard, "warn_move_hazard", "tau8", "roadway_hazard",
     "warn caller not to move hazard"},
    {TemplateId::PatientDemographics, "patient_demographics", "tau9", "patient_conscious",
     "ask for patient demographics"},
}};

constexpr std::string_view kFollowUpLabel = "follows up on name / phone";

const TemplateInfo& info(TemplateId id) {
  const int row = static_cast<int>(id);
  if (row < 1 || row > kTemplateCount) throw ValidationError("unknown template id " + std::to_string(row));
  return kTemplates[static_cast<std::size_t>(row - 1)];
}

std::string label_or(const ActionLabels& labels, const std::string& key, std::string_view fallback) {
  auto it = labels.find(key);
  return it == labels.end() ? std::string(fallback) : it->second;
}

}  // namespace

TemplateId template_from_number(int row) {
  if (row < 1 || row > kTemplateCount) throw ValidationError("unknown template id " + std::to_string(row));
  return static_cast<TemplateId>(row);
}

std::optional<TemplateId> template_from_string(std::string_view name) {
  for (const auto& t : kTemplates) {
    if (t.name == name) return t.id;
    if (name == "row" + std::to_string(static_cast<int>(t.id))) return t.id;
  }
  return std::nullopt;
}

std::string_view template_name(TemplateId id) noexcept {
  const int row = static_cast<int>(id);
  if (row < 1 || row > kTemplateCount) return "";
  return kTemplates[static_cast<std::size_t>(row - 1)].name;
}

std::string_view template_parameter(TemplateId id) noexcept {
  const int row = static_cast<int>(id);
  if (row < 1 || row > kTemplateCount) return "";
  return kTemplates[static_cast<std::size_t>(row - 1)].parameter;
}

std::vector<std::string> default_cpr_steps() {
  return {"instructs cpr: position patient", "instructs cpr: hand placement",
          "instructs cpr: push hard and fast"};
}

Requirement instantiate_template(TemplateId id, const TemplateParams& params,
                                 const ActionLabels& labels) {
  const TemplateInfo& t = info(id);
  std::int64_t tau = 0;
  if (!t.parameter.empty()) {
    auto it = params.find(std::string(t.parameter));
    if (it == params.end()) {
      throw ValidationError("template '" + std::string(t.name) + "' needs parameter " +
                            std::string(t.parameter));
    }
    tau = it->second;
    if (tau < 1) {
      throw ValidationError("template parameter " + std::string(t.parameter) + " must be at least 1");
    }
  }
  const std::string tau_text = std::to_string(tau);
  const std::string action = label_or(labels, "action", t.action);

  Requirement r;
  r.id = std::string(t.name);
  if (!t.guard.empty()) r.guard = flag(std::string(t.guard));

  switch (id) {
    case TemplateId::AskAddressEarly:
      r.description = "Call-taker asks for the address within the first " + tau_text + " call-taker turns.";
      r.formula = detect(Window::first(Party::CallTaker, tau), action);
      break;
    case TemplateId::CallerIdentifies:
      r.description = "Caller provides a full name or phone number.";
      r.formula = detect(Window::anywhere(Party::Caller), action);
      // Scored as advice; the same label also serves as a trigger precondition.
      r.severity = Severity::Advisory;
      break;
    case TemplateId::FollowUpNamePhone: {
      r.description = "Call-taker follows up within " + tau_text +
                      " turns whenever the caller provides a name or phone number.";
      const std::string trigger = label_or(labels, "trigger", t.action);
      const std::string response = label_or(labels, "response", kFollowUpLabel);
      r.formula = whenever(Detect{Window::anywhere(Party::Caller), trigger},
                           detect(Window::after_anchor(Party::CallTaker, 0, tau), response), tau);
      break;
    }
    case TemplateId::VerifyAddressAtEnd:
      r.description = "Before the call ends, call-taker verifies the address again (last " + tau_text +
                      " call-taker turns).";
      r.formula = detect(Window::last(Party::CallTaker, tau), action);
      break;
    case TemplateId::SceneSafety:
      r.description = "Scene safety information is obtained within the first " + tau_text + " turns.";
      r.formula = detect(Window::first(Party::Both, tau), action);
      break;
    case TemplateId::WarnEnergizedEquipment:
      r.description = "Caller is warned not to use energized equipment.";
      r.formula = detect(Window::first(Party::CallTaker, tau), action);
      break;
    case TemplateId::CprInstructions: {
      r.description = "Call-taker provides each CPR instruction step.";
      std::vector<std::string> steps;
      for (int k = 1;; ++k) {
        auto it = labels.find("step" + std::to_string(k));
        if (it == labels.end()) break;
        steps.push_back(it->second);
      }
      if (steps.empty()) steps = default_cpr_steps();
      std::vector<Formula> terms;
      for (auto& s : steps) terms.push_back(detect(Window::first(Party::CallTaker, tau), std::move(s)));
      r.formula = conj(std::move(terms));
      break;
    }
    case TemplateId::VehicleDescription:
      r.description = "Call-taker asks for the vehicle license plate and color.";
      r.formula = detect(Window::first(Party::CallTaker, tau), action);
      break;
    case TemplateId::WarnMoveHazard:
      r.description = "Caller is warned not to move the roadway hazard manually.";
      r.formula = detect(Window::first(Party::CallTaker, tau), action);
      break;
    case TemplateId::PatientDemographics:
      r.description = "Call-taker collects patient age and gender for the EMS record.";
      r.formula = detect(Window::first(Party::CallTaker, tau), action);
      break;
  }
  return r;
}

RequirementSet template_library(std::int64_t tau) {
  TemplateParams params;
  for (const auto& t : kTemplates) {
    if (!t.parameter.empty()) params[std::string(t.parameter)] = tau;
  }
  return template_library(params);
}

RequirementSet template_library(const TemplateParams& params) {
  RequirementSet set;
  for (const auto& t : kTemplates) {
    if (!t.guard.empty()) set.flags.emplace_back(t.guard);
    set.requirements.push_back(instantiate_template(t.id, params));
  }
  return set;
}

}  // namespace protocheck::spec
