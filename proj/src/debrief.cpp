#include "protocheck/debrief.hpp"

#include <algorithm>
#include <cstdio>

#include <json.hpp>

#include "protocheck/analytics.hpp"
#include "protocheck/errors.hpp"

namespace protocheck {

using nlohmann::json;

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::string join(const std::vector<std::string>& parts, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

// Expected action labels and window wording for a missed rule.
Improvement expectation(const spec::Requirement& req) {
  Improvement imp;
  imp.requirement_id = req.id;
  imp.description = req.description;
  std::visit(overloaded{
                 [&](const spec::Detect& d) {
                   imp.expected_action = d.action;
                   imp.window = spec::describe(d.window);
                 },
                 [&](const spec::Implies& i) {
                   const auto acts = spec::actions(*i.response);
                   imp.expected_action = join({acts.begin(), acts.end()}, "; ");
                   if (const auto* d = std::get_if<spec::Detect>(&i.response->node)) {
                     imp.window = spec::describe(d->window) + ", after each '" + i.trigger.action + "' in " +
                                  spec::describe(i.trigger.window);
                   } else {
                     imp.window = "within " + std::to_string(i.horizon) + " turns after each '" +
                                  i.trigger.action + "'";
                   }
                 },
                 [&](const auto&) {
                   const auto acts = spec::actions(req.formula);
                   imp.expected_action = join({acts.begin(), acts.end()}, "; ");
                   // Conjunctions of detects over one window (step lists) read as that window.
                   std::optional<spec::Window> shared;
                   bool uniform = false;
                   if (const auto* a = std::get_if<spec::And>(&req.formula.node)) {
                     uniform = true;
                     for (const auto& t : a->terms) {
                       const auto* d = std::get_if<spec::Detect>(&t.node);
                       if (!d || (shared && !(*shared == d->window))) {
                         uniform = false;
                         break;
                       }
                       shared = d->window;
                     }
                   }
                   imp.window = uniform && shared ? spec::describe(*shared) : spec::describe(req.formula);
                 },
             },
             req.formula.node);
  return imp;
}

std::string percent(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f%%", v * 100.0);
  return buf;
}

std::string fixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

DebriefReport generate_report(const Assessment& assessment, const spec::RequirementSet& requirements,
                              const Trace& trace, const ScenarioContext& scenario) {
  DebriefReport report;
  report.session_id = assessment.session_id;
  report.score = assessment.score;

  for (const auto& v : assessment.verdicts) {
    const spec::Requirement* req = requirements.find(v.requirement_id);
    if (!req) throw IntegrityError("verdict for unknown requirement '" + v.requirement_id + "'");
    for (const auto& w : v.witnesses) {
      if (w.global_index >= trace.size()) {
        throw IntegrityError("verdict '" + v.requirement_id + "' cites turn " + std::to_string(w.global_index) +
                             " but the trace has " + std::to_string(trace.size()) + " turns");
      }
    }
    switch (v.outcome) {
      case Outcome::Pass: {
        Strength s{req->id, req->description, std::nullopt, std::nullopt};
        const Witness* best = nullptr;
        for (const char* role : {"detect", "trigger", "anchor"}) {
          for (const auto& w : v.witnesses) {
            if (w.role == role) {
              best = &w;
              break;
            }
          }
          if (best) break;
        }
        if (best) {
          s.quote = trace.at(best->global_index).text;
          s.turn = best->global_index;
        }
        report.strengths.push_back(std::move(s));
        break;
      }
      case Outcome::Fail:
        report.improvements.push_back(expectation(*req));
        break;
      case Outcome::NotApplicable:
        report.not_applicable.push_back(v.requirement_id);
        break;
      case Outcome::Errored:
        report.errored.push_back({v.requirement_id, v.error});
        break;
    }
  }
  auto by_id = [](const auto& a, const auto& b) { return a.requirement_id < b.requirement_id; };
  std::sort(report.strengths.begin(), report.strengths.end(), by_id);
  std::sort(report.improvements.begin(), report.improvements.end(), by_id);
  std::sort(report.errored.begin(), report.errored.end(), by_id);
  std::sort(report.not_applicable.begin(), report.not_applicable.end());

  if (!requirements.requirements.empty()) {
    ComplexityParams params;
    params.requirements = count_applicable(requirements, scenario);
    params.departments = scenario.department_count;
    params.caller_profiles = scenario.persona_profile_count;
    report.complexity = complexity_index(params);
  }
  return report;
}

std::string render_text(const DebriefReport& report) {
  std::string out = "Debrief for session " + (report.session_id.empty() ? "(unnamed)" : report.session_id) + "\n";
  out += "Score: " + (report.score ? percent(*report.score) + " of applicable mandatory requirements met"
                                   : std::string("not scored")) +
         "\n";
  if (report.complexity) {
    out += "Complexity index: " + fixed2(*report.complexity);
    out += in_calibrated_band(*report.complexity) ? " (within the calibrated band)\n" : "\n";
  }
  const bool applicable = !report.strengths.empty() || !report.improvements.empty() || !report.errored.empty();
  if (!applicable) {
    out += "\nNo applicable requirements for this session.\n";
  }
  if (!report.strengths.empty()) {
    out += "\nWhat went well:\n";
    for (const auto& s : report.strengths) {
      out += "  [" + s.requirement_id + "] " + s.description + "\n";
      if (s.quote) {
        out += "      turn " + std::to_string(*s.turn) + ": \"" + *s.quote + "\"\n";
      } else {
        out += "      satisfied; no triggering event occurred\n";
      }
    }
  }
  if (!report.improvements.empty()) {
    out += "\nWhat to work on:\n";
    for (const auto& i : report.improvements) {
      out += "  [" + i.requirement_id + "] " + i.description + "\n";
      out += "      expected: '" + i.expected_action + "' in " + i.window + "\n";
    }
  }
  if (!report.errored.empty()) {
    out += "\nNot scored (checker error, reported for review):\n";
    for (const auto& e : report.errored) out += "  [" + e.requirement_id + "] " + e.error + "\n";
  }
  if (!report.not_applicable.empty()) {
    out += "\nNot applicable in this scenario: " + join(report.not_applicable, ", ") + "\n";
  }
  return out;
}

std::string report_to_json(const DebriefReport& report, int indent) {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  json strengths = json::array();
  for (const auto& s : report.strengths) {
    strengths.push_back({{"requirement_id", s.requirement_id},
                         {"description", s.description},
                         {"quote", s.quote ? json(*s.quote) : json(nullptr)},
                         {"turn", s.turn ? json(*s.turn) : json(nullptr)}});
  }
  json improvements = json::array();
  for (const auto& i : report.improvements) {
    improvements.push_back({{"requirement_id", i.requirement_id},
                            {"description", i.description},
                            {"expected_action", i.expected_action},
                            {"window", i.window}});
  }
  json errored = json::array();
  for (const auto& e : report.errored) errored.push_back({{"requirement_id", e.requirement_id}, {"error", e.error}});
  json doc = {{"schema", "protocheck.debrief/1"},
              {"session_id", report.session_id},
              {"score", opt(report.score)},
              {"complexity", opt(report.complexity)},
              {"strengths", strengths},
              {"improvements", improvements},
              {"not_applicable", report.not_applicable},
              {"errored", errored}};
  return doc.dump(indent);
}

}  // namespace protocheck
