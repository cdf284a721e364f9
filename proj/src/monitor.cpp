#include "protocheck/monitor.hpp"

#include <algorithm>
#include <future>
#include <map>
#include <stdexcept>

#include <json.hpp>

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

std::size_t resolve_bound(const spec::Bound& b, std::size_t len) {
  using K = spec::Bound::Kind;
  const auto v = static_cast<std::size_t>(std::max<std::int64_t>(b.value, 0));
  switch (b.kind) {
    case K::Index:
      return std::min(v, len);
    case K::End:
      return len;
    case K::EndMinus:
      return len > v ? len - v : 0;
    case K::Anchor:
      break;
  }
  return len;
}

}  // namespace

ResolvedWindow resolve_window(const spec::Window& window, const Trace& trace,
                              std::optional<std::size_t> anchor) {
  const auto indices = trace.party_indices(window.party);
  if (window.mode == spec::WindowMode::Absolute) {
    const std::size_t len = indices.size();
    const std::size_t begin = resolve_bound(window.lo, len);
    const std::size_t end = std::max(begin, resolve_bound(window.hi, len));
    return {window.party, begin, end};
  }
  if (!anchor) throw std::invalid_argument("relative window resolved without an anchor position");
  const std::size_t n = trace.size();
  // Merged span (anchor+lo, anchor+hi] as the half-open [first, last).
  const std::size_t first = std::min(n, *anchor + static_cast<std::size_t>(window.lo.value) + 1);
  const std::size_t last = std::max(first, std::min(n, *anchor + static_cast<std::size_t>(window.hi.value) + 1));
  const auto begin = std::lower_bound(indices.begin(), indices.end(), first);
  const auto end = std::lower_bound(begin, indices.end(), last);
  return {window.party, static_cast<std::size_t>(begin - indices.begin()),
          static_cast<std::size_t>(end - indices.begin())};
}

namespace {

// Memoizes single-utterance decisions for the duration of one evaluation.
class MemoBackend final : public PredicateBackend {
 public:
  explicit MemoBackend(const PredicateBackend& inner) : inner_(inner) {}

  bool evaluate(std::string_view text, std::string_view action) const override {
    auto key = std::make_pair(std::string(text), std::string(action));
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    const bool holds = inner_.evaluate(text, action);
    memo_.emplace(std::move(key), holds);
    return holds;
  }
  bool resolves(std::string_view action) const override { return inner_.resolves(action); }

 private:
  const PredicateBackend& inner_;
  mutable std::map<std::pair<std::string, std::string>, bool> memo_;
};

class Evaluator {
 public:
  Evaluator(const Trace& trace, const PredicateBackend& backend)
      : trace_(trace),
        backend_(backend),
        calltaker_(project(trace, Party::CallTaker)),
        caller_(project(trace, Party::Caller)) {}

  EvalResult eval(const spec::Formula& f, std::optional<std::size_t> anchor) {
    return std::visit(overloaded{
                          [&](const spec::Detect& d) { return eval_detect(d, anchor); },
                          [&](const spec::Eventually& e) { return eval_eventually(e, anchor); },
                          [&](const spec::Globally& g) { return eval_globally(g, anchor); },
                          [&](const spec::Implies& i) { return eval_implies(i, anchor); },
                          [&](const spec::Not& n) { return EvalResult{!eval(*n.inner, anchor).holds, {}}; },
                          [&](const spec::And& a) { return eval_and(a, anchor); },
                          [&](const spec::Or& o) { return eval_or(o, anchor); },
                      },
                      f.node);
  }

 private:
  std::span<const Utterance> party_utterances(Party party) const {
    switch (party) {
      case Party::CallTaker:
        return calltaker_;
      case Party::Caller:
        return caller_;
      case Party::Both:
        return trace_.utterances();
    }
    return trace_.utterances();
  }

  std::size_t global_of(const ResolvedWindow& rw, std::size_t pos) const {
    return trace_.party_indices(rw.party)[pos];
  }

  bool holds_at(std::size_t global, const std::string& action) {
    try {
      return backend_.evaluate(trace_.at(global).text, action);
    } catch (const PredicateError&) {
      throw;
    } catch (const std::exception& e) {
      throw PredicateError(global, action, e.what());
    }
  }

  EvalResult eval_detect(const spec::Detect& d, std::optional<std::size_t> anchor) {
    const ResolvedWindow rw = resolve_window(d.window, trace_, anchor);
    const auto window = party_utterances(rw.party).subspan(rw.begin, rw.size());
    DetectResult r;
    try {
      r = detect(window, d.action, backend_);
    } catch (const PredicateError& e) {
      throw PredicateError(window[e.index()].global_index, d.action, e.cause());
    }
    if (!r.holds) return {};
    return {true, {Witness{"detect", d.action, window[*r.witness].global_index}}};
  }

  EvalResult eval_eventually(const spec::Eventually& e, std::optional<std::size_t> anchor) {
    const ResolvedWindow rw = resolve_window(e.window, trace_, anchor);
    for (std::size_t pos = rw.begin; pos < rw.end; ++pos) {
      const std::size_t g = global_of(rw, pos);
      EvalResult inner = eval(*e.inner, g);
      if (inner.holds) {
        EvalResult out{true, {Witness{"anchor", "", g}}};
        out.witnesses.insert(out.witnesses.end(), inner.witnesses.begin(), inner.witnesses.end());
        return out;
      }
    }
    return {};
  }

  EvalResult eval_globally(const spec::Globally& gl, std::optional<std::size_t> anchor) {
    const ResolvedWindow rw = resolve_window(gl.window, trace_, anchor);
    EvalResult out{true, {}};
    for (std::size_t pos = rw.begin; pos < rw.end; ++pos) {
      EvalResult inner = eval(*gl.inner, global_of(rw, pos));
      if (!inner.holds) return {};
      out.witnesses.insert(out.witnesses.end(), inner.witnesses.begin(), inner.witnesses.end());
    }
    return out;
  }

  EvalResult eval_implies(const spec::Implies& imp, std::optional<std::size_t> anchor) {
    const ResolvedWindow rw = resolve_window(imp.trigger.window, trace_, anchor);
    EvalResult out{true, {}};
    for (std::size_t pos = rw.begin; pos < rw.end; ++pos) {
      const std::size_t t = global_of(rw, pos);
      if (!holds_at(t, imp.trigger.action)) continue;
      const Witness trigger{"trigger", imp.trigger.action, t};
      EvalResult response = eval(*imp.response, t);
      if (!response.holds) return {false, {trigger}};
      out.witnesses.push_back(trigger);
      out.witnesses.insert(out.witnesses.end(), response.witnesses.begin(), response.witnesses.end());
    }
    return out;
  }

  EvalResult eval_and(const spec::And& a, std::optional<std::size_t> anchor) {
    EvalResult out{true, {}};
    for (const auto& term : a.terms) {
      EvalResult r = eval(term, anchor);
      if (!r.holds) return {};
      out.witnesses.insert(out.witnesses.end(), r.witnesses.begin(), r.witnesses.end());
    }
    return out;
  }

  EvalResult eval_or(const spec::Or& o, std::optional<std::size_t> anchor) {
    for (const auto& term : o.terms) {
      EvalResult r = eval(term, anchor);
      if (r.holds) return r;
    }
    return {};
  }

  const Trace& trace_;
  MemoBackend backend_;
  std::vector<Utterance> calltaker_;
  std::vector<Utterance> caller_;
};

std::vector<Witness> dedupe(std::vector<Witness> in) {
  std::vector<Witness> out;
  for (auto& w : in) {
    if (std::find(out.begin(), out.end(), w) == out.end()) out.push_back(std::move(w));
  }
  return out;
}

std::string witness_text(const std::vector<Witness>& witnesses) {
  std::string out;
  for (const auto& w : witnesses) {
    if (!out.empty()) out += ", ";
    if (w.role == "anchor") {
      out += "anchor turn " + std::to_string(w.global_index);
    } else {
      out += "'" + w.action + "' at turn " + std::to_string(w.global_index);
      if (w.role == "trigger") out += " (trigger)";
    }
  }
  return out;
}

}  // namespace

EvalResult evaluate(const spec::Formula& formula, const Trace& trace, const PredicateBackend& backend) {
  Evaluator ev(trace, backend);
  EvalResult r = ev.eval(formula, std::nullopt);
  r.witnesses = dedupe(std::move(r.witnesses));
  return r;
}

std::string_view to_string(Outcome outcome) noexcept {
  switch (outcome) {
    case Outcome::Pass:
      return "pass";
    case Outcome::Fail:
      return "fail";
    case Outcome::NotApplicable:
      return "not_applicable";
    case Outcome::Errored:
      return "errored";
  }
  return "errored";
}

namespace {

Outcome outcome_from_string(std::string_view s) {
  if (s == "pass") return Outcome::Pass;
  if (s == "fail") return Outcome::Fail;
  if (s == "not_applicable") return Outcome::NotApplicable;
  if (s == "errored") return Outcome::Errored;
  throw ValidationError("unknown outcome '" + std::string(s) + "'");
}

}  // namespace

const Verdict* Assessment::find(std::string_view requirement_id) const {
  for (const auto& v : verdicts) {
    if (v.requirement_id == requirement_id) return &v;
  }
  return nullptr;
}

std::optional<double> compliance_score(const std::vector<Verdict>& verdicts) {
  std::size_t pass = 0, fail = 0;
  for (const auto& v : verdicts) {
    if (v.severity != spec::Severity::Mandatory) continue;
    if (v.outcome == Outcome::Pass) ++pass;
    if (v.outcome == Outcome::Fail) ++fail;
  }
  if (pass + fail == 0) return std::nullopt;
  return static_cast<double>(pass) / static_cast<double>(pass + fail);
}

Verdict evaluate_requirement(const spec::Requirement& requirement, const Trace& trace,
                             const ScenarioContext& context, const PredicateBackend& backend) {
  Verdict v;
  v.requirement_id = requirement.id;
  v.severity = requirement.severity;
  const std::string subject = spec::describe(requirement.formula);
  if (requirement.guard && !spec::evaluate(*requirement.guard, context)) {
    v.outcome = Outcome::NotApplicable;
    v.rationale = requirement.id + ": NOT APPLICABLE - guard '" + spec::to_text(*requirement.guard) +
                  "' is false for this scenario";
    return v;
  }
  try {
    EvalResult r = evaluate(requirement.formula, trace, backend);
    v.outcome = r.holds ? Outcome::Pass : Outcome::Fail;
    v.witnesses = std::move(r.witnesses);
  } catch (const BackendError& e) {
    v.outcome = Outcome::Errored;
    v.error = e.what();
    v.rationale = requirement.id + ": ERRORED - predicate backend failed while checking " + subject +
                  ": " + e.what();
    return v;
  }
  if (v.outcome == Outcome::Pass) {
    v.rationale = requirement.id + ": PASS - " + subject;
    v.rationale += v.witnesses.empty() ? "; satisfied with no triggering event"
                                       : "; evidence: " + witness_text(v.witnesses);
  } else {
    v.rationale = requirement.id + ": FAIL - " + subject;
    v.rationale += v.witnesses.empty() ? "; no satisfying utterance found"
                                       : "; unanswered: " + witness_text(v.witnesses);
  }
  return v;
}

Assessment evaluate_requirement_set(const LinkedSet& linked, const Trace& trace,
                                    const ScenarioContext& context, const EvaluateOptions& options) {
  const auto& reqs = linked.requirements().requirements;
  Assessment a;
  a.session_id = trace.session_id();
  a.verdicts.resize(reqs.size());
  const unsigned threads = std::max(1u, options.threads);
  if (threads == 1 || reqs.size() < 2) {
    for (std::size_t i = 0; i < reqs.size(); ++i) {
      a.verdicts[i] = evaluate_requirement(reqs[i], trace, context, linked.backend());
    }
  } else {
    std::vector<std::future<void>> workers;
    for (unsigned w = 0; w < threads; ++w) {
      workers.push_back(std::async(std::launch::async, [&, w] {
        for (std::size_t i = w; i < reqs.size(); i += threads) {
          a.verdicts[i] = evaluate_requirement(reqs[i], trace, context, linked.backend());
        }
      }));
    }
    for (auto& f : workers) f.get();
  }
  std::sort(a.verdicts.begin(), a.verdicts.end(),
            [](const Verdict& x, const Verdict& y) { return x.requirement_id < y.requirement_id; });
  a.score = compliance_score(a.verdicts);
  return a;
}

std::size_t count_applicable(const spec::RequirementSet& set, const ScenarioContext& context) {
  return static_cast<std::size_t>(
      std::count_if(set.requirements.begin(), set.requirements.end(), [&](const spec::Requirement& r) {
        return !r.guard || spec::evaluate(*r.guard, context);
      }));
}

std::string assessment_to_json(const Assessment& assessment, const Trace& trace, int indent) {
  json doc = json::object();
  doc["schema"] = "protocheck.assessment/1";
  doc["session_id"] = assessment.session_id;
  doc["score"] = assessment.score ? json(*assessment.score) : json(nullptr);
  json verdicts = json::array();
  for (const auto& v : assessment.verdicts) {
    json jv = json::object();
    jv["requirement_id"] = v.requirement_id;
    jv["severity"] = std::string(spec::to_string(v.severity));
    jv["outcome"] = std::string(to_string(v.outcome));
    json ws = json::array();
    for (const auto& w : v.witnesses) {
      json jw = {{"role", w.role}, {"action", w.action}, {"global_index", w.global_index}};
      if (w.global_index >= trace.size()) {
        throw IntegrityError("witness turn " + std::to_string(w.global_index) + " is outside the trace");
      }
      jw["text"] = trace.at(w.global_index).text;
      ws.push_back(std::move(jw));
    }
    jv["witnesses"] = std::move(ws);
    jv["rationale"] = v.rationale;
    if (v.outcome == Outcome::Errored) jv["error"] = v.error;
    verdicts.push_back(std::move(jv));
  }
  doc["verdicts"] = std::move(verdicts);
  return doc.dump(indent);
}

Assessment assessment_from_json(std::string_view json_text) {
  Assessment a;
  try {
    const json doc = json::parse(json_text);
    a.session_id = doc.at("session_id").get<std::string>();
    if (!doc.at("score").is_null()) a.score = doc.at("score").get<double>();
    for (const auto& jv : doc.at("verdicts")) {
      Verdict v;
      v.requirement_id = jv.at("requirement_id").get<std::string>();
      v.severity = jv.at("severity").get<std::string>() == "advisory" ? spec::Severity::Advisory
                                                                       : spec::Severity::Mandatory;
      v.outcome = outcome_from_string(jv.at("outcome").get<std::string>());
      for (const auto& jw : jv.at("witnesses")) {
        v.witnesses.push_back(Witness{jw.at("role").get<std::string>(), jw.at("action").get<std::string>(),
                                      jw.at("global_index").get<std::size_t>()});
      }
      v.rationale = jv.at("rationale").get<std::string>();
      v.error = jv.value("error", std::string{});
      a.verdicts.push_back(std::move(v));
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("assessment document: ") + e.what());
  }
  return a;
}

}  // namespace protocheck
