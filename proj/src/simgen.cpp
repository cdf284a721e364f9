#include "protocheck/simgen.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <numeric>

#include <json.hpp>

#include "protocheck/errors.hpp"
#include "protocheck/random.hpp"

namespace protocheck::sim {

using nlohmann::json;

std::string_view to_string(Planned planned) noexcept {
  switch (planned) {
    case Planned::Satisfy:
      return "satisfy";
    case Planned::Violate:
      return "violate";
    case Planned::Inapplicable:
      return "inapplicable";
  }
  return "satisfy";
}

const std::vector<std::string>& incident_catalog() {
  static const std::vector<std::string> kCatalog = {
      "structure_fire",         "vehicle_fire",          "wildland_fire",        "gas_leak",
      "carbon_monoxide_alarm",  "electrical_hazard",     "hazmat_spill",         "explosion",
      "traffic_collision",      "multi_vehicle_pileup",  "pedestrian_struck",    "motorcycle_crash",
      "roadway_debris",         "disabled_vehicle",      "wrong_way_driver",     "cardiac_arrest",
      "chest_pain",             "stroke_symptoms",       "breathing_problems",   "choking",
      "allergic_reaction",      "diabetic_emergency",    "seizure",              "unconscious_person",
      "fall_injury",            "overdose",              "poisoning",            "childbirth",
      "pregnancy_complication", "drowning",              "heat_exhaustion",      "hypothermia",
      "severe_bleeding",        "burn_injury",           "animal_bite",          "psychiatric_crisis",
      "suicidal_caller",        "domestic_disturbance",  "assault_in_progress",  "burglary_in_progress",
      "robbery",                "shots_fired",           "stabbing",             "missing_child",
      "missing_elderly_person", "suspicious_package",    "trespasser",           "noise_complaint",
      "welfare_check",          "elevator_entrapment",   "water_rescue",         "building_collapse",
      "downed_power_line",      "flooding",              "fallen_tree",          "alarm_activation",
      "abandoned_call",
  };
  return kCatalog;
}

Persona random_persona(std::uint64_t seed) {
  static const std::vector<std::string> kAges = {"child", "adult", "elderly"};
  static const std::vector<std::string> kStates = {"calm", "anxious", "panicked", "angry"};
  static const std::vector<std::string> kLanguage = {"fluent", "limited"};
  static const std::vector<std::string> kVulnerable = {"hearing_impaired", "injured", "intoxicated",
                                                       "alone", "caring_for_children"};
  Rng rng(seed);
  Persona p;
  p.age_band = rng.pick(std::span<const std::string>(kAges));
  p.emotional_state = rng.pick(std::span<const std::string>(kStates));
  p.language_proficiency = rng.pick(std::span<const std::string>(kLanguage));
  for (const auto& v : kVulnerable) {
    if (rng.bernoulli(0.15)) p.vulnerability_factors.push_back(v);
  }
  return p;
}

namespace {

using spec::Formula;

struct Constraints {
  std::map<std::size_t, std::set<std::string>> plant;
  std::set<std::pair<std::size_t, std::string>> forbid;

  bool add_plant(std::size_t g, const std::string& action) {
    if (forbid.count({g, action})) return false;
    plant[g].insert(action);
    return true;
  }
  bool add_forbid(std::size_t g, const std::string& action) {
    if (auto it = plant.find(g); it != plant.end() && it->second.count(action)) return false;
    forbid.insert({g, action});
    return true;
  }
};

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// Turns a desired truth value of a formula into planted and forbidden
// (turn, action) atoms over a fixed speaker skeleton. Every atom the monitor
// consults for the desired value ends up either planted or forbidden, so the
// outcome no longer depends on how other requirements fill the trace.
class Planner {
 public:
  Planner(const Trace& skeleton, Rng& rng) : skeleton_(skeleton), rng_(rng) {}

  bool require(const Formula& f, bool want, std::optional<std::size_t> anchor, Constraints& c,
               std::optional<std::size_t> hint = std::nullopt) {
    return std::visit(
        overloaded{
            [&](const spec::Detect& d) {
              auto pos = positions(d.window, anchor, hint);
              if (!pos) return false;
              if (want) {
                for (auto g : *pos) {
                  if (c.add_plant(g, d.action)) return true;
                }
                return false;
              }
              for (auto g : *pos) {
                if (!c.add_forbid(g, d.action)) return false;
              }
              return true;
            },
            [&](const spec::Eventually& e) {
              auto pos = positions(e.window, anchor, hint);
              if (!pos) return false;
              return want ? some(*e.inner, true, *pos, c) : every(*e.inner, false, *pos, c);
            },
            [&](const spec::Globally& g) {
              auto pos = positions(g.window, anchor, std::nullopt);
              return want ? every(*g.inner, true, *pos, c) : some(*g.inner, false, *pos, c);
            },
            [&](const spec::Implies& i) { return implies(i, want, anchor, c, hint); },
            [&](const spec::Not& n) { return require(*n.inner, !want, anchor, c); },
            [&](const spec::And& a) { return want ? all_terms(a.terms, true, anchor, c) : one_term(a.terms, false, anchor, c); },
            [&](const spec::Or& o) { return want ? one_term(o.terms, true, anchor, c) : all_terms(o.terms, false, anchor, c); },
        },
        f.node);
  }

 private:
  // Global indices of the window in random order; a hint pins one party
  // position. Empty optional when the hint is outside the window.
  std::optional<std::vector<std::size_t>> positions(const spec::Window& w, std::optional<std::size_t> anchor,
                                                    std::optional<std::size_t> hint) {
    const ResolvedWindow r = resolve_window(w, skeleton_, anchor);
    const auto idx = skeleton_.party_indices(r.party);
    std::vector<std::size_t> out;
    if (hint) {
      if (*hint < r.begin || *hint >= r.end) return std::nullopt;
      out.push_back(idx[*hint]);
      return out;
    }
    for (std::size_t p = r.begin; p < r.end; ++p) out.push_back(idx[p]);
    rng_.shuffle(std::span<std::size_t>(out));
    return out;
  }

  bool some(const Formula& inner, bool want, const std::vector<std::size_t>& pos, Constraints& c) {
    for (auto g : pos) {
      Constraints trial = c;
      if (require(inner, want, g, trial)) {
        c = std::move(trial);
        return true;
      }
    }
    return false;
  }

  bool every(const Formula& inner, bool want, const std::vector<std::size_t>& pos, Constraints& c) {
    for (auto g : pos) {
      if (!require(inner, want, g, c)) return false;
    }
    return true;
  }

  bool all_terms(const std::vector<Formula>& terms, bool want, std::optional<std::size_t> anchor, Constraints& c) {
    for (const auto& t : terms) {
      if (!require(t, want, anchor, c)) return false;
    }
    return true;
  }

  bool one_term(const std::vector<Formula>& terms, bool want, std::optional<std::size_t> anchor, Constraints& c) {
    std::vector<std::size_t> order(terms.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng_.shuffle(std::span<std::size_t>(order));
    for (auto k : order) {
      Constraints trial = c;
      if (require(terms[k], want, anchor, trial)) {
        c = std::move(trial);
        return true;
      }
    }
    return false;
  }

  bool implies(const spec::Implies& i, bool want, std::optional<std::size_t> anchor, Constraints& c,
               std::optional<std::size_t> hint) {
    auto pos = positions(i.trigger.window, anchor, hint);
    if (!pos) return false;
    const auto all = positions(i.trigger.window, anchor, std::nullopt);
    auto vacuous = [&](Constraints& trial) {
      for (auto g : *all) {
        if (!trial.add_forbid(g, i.trigger.action)) return false;
      }
      return true;
    };
    auto triggered = [&](std::size_t t, Constraints& trial) {
      if (!trial.add_plant(t, i.trigger.action)) return false;
      if (want) {
        for (auto g : *all) {
          if (g != t && !trial.add_forbid(g, i.trigger.action)) return false;
        }
      }
      return require(*i.response, want, t, trial);
    };

    const bool try_vacuous_first = want && !hint && rng_.bernoulli(0.3);
    if (try_vacuous_first) {
      Constraints trial = c;
      if (vacuous(trial)) {
        c = std::move(trial);
        return true;
      }
    }
    for (auto t : *pos) {
      Constraints trial = c;
      if (triggered(t, trial)) {
        c = std::move(trial);
        return true;
      }
    }
    if (want && !hint && !try_vacuous_first) {
      Constraints trial = c;
      if (vacuous(trial)) {
        c = std::move(trial);
        return true;
      }
    }
    return false;
  }

  const Trace& skeleton_;
  Rng& rng_;
};

struct Phrase {
  std::string core;
  bool at_start = false;  // pattern anchored with '^'
  bool at_end = false;    // pattern anchored with '$'
};

std::vector<Phrase> phrases_for(const LexiconBackend& lexicon, const std::string& action) {
  std::vector<Phrase> out;
  auto it = lexicon.lexicon().find(action);
  if (it == lexicon.lexicon().end()) return out;
  for (const auto& pattern : it->second) {
    Phrase p;
    std::string_view v = pattern;
    if (!v.empty() && v.front() == '^') {
      p.at_start = true;
      v.remove_prefix(1);
    }
    if (!v.empty() && v.back() == '$') {
      p.at_end = true;
      v.remove_suffix(1);
    }
    if (v.find_first_not_of(' ') == std::string_view::npos) continue;
    p.core = std::string(v);
    out.push_back(std::move(p));
  }
  return out;
}

std::string capitalize(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

const std::vector<std::string>& calltaker_distractors() {
  static const std::vector<std::string> kLines = {
      "911, what is your emergency?",
      "Okay, stay on the line with me.",
      "I understand, I am getting help started for you.",
      "Tell me exactly what happened.",
      "Help is being arranged right now.",
      "Stay calm, you are doing great.",
      "I am still here with you.",
      "Can you tell me more about what you see?",
      "Is anyone else with you right now?",
      "Okay, I have that written down.",
      "Keep talking to me.",
      "Listen carefully to my instructions.",
  };
  return kLines;
}

const std::vector<std::string>& caller_distractors(const Persona& persona) {
  static const std::vector<std::string> kAdult = {
      "I need help right away.",
      "It just happened a minute ago.",
      "I don't know what to do.",
      "Okay, okay.",
      "Yes, I'm still here.",
      "There is smoke coming from the back.",
      "He was fine a moment ago.",
      "I can hear sirens somewhere.",
      "Nobody else is around.",
      "Alright, I'm listening.",
  };
  static const std::vector<std::string> kChild = {
      "I'm scared.", "My mom won't wake up.", "I'm home by myself.", "Okay.", "I don't know.",
  };
  static const std::vector<std::string> kElderly = {
      "Speak up please, dear.", "My hip is giving me trouble.", "I'm not as quick as I used to be.",
      "Yes, yes, I'm here.", "Oh dear, oh dear.",
  };
  if (persona.age_band == "child") return kChild;
  if (persona.age_band == "elderly") return kElderly;
  return kAdult;
}

struct Frame {
  std::string prefix;
  std::string suffix;
};

Frame caller_frame(const Persona& persona, Rng& rng) {
  Frame f;
  if (persona.emotional_state == "anxious") f.prefix = "Um, ";
  if (persona.emotional_state == "panicked") f.prefix = "Please, ";
  if (persona.emotional_state == "angry") f.prefix = "Listen, ";
  if (persona.language_proficiency == "limited" && rng.bernoulli(0.5)) f.suffix = " Sorry, my English not so good.";
  if (persona.emotional_state == "panicked" && rng.bernoulli(0.5)) f.suffix = " Please hurry!";
  return f;
}

// Phrases that announce a detail ("my phone number is") get one.
std::string completion(const std::string& core, Rng& rng) {
  static const std::vector<std::string> kNames = {"Dana Whitfield", "Luis Ortega", "Priya Raman", "Sam Okafor"};
  static const std::vector<std::string> kNumbers = {"555-0142", "555-0187", "555-0119", "555-0163"};
  auto ends_with = [&](std::string_view tail) {
    return core.size() >= tail.size() && core.compare(core.size() - tail.size(), tail.size(), tail) == 0;
  };
  if (ends_with("number is")) return " " + rng.pick(std::span<const std::string>(kNumbers));
  if (ends_with(" is") || ends_with(" me")) return " " + rng.pick(std::span<const std::string>(kNames));
  return {};
}

std::string terminator(const std::string& core) {
  static const std::vector<std::string> kQuestionWords = {"what", "where", "how", "is", "are", "can", "do",
                                                          "did", "who", "which", "was"};
  const std::string first = core.substr(0, core.find(' '));
  const bool question = std::find(kQuestionWords.begin(), kQuestionWords.end(), first) != kQuestionWords.end();
  return question ? "?" : ".";
}

class Realizer {
 public:
  Realizer(const LexiconBackend& lexicon, std::set<std::string> universe)
      : lexicon_(lexicon), universe_(std::move(universe)) {}

  bool exactly(const std::string& text, const std::set<std::string>& wanted) const {
    for (const auto& a : universe_) {
      if (lexicon_.evaluate(text, a) != (wanted.count(a) != 0)) return false;
    }
    return true;
  }

  std::optional<std::string> distractor(Speaker speaker, const Persona& persona, Rng& rng) const {
    const auto& bank = speaker == Speaker::CallTaker ? calltaker_distractors() : caller_distractors(persona);
    std::vector<std::size_t> order(bank.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(order));
    for (auto k : order) {
      if (exactly(bank[k], {})) return bank[k];
    }
    return std::nullopt;
  }

  // Text that the lexicon matches for exactly `actions`.
  std::optional<std::string> positive(const std::set<std::string>& actions, Speaker speaker, const Persona& persona,
                                      Rng& rng) const {
    std::vector<std::string> ordered(actions.begin(), actions.end());
    for (int attempt = 0; attempt < 24; ++attempt) {
      rng.shuffle(std::span<std::string>(ordered));
      std::vector<Phrase> chosen;
      for (const auto& a : ordered) {
        auto candidates = phrases_for(lexicon_, a);
        if (candidates.empty()) return std::nullopt;
        chosen.push_back(rng.pick(std::span<const Phrase>(candidates)));
      }
      // Start-anchored phrases lead, end-anchored ones close.
      std::stable_partition(chosen.begin(), chosen.end(), [](const Phrase& p) { return p.at_start; });
      std::stable_partition(chosen.begin(), chosen.end(), [](const Phrase& p) { return !p.at_end; });
      const bool starts = chosen.front().at_start;
      const bool ends = chosen.back().at_end;

      std::string text;
      for (std::size_t i = 0; i < chosen.size(); ++i) {
        if (i) text += " ";
        text += i == 0 && starts ? chosen[i].core : capitalize(chosen[i].core);
        if (!chosen[i].at_end) text += completion(chosen[i].core, rng) + terminator(chosen[i].core);
      }
      if (speaker == Speaker::Caller) {
        const Frame frame = caller_frame(persona, rng);
        if (!starts && !frame.prefix.empty()) {
          text[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(text[0])));
          text = frame.prefix + text;
        }
        if (!ends) text += frame.suffix;
      } else if (!starts && rng.bernoulli(0.4)) {
        text = "Okay. " + text;
      }
      if (text.find_first_not_of(" .?!") == std::string::npos) continue;
      if (exactly(text, actions)) return text;
    }
    return std::nullopt;
  }

 private:
  const LexiconBackend& lexicon_;
  std::set<std::string> universe_;
};

Outcome truth_of(Planned p) {
  switch (p) {
    case Planned::Satisfy:
      return Outcome::Pass;
    case Planned::Violate:
      return Outcome::Fail;
    case Planned::Inapplicable:
      return Outcome::NotApplicable;
  }
  return Outcome::Pass;
}

// Flags that make every planned guard come out right, starting from `base`
// and flipping as few guard flags as the search order allows.
std::optional<std::set<std::string>> choose_flags(const spec::RequirementSet& set,
                                                  const std::map<std::string, Planned>& planned,
                                                  const std::set<std::string>& base) {
  std::set<std::string> guard_flags;
  for (const auto& r : set.requirements) {
    if (r.guard) guard_flags.merge(spec::flags(*r.guard));
  }
  std::vector<std::string> universe(guard_flags.begin(), guard_flags.end());
  if (universe.size() > 20) return std::nullopt;

  auto fits = [&](const std::set<std::string>& flags) {
    ScenarioContext ctx;
    ctx.flags = flags;
    for (const auto& r : set.requirements) {
      const bool active = !r.guard || spec::evaluate(*r.guard, ctx);
      if (active != (planned.at(r.id) != Planned::Inapplicable)) return false;
    }
    return true;
  };
  const std::uint64_t total = std::uint64_t{1} << universe.size();
  for (std::size_t flips = 0; flips <= universe.size(); ++flips) {
    for (std::uint64_t mask = 0; mask < total; ++mask) {
      if (static_cast<std::size_t>(std::popcount(mask)) != flips) continue;
      std::set<std::string> flags = base;
      for (std::size_t b = 0; b < universe.size(); ++b) {
        if (!(mask >> b & 1)) continue;
        if (flags.count(universe[b])) {
          flags.erase(universe[b]);
        } else {
          flags.insert(universe[b]);
        }
      }
      if (fits(flags)) return flags;
    }
  }
  return std::nullopt;
}

Trace skeleton(std::size_t turns, Rng& rng, std::vector<Speaker>& speakers) {
  speakers.clear();
  Speaker next = Speaker::CallTaker;
  for (std::size_t i = 0; i < turns; ++i) {
    speakers.push_back(next);
    // Mostly alternating, with the occasional double turn.
    if (i == 0 || !rng.bernoulli(0.12)) next = next == Speaker::CallTaker ? Speaker::Caller : Speaker::CallTaker;
  }
  std::vector<Utterance> us;
  for (std::size_t i = 0; i < turns; ++i) us.push_back({i, speakers[i], ".", std::nullopt});
  return Trace("", std::move(us));
}

}  // namespace

GeneratedSession generate_session(const ScenarioConfig& config, const CompliancePlan& plan, const LinkedSet& linked,
                                  const std::string& session_id) {
  const auto& set = linked.requirements();
  const auto* lexicon = dynamic_cast<const LexiconBackend*>(&linked.backend());
  if (!lexicon) throw ValidationError("session generation needs a lexicon backend");

  std::map<std::string, Planned> planned;
  for (const auto& r : set.requirements) planned[r.id] = Planned::Satisfy;
  for (const auto& [id, entry] : plan) {
    const spec::Requirement* r = set.find(id);
    if (!r) throw ValidationError("plan names unknown requirement '" + id + "'");
    if (entry.placement && entry.outcome != Planned::Satisfy) {
      throw ValidationError("placement hint on requirement '" + id + "' that is not planned as satisfied");
    }
    if (entry.outcome == Planned::Inapplicable && !r->guard) {
      throw GenerationError(id, "cannot be inapplicable: it has no guard");
    }
    planned[id] = entry.outcome;
  }

  const auto flags = choose_flags(set, planned, config.flags);
  if (!flags) {
    for (const auto& r : set.requirements) {
      if (r.guard) throw GenerationError(r.id, "no scenario flag assignment matches the planned applicability");
    }
    throw GenerationError(set.requirements.front().id, "no scenario flag assignment matches the plan");
  }

  GeneratedSession out;
  out.context.flags = *flags;
  out.context.incident_type = config.incident_type;
  out.context.department_count = config.department_count;
  out.context.persona_profile_count = config.caller_profiles;
  for (const auto& [id, p] : planned) out.ground_truth[id] = truth_of(p);

  std::set<std::string> universe;
  for (const auto& r : set.requirements) universe.merge(spec::actions(r.formula));
  const Realizer realizer(*lexicon, universe);

  std::string culprit = set.requirements.empty() ? std::string() : set.requirements.front().id;
  std::string reason = "no realizable trace found";
  constexpr int kAttempts = 24;
  for (int attempt = 0; attempt < kAttempts; ++attempt) {
    Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(attempt)));
    const std::size_t turns = std::max<std::size_t>(config.min_turns, 12) + rng.below(7) + 2 * attempt;
    std::vector<Speaker> speakers;
    const Trace skel = skeleton(turns, rng, speakers);

    Constraints c;
    Planner planner(skel, rng);
    bool planted = true;
    for (const auto& r : set.requirements) {
      const Planned p = planned.at(r.id);
      if (p == Planned::Inapplicable) continue;
      std::optional<std::size_t> hint;
      if (auto it = plan.find(r.id); it != plan.end()) hint = it->second.placement;
      if (!planner.require(r.formula, p == Planned::Satisfy, std::nullopt, c, hint)) {
        planted = false;
        culprit = r.id;
        reason = hint ? "placement hint falls outside the requirement's window" : "constraints cannot be planted";
        break;
      }
    }
    if (!planted) continue;

    std::vector<Utterance> us;
    std::uint64_t t_ms = 0;
    bool realized = true;
    for (std::size_t g = 0; g < turns; ++g) {
      std::optional<std::string> text;
      auto it = c.plant.find(g);
      if (it != c.plant.end() && !it->second.empty()) {
        text = realizer.positive(it->second, speakers[g], config.persona, rng);
      } else {
        text = realizer.distractor(speakers[g], config.persona, rng);
      }
      if (!text) {
        realized = false;
        reason = "the lexicon offers no phrase that matches only the planted actions";
        break;
      }
      us.push_back({g, speakers[g], std::move(*text), t_ms});
      t_ms += 800 + rng.below(4200);
    }
    if (!realized) continue;

    Trace trace(session_id, std::move(us));
    const Assessment got = evaluate_requirement_set(linked, trace, out.context);
    bool agrees = true;
    for (const auto& v : got.verdicts) {
      if (v.outcome != out.ground_truth.at(v.requirement_id)) {
        agrees = false;
        culprit = v.requirement_id;
        reason = "generated trace evaluates to " + std::string(to_string(v.outcome));
        break;
      }
    }
    if (!agrees) continue;
    out.trace = std::move(trace);
    return out;
  }
  throw GenerationError(culprit, reason);
}

CompliancePlan random_plan(const spec::RequirementSet& set, std::uint64_t seed, const PlanOdds& odds) {
  Rng rng(seed);
  std::set<std::string> guard_flags;
  for (const auto& r : set.requirements) {
    if (r.guard) guard_flags.merge(spec::flags(*r.guard));
  }
  ScenarioContext ctx;
  for (const auto& f : guard_flags) {
    if (!rng.bernoulli(odds.inapplicable)) ctx.flags.insert(f);
  }
  CompliancePlan plan;
  for (const auto& r : set.requirements) {
    PlanEntry e;
    if (r.guard && !spec::evaluate(*r.guard, ctx)) {
      e.outcome = Planned::Inapplicable;
    } else {
      e.outcome = rng.bernoulli(odds.violate) ? Planned::Violate : Planned::Satisfy;
    }
    plan[r.id] = e;
  }
  return plan;
}

std::string ground_truth_to_json(const std::string& session_id, const std::map<std::string, Outcome>& truth) {
  json outcomes = json::object();
  for (const auto& [id, o] : truth) outcomes[id] = to_string(o);
  json doc = {{"schema", "protocheck.truth/1"}, {"session_id", session_id}, {"outcomes", outcomes}};
  return doc.dump(2);
}

std::map<std::string, Outcome> ground_truth_from_json(std::string_view json_text) {
  std::map<std::string, Outcome> out;
  try {
    const json doc = json::parse(json_text);
    for (const auto& [id, v] : doc.at("outcomes").items()) {
      const auto name = v.get<std::string>();
      std::optional<Outcome> o;
      for (auto cand : {Outcome::Pass, Outcome::Fail, Outcome::NotApplicable, Outcome::Errored}) {
        if (to_string(cand) == name) o = cand;
      }
      if (!o) throw ValidationError("unknown outcome '" + name + "'");
      out[id] = *o;
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed ground truth: ") + e.what());
  }
  return out;
}

namespace {

double ramp(double lo, double hi, double t) { return lo + (hi - lo) * std::clamp(t, 0.0, 1.0); }

}  // namespace

std::vector<DatasetSession> generate_dataset(const LinkedSet& linked, const DatasetOptions& options) {
  if (options.sessions == 0) throw ValidationError("dataset needs at least one session");
  const auto& set = linked.requirements();
  const Eta eta;

  std::set<std::string> guard_flags;
  for (const auto& r : set.requirements) {
    if (r.guard) guard_flags.merge(spec::flags(*r.guard));
  }
  const std::vector<std::string> flag_list(guard_flags.begin(), guard_flags.end());

  std::vector<DatasetSession> out;
  out.reserve(options.sessions);
  for (std::size_t i = 0; i < options.sessions; ++i) {
    const std::uint64_t seed = derive_seed(options.seed, i);
    Rng rng(seed);
    const double t = options.sessions == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(options.sessions - 1);
    const double target = ramp(options.complexity_lo, options.complexity_hi, t);

    // Pick the applicable count N and departments + profiles k so that
    // eta * N + k lands nearest the scheduled complexity.
    ScenarioContext ctx;
    const std::size_t base = count_applicable(set, ctx);
    std::size_t best_n = base;
    std::uint64_t best_k = 0;
    double best_gap = INFINITY;
    for (std::size_t n = base; n <= set.requirements.size(); ++n) {
      for (std::uint64_t k = 0; k <= 12; ++k) {
        const double gap = std::abs(eta.value() * static_cast<double>(n) + static_cast<double>(k) - target);
        if (gap < best_gap - 1e-12) {
          best_gap = gap;
          best_n = n;
          best_k = k;
        }
      }
    }
    std::vector<std::string> shuffled = flag_list;
    rng.shuffle(std::span<std::string>(shuffled));
    for (const auto& f : shuffled) {
      ScenarioContext trial = ctx;
      trial.flags.insert(f);
      if (count_applicable(set, trial) <= best_n) ctx = std::move(trial);
    }

    ScenarioConfig config;
    config.incident_type = rng.pick(std::span<const std::string>(incident_catalog()));
    config.flags = ctx.flags;
    config.persona = random_persona(rng.next());
    config.department_count = (best_k + 1) / 2;
    config.caller_profiles = best_k / 2;
    config.seed = rng.next();
    config.min_turns = options.min_turns;

    ComplexityParams params{count_applicable(set, ctx), config.department_count, config.caller_profiles, eta};
    const double ci = complexity_index(params);
    const double pos = options.complexity_hi > options.complexity_lo
                           ? (ci - options.complexity_lo) / (options.complexity_hi - options.complexity_lo)
                           : 0.0;
    const double p_violate = ramp(options.violate_lo, options.violate_hi, pos);
    const double p_dispute = ramp(options.dispute_lo, options.dispute_hi, pos);

    CompliancePlan plan;
    for (const auto& r : set.requirements) {
      PlanEntry e;
      if (r.guard && !spec::evaluate(*r.guard, ctx)) {
        e.outcome = Planned::Inapplicable;
      } else {
        e.outcome = rng.bernoulli(p_violate) ? Planned::Violate : Planned::Satisfy;
      }
      plan[r.id] = e;
    }

    char id[32];
    std::snprintf(id, sizeof id, "S-%05zu", i + 1);
    DatasetSession ds;
    ds.session = generate_session(config, plan, linked, id);
    ds.plan = std::move(plan);

    std::vector<Verdict> verdicts;
    for (const auto& r : set.requirements) {
      Verdict v;
      v.requirement_id = r.id;
      v.severity = r.severity;
      v.outcome = ds.session.ground_truth.at(r.id);
      verdicts.push_back(std::move(v));
    }
    ds.record.session_id = id;
    ds.record.complexity = ci;
    ds.record.score = compliance_score(verdicts).value_or(1.0);
    ds.record.disputed = rng.bernoulli(p_dispute);
    ds.record.turn_count = ds.session.trace.size();
    out.push_back(std::move(ds));
  }
  return out;
}

}  // namespace protocheck::sim
