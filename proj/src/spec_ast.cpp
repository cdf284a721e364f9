#include <algorithm>

#include "protocheck/errors.hpp"
#include "protocheck/specdsl.hpp"

namespace protocheck::spec {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

bool is_anchor(const Bound& b) { return b.kind == Bound::Kind::Anchor; }

}  // namespace

std::optional<std::string> window_problem(const Window& w) {
  const bool lo_rel = is_anchor(w.lo);
  const bool hi_rel = is_anchor(w.hi);
  if (lo_rel != hi_rel) return "window mixes relative (t) and absolute bounds";
  if (lo_rel != (w.mode == WindowMode::RelativeToTrigger)) {
    return "window mode disagrees with its bounds";
  }
  for (const Bound* b : {&w.lo, &w.hi}) {
    if (b->value < 0) return "window bound offsets must be nonnegative";
    if (b->kind == Bound::Kind::End && b->value != 0) return "T bound carries an offset";
  }
  using K = Bound::Kind;
  if (lo_rel) {
    if (w.lo.value > w.hi.value) return "window lower bound exceeds upper bound";
    return std::nullopt;
  }
  if (w.lo.kind == K::Index && w.hi.kind == K::Index && w.lo.value > w.hi.value) {
    return "window lower bound exceeds upper bound";
  }
  // End-relative bounds compare by their offsets: T-a <= T-b iff a >= b.
  auto end_offset = [](const Bound& b) -> std::optional<std::int64_t> {
    if (b.kind == K::End) return 0;
    if (b.kind == K::EndMinus) return b.value;
    return std::nullopt;
  };
  const auto lo_end = end_offset(w.lo);
  const auto hi_end = end_offset(w.hi);
  if (lo_end && hi_end && *lo_end < *hi_end) return "window lower bound exceeds upper bound";
  return std::nullopt;
}

Formula detect(Window window, std::string action) {
  return Formula{Detect{window, std::move(action)}};
}
Formula eventually(Window window, Formula inner) {
  return Formula{Eventually{window, std::move(inner)}};
}
Formula always(Window window, Formula inner) { return Formula{Globally{window, std::move(inner)}}; }
Formula whenever(Detect trigger, Formula response, std::int64_t horizon) {
  return Formula{Implies{std::move(trigger), std::move(response), horizon}};
}
Formula negate(Formula inner) { return Formula{Not{std::move(inner)}}; }
Formula conj(std::vector<Formula> terms) {
  if (terms.size() == 1) return std::move(terms.front());
  return Formula{And{std::move(terms)}};
}
Formula disj(std::vector<Formula> terms) {
  if (terms.size() == 1) return std::move(terms.front());
  return Formula{Or{std::move(terms)}};
}

std::size_t depth(const Formula& f) {
  auto max_of = [](const std::vector<Formula>& terms) {
    std::size_t d = 0;
    for (const auto& t : terms) d = std::max(d, depth(t));
    return d;
  };
  return std::visit(overloaded{
                        [](const Detect&) -> std::size_t { return 1; },
                        [](const Eventually& e) -> std::size_t { return 1 + depth(*e.inner); },
                        [](const Globally& g) -> std::size_t { return 1 + depth(*g.inner); },
                        [](const Implies& i) -> std::size_t { return 2 + depth(*i.response); },
                        [](const Not& n) -> std::size_t { return 1 + depth(*n.inner); },
                        [&](const And& a) -> std::size_t { return 1 + max_of(a.terms); },
                        [&](const Or& o) -> std::size_t { return 1 + max_of(o.terms); },
                    },
                    f.node);
}

namespace {

void collect_actions(const Formula& f, std::set<std::string>& out) {
  std::visit(overloaded{
                 [&](const Detect& d) { out.insert(d.action); },
                 [&](const Eventually& e) { collect_actions(*e.inner, out); },
                 [&](const Globally& g) { collect_actions(*g.inner, out); },
                 [&](const Implies& i) {
                   out.insert(i.trigger.action);
                   collect_actions(*i.response, out);
                 },
                 [&](const Not& n) { collect_actions(*n.inner, out); },
                 [&](const And& a) {
                   for (const auto& t : a.terms) collect_actions(t, out);
                 },
                 [&](const Or& o) {
                   for (const auto& t : o.terms) collect_actions(t, out);
                 },
             },
             f.node);
}

}  // namespace

std::set<std::string> actions(const Formula& formula) {
  std::set<std::string> out;
  collect_actions(formula, out);
  return out;
}

Guard flag(std::string name) { return Guard{GuardFlag{std::move(name)}}; }

bool evaluate(const Guard& guard, const ScenarioContext& context) {
  return std::visit(overloaded{
                        [&](const GuardFlag& f) { return context.has(f.name); },
                        [&](const GuardNot& n) { return !evaluate(*n.inner, context); },
                        [&](const GuardAnd& a) {
                          return std::all_of(a.terms.begin(), a.terms.end(), [&](const Guard& g) {
                            return evaluate(g, context);
                          });
                        },
                        [&](const GuardOr& o) {
                          return std::any_of(o.terms.begin(), o.terms.end(), [&](const Guard& g) {
                            return evaluate(g, context);
                          });
                        },
                    },
                    guard.node);
}

namespace {

void collect_flags(const Guard& g, std::set<std::string>& out) {
  std::visit(overloaded{
                 [&](const GuardFlag& f) { out.insert(f.name); },
                 [&](const GuardNot& n) { collect_flags(*n.inner, out); },
                 [&](const GuardAnd& a) {
                   for (const auto& t : a.terms) collect_flags(t, out);
                 },
                 [&](const GuardOr& o) {
                   for (const auto& t : o.terms) collect_flags(t, out);
                 },
             },
             g.node);
}

}  // namespace

std::set<std::string> flags(const Guard& guard) {
  std::set<std::string> out;
  collect_flags(guard, out);
  return out;
}

std::string_view to_string(Severity severity) noexcept {
  return severity == Severity::Mandatory ? "mandatory" : "advisory";
}

const Requirement* RequirementSet::find(std::string_view id) const {
  for (const auto& r : requirements) {
    if (r.id == id) return &r;
  }
  return nullptr;
}

namespace {

struct Scope {
  bool anchored = false;
  std::optional<std::int64_t> horizon;
};

void validate_window(const Window& w, const Scope& scope) {
  if (auto problem = window_problem(w)) throw ValidationError(*problem);
  if (w.mode == WindowMode::RelativeToTrigger) {
    if (!scope.anchored) {
      throw ValidationError("relative window " + to_text(w) +
                            " needs an enclosing eventually, always or whenever");
    }
    if (scope.horizon && w.hi.value > *scope.horizon) {
      throw ValidationError("relative window " + to_text(w) + " extends past horizon " +
                            std::to_string(*scope.horizon));
    }
  }
}

void validate_formula(const Formula& f, const Scope& scope) {
  std::visit(overloaded{
                 [&](const Detect& d) {
                   validate_window(d.window, scope);
                   if (d.action.empty()) throw ValidationError("empty action label");
                 },
                 [&](const Eventually& e) {
                   validate_window(e.window, scope);
                   validate_formula(*e.inner, Scope{true, std::nullopt});
                 },
                 [&](const Globally& g) {
                   validate_window(g.window, scope);
                   validate_formula(*g.inner, Scope{true, std::nullopt});
                 },
                 [&](const Implies& i) {
                   if (i.horizon < 1) throw ValidationError("whenever horizon must be at least 1");
                   validate_window(i.trigger.window, scope);
                   if (i.trigger.action.empty()) throw ValidationError("empty action label");
                   validate_formula(*i.response, Scope{true, i.horizon});
                 },
                 [&](const Not& n) { validate_formula(*n.inner, scope); },
                 [&](const And& a) {
                   if (a.terms.size() < 2) throw ValidationError("conjunction needs two terms");
                   for (const auto& t : a.terms) validate_formula(t, scope);
                 },
                 [&](const Or& o) {
                   if (o.terms.size() < 2) throw ValidationError("disjunction needs two terms");
                   for (const auto& t : o.terms) validate_formula(t, scope);
                 },
             },
             f.node);
}

bool is_identifier(std::string_view id) {
  if (id.empty()) return false;
  auto alpha = [](char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; };
  if (!alpha(id.front())) return false;
  return std::all_of(id.begin(), id.end(),
                     [&](char c) { return alpha(c) || (c >= '0' && c <= '9'); });
}

}  // namespace

void validate(const RequirementSet& set, std::size_t max_depth) {
  std::set<std::string> declared;
  for (const auto& f : set.flags) {
    if (!is_flag_identifier(f)) throw ValidationError("flag '" + f + "' is not snake-case");
    if (!declared.insert(f).second) throw ValidationError("flag '" + f + "' declared twice");
  }
  std::set<std::string> ids;
  for (const auto& r : set.requirements) {
    if (!is_identifier(r.id)) throw ValidationError("requirement id '" + r.id + "' is invalid");
    if (!ids.insert(r.id).second) throw ValidationError("duplicate requirement id '" + r.id + "'");
    if (r.guard) {
      for (const auto& f : flags(*r.guard)) {
        if (!declared.count(f)) {
          throw ValidationError("requirement '" + r.id + "' guard uses undeclared flag '" + f + "'");
        }
      }
    }
    try {
      validate_formula(r.formula, Scope{});
    } catch (const ValidationError& e) {
      throw ValidationError("requirement '" + r.id + "': " + e.what());
    }
    if (depth(r.formula) > max_depth) {
      throw ValidationError("requirement '" + r.id + "' nesting depth " +
                            std::to_string(depth(r.formula)) + " exceeds maximum " +
                            std::to_string(max_depth));
    }
  }
}

namespace {

std::string party_turns(Party party) {
  switch (party) {
    case Party::CallTaker:
      return "call-taker turns";
    case Party::Caller:
      return "caller turns";
    case Party::Both:
      return "turns of either party";
  }
  return "turns";
}

std::string plural(std::int64_t n, const std::string& words) {
  if (n == 1) {
    // "call-taker turns" -> "call-taker turn"
    auto pos = words.find("turns");
    if (pos != std::string::npos) return "1 " + words.substr(0, pos) + "turn" + words.substr(pos + 5);
  }
  return std::to_string(n) + " " + words;
}

}  // namespace

std::string describe(const Window& w) {
  using K = Bound::Kind;
  const std::string turns = party_turns(w.party);
  if (w.mode == WindowMode::RelativeToTrigger) {
    if (w.lo.value == 0) {
      return turns + " within " + std::to_string(w.hi.value) + " turns after the anchor turn";
    }
    return turns + " between " + std::to_string(w.lo.value) + " and " + std::to_string(w.hi.value) +
           " turns after the anchor turn";
  }
  if (w.lo == Bound::index(0) && w.hi.kind == K::End) return "any of the " + turns;
  if (w.lo == Bound::index(0) && w.hi.kind == K::Index) return "first " + plural(w.hi.value, turns);
  if (w.lo.kind == K::EndMinus && w.hi.kind == K::End) return "last " + plural(w.lo.value, turns);
  auto bound_text = [](const Bound& b) {
    switch (b.kind) {
      case K::Index:
        return std::to_string(b.value);
      case K::End:
        return std::string("the end");
      case K::EndMinus:
        return std::to_string(b.value) + " before the end";
      case K::Anchor:
        break;
    }
    return std::string("t+") + std::to_string(b.value);
  };
  return turns + " from " + bound_text(w.lo) + " up to (excluding) " + bound_text(w.hi);
}

std::string describe(const Formula& f) {
  auto join = [](const std::vector<Formula>& terms, const char* sep) {
    std::string out;
    for (std::size_t i = 0; i < terms.size(); ++i) {
      if (i) out += sep;
      out += "(" + describe(terms[i]) + ")";
    }
    return out;
  };
  return std::visit(
      overloaded{
          [](const Detect& d) { return "'" + d.action + "' in " + describe(d.window); },
          [](const Eventually& e) {
            return "at some position in " + describe(e.window) + ": " + describe(*e.inner);
          },
          [](const Globally& g) {
            return "at every position in " + describe(g.window) + ": " + describe(*g.inner);
          },
          [](const Implies& i) {
            return "every '" + i.trigger.action + "' in " + describe(i.trigger.window) +
                   " is answered by " + describe(*i.response);
          },
          [](const Not& n) { return "not (" + describe(*n.inner) + ")"; },
          [&](const And& a) { return join(a.terms, " and "); },
          [&](const Or& o) { return join(o.terms, " or "); },
      },
      f.node);
}

}  // namespace protocheck::spec
