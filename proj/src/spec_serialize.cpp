#include "protocheck/specdsl.hpp"

namespace protocheck::spec {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::string quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"':
        out += "\\\"";
        break;
      case '\\':
        out += "\\\\";
        break;
      case '\n':
        out += "\\n";
        break;
      case '\t':
        out += "\\t";
        break;
      default:
        out += c;
    }
  }
  return out + "\"";
}

std::string bound_text(const Bound& b) {
  switch (b.kind) {
    case Bound::Kind::Index:
      return std::to_string(b.value);
    case Bound::Kind::End:
      return "T";
    case Bound::Kind::EndMinus:
      return "T-" + std::to_string(b.value);
    case Bound::Kind::Anchor:
      return b.value == 0 ? "t" : "t+" + std::to_string(b.value);
  }
  return "?";
}

bool is_junction(const Formula& f) {
  return std::holds_alternative<And>(f.node) || std::holds_alternative<Or>(f.node);
}

// Operands of not/and/or and whenever responses are parsed as unary
// formulas, so nested junctions need parentheses to survive a round trip.
std::string operand(const Formula& f) {
  return is_junction(f) ? "(" + to_text(f) + ")" : to_text(f);
}

std::string detect_text(const Detect& d) { return "detect " + to_text(d.window) + " " + quote(d.action); }

bool is_guard_junction(const Guard& g) {
  return std::holds_alternative<GuardAnd>(g.node) || std::holds_alternative<GuardOr>(g.node);
}

std::string guard_operand(const Guard& g) {
  return is_guard_junction(g) ? "(" + to_text(g) + ")" : to_text(g);
}

}  // namespace

std::string to_text(const Window& w) {
  return std::string(to_string(w.party)) + "[" + bound_text(w.lo) + "," + bound_text(w.hi) + "]";
}

std::string to_text(const Formula& f) {
  auto join = [](const std::vector<Formula>& terms, const char* sep) {
    std::string out;
    for (std::size_t i = 0; i < terms.size(); ++i) {
      if (i) out += sep;
      out += operand(terms[i]);
    }
    return out;
  };
  return std::visit(
      overloaded{
          [](const Detect& d) { return detect_text(d); },
          [](const Eventually& e) { return "eventually " + to_text(e.window) + " (" + to_text(*e.inner) + ")"; },
          [](const Globally& g) { return "always " + to_text(g.window) + " (" + to_text(*g.inner) + ")"; },
          [](const Implies& i) {
            return "whenever " + detect_text(i.trigger) + " then within " + std::to_string(i.horizon) +
                   " " + operand(*i.response);
          },
          [](const Not& n) { return "not " + operand(*n.inner); },
          [&](const And& a) { return join(a.terms, " and "); },
          [&](const Or& o) { return join(o.terms, " or "); },
      },
      f.node);
}

std::string to_text(const Guard& g) {
  auto join = [](const std::vector<Guard>& terms, const char* sep) {
    std::string out;
    for (std::size_t i = 0; i < terms.size(); ++i) {
      if (i) out += sep;
      out += guard_operand(terms[i]);
    }
    return out;
  };
  return std::visit(overloaded{
                        [](const GuardFlag& f) { return f.name; },
                        [](const GuardNot& n) { return "not " + guard_operand(*n.inner); },
                        [&](const GuardAnd& a) { return join(a.terms, " and "); },
                        [&](const GuardOr& o) { return join(o.terms, " or "); },
                    },
                    g.node);
}

std::string serialize_spec(const RequirementSet& set) {
  std::string out;
  if (!set.flags.empty()) {
    out += "flags: ";
    for (std::size_t i = 0; i < set.flags.size(); ++i) {
      if (i) out += ", ";
      out += set.flags[i];
    }
    out += "\n";
  }
  for (const auto& r : set.requirements) {
    if (!out.empty()) out += "\n";
    out += "req " + r.id + " {\n";
    if (r.severity == Severity::Advisory) out += "  severity advisory;\n";
    if (!r.description.empty()) out += "  describe " + quote(r.description) + ";\n";
    if (r.guard) out += "  when " + to_text(*r.guard) + ";\n";
    out += "  " + to_text(r.formula) + "\n}\n";
  }
  return out;
}

}  // namespace protocheck::spec
