#include "support.hpp"

#include <fstream>
#include <stdexcept>

namespace testsupport {

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
}

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

bool speaks_for(Party party, Speaker s) {
  return party == Party::Both || (party == Party::CallTaker) == (s == Speaker::CallTaker);
}

std::int64_t bound_value(const spec::Bound& b, std::int64_t len) {
  switch (b.kind) {
    case spec::Bound::Kind::Index:
      return std::min(b.value, len);
    case spec::Bound::Kind::End:
      return len;
    case spec::Bound::Kind::EndMinus:
      return std::max<std::int64_t>(0, len - b.value);
    case spec::Bound::Kind::Anchor:
      break;
  }
  throw std::logic_error("anchor bound in absolute window");
}

bool in_window(const spec::Window& w, const std::vector<OracleTurn>& turns, std::size_t g,
               std::optional<std::size_t> anchor) {
  if (!speaks_for(w.party, turns[g].speaker)) return false;
  if (w.mode == spec::WindowMode::RelativeToTrigger) {
    const auto a = static_cast<std::int64_t>(*anchor);
    const auto gi = static_cast<std::int64_t>(g);
    return a + w.lo.value < gi && gi <= a + w.hi.value;
  }
  std::int64_t local = 0;
  std::int64_t len = 0;
  for (std::size_t i = 0; i < turns.size(); ++i) {
    if (!speaks_for(w.party, turns[i].speaker)) continue;
    if (i < g) ++local;
    ++len;
  }
  return bound_value(w.lo, len) <= local && local < bound_value(w.hi, len);
}

}  // namespace

bool oracle_holds(const spec::Formula& f, const std::vector<OracleTurn>& turns, std::optional<std::size_t> anchor) {
  const std::size_t n = turns.size();
  return std::visit(
      overloaded{
          [&](const spec::Detect& d) {
            for (std::size_t g = 0; g < n; ++g) {
              if (in_window(d.window, turns, g, anchor) && turns[g].actions.count(d.action)) return true;
            }
            return false;
          },
          [&](const spec::Eventually& e) {
            for (std::size_t g = 0; g < n; ++g) {
              if (in_window(e.window, turns, g, anchor) && oracle_holds(*e.inner, turns, g)) return true;
            }
            return false;
          },
          [&](const spec::Globally& gl) {
            for (std::size_t g = 0; g < n; ++g) {
              if (in_window(gl.window, turns, g, anchor) && !oracle_holds(*gl.inner, turns, g)) return false;
            }
            return true;
          },
          [&](const spec::Implies& i) {
            for (std::size_t g = 0; g < n; ++g) {
              if (in_window(i.trigger.window, turns, g, anchor) && turns[g].actions.count(i.trigger.action) &&
                  !oracle_holds(*i.response, turns, g)) {
                return false;
              }
            }
            return true;
          },
          [&](const spec::Not& x) { return !oracle_holds(*x.inner, turns, anchor); },
          [&](const spec::And& a) {
            for (const auto& t : a.terms) {
              if (!oracle_holds(t, turns, anchor)) return false;
            }
            return true;
          },
          [&](const spec::Or& o) {
            for (const auto& t : o.terms) {
              if (oracle_holds(t, turns, anchor)) return true;
            }
            return false;
          },
      },
      f.node);
}

std::vector<OracleTurn> oracle_turns(const Trace& trace, const PredicateBackend& backend,
                                     const std::set<std::string>& actions) {
  std::vector<OracleTurn> out;
  for (const auto& u : trace.utterances()) {
    OracleTurn t{u.speaker, {}};
    for (const auto& a : actions) {
      if (backend.evaluate(u.text, a)) t.actions.insert(a);
    }
    out.push_back(std::move(t));
  }
  return out;
}

namespace {

Party random_party(Rng& rng) {
  static const Party kParties[] = {Party::CallTaker, Party::Caller, Party::Both};
  return kParties[rng.below(3)];
}

spec::Window random_window(Rng& rng, bool anchored, std::optional<std::int64_t> horizon) {
  const Party party = random_party(rng);
  if (anchored && rng.bernoulli(0.5)) {
    std::int64_t cap = horizon ? *horizon : 5;
    const auto lo = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(std::min<std::int64_t>(cap, 2) + 1)));
    const auto hi = lo + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(cap - lo + 1)));
    return spec::Window::after_anchor(party, lo, hi);
  }
  spec::Bound lo;
  spec::Bound hi;
  if (rng.bernoulli(0.7)) {
    lo = spec::Bound::index(static_cast<std::int64_t>(rng.below(5)));
  } else {
    lo = spec::Bound::end_minus(static_cast<std::int64_t>(rng.below(5)));
  }
  switch (rng.below(3)) {
    case 0:
      hi = spec::Bound::end();
      break;
    case 1:
      hi = spec::Bound::end_minus(static_cast<std::int64_t>(
          rng.below(lo.kind == spec::Bound::Kind::EndMinus ? static_cast<std::uint64_t>(lo.value) + 1 : 3)));
      break;
    default:
      hi = spec::Bound::index((lo.kind == spec::Bound::Kind::Index ? lo.value : 0) +
                              static_cast<std::int64_t>(rng.below(6)));
  }
  return spec::Window::absolute(party, lo, hi);
}

std::string random_action(Rng& rng) { return rng.bernoulli(0.5) ? "a" : "b"; }

}  // namespace

spec::Formula random_formula(Rng& rng, std::size_t max_depth, bool anchored, std::optional<std::int64_t> horizon) {
  if (max_depth <= 1 || rng.bernoulli(0.25)) return spec::detect(random_window(rng, anchored, horizon), random_action(rng));
  const std::uint64_t pick = rng.below(max_depth >= 3 ? 7 : 6);
  switch (pick) {
    case 0:
      return spec::eventually(random_window(rng, anchored, horizon), random_formula(rng, max_depth - 1, true));
    case 1:
      return spec::always(random_window(rng, anchored, horizon), random_formula(rng, max_depth - 1, true));
    case 2:
      return spec::negate(random_formula(rng, max_depth - 1, anchored, horizon));
    case 3:
    case 4: {
      std::vector<spec::Formula> terms;
      const std::size_t k = 2 + rng.below(2);
      for (std::size_t i = 0; i < k; ++i) terms.push_back(random_formula(rng, max_depth - 1, anchored, horizon));
      return pick == 3 ? spec::conj(std::move(terms)) : spec::disj(std::move(terms));
    }
    case 5:
      return spec::detect(random_window(rng, anchored, horizon), random_action(rng));
    default: {
      const auto h = static_cast<std::int64_t>(1 + rng.below(4));
      spec::Detect trigger{random_window(rng, anchored, horizon), random_action(rng)};
      return spec::whenever(std::move(trigger), random_formula(rng, max_depth - 2, true, h), h);
    }
  }
}

Trace random_trace(Rng& rng, std::size_t max_len) {
  const std::size_t n = rng.below(max_len + 1);
  std::vector<std::pair<Speaker, std::string>> turns;
  for (std::size_t i = 0; i < n; ++i) {
    std::string text = "x";
    if (rng.bernoulli(0.45)) text += " a";
    if (rng.bernoulli(0.45)) text += " b";
    turns.emplace_back(rng.bernoulli(0.5) ? Speaker::CallTaker : Speaker::Caller, text);
  }
  return make_trace(turns, "random");
}

std::vector<TemplateFixture> template_fixtures() {
  using spec::TemplateId;
  const spec::TemplateParams params = {{"tau1", 3}, {"tau2", 3}, {"tau3", 3}, {"tau4", 3}, {"tau5", 3},
                                       {"tau6", 3}, {"tau7", 3}, {"tau8", 3}, {"tau9", 3}};
  auto ctx = [](std::initializer_list<std::string> flags) {
    ScenarioContext c;
    c.flags = flags;
    c.department_count = 1;
    return c;
  };
  auto fixture = [&](TemplateId id, ScenarioContext c, const std::vector<std::pair<Speaker, std::string>>& good,
                     const std::vector<std::pair<Speaker, std::string>>& bad) {
    return TemplateFixture{id, spec::instantiate_template(id, params), std::move(c), make_trace(good, "good"),
                           make_trace(bad, "bad")};
  };

  // A call-taker warning placed at call-taker turn `at`, with filler around it.
  auto warn_at = [](std::size_t at, const std::string& line) {
    std::vector<std::pair<Speaker, std::string>> t;
    for (std::size_t k = 0; k < 5; ++k) {
      t.emplace_back(CT, k == at ? line : "Okay, stay with me.");
      t.emplace_back(CL, "Okay.");
    }
    return t;
  };

  std::vector<TemplateFixture> out;
  out.push_back(fixture(TemplateId::AskAddressEarly, ctx({}),
                        {{CT, "911, what is your emergency?"},
                         {CL, "My husband collapsed."},
                         {CT, "What is the address of the emergency?"},
                         {CL, "41 Harbor Road."}},
                        {{CT, "911, what is your emergency?"},
                         {CL, "My husband collapsed."},
                         {CT, "Is he breathing?"},
                         {CL, "I don't think so."},
                         {CT, "Okay, stay with me."},
                         {CL, "Please hurry."},
                         {CT, "Where are you located?"}}));
  out.push_back(fixture(TemplateId::CallerIdentifies, ctx({}),
                        {{CT, "911, what is your emergency?"}, {CL, "My full name is Ana Ruiz and there's a fire."}},
                        {{CT, "911, what is your emergency?"}, {CL, "There's a fire next door."}}));
  out.push_back(fixture(TemplateId::FollowUpNamePhone, ctx({}),
                        {{CT, "911, what is your emergency?"},
                         {CL, "You can call me Ana, callback number is 555-0101."},
                         {CT, "Let me confirm that number, 555-0101?"},
                         {CL, "Yes."}},
                        {{CT, "911, what is your emergency?"},
                         {CL, "You can call me Ana."},
                         {CT, "What happened?"},
                         {CL, "A car hit a pole."},
                         {CT, "Is anyone hurt?"},
                         {CL, "Can you spell that"},
                         {CT, "Can you spell that for me?"}}));
  out.push_back(fixture(TemplateId::VerifyAddressAtEnd, ctx({}),
                        {{CT, "What is the address?"},
                         {CL, "12 Elm Street."},
                         {CT, "Help is on the way."},
                         {CL, "Thank you."},
                         {CT, "Just to confirm, what's the address again?"},
                         {CL, "12 Elm Street."}},
                        {{CT, "What is the address?"},
                         {CL, "12 Elm Street."},
                         {CT, "Help is on the way."},
                         {CL, "Thank you."},
                         {CT, "Stay on the line."},
                         {CL, "Okay."},
                         {CT, "They are pulling up now."},
                         {CL, "I see them."},
                         {CT, "Goodbye."}}));
  out.push_back(fixture(TemplateId::SceneSafety, ctx({"scene_unsafe"}),
                        {{CT, "911, what is your emergency?"}, {CL, "Someone is shouting outside."}, {CT, "Are you in a safe place right now?"}},
                        {{CT, "911, what is your emergency?"},
                         {CL, "Someone is shouting outside."},
                         {CT, "What is the address?"},
                         {CL, "8 Pine Court."},
                         {CT, "Is the scene safe?"}}));
  out.push_back(fixture(TemplateId::WarnEnergizedEquipment, ctx({"odor_reported"}),
                        warn_at(1, "Do not turn on any lights or appliances."),
                        warn_at(3, "Do not turn on any lights or appliances.")));
  {
    auto good = warn_at(0, "Lay them flat on their back.");
    good[2].second = "Put the heel of your hand on the center of the chest.";
    good[4].second = "Now push hard and fast.";
    auto bad = warn_at(0, "Lay them flat on their back.");
    bad[2].second = "Put the heel of your hand on the center of the chest.";
    bad[8].second = "Now push hard and fast.";
    out.push_back(fixture(TemplateId::CprInstructions, ctx({"patient_not_breathing"}), good, bad));
  }
  out.push_back(fixture(TemplateId::VehicleDescription, ctx({"vehicle_involved"}),
                        warn_at(2, "Did you see the license plate?"), warn_at(4, "Did you see the license plate?")));
  out.push_back(fixture(TemplateId::WarnMoveHazard, ctx({"roadway_hazard"}),
                        warn_at(0, "Please do not try to move it yourself."),
                        warn_at(3, "Please do not try to move it yourself.")));
  out.push_back(fixture(TemplateId::PatientDemographics, ctx({"patient_conscious"}),
                        warn_at(1, "How old is the patient?"), warn_at(4, "How old is the patient?")));
  return out;
}

}  // namespace testsupport
