#pragma once

// Shared test helpers: a token backend, trace builders, a brute-force
// semantics oracle, random formula generation, and hand-written fixtures for
// the ten reference templates.

#include <unistd.h>

#include <filesystem>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "protocheck/monitor.hpp"
#include "protocheck/predicate.hpp"
#include "protocheck/random.hpp"
#include "protocheck/specdsl.hpp"
#include "protocheck/trace.hpp"

namespace testsupport {

using namespace protocheck;

// An utterance holds an action iff the action appears as a whitespace
// separated token of its text.
class TokenBackend final : public PredicateBackend {
 public:
  bool evaluate(std::string_view text, std::string_view action) const override {
    std::istringstream in{std::string(text)};
    std::string tok;
    while (in >> tok) {
      if (tok == action) return true;
    }
    return false;
  }
  bool resolves(std::string_view) const override { return true; }
};

inline Trace make_trace(const std::vector<std::pair<Speaker, std::string>>& turns, std::string id = "t") {
  std::vector<Utterance> us;
  for (std::size_t i = 0; i < turns.size(); ++i) us.push_back({i, turns[i].first, turns[i].second, std::nullopt});
  return Trace(std::move(id), std::move(us));
}

inline constexpr Speaker CT = Speaker::CallTaker;
inline constexpr Speaker CL = Speaker::Caller;

// Self-deleting scratch directory.
class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("protocheck-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& content);

// ---- brute-force oracle ----------------------------------------------------
//
// Works from the definitions directly: a turn belongs to a window when its
// speaker matches and its party-local index (absolute windows) or merged
// index (relative windows) satisfies the bounds. No window is ever resolved
// to a range.

struct OracleTurn {
  Speaker speaker;
  std::set<std::string> actions;
};

bool oracle_holds(const spec::Formula& f, const std::vector<OracleTurn>& turns,
                  std::optional<std::size_t> anchor = std::nullopt);

std::vector<OracleTurn> oracle_turns(const Trace& trace, const PredicateBackend& backend,
                                     const std::set<std::string>& actions);

// Random well-formed formula of at most `max_depth` over actions {a, b}.
// `anchored` marks that an enclosing operator binds t; `horizon` caps
// relative upper bounds inside a whenever response.
spec::Formula random_formula(Rng& rng, std::size_t max_depth, bool anchored = false,
                             std::optional<std::int64_t> horizon = std::nullopt);

// Random trace of up to `max_len` turns whose texts are token sets over {a, b}.
Trace random_trace(Rng& rng, std::size_t max_len);

// ---- reference template fixtures ---------------------------------------------

struct TemplateFixture {
  spec::TemplateId id;
  spec::Requirement requirement;
  ScenarioContext context;
  Trace satisfying;
  Trace violating;
};

// One fixture per template, instantiated with tau = 3.
std::vector<TemplateFixture> template_fixtures();

}  // namespace testsupport
