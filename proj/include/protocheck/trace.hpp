#pragma once

// Two-party conversation traces: the merged utterance timeline of one call
// plus its per-speaker projections.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace protocheck {

enum class Speaker { CallTaker, Caller };

// Which side of the conversation a window or projection ranges over.
enum class Party { CallTaker, Caller, Both };

std::string_view to_string(Speaker speaker) noexcept;
std::string_view to_string(Party party) noexcept;
bool matches(Party party, Speaker speaker) noexcept;

struct Utterance {
  std::size_t global_index = 0;
  Speaker speaker = Speaker::CallTaker;
  std::string text;
  std::optional<std::uint64_t> timestamp_ms;

  bool operator==(const Utterance&) const = default;
};

// One line of a single speaker's side before merging.
struct Line {
  std::string text;
  std::optional<std::uint64_t> timestamp_ms;

  bool operator==(const Line&) const = default;
};

// Immutable after construction. The constructor enforces:
//  - text non-blank,
//  - global_index contiguous from 0 in sequence order,
//  - timestamps, where present, non-decreasing along the timeline.
class Trace {
 public:
  Trace() = default;
  Trace(std::string session_id, std::vector<Utterance> utterances);

  const std::string& session_id() const noexcept { return session_id_; }
  std::span<const Utterance> utterances() const noexcept { return utterances_; }
  std::size_t size() const noexcept { return utterances_.size(); }
  bool empty() const noexcept { return utterances_.empty(); }
  const Utterance& at(std::size_t global_index) const { return utterances_.at(global_index); }

  // Global indices of the utterances belonging to `party`, in timeline
  // order. Position in the span is the party-local index.
  std::span<const std::size_t> party_indices(Party party) const noexcept;
  std::size_t party_size(Party party) const noexcept { return party_indices(party).size(); }

  bool operator==(const Trace& other) const {
    return session_id_ == other.session_id_ && utterances_ == other.utterances_;
  }

 private:
  std::string session_id_;
  std::vector<Utterance> utterances_;
  std::vector<std::size_t> calltaker_;
  std::vector<std::size_t> caller_;
  std::vector<std::size_t> both_;
};

// Interleaves two single-speaker line lists following `interleaving`.
Trace merge_traces(std::span<const Line> calltaker, std::span<const Line> caller,
                   std::span<const Speaker> interleaving, std::string session_id = {});

// Utterances of `party` in relative order; the vector position is the
// party-local index and each element keeps its global_index.
std::vector<Utterance> project(const Trace& trace, Party party);

// Line-delimited JSON transcript: {"turn":0,"speaker":"calltaker","text":"...","t_ms":12}.
Trace parse_transcript(std::string_view content, std::string session_id = {});
std::string serialize_transcript(const Trace& trace);

// Scenario facts that guards are evaluated against.
struct ScenarioContext {
  std::set<std::string> flags;
  std::string incident_type;
  std::uint64_t persona_profile_count = 0;
  std::uint64_t department_count = 0;

  bool has(std::string_view flag) const { return flags.count(std::string(flag)) != 0; }
  bool operator==(const ScenarioContext&) const = default;
};

bool is_flag_identifier(std::string_view id) noexcept;

// Throws ValidationError on a malformed flag identifier.
void validate(const ScenarioContext& context);

// JSON object: {"flags":[...],"incident_type":"...","persona_profile_count":1,"department_count":2}.
ScenarioContext parse_context(std::string_view json_text);
std::string serialize_context(const ScenarioContext& context);

}  // namespace protocheck
