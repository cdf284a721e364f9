#include "protocheck/trace.hpp"

#include <algorithm>
#include <cctype>

#include <json.hpp>

#include "protocheck/errors.hpp"

namespace protocheck {

using nlohmann::json;

std::string_view to_string(Speaker speaker) noexcept {
  return speaker == Speaker::CallTaker ? "calltaker" : "caller";
}

std::string_view to_string(Party party) noexcept {
  switch (party) {
    case Party::CallTaker:
      return "calltaker";
    case Party::Caller:
      return "caller";
    case Party::Both:
      return "both";
  }
  return "both";
}

bool matches(Party party, Speaker speaker) noexcept {
  switch (party) {
    case Party::CallTaker:
      return speaker == Speaker::CallTaker;
    case Party::Caller:
      return speaker == Speaker::Caller;
    case Party::Both:
      return true;
  }
  return false;
}

namespace {

bool is_blank(std::string_view text) {
  return std::all_of(text.begin(), text.end(),
                     [](unsigned char c) { return std::isspace(c) != 0; });
}

}  // namespace

Trace::Trace(std::string session_id, std::vector<Utterance> utterances)
    : session_id_(std::move(session_id)), utterances_(std::move(utterances)) {
  std::optional<std::uint64_t> last_ts;
  std::size_t last_ts_index = 0;
  for (std::size_t i = 0; i < utterances_.size(); ++i) {
    const auto& u = utterances_[i];
    if (u.global_index != i) {
      throw ValidationError("utterance at position " + std::to_string(i) + " has global_index " +
                            std::to_string(u.global_index) + "; indices must be contiguous from 0");
    }
    if (is_blank(u.text)) {
      throw ValidationError("utterance " + std::to_string(i) + " has empty text");
    }
    if (u.timestamp_ms) {
      if (last_ts && *u.timestamp_ms < *last_ts) {
        throw ValidationError("utterance " + std::to_string(i) + " timestamp precedes utterance " +
                              std::to_string(last_ts_index));
      }
      last_ts = u.timestamp_ms;
      last_ts_index = i;
    }
    both_.push_back(i);
    (u.speaker == Speaker::CallTaker ? calltaker_ : caller_).push_back(i);
  }
}

std::span<const std::size_t> Trace::party_indices(Party party) const noexcept {
  switch (party) {
    case Party::CallTaker:
      return calltaker_;
    case Party::Caller:
      return caller_;
    case Party::Both:
      return both_;
  }
  return both_;
}

Trace merge_traces(std::span<const Line> calltaker, std::span<const Line> caller,
                   std::span<const Speaker> interleaving, std::string session_id) {
  if (interleaving.size() != calltaker.size() + caller.size()) {
    throw ValidationError("interleaving has " + std::to_string(interleaving.size()) +
                          " tags but " + std::to_string(calltaker.size() + caller.size()) +
                          " utterances were supplied");
  }
  std::vector<Utterance> merged;
  merged.reserve(interleaving.size());
  std::size_t next_ct = 0;
  std::size_t next_caller = 0;
  for (std::size_t i = 0; i < interleaving.size(); ++i) {
    const bool is_ct = interleaving[i] == Speaker::CallTaker;
    auto& next = is_ct ? next_ct : next_caller;
    const auto& source = is_ct ? calltaker : caller;
    if (next >= source.size()) {
      throw ValidationError("interleaving index " + std::to_string(i) + " requests " +
                            std::string(to_string(interleaving[i])) +
                            " utterance beyond the supplied list");
    }
    const Line& line = source[next++];
    merged.push_back(Utterance{i, interleaving[i], line.text, line.timestamp_ms});
  }
  return Trace(std::move(session_id), std::move(merged));
}

std::vector<Utterance> project(const Trace& trace, Party party) {
  std::vector<Utterance> out;
  const auto indices = trace.party_indices(party);
  out.reserve(indices.size());
  for (std::size_t g : indices) out.push_back(trace.at(g));
  return out;
}

Trace parse_transcript(std::string_view content, std::string session_id) {
  std::vector<Utterance> utterances;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < content.size()) {
    const std::size_t end = std::min(content.find('\n', pos), content.size());
    std::string_view line = content.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string_view::npos) continue;
    if (line[first] == '#') continue;

    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(line_no, 0, std::string("malformed record: ") + e.what());
    }
    if (!record.is_object()) throw ParseError(line_no, 0, "record is not an object");

    auto require = [&](const char* key) -> const json& {
      auto it = record.find(key);
      if (it == record.end()) throw ParseError(line_no, 0, std::string("missing field '") + key + "'");
      return *it;
    };
    const json& turn = require("turn");
    const json& speaker = require("speaker");
    const json& text = require("text");
    if (!turn.is_number_integer() || turn.get<std::int64_t>() < 0) {
      throw ParseError(line_no, 0, "'turn' must be a nonnegative integer");
    }
    if (!speaker.is_string()) throw ParseError(line_no, 0, "'speaker' must be a string");
    if (!text.is_string()) throw ParseError(line_no, 0, "'text' must be a string");

    Utterance u;
    u.global_index = turn.get<std::size_t>();
    const auto& who = speaker.get_ref<const std::string&>();
    if (who == "calltaker") {
      u.speaker = Speaker::CallTaker;
    } else if (who == "caller") {
      u.speaker = Speaker::Caller;
    } else {
      throw ParseError(line_no, 0, "unknown speaker '" + who + "'");
    }
    u.text = text.get<std::string>();
    if (is_blank(u.text)) throw ParseError(line_no, 0, "empty text");
    if (auto it = record.find("t_ms"); it != record.end() && !it->is_null()) {
      if (!it->is_number_integer() || it->get<std::int64_t>() < 0) {
        throw ParseError(line_no, 0, "'t_ms' must be a nonnegative integer");
      }
      u.timestamp_ms = it->get<std::uint64_t>();
    }

    for (const auto& seen : utterances) {
      if (seen.global_index == u.global_index) {
        throw ValidationError("line " + std::to_string(line_no) + ": duplicate turn " +
                              std::to_string(u.global_index));
      }
    }
    if (u.global_index != utterances.size()) {
      throw ValidationError("line " + std::to_string(line_no) + ": expected turn " +
                            std::to_string(utterances.size()) + ", found " +
                            std::to_string(u.global_index));
    }
    utterances.push_back(std::move(u));
  }
  return Trace(std::move(session_id), std::move(utterances));
}

std::string serialize_transcript(const Trace& trace) {
  std::string out;
  for (const auto& u : trace.utterances()) {
    json record = json::object();
    record["turn"] = u.global_index;
    record["speaker"] = std::string(to_string(u.speaker));
    record["text"] = u.text;
    if (u.timestamp_ms) record["t_ms"] = *u.timestamp_ms;
    out += record.dump();
    out += '\n';
  }
  return out;
}

bool is_flag_identifier(std::string_view id) noexcept {
  if (id.empty() || !(id.front() >= 'a' && id.front() <= 'z')) return false;
  if (id.back() == '_') return false;
  char prev = 0;
  for (char c : id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
    if (!ok || (c == '_' && prev == '_')) return false;
    prev = c;
  }
  return true;
}

void validate(const ScenarioContext& context) {
  for (const auto& flag : context.flags) {
    if (!is_flag_identifier(flag)) {
      throw ValidationError("flag '" + flag + "' is not a lowercase snake-case identifier");
    }
  }
}

ScenarioContext parse_context(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(0, 0, std::string("context: ") + e.what());
  }
  if (!doc.is_object()) throw ValidationError("context document must be an object");
  ScenarioContext ctx;
  try {
    if (auto it = doc.find("flags"); it != doc.end()) {
      for (const auto& f : *it) {
        auto name = f.get<std::string>();
        if (!ctx.flags.insert(name).second) throw ValidationError("duplicate flag '" + name + "'");
      }
    }
    ctx.incident_type = doc.value("incident_type", std::string{});
    ctx.persona_profile_count = doc.value("persona_profile_count", std::uint64_t{0});
    ctx.department_count = doc.value("department_count", std::uint64_t{0});
  } catch (const json::exception& e) {
    throw ValidationError(std::string("context: ") + e.what());
  }
  validate(ctx);
  return ctx;
}

std::string serialize_context(const ScenarioContext& context) {
  json doc = json::object();
  doc["flags"] = json::array();
  for (const auto& f : context.flags) doc["flags"].push_back(f);
  doc["incident_type"] = context.incident_type;
  doc["persona_profile_count"] = context.persona_profile_count;
  doc["department_count"] = context.department_count;
  return doc.dump(2) + "\n";
}

}  // namespace protocheck
