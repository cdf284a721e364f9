#include "protocheck/triage.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "protocheck/errors.hpp"

namespace protocheck {

using nlohmann::json;

std::string_view to_string(ReporterRole role) noexcept {
  switch (role) {
    case ReporterRole::Trainee:
      return "trainee";
    case ReporterRole::Coordinator:
      return "coordinator";
    case ReporterRole::QA:
      return "qa";
  }
  return "trainee";
}

std::string_view to_string(ReportStatus status) noexcept {
  switch (status) {
    case ReportStatus::Open:
      return "open";
    case ReportStatus::UnderReview:
      return "under_review";
    case ReportStatus::Resolved:
      return "resolved";
  }
  return "open";
}

std::optional<ReporterRole> role_from_string(std::string_view name) noexcept {
  if (name == "trainee") return ReporterRole::Trainee;
  if (name == "coordinator") return ReporterRole::Coordinator;
  if (name == "qa") return ReporterRole::QA;
  return std::nullopt;
}

namespace {

std::optional<ReportStatus> status_from_string(std::string_view name) {
  if (name == "open") return ReportStatus::Open;
  if (name == "under_review") return ReportStatus::UnderReview;
  if (name == "resolved") return ReportStatus::Resolved;
  return std::nullopt;
}

json opt_json(const std::optional<std::string>& v) { return v ? json(*v) : json(nullptr); }

std::optional<std::string> opt_string(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<std::string>();
}

json session_json(const SessionEntry& s) {
  return {{"session_id", s.session_id},     {"complexity", s.complexity},
          {"transcript", opt_json(s.transcript)}, {"spec", s.spec_text},
          {"lexicon", s.lexicon_json},      {"context", s.context_json},
          {"assessment", s.assessment_json}, {"recording_ref", opt_json(s.recording_ref)}};
}

SessionEntry session_from(const json& j) {
  SessionEntry s;
  s.session_id = j.at("session_id").get<std::string>();
  s.complexity = j.at("complexity").get<double>();
  s.transcript = opt_string(j, "transcript");
  s.spec_text = j.at("spec").get<std::string>();
  s.lexicon_json = j.at("lexicon").get<std::string>();
  s.context_json = j.at("context").get<std::string>();
  s.assessment_json = j.at("assessment").get<std::string>();
  s.recording_ref = opt_string(j, "recording_ref");
  return s;
}

ReporterRole role_from(const json& j) {
  auto role = role_from_string(j.get<std::string>());
  if (!role) throw IntegrityError("unknown role '" + j.get<std::string>() + "'");
  return *role;
}

ResolutionCategory category_from(const json& j) {
  auto c = resolution_from_string(j.get<std::string>());
  if (!c) throw IntegrityError("unknown resolution category '" + j.get<std::string>() + "'");
  return *c;
}

json report_json(const ErrorReport& r) {
  json j = {{"report_id", r.report_id},
            {"session_id", r.session_id},
            {"requirement_id", opt_json(r.requirement_id)},
            {"reporter_role", to_string(r.reporter_role)},
            {"claim", r.claim},
            {"filed_at", r.filed_at},
            {"status", to_string(r.status)}};
  if (r.resolution) {
    j["resolution"] = {{"category", to_string(r.resolution->category)},
                       {"resolver_role", to_string(r.resolution->resolver_role)},
                       {"note", r.resolution->note},
                       {"resolved_at", r.resolution->resolved_at}};
  } else {
    j["resolution"] = nullptr;
  }
  return j;
}

ErrorReport report_from(const json& j) {
  ErrorReport r;
  r.report_id = j.at("report_id").get<std::string>();
  r.session_id = j.at("session_id").get<std::string>();
  r.requirement_id = opt_string(j, "requirement_id");
  r.reporter_role = role_from(j.at("reporter_role"));
  r.claim = j.at("claim").get<std::string>();
  r.filed_at = j.at("filed_at").get<std::int64_t>();
  if (j.contains("status")) {
    auto st = status_from_string(j.at("status").get<std::string>());
    if (!st) throw IntegrityError("unknown report status");
    r.status = *st;
  }
  if (j.contains("resolution") && !j.at("resolution").is_null()) {
    const auto& res = j.at("resolution");
    r.resolution = Resolution{category_from(res.at("category")), role_from(res.at("resolver_role")),
                              res.at("note").get<std::string>(), res.at("resolved_at").get<std::int64_t>()};
  }
  if ((r.status == ReportStatus::Resolved) != r.resolution.has_value()) {
    throw IntegrityError("report '" + r.report_id + "' has inconsistent resolution state");
  }
  return r;
}

std::string report_id_for(std::uint64_t n) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "R-%06llu", static_cast<unsigned long long>(n));
  return buf;
}

std::set<std::string> verdict_ids(const std::string& assessment_json) {
  std::set<std::string> ids;
  for (const auto& v : assessment_from_json(assessment_json).verdicts) ids.insert(v.requirement_id);
  return ids;
}

}  // namespace

std::int64_t Ledger::system_clock_ms() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

Ledger::Ledger(Clock clock) : clock_(std::move(clock)) {}

Ledger::Ledger(std::filesystem::path path, Clock clock) : path_(std::move(path)), clock_(std::move(clock)) {
  replay();
}

void Ledger::replay() {
  std::ifstream in(*path_, std::ios::binary);
  if (!in) return;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      apply(state_, line);
    } catch (const IntegrityError& e) {
      throw IntegrityError("ledger line " + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      throw IntegrityError("ledger line " + std::to_string(line_no) + " replays an invalid transition: " +
                           e.what());
    }
  }
}

void Ledger::apply(State& state, const std::string& event_line) {
  json ev;
  try {
    ev = json::parse(event_line);
  } catch (const json::exception& e) {
    throw IntegrityError(std::string("malformed ledger event: ") + e.what());
  }
  try {
    const auto seq = ev.at("seq").get<std::uint64_t>();
    const auto type = ev.at("type").get<std::string>();
    if (type == "snapshot") {
      if (state.seq != 0 || !state.sessions.empty() || !state.reports.empty()) {
        throw IntegrityError("snapshot record after other events");
      }
      State next;
      for (const auto& s : ev.at("sessions")) {
        auto entry = session_from(s);
        next.sessions.emplace(entry.session_id, std::move(entry));
      }
      for (const auto& r : ev.at("reports")) {
        auto report = report_from(r);
        if (!next.sessions.count(report.session_id)) {
          throw IntegrityError("report '" + report.report_id + "' cites unknown session");
        }
        next.reports.emplace(report.report_id, std::move(report));
      }
      next.next_report = ev.at("next_report").get<std::uint64_t>();
      next.seq = seq;
      state = std::move(next);
      return;
    }
    if (seq != state.seq + 1) {
      throw IntegrityError("sequence number " + std::to_string(seq) + " follows " + std::to_string(state.seq));
    }
    if (type == "session") {
      auto entry = session_from(ev.at("session"));
      if (state.sessions.count(entry.session_id)) {
        throw ValidationError("session '" + entry.session_id + "' is already registered");
      }
      state.sessions.emplace(entry.session_id, std::move(entry));
    } else if (type == "filed") {
      auto report = report_from(ev.at("report"));
      if (report.status != ReportStatus::Open) throw IntegrityError("filed report is not open");
      if (report.report_id != report_id_for(state.next_report)) {
        throw IntegrityError("report id '" + report.report_id + "' out of order");
      }
      auto it = state.sessions.find(report.session_id);
      if (it == state.sessions.end()) throw NotFoundError("unknown session '" + report.session_id + "'");
      if (report.requirement_id && !verdict_ids(it->second.assessment_json).count(*report.requirement_id)) {
        throw NotFoundError("session '" + report.session_id + "' has no verdict for requirement '" +
                            *report.requirement_id + "'");
      }
      ++state.next_report;
      state.reports.emplace(report.report_id, std::move(report));
    } else if (type == "review") {
      const auto id = ev.at("report_id").get<std::string>();
      auto it = state.reports.find(id);
      if (it == state.reports.end()) throw NotFoundError("unknown report '" + id + "'");
      if (it->second.status != ReportStatus::Open) {
        throw StateError("report '" + id + "' is " + std::string(to_string(it->second.status)) + ", not open");
      }
      it->second.status = ReportStatus::UnderReview;
    } else if (type == "resolved") {
      const auto id = ev.at("report_id").get<std::string>();
      auto it = state.reports.find(id);
      if (it == state.reports.end()) throw NotFoundError("unknown report '" + id + "'");
      const auto resolver = role_from(ev.at("resolver_role"));
      const auto category = category_from(ev.at("category"));
      if (resolver != ReporterRole::QA) throw AuthorizationError("only QA may resolve reports");
      if (it->second.status != ReportStatus::UnderReview) {
        throw StateError("report '" + id + "' is " + std::string(to_string(it->second.status)) +
                         ", not under review");
      }
      it->second.status = ReportStatus::Resolved;
      it->second.resolution =
          Resolution{category, resolver, ev.at("note").get<std::string>(), ev.at("resolved_at").get<std::int64_t>()};
    } else {
      throw IntegrityError("unknown event type '" + type + "'");
    }
    state.seq = seq;
  } catch (const json::exception& e) {
    throw IntegrityError(std::string("malformed ledger event: ") + e.what());
  }
}

void Ledger::append_line(const std::string& line) const {
  if (!path_) return;
  std::ofstream out(*path_, std::ios::binary | std::ios::app);
  out << line << '\n';
  out.flush();
  if (!out) throw std::runtime_error("cannot append to ledger " + path_->string());
}

// Events are checked against the current state before they are persisted, so
// a rejected operation leaves both the file and memory untouched.
void Ledger::commit(const std::string& event_line) {
  const json ev = json::parse(event_line);
  const auto type = ev.at("type").get<std::string>();
  // Dry run on a minimal shadow holding only what the event touches.
  State shadow;
  shadow.seq = state_.seq;
  shadow.next_report = state_.next_report;
  if (type == "session") {
    const auto id = ev.at("session").at("session_id").get<std::string>();
    if (auto it = state_.sessions.find(id); it != state_.sessions.end()) shadow.sessions.insert(*it);
  } else if (type == "filed") {
    const auto id = ev.at("report").at("session_id").get<std::string>();
    if (auto it = state_.sessions.find(id); it != state_.sessions.end()) shadow.sessions.insert(*it);
  } else {
    const auto id = ev.at("report_id").get<std::string>();
    if (auto it = state_.reports.find(id); it != state_.reports.end()) shadow.reports.insert(*it);
  }
  apply(shadow, event_line);
  append_line(event_line);
  apply(state_, event_line);
}

void Ledger::register_session(SessionEntry entry) {
  try {
    (void)verdict_ids(entry.assessment_json);
  } catch (const Error& e) {
    throw ValidationError("session '" + entry.session_id + "' assessment is unreadable: " + e.what());
  }
  std::lock_guard lock(mutex_);
  json ev = {{"seq", state_.seq + 1}, {"type", "session"}, {"session", session_json(entry)}};
  commit(ev.dump());
}

ErrorReport Ledger::file_report(const std::string& session_id, const std::optional<std::string>& requirement_id,
                                ReporterRole role, std::string claim) {
  std::lock_guard lock(mutex_);
  ErrorReport r;
  r.report_id = report_id_for(state_.next_report);
  r.session_id = session_id;
  r.requirement_id = requirement_id;
  r.reporter_role = role;
  r.claim = std::move(claim);
  r.filed_at = clock_();
  json ev = {{"seq", state_.seq + 1}, {"type", "filed"}, {"report", report_json(r)}};
  commit(ev.dump());
  return state_.reports.at(r.report_id);
}

EvidenceBundle Ledger::assemble_evidence(const std::string& report_id) {
  std::lock_guard lock(mutex_);
  auto it = state_.reports.find(report_id);
  if (it == state_.reports.end()) throw NotFoundError("unknown report '" + report_id + "'");
  const ErrorReport& report = it->second;
  if (report.status == ReportStatus::Resolved) throw StateError("report '" + report_id + "' is already resolved");
  const SessionEntry& session = state_.sessions.at(report.session_id);
  if (!session.transcript) {
    throw IntegrityError("session '" + session.session_id + "' has no stored trace");
  }

  Trace trace = parse_transcript(*session.transcript, session.session_id);
  Assessment assessment = assessment_from_json(session.assessment_json);
  EvidenceBundle bundle{std::move(trace), {}, {}, session.recording_ref};
  for (auto& v : assessment.verdicts) {
    if (report.requirement_id && v.requirement_id != *report.requirement_id) continue;
    for (const auto& w : v.witnesses) {
      if (w.global_index >= bundle.trace.size()) {
        throw IntegrityError("verdict '" + v.requirement_id + "' cites turn " + std::to_string(w.global_index) +
                             " outside the stored trace");
      }
    }
    bundle.rationale.push_back(v.rationale);
    bundle.verdicts.push_back(std::move(v));
  }

  if (report.status == ReportStatus::Open) {
    json ev = {{"seq", state_.seq + 1}, {"type", "review"}, {"report_id", report_id}, {"at", clock_()}};
    commit(ev.dump());
  }
  return bundle;
}

ErrorReport Ledger::resolve(const std::string& report_id, ResolutionCategory category, ReporterRole resolver,
                            std::string note) {
  std::lock_guard lock(mutex_);
  json ev = {{"seq", state_.seq + 1},
             {"type", "resolved"},
             {"report_id", report_id},
             {"category", to_string(category)},
             {"resolver_role", to_string(resolver)},
             {"note", std::move(note)},
             {"resolved_at", clock_()}};
  commit(ev.dump());
  return state_.reports.at(report_id);
}

TriageSummary Ledger::summary(PhantomPolicy policy, double bucket_width) const {
  if (!(bucket_width > 0.0)) throw ValidationError("bucket width must be positive");
  std::lock_guard lock(mutex_);
  TriageSummary s;
  std::vector<ResolutionCategory> resolved;
  std::set<std::string> disputed;
  for (const auto& [id, r] : state_.reports) {
    disputed.insert(r.session_id);
    switch (r.status) {
      case ReportStatus::Open:
        ++s.open;
        break;
      case ReportStatus::UnderReview:
        ++s.under_review;
        break;
      case ReportStatus::Resolved:
        ++s.resolved;
        resolved.push_back(r.resolution->category);
        ++s.per_category[r.resolution->category];
        break;
    }
  }
  s.phantom_rate = phantom_rate(resolved, policy);

  std::map<long long, BucketRate> buckets;
  for (const auto& [id, session] : state_.sessions) {
    const auto k = static_cast<long long>(std::floor(session.complexity / bucket_width));
    auto& b = buckets[k];
    b.lo = static_cast<double>(k) * bucket_width;
    b.hi = static_cast<double>(k + 1) * bucket_width;
    ++b.sessions;
    if (disputed.count(id)) ++b.disputed;
  }
  for (auto& [k, b] : buckets) {
    b.rate = static_cast<double>(b.disputed) / static_cast<double>(b.sessions);
    s.buckets.push_back(b);
  }
  return s;
}

void Ledger::compact() {
  std::lock_guard lock(mutex_);
  if (!path_) return;
  json sessions = json::array();
  for (const auto& [id, s] : state_.sessions) sessions.push_back(session_json(s));
  json reports = json::array();
  for (const auto& [id, r] : state_.reports) reports.push_back(report_json(r));
  json snap = {{"seq", state_.seq},
               {"type", "snapshot"},
               {"sessions", sessions},
               {"reports", reports},
               {"next_report", state_.next_report}};
  auto tmp = *path_;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << snap.dump() << '\n';
    out.flush();
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, *path_);
}

std::optional<ErrorReport> Ledger::report(const std::string& report_id) const {
  std::lock_guard lock(mutex_);
  auto it = state_.reports.find(report_id);
  if (it == state_.reports.end()) return std::nullopt;
  return it->second;
}

std::vector<ErrorReport> Ledger::reports() const {
  std::lock_guard lock(mutex_);
  std::vector<ErrorReport> out;
  for (const auto& [id, r] : state_.reports) out.push_back(r);
  return out;
}

std::optional<SessionEntry> Ledger::session(const std::string& session_id) const {
  std::lock_guard lock(mutex_);
  auto it = state_.sessions.find(session_id);
  if (it == state_.sessions.end()) return std::nullopt;
  return it->second;
}

std::size_t Ledger::session_count() const {
  std::lock_guard lock(mutex_);
  return state_.sessions.size();
}

std::uint64_t Ledger::last_sequence() const {
  std::lock_guard lock(mutex_);
  return state_.seq;
}

std::string summary_to_json(const TriageSummary& s) {
  json categories = json::object();
  for (auto c : {ResolutionCategory::GenuineFailure, ResolutionCategory::Misattribution,
                 ResolutionCategory::ExpectedBehavior}) {
    auto it = s.per_category.find(c);
    categories[std::string(to_string(c))] = it == s.per_category.end() ? 0 : it->second;
  }
  json buckets = json::array();
  for (const auto& b : s.buckets) {
    buckets.push_back({{"lo", b.lo}, {"hi", b.hi}, {"sessions", b.sessions}, {"disputed", b.disputed},
                       {"dispute_rate", b.rate}});
  }
  json doc = {{"schema", "protocheck.triage/1"},
              {"open", s.open},
              {"under_review", s.under_review},
              {"resolved", s.resolved},
              {"phantom_rate", s.phantom_rate ? json(*s.phantom_rate) : json(nullptr)},
              {"categories", categories},
              {"buckets", buckets}};
  return doc.dump(2);
}

}  // namespace protocheck
