#pragma once

// Dispute ledger for user-filed error reports. Reports move forward only
// (Open -> UnderReview -> Resolved); only QA resolves them, after evidence
// has been assembled. Every mutation is appended to a line-delimited
// ledger file with a monotonic sequence number.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "protocheck/analytics.hpp"
#include "protocheck/monitor.hpp"
#include "protocheck/trace.hpp"

namespace protocheck {

enum class ReporterRole { Trainee, Coordinator, QA };
enum class ReportStatus { Open, UnderReview, Resolved };

std::string_view to_string(ReporterRole role) noexcept;
std::string_view to_string(ReportStatus status) noexcept;
std::optional<ReporterRole> role_from_string(std::string_view name) noexcept;

struct Resolution {
  ResolutionCategory category = ResolutionCategory::GenuineFailure;
  ReporterRole resolver_role = ReporterRole::QA;
  std::string note;
  std::int64_t resolved_at = 0;

  bool operator==(const Resolution&) const = default;
};

struct ErrorReport {
  std::string report_id;
  std::string session_id;
  std::optional<std::string> requirement_id;
  ReporterRole reporter_role = ReporterRole::Trainee;
  std::string claim;
  std::int64_t filed_at = 0;
  ReportStatus status = ReportStatus::Open;
  std::optional<Resolution> resolution;

  bool operator==(const ErrorReport&) const = default;
};

// Everything needed to re-derive a session's assessment.
struct SessionEntry {
  std::string session_id;
  double complexity = 0.0;
  std::optional<std::string> transcript;  // transcript file content
  std::string spec_text;
  std::string lexicon_json;
  std::string context_json;
  std::string assessment_json;
  std::optional<std::string> recording_ref;

  bool operator==(const SessionEntry&) const = default;
};

struct EvidenceBundle {
  Trace trace;
  std::vector<Verdict> verdicts;
  std::vector<std::string> rationale;
  std::optional<std::string> recording_ref;
};

struct BucketRate {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t sessions = 0;
  std::size_t disputed = 0;
  double rate = 0.0;
};

struct TriageSummary {
  std::size_t open = 0;
  std::size_t under_review = 0;
  std::size_t resolved = 0;
  std::optional<double> phantom_rate;
  std::map<ResolutionCategory, std::size_t> per_category;
  std::vector<BucketRate> buckets;  // sessions grouped by complexity
};

class Ledger {
 public:
  using Clock = std::function<std::int64_t()>;  // milliseconds since epoch

  static std::int64_t system_clock_ms();

  // In-memory ledger.
  explicit Ledger(Clock clock = system_clock_ms);
  // File-backed ledger; replays `path` when it exists. Throws
  // IntegrityError on a corrupt or out-of-order ledger file.
  explicit Ledger(std::filesystem::path path, Clock clock = system_clock_ms);

  Ledger(const Ledger&) = delete;
  Ledger& operator=(const Ledger&) = delete;

  void register_session(SessionEntry entry);

  // Throws NotFoundError for an unknown session or a requirement the
  // session's assessment does not contain.
  ErrorReport file_report(const std::string& session_id, const std::optional<std::string>& requirement_id,
                          ReporterRole role, std::string claim);

  // Moves an Open report to UnderReview. Throws StateError for resolved
  // reports and IntegrityError when the session has no stored trace.
  EvidenceBundle assemble_evidence(const std::string& report_id);

  // Throws AuthorizationError unless `resolver` is QA and StateError unless
  // the report is UnderReview.
  ErrorReport resolve(const std::string& report_id, ResolutionCategory category, ReporterRole resolver,
                      std::string note);

  TriageSummary summary(PhantomPolicy policy = PhantomPolicy::NonFailures, double bucket_width = 0.25) const;

  // Rewrites the ledger file as a single snapshot record.
  void compact();

  std::optional<ErrorReport> report(const std::string& report_id) const;
  std::vector<ErrorReport> reports() const;
  std::optional<SessionEntry> session(const std::string& session_id) const;
  std::size_t session_count() const;
  std::uint64_t last_sequence() const;

 private:
  struct State {
    std::map<std::string, SessionEntry> sessions;
    std::map<std::string, ErrorReport> reports;
    std::uint64_t next_report = 1;
    std::uint64_t seq = 0;
  };

  void replay();
  // Applies `event_line` to a copy of the state, persists it, then swaps.
  void commit(const std::string& event_line);
  void append_line(const std::string& line) const;

  // Validates and applies one event. Throws IntegrityError on a malformed
  // event and the domain error on a rejected transition.
  static void apply(State& state, const std::string& event_line);

  std::optional<std::filesystem::path> path_;
  Clock clock_;
  mutable std::mutex mutex_;
  State state_;
};

std::string summary_to_json(const TriageSummary& summary);

}  // namespace protocheck
