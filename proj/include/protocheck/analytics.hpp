#pragma once

// Deployment analytics: scenario complexity index, calibrated-difficulty
// band, phantom-error rate, and correlation statistics over session data.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace protocheck {

// Requirement-count weight, kept as an exact fraction. The default 5/78 is
// 1/15.6, the inverse of the average number of required actions.
struct Eta {
  std::int64_t numerator = 5;
  std::int64_t denominator = 78;

  double value() const noexcept { return static_cast<double>(numerator) / static_cast<double>(denominator); }
};

struct ComplexityParams {
  std::uint64_t requirements = 0;     // N: requirements that can activate in the scenario
  std::uint64_t departments = 0;      // D: coordinated departments
  std::uint64_t caller_profiles = 0;  // C: activated caller profiles
  Eta eta;
};

// eta * N + D + C, rounded once. Throws ValidationError for eta <= 0.
double complexity_index(const ComplexityParams& params);

struct Band {
  double lo = 1.34;
  double hi = 1.57;
};

// Closed interval test.
bool in_calibrated_band(double ci, const Band& band = {});

enum class ResolutionCategory { GenuineFailure, Misattribution, ExpectedBehavior };
std::string_view to_string(ResolutionCategory category) noexcept;
std::optional<ResolutionCategory> resolution_from_string(std::string_view name) noexcept;

enum class PhantomPolicy {
  NonFailures,        // Misattribution + ExpectedBehavior
  MisattributionOnly,
};

// Share of resolved reports not caused by a genuine fault; absent when no
// report is resolved.
std::optional<double> phantom_rate(std::span<const ResolutionCategory> resolved,
                                   PhantomPolicy policy = PhantomPolicy::NonFailures);

// Sample Pearson coefficient. Throws ValidationError on length mismatch or
// fewer than two points; absent when either series is constant.
std::optional<double> pearson(std::span<const double> xs, std::span<const double> ys);

// Least-squares slope of ys on xs. Same errors as pearson; absent when xs is
// constant, 0 when ys is constant.
std::optional<double> linear_slope(std::span<const double> xs, std::span<const double> ys);

// Two-sided permutation p-value: fraction of `trials` seeded shuffles of ys
// whose |r| reaches the observed |r|. Throws ValidationError for trials < 100.
std::optional<double> permutation_pvalue(std::span<const double> xs, std::span<const double> ys,
                                         std::uint64_t trials, std::uint64_t seed);

struct SessionRecord {
  std::string session_id;
  double complexity = 0.0;
  double score = 0.0;
  bool disputed = false;
  std::uint64_t turn_count = 0;

  bool operator==(const SessionRecord&) const = default;
};

// CSV with a header naming session_id, complexity, score, disputed,
// turn_count (any column order). Throws ParseError with the line number.
std::vector<SessionRecord> parse_dataset(std::string_view csv);
std::string serialize_dataset(std::span<const SessionRecord> records);

struct StatsOptions {
  std::uint64_t min_turns = 0;  // keep sessions with at least this many merged turns
  std::uint64_t trials = 1000;
  std::uint64_t seed = 0;
  Band band;
};

struct Correlation {
  std::optional<double> r;
  std::optional<double> slope;
  std::optional<double> p_value;
};

struct StatsSummary {
  std::size_t sessions = 0;  // after the turn filter
  double complexity_min = 0.0;
  double complexity_max = 0.0;
  double complexity_mean = 0.0;
  double complexity_median = 0.0;
  double band_occupancy = 0.0;  // fraction of sessions inside the band
  std::optional<double> mean_score_in_band;
  std::optional<double> mean_score_outside_band;
  double dispute_rate = 0.0;
  Correlation score;    // complexity vs score
  Correlation dispute;  // complexity vs disputed (0/1)
};

// Throws ValidationError when no session survives the filter.
StatsSummary summarize(std::span<const SessionRecord> records, const StatsOptions& options);
std::string summary_to_json(const StatsSummary& summary, const StatsOptions& options);

}  // namespace protocheck
