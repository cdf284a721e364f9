#include "protocheck/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <json.hpp>

#include "protocheck/errors.hpp"
#include "protocheck/kernels.hpp"
#include "protocheck/random.hpp"

namespace protocheck {

using nlohmann::json;

double complexity_index(const ComplexityParams& p) {
  if (p.eta.numerator <= 0 || p.eta.denominator <= 0) throw ValidationError("eta must be positive");
  // (eta_num * N + (D + C) * eta_den) / eta_den, a single rounding.
  const long double num = static_cast<long double>(p.eta.numerator) * p.requirements +
                          static_cast<long double>(p.departments + p.caller_profiles) * p.eta.denominator;
  return static_cast<double>(num / p.eta.denominator);
}

bool in_calibrated_band(double ci, const Band& band) { return ci >= band.lo && ci <= band.hi; }

std::string_view to_string(ResolutionCategory category) noexcept {
  switch (category) {
    case ResolutionCategory::GenuineFailure:
      return "genuine_failure";
    case ResolutionCategory::Misattribution:
      return "misattribution";
    case ResolutionCategory::ExpectedBehavior:
      return "expected_behavior";
  }
  return "genuine_failure";
}

std::optional<ResolutionCategory> resolution_from_string(std::string_view name) noexcept {
  if (name == "genuine_failure") return ResolutionCategory::GenuineFailure;
  if (name == "misattribution") return ResolutionCategory::Misattribution;
  if (name == "expected_behavior") return ResolutionCategory::ExpectedBehavior;
  return std::nullopt;
}

std::optional<double> phantom_rate(std::span<const ResolutionCategory> resolved, PhantomPolicy policy) {
  if (resolved.empty()) return std::nullopt;
  const auto phantom = std::count_if(resolved.begin(), resolved.end(), [&](ResolutionCategory c) {
    if (c == ResolutionCategory::Misattribution) return true;
    return policy == PhantomPolicy::NonFailures && c == ResolutionCategory::ExpectedBehavior;
  });
  return static_cast<double>(phantom) / static_cast<double>(resolved.size());
}

namespace {

void check_pair(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) {
    throw ValidationError("series lengths differ (" + std::to_string(xs.size()) + " vs " +
                          std::to_string(ys.size()) + ")");
  }
  if (xs.size() < 2) throw ValidationError("at least two points are required");
}

bool constant(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
}

double mean(std::span<const double> v) { return kernels::sum(v) / static_cast<double>(v.size()); }

double clamp_r(double r) { return std::clamp(r, -1.0, 1.0); }

}  // namespace

std::optional<double> pearson(std::span<const double> xs, std::span<const double> ys) {
  check_pair(xs, ys);
  if (constant(xs) || constant(ys)) return std::nullopt;
  const auto m = kernels::centered_moments(xs, ys, mean(xs), mean(ys));
  return clamp_r(m.sxy / std::sqrt(m.sxx * m.syy));
}

std::optional<double> linear_slope(std::span<const double> xs, std::span<const double> ys) {
  check_pair(xs, ys);
  if (constant(xs)) return std::nullopt;
  if (constant(ys)) return 0.0;
  const auto m = kernels::centered_moments(xs, ys, mean(xs), mean(ys));
  return m.sxy / m.sxx;
}

std::optional<double> permutation_pvalue(std::span<const double> xs, std::span<const double> ys,
                                         std::uint64_t trials, std::uint64_t seed) {
  check_pair(xs, ys);
  if (trials < 100) throw ValidationError("permutation test needs at least 100 trials");
  if (constant(xs) || constant(ys)) return std::nullopt;

  const double mx = mean(xs);
  const double my = mean(ys);
  std::vector<double> xc(xs.begin(), xs.end());
  std::vector<double> yc(ys.begin(), ys.end());
  for (auto& v : xc) v -= mx;
  for (auto& v : yc) v -= my;
  const auto m = kernels::centered_moments(xc, yc, 0.0, 0.0);
  const double denom = std::sqrt(m.sxx * m.syy);
  // Permuting ys leaves both sums of squares unchanged, so each trial costs
  // one dot product.
  const double observed = std::abs(kernels::dot(xc, yc) / denom);

  Rng rng(seed);
  std::uint64_t extreme = 0;
  for (std::uint64_t t = 0; t < trials; ++t) {
    rng.shuffle(std::span<double>(yc));
    const double r = std::abs(kernels::dot(xc, yc) / denom);
    if (r >= observed - 1e-12) ++extreme;
  }
  return static_cast<double>(extreme) / static_cast<double>(trials);
}

namespace {

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    std::string_view cell = line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
    while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t' || cell.back() == '\r')) cell.remove_suffix(1);
    out.emplace_back(cell);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

double parse_real(const std::string& cell, std::size_t line, const char* column) {
  try {
    std::size_t used = 0;
    const double v = std::stod(cell, &used);
    if (used != cell.size() || !std::isfinite(v)) throw std::invalid_argument(cell);
    return v;
  } catch (const std::exception&) {
    throw ParseError(line, 0, std::string("column '") + column + "' is not a number: '" + cell + "'");
  }
}

std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::vector<SessionRecord> parse_dataset(std::string_view csv) {
  static const std::vector<std::string> kColumns = {"session_id", "complexity", "score", "disputed",
                                                    "turn_count"};
  std::vector<SessionRecord> out;
  std::map<std::string, std::size_t> column_of;
  std::size_t header_width = 0;
  bool have_header = false;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < csv.size()) {
    const std::size_t end = std::min(csv.find('\n', pos), csv.size());
    std::string_view line = csv.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    auto cells = split_csv_line(line);
    if (!have_header) {
      for (std::size_t i = 0; i < cells.size(); ++i) column_of[cells[i]] = i;
      for (const auto& c : kColumns) {
        if (!column_of.count(c)) throw ParseError(line_no, 0, "header lacks column '" + c + "'");
      }
      header_width = cells.size();
      have_header = true;
      continue;
    }
    if (cells.size() != header_width) {
      throw ParseError(line_no, 0, "expected " + std::to_string(header_width) + " cells, found " +
                                       std::to_string(cells.size()));
    }
    SessionRecord r;
    r.session_id = cells[column_of["session_id"]];
    r.complexity = parse_real(cells[column_of["complexity"]], line_no, "complexity");
    r.score = parse_real(cells[column_of["score"]], line_no, "score");
    const std::string& disputed = cells[column_of["disputed"]];
    if (disputed == "1" || disputed == "true") {
      r.disputed = true;
    } else if (disputed == "0" || disputed == "false") {
      r.disputed = false;
    } else {
      throw ParseError(line_no, 0, "column 'disputed' must be 0/1 or true/false");
    }
    const double turns = parse_real(cells[column_of["turn_count"]], line_no, "turn_count");
    if (turns < 0 || turns != std::floor(turns)) throw ParseError(line_no, 0, "turn_count must be a nonnegative integer");
    r.turn_count = static_cast<std::uint64_t>(turns);
    if (r.score < 0.0 || r.score > 1.0) throw ParseError(line_no, 0, "score must lie in [0, 1]");
    if (r.complexity < 0.0) throw ParseError(line_no, 0, "complexity must be nonnegative");
    out.push_back(std::move(r));
  }
  if (!have_header) throw ParseError(1, 0, "dataset has no header row");
  return out;
}

std::string serialize_dataset(std::span<const SessionRecord> records) {
  std::string out = "session_id,complexity,score,disputed,turn_count\n";
  for (const auto& r : records) {
    out += r.session_id + "," + format_real(r.complexity) + "," + format_real(r.score) + "," +
           (r.disputed ? "1" : "0") + "," + std::to_string(r.turn_count) + "\n";
  }
  return out;
}

StatsSummary summarize(std::span<const SessionRecord> records, const StatsOptions& options) {
  std::vector<SessionRecord> kept;
  for (const auto& r : records) {
    if (r.turn_count >= options.min_turns) kept.push_back(r);
  }
  if (kept.empty()) throw ValidationError("no sessions to summarize");

  StatsSummary s;
  s.sessions = kept.size();
  std::vector<double> ci, score, dispute;
  for (const auto& r : kept) {
    ci.push_back(r.complexity);
    score.push_back(r.score);
    dispute.push_back(r.disputed ? 1.0 : 0.0);
  }
  std::vector<double> sorted = ci;
  std::sort(sorted.begin(), sorted.end());
  s.complexity_min = sorted.front();
  s.complexity_max = sorted.back();
  s.complexity_mean = kernels::sum(ci) / static_cast<double>(ci.size());
  const std::size_t mid = sorted.size() / 2;
  s.complexity_median = sorted.size() % 2 ? sorted[mid] : (sorted[mid - 1] + sorted[mid]) / 2.0;

  double in_sum = 0, out_sum = 0;
  std::size_t in_n = 0, out_n = 0;
  for (const auto& r : kept) {
    if (in_calibrated_band(r.complexity, options.band)) {
      in_sum += r.score;
      ++in_n;
    } else {
      out_sum += r.score;
      ++out_n;
    }
  }
  s.band_occupancy = static_cast<double>(in_n) / static_cast<double>(kept.size());
  if (in_n) s.mean_score_in_band = in_sum / static_cast<double>(in_n);
  if (out_n) s.mean_score_outside_band = out_sum / static_cast<double>(out_n);
  s.dispute_rate = kernels::sum(dispute) / static_cast<double>(dispute.size());

  if (kept.size() >= 2) {
    auto correlate = [&](const std::vector<double>& ys) {
      Correlation c;
      c.r = pearson(ci, ys);
      c.slope = linear_slope(ci, ys);
      c.p_value = permutation_pvalue(ci, ys, options.trials, options.seed);
      return c;
    };
    s.score = correlate(score);
    s.dispute = correlate(dispute);
  }
  return s;
}

std::string summary_to_json(const StatsSummary& s, const StatsOptions& options) {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  auto corr = [&](const Correlation& c) {
    return json{{"pearson", opt(c.r)}, {"slope", opt(c.slope)}, {"p_value", opt(c.p_value)}};
  };
  json doc = {
      {"schema", "protocheck.stats/1"},
      {"sessions", s.sessions},
      {"min_turns", options.min_turns},
      {"complexity",
       {{"min", s.complexity_min}, {"max", s.complexity_max}, {"mean", s.complexity_mean},
        {"median", s.complexity_median}}},
      {"band",
       {{"lo", options.band.lo},
        {"hi", options.band.hi},
        {"occupancy", s.band_occupancy},
        {"mean_score_in_band", opt(s.mean_score_in_band)},
        {"mean_score_outside_band", opt(s.mean_score_outside_band)}}},
      {"score", corr(s.score)},
      {"dispute", corr(s.dispute)},
      {"dispute_rate", s.dispute_rate},
      {"permutation", {{"trials", options.trials}, {"seed", options.seed}}},
  };
  return doc.dump(2);
}

}  // namespace protocheck
