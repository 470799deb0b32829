#pragma once

#include <array>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "trajcot/civil_time.hpp"
#include "trajcot/trajectory.hpp"

namespace trajcot {

enum class Daypart { Night, Morning, Afternoon, Evening };

inline constexpr std::array<Daypart, 4> kDayparts = {Daypart::Night, Daypart::Morning,
                                                     Daypart::Afternoon, Daypart::Evening};

std::string_view to_string(Daypart d);
/// Night [00,06), Morning [06,12), Afternoon [12,18), Evening [18,24).
Daypart daypart_of_hour(int hour);

/// Figures behind the weekly summary text.
struct VisitStats {
  std::map<std::string, std::int64_t> activity_counts;  // a visit counts once per tag
  std::array<std::int64_t, 4> daypart_counts{};         // by local start time
  std::int64_t total_visits = 0;
  std::int64_t distinct_venues = 0;
  std::int64_t total_duration_min = 0;  // sum of per-visit floor(duration_s / 60)
  std::int64_t weekday_visits = 0;
  std::int64_t weekend_visits = 0;
  // Averages in tenths, rounded half-up: visits / 5 weekdays, visits / 2 weekend days.
  std::int64_t weekday_avg_tenths = 0;
  std::int64_t weekend_avg_tenths = 0;

  double weekday_avg() const { return static_cast<double>(weekday_avg_tenths) / 10.0; }
  double weekend_avg() const { return static_cast<double>(weekend_avg_tenths) / 10.0; }

  /// Activity tags ordered by descending count, then by name.
  std::vector<std::pair<std::string, std::int64_t>> ranked_activities() const;

  bool operator==(const VisitStats&) const = default;
};

/// round_half_up(10 * numerator / denominator) in integer arithmetic.
std::int64_t tenths_half_up(std::int64_t numerator, std::int64_t denominator);
/// `2.8`, `0.0`, `12.5`.
std::string format_tenths(std::int64_t tenths);

/// floor(duration_s / 60) as rendered in `(N mins)`.
std::int64_t whole_minutes(std::int64_t duration_s);

/// `Monday, January 29 (Weekday) - 09:10-10:14 (63 mins): Bear Wire - Work, Services, DropOff`
std::string render_visit_line(const Visit& visit, const TimeZone& tz);

/// One header per day with visits followed by that day's visit lines.
std::string render_chronicle(const AgentWeek& week, const TimeZone& tz);

VisitStats compute_stats(const AgentWeek& week, const TimeZone& tz);

struct RenderedSummary {
  std::string text;
  VisitStats stats;
};
RenderedSummary render_summary(const AgentWeek& week, const TimeZone& tz);

struct WeeklyNarrative {
  std::string agent_id;
  std::chrono::local_days week_start;
  std::string chronicle;
  std::string summary;
  VisitStats stats;

  /// Chronicle and summary separated by a blank line.
  std::string text() const;
};

/// Number of Unicode code points in UTF-8 `text`.
std::size_t count_characters(std::string_view text);

/// Renders every week (most recent first) and keeps the newest weeks whose
/// joined text fits within `budget` characters, dropping whole weeks
/// oldest-first. Throws BudgetError when even the newest week does not fit
/// and ValidationError on an empty input.
std::vector<WeeklyNarrative> build_narrative(std::span<const AgentWeek> weeks,
                                             std::size_t budget, const TimeZone& tz);

/// The model-facing text: weeks in chronological order joined by a blank line.
std::string join_narratives(std::span<const WeeklyNarrative> narratives);

void to_json(nlohmann::json& j, const VisitStats& s);
void to_json(nlohmann::json& j, const WeeklyNarrative& n);

}  // namespace trajcot
