#include "trajcot/narrative.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include <nlohmann/json.hpp>

#include "trajcot/error.hpp"

namespace trajcot {
namespace {

using namespace std::chrono;

std::string two_digits(long long v) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "%02lld", v);
  return buf;
}

std::string clock_hhmm(local_seconds t) {
  const auto day = floor<days>(t);
  const hh_mm_ss tod{t - day};
  return two_digits(tod.hours().count()) + ":" + two_digits(tod.minutes().count());
}

/// `Monday, January 29 (Weekday)`
std::string day_label(local_days day) {
  const weekday wd{day};
  const year_month_day ymd{day};
  return std::string(weekday_name(wd)) + ", " + std::string(month_name(ymd.month())) + " " +
         std::to_string(static_cast<unsigned>(ymd.day())) + " (" +
         (is_weekend(wd) ? "Weekend" : "Weekday") + ")";
}

std::string long_date(local_days day) {
  const weekday wd{day};
  const year_month_day ymd{day};
  return std::string(weekday_name(wd)) + ", " + std::string(month_name(ymd.month())) + " " +
         std::to_string(static_cast<unsigned>(ymd.day())) + ", " +
         std::to_string(static_cast<int>(ymd.year()));
}

void require_visits(const AgentWeek& week) {
  if (week.visits.empty()) {
    throw ValidationError("agent week of '" + week.agent_id + "' has no visits");
  }
}

}  // namespace

std::string_view to_string(Daypart d) {
  switch (d) {
    case Daypart::Night: return "Night";
    case Daypart::Morning: return "Morning";
    case Daypart::Afternoon: return "Afternoon";
    case Daypart::Evening: return "Evening";
  }
  return "?";
}

Daypart daypart_of_hour(int hour) {
  if (hour < 6) return Daypart::Night;
  if (hour < 12) return Daypart::Morning;
  if (hour < 18) return Daypart::Afternoon;
  return Daypart::Evening;
}

std::int64_t tenths_half_up(std::int64_t numerator, std::int64_t denominator) {
  // round(10 n / d) with halves rounded up, for n >= 0, d > 0.
  return (20 * numerator + denominator) / (2 * denominator);
}

std::string format_tenths(std::int64_t tenths) {
  return std::to_string(tenths / 10) + "." + std::to_string(tenths % 10);
}

std::int64_t whole_minutes(std::int64_t duration_s) { return duration_s / 60; }

std::vector<std::pair<std::string, std::int64_t>> VisitStats::ranked_activities() const {
  std::vector<std::pair<std::string, std::int64_t>> out(activity_counts.begin(),
                                                        activity_counts.end());
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  return out;
}

std::string render_visit_line(const Visit& visit, const TimeZone& tz) {
  const auto start = tz.to_local(visit.start_ts());
  const auto end = tz.to_local(visit.end_ts());
  std::string tags;
  for (const auto& t : visit.activity_types) {
    if (!tags.empty()) tags += ", ";
    tags += t;
  }
  return day_label(floor<days>(start)) + " - " + clock_hhmm(start) + "-" + clock_hhmm(end) +
         " (" + std::to_string(whole_minutes(visit.duration_s)) + " mins): " + visit.name +
         " - " + tags;
}

std::string render_chronicle(const AgentWeek& week, const TimeZone& tz) {
  require_visits(week);
  std::vector<const Visit*> ordered;
  for (const auto& v : week.visits) ordered.push_back(&v);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const Visit* a, const Visit* b) { return visit_order(*a, *b); });

  std::string out = "Activity chronicle for the week of " + long_date(week.week_start) + ":\n";
  std::size_t i = 0;
  while (i < ordered.size()) {
    const auto day = floor<days>(tz.to_local(ordered[i]->start_ts()));
    std::size_t j = i;
    while (j < ordered.size() && floor<days>(tz.to_local(ordered[j]->start_ts())) == day) ++j;
    const std::size_t count = j - i;
    out += day_label(day) + ": " + std::to_string(count) + (count == 1 ? " visit\n" : " visits\n");
    for (; i < j; ++i) out += render_visit_line(*ordered[i], tz) + "\n";
  }
  return out;
}

VisitStats compute_stats(const AgentWeek& week, const TimeZone& tz) {
  VisitStats s;
  std::set<std::string> venues;
  for (const auto& v : week.visits) {
    const auto start = tz.to_local(v.start_ts());
    const auto day = floor<days>(start);
    const auto hour = duration_cast<hours>(start - day).count();
    ++s.daypart_counts[static_cast<std::size_t>(daypart_of_hour(static_cast<int>(hour)))];
    for (const auto& t : v.activity_types) ++s.activity_counts[t];
    venues.insert(v.poi_id());
    s.total_duration_min += whole_minutes(v.duration_s);
    if (is_weekend(weekday{day})) {
      ++s.weekend_visits;
    } else {
      ++s.weekday_visits;
    }
  }
  s.total_visits = static_cast<std::int64_t>(week.visits.size());
  s.distinct_venues = static_cast<std::int64_t>(venues.size());
  s.weekday_avg_tenths = tenths_half_up(s.weekday_visits, 5);
  s.weekend_avg_tenths = tenths_half_up(s.weekend_visits, 2);
  return s;
}

RenderedSummary render_summary(const AgentWeek& week, const TimeZone& tz) {
  require_visits(week);
  RenderedSummary r;
  r.stats = compute_stats(week, tz);
  const auto& s = r.stats;
  std::string& out = r.text;
  out = "Weekly visiting summary:\n";
  out += "Total visits: " + std::to_string(s.total_visits) + "\n";
  out += "Distinct venues: " + std::to_string(s.distinct_venues) + "\n";
  out += "Total time at venues: " + std::to_string(s.total_duration_min) + " mins\n";
  out += "Visits by activity type:\n";
  for (const auto& [tag, count] : s.ranked_activities()) {
    out += "- " + tag + ": " + std::to_string(count) + "\n";
  }
  out += "Activity time distribution:\n";
  for (const auto d : kDayparts) {
    out += "- " + std::string(to_string(d)) + ": " +
           std::to_string(s.daypart_counts[static_cast<std::size_t>(d)]) + "\n";
  }
  out += "Average activities on weekdays: " + format_tenths(s.weekday_avg_tenths) +
         ", weekends: " + format_tenths(s.weekend_avg_tenths) + "\n";
  return r;
}

std::string WeeklyNarrative::text() const { return chronicle + "\n" + summary; }

std::size_t count_characters(std::string_view text) {
  return static_cast<std::size_t>(std::count_if(text.begin(), text.end(), [](char c) {
    return (static_cast<unsigned char>(c) & 0xC0) != 0x80;
  }));
}

std::vector<WeeklyNarrative> build_narrative(std::span<const AgentWeek> weeks,
                                             std::size_t budget, const TimeZone& tz) {
  if (weeks.empty()) throw ValidationError("build_narrative needs at least one agent week");
  std::vector<const AgentWeek*> newest_first;
  for (const auto& w : weeks) newest_first.push_back(&w);
  std::stable_sort(newest_first.begin(), newest_first.end(),
                   [](const AgentWeek* a, const AgentWeek* b) {
                     return a->week_start > b->week_start;
                   });

  std::vector<WeeklyNarrative> kept;
  std::size_t used = 0;
  for (const AgentWeek* w : newest_first) {
    auto summary = render_summary(*w, tz);
    WeeklyNarrative n{w->agent_id, w->week_start, render_chronicle(*w, tz),
                      std::move(summary.text), summary.stats};
    // Weeks are joined with one extra newline (see join_narratives).
    const std::size_t cost = count_characters(n.text()) + (kept.empty() ? 0 : 1);
    if (used + cost > budget) {
      if (kept.empty()) {
        throw BudgetError("the most recent week of agent '" + w->agent_id + "' needs " +
                          std::to_string(cost) + " characters but the narrative budget is " +
                          std::to_string(budget) + "; raise the budget");
      }
      break;
    }
    used += cost;
    kept.push_back(std::move(n));
  }
  return kept;
}

std::string join_narratives(std::span<const WeeklyNarrative> narratives) {
  std::vector<const WeeklyNarrative*> chronological;
  for (const auto& n : narratives) chronological.push_back(&n);
  std::stable_sort(chronological.begin(), chronological.end(),
                   [](const WeeklyNarrative* a, const WeeklyNarrative* b) {
                     return a->week_start < b->week_start;
                   });
  std::string out;
  for (const auto* n : chronological) {
    if (!out.empty()) out += "\n";
    out += n->text();
  }
  return out;
}

void to_json(nlohmann::json& j, const VisitStats& s) {
  nlohmann::json dayparts = nlohmann::json::object();
  for (const auto d : kDayparts) {
    dayparts[std::string(to_string(d))] = s.daypart_counts[static_cast<std::size_t>(d)];
  }
  j = nlohmann::json{{"activity_counts", s.activity_counts},
                     {"daypart_counts", dayparts},
                     {"total_visits", s.total_visits},
                     {"distinct_venues", s.distinct_venues},
                     {"total_duration_min", s.total_duration_min},
                     {"weekday_visits", s.weekday_visits},
                     {"weekend_visits", s.weekend_visits},
                     {"weekday_avg", format_tenths(s.weekday_avg_tenths)},
                     {"weekend_avg", format_tenths(s.weekend_avg_tenths)}};
}

void to_json(nlohmann::json& j, const WeeklyNarrative& n) {
  j = nlohmann::json{{"agent_id", n.agent_id},
                     {"week_start", format_date(n.week_start)},
                     {"stats", n.stats}};
}

}  // namespace trajcot
