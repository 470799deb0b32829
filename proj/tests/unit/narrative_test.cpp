#include <gtest/gtest.h>

#include <cstdio>
#include <map>
#include <regex>
#include <set>
#include <sstream>

#include "trajcot/error.hpp"
#include "trajcot/narrative.hpp"
#include "trajcot/rng.hpp"
#include "test_support.hpp"

using namespace trajcot;
using namespace std::chrono;
using trajcot::testing::make_visit;

namespace {

AgentWeek week_of(std::vector<Visit> visits) {
  AgentWeek w;
  w.agent_id = visits.front().agent_id();
  w.week_start = monday_of(floor<days>(TimeZone::utc().to_local(visits.front().start_ts())));
  w.visits = std::move(visits);
  return w;
}

std::string at(int day_offset, int hour, int minute) {
  const auto day = local_days{year{2024} / January / 29} + days{day_offset};
  return format_rfc3339(sys_seconds{day.time_since_epoch() + hours{hour} + minutes{minute}});
}

/// 14 weekday visits (Mon..Fri) and 7 weekend visits.
AgentWeek fourteen_and_seven() {
  std::vector<Visit> v;
  const int weekday_counts[5] = {3, 3, 3, 3, 2};
  for (int d = 0; d < 5; ++d) {
    for (int k = 0; k < weekday_counts[d]; ++k) {
      v.push_back(make_visit("a1", at(d, 8 + 3 * k, 0), at(d, 9 + 3 * k, 0), "Venue " + std::to_string(k),
                             {"Work"}, "p" + std::to_string(k)));
    }
  }
  for (int d = 5; d < 7; ++d) {
    for (int k = 0; k < (d == 5 ? 4 : 3); ++k) {
      v.push_back(make_visit("a1", at(d, 10 + 2 * k, 0), at(d, 11 + 2 * k, 0), "Park", {"Recreation", "Exercise"}, "park"));
    }
  }
  return week_of(std::move(v));
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

}  // namespace

TEST(Chronicle, GoldenVisitLine) {
  const auto v = make_visit("a1", "2024-01-29T09:10:30Z", "2024-01-29T10:14:10Z", "Bear Wire",
                            {"Work", "Services", "DropOff"});
  EXPECT_EQ(render_visit_line(v, TimeZone::utc()),
            "Monday, January 29 (Weekday) - 09:10-10:14 (63 mins): Bear Wire - Work, Services, DropOff");
}

TEST(Chronicle, WeekendHeader) {
  const auto w = week_of({make_visit("a1", "2024-02-03T12:00:00Z", "2024-02-03T13:00:00Z", "Park", {"Recreation"})});
  const auto text = render_chronicle(w, TimeZone::utc());
  EXPECT_NE(text.find("Saturday, February 3 (Weekend): 1 visit\n"), std::string::npos) << text;
  EXPECT_NE(text.find("Saturday, February 3 (Weekend) - 12:00-13:00 (60 mins): Park - Recreation"), std::string::npos);
}

TEST(Chronicle, SameDayVisitsShareOneHeaderInOrder) {
  const auto w = week_of({make_visit("a1", "2024-01-30T15:00:00Z", "2024-01-30T16:00:00Z", "Later", {"Work"}, "p2"),
                          make_visit("a1", "2024-01-30T08:00:00Z", "2024-01-30T09:00:00Z", "Earlier", {"Work"}, "p1")});
  const auto lines = lines_of(render_chronicle(w, TimeZone::utc()));
  ASSERT_EQ(lines.size(), 4u);
  EXPECT_EQ(lines[0], "Activity chronicle for the week of Monday, January 29, 2024:");
  EXPECT_EQ(lines[1], "Tuesday, January 30 (Weekday): 2 visits");
  EXPECT_NE(lines[2].find("Earlier"), std::string::npos);
  EXPECT_NE(lines[3].find("Later"), std::string::npos);
}

TEST(Chronicle, CompletenessOneLinePerVisit) {
  const auto w = fourteen_and_seven();
  const auto text = render_chronicle(w, TimeZone::utc());
  std::size_t visit_lines = 0;
  for (const auto& l : lines_of(text)) visit_lines += l.find(" mins): ") != std::string::npos;
  EXPECT_EQ(visit_lines, w.visits.size());
}

TEST(Chronicle, DurationIsFloorOfSecondsProperty) {
  PinnedRng rng(99);
  const std::regex mins(R"(\((\d+) mins\))");
  for (int i = 0; i < 2000; ++i) {
    const sys_seconds start{seconds{1706486400 + static_cast<std::int64_t>(rng.below(6 * 86400))}};
    const auto len = static_cast<std::int64_t>(rng.between(1, 20000));
    const auto v = make_visit("a1", format_rfc3339(start), format_rfc3339(start + seconds{len}), "X", {"Work"});
    const auto line = render_visit_line(v, TimeZone::utc());
    std::smatch m;
    ASSERT_TRUE(std::regex_search(line, m, mins)) << line;
    EXPECT_EQ(std::stoll(m[1].str()), len / 60) << line;
  }
}

TEST(Chronicle, ClockTimesAreTruncated) {
  const auto v = make_visit("a1", "2024-01-29T09:59:59Z", "2024-01-29T10:00:59Z", "X", {"Work"});
  EXPECT_NE(render_visit_line(v, TimeZone::utc()).find("09:59-10:00 (1 mins)"), std::string::npos);
}

TEST(Chronicle, LocalTimezoneAppliesToDayAndClock) {
  const auto v = make_visit("a1", "2024-01-30T03:30:00Z", "2024-01-30T04:00:00Z", "X", {"Work"});
  EXPECT_EQ(render_visit_line(v, TimeZone::parse("-06:00")),
            "Monday, January 29 (Weekday) - 21:30-22:00 (30 mins): X - Work");
}

TEST(Summary, FourteenWeekdaySevenWeekend) {
  const auto r = render_summary(fourteen_and_seven(), TimeZone::utc());
  EXPECT_EQ(r.stats.weekday_avg_tenths, 28);
  EXPECT_EQ(r.stats.weekend_avg_tenths, 35);
  EXPECT_NE(r.text.find("Average activities on weekdays: 2.8, weekends: 3.5\n"), std::string::npos) << r.text;
}

TEST(Summary, WeekdayOnlyReportsZeroWeekend) {
  const auto w = week_of({make_visit("a1", "2024-01-29T09:00:00Z", "2024-01-29T10:00:00Z", "X", {"Work"})});
  const auto r = render_summary(w, TimeZone::utc());
  EXPECT_NE(r.text.find("Average activities on weekdays: 0.2, weekends: 0.0"), std::string::npos) << r.text;
}

TEST(Summary, ContrastLineShape) {
  const std::regex shape(R"(\nAverage activities on weekdays: \d+\.\d, weekends: \d+\.\d\n$)");
  EXPECT_TRUE(std::regex_search(render_summary(fourteen_and_seven(), TimeZone::utc()).text, shape));
  EXPECT_EQ("Average activities on weekdays: " + format_tenths(27) + ", weekends: " + format_tenths(35),
            "Average activities on weekdays: 2.7, weekends: 3.5");
}

TEST(Summary, HalfUpRoundingOracle) {
  for (std::int64_t d = 1; d <= 9; ++d) {
    for (std::int64_t n = 0; n <= 200; ++n) {
      const std::int64_t r = tenths_half_up(n, d);
      // r is the half-up rounding of 10n/d iff -d <= 20n - 2dr < d.
      const std::int64_t diff = 20 * n - 2 * d * r;
      EXPECT_GE(diff, -d) << n << "/" << d;
      EXPECT_LT(diff, d) << n << "/" << d;
    }
  }
  EXPECT_EQ(tenths_half_up(1, 4), 3);  // 0.25 -> 0.3
  EXPECT_EQ(format_tenths(0), "0.0");
  EXPECT_EQ(format_tenths(125), "12.5");
}

TEST(Summary, NumeralsMatchIndependentCounts) {
  PinnedRng rng(5);
  const std::vector<std::string> tags{"Work", "EatOut", "BuyGoods", "Recreation"};
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<Visit> visits;
    const int n = static_cast<int>(rng.between(1, 30));
    for (int i = 0; i < n; ++i) {
      const int d = static_cast<int>(rng.below(7));
      const int h = static_cast<int>(rng.below(24));
      const auto start = at(d, h, static_cast<int>(rng.below(60)));
      const auto end = format_rfc3339(parse_rfc3339(start) + seconds{rng.between(60, 7000)});
      std::vector<std::string> vt{tags[rng.below(tags.size())]};
      if (rng.chance(0.3)) vt.push_back(tags[rng.below(tags.size())]);
      visits.push_back(make_visit("a1", start, end, "V", vt, "p" + std::to_string(rng.below(5))));
    }
    const auto w = week_of(visits);
    const auto r = render_summary(w, TimeZone::utc());

    std::int64_t total_min = 0, weekday_n = 0, weekend_n = 0;
    std::int64_t parts[4] = {0, 0, 0, 0};
    std::map<std::string, std::int64_t> per_tag;
    std::set<std::string> venues;
    for (const auto& v : visits) {
      const auto local = v.start_ts();
      const auto day = floor<days>(local);
      const auto hour = duration_cast<hours>(local - day).count();
      ++parts[hour / 6];
      const weekday wd{sys_days{day}};
      (wd == Saturday || wd == Sunday ? weekend_n : weekday_n) += 1;
      total_min += v.duration_s / 60;
      for (const auto& t : v.activity_types) ++per_tag[t];
      venues.insert(v.poi_id());
    }
    const auto has = [&](const std::string& s) { return r.text.find(s) != std::string::npos; };
    EXPECT_TRUE(has("Total visits: " + std::to_string(visits.size()) + "\n"));
    EXPECT_TRUE(has("Distinct venues: " + std::to_string(venues.size()) + "\n"));
    EXPECT_TRUE(has("Total time at venues: " + std::to_string(total_min) + " mins\n"));
    const char* names[4] = {"Night", "Morning", "Afternoon", "Evening"};
    std::int64_t part_sum = 0;
    for (int p = 0; p < 4; ++p) {
      EXPECT_TRUE(has(std::string("- ") + names[p] + ": " + std::to_string(parts[p]) + "\n")) << r.text;
      part_sum += r.stats.daypart_counts[static_cast<std::size_t>(p)];
    }
    EXPECT_EQ(part_sum, r.stats.total_visits);
    std::int64_t tag_sum = 0;
    for (const auto& [t, c] : per_tag) {
      EXPECT_TRUE(has("- " + t + ": " + std::to_string(c) + "\n")) << r.text;
      tag_sum += c;
    }
    EXPECT_GE(tag_sum, r.stats.total_visits);
    // Averages: round-half-up of count / days-of-kind, checked with exact integer bounds.
    char expect_line[96];
    const auto tenths = [](std::int64_t num, std::int64_t den) {
      std::int64_t t = (num * 10) / den;
      if ((num * 10) % den * 2 >= den) ++t;
      return t;
    };
    std::snprintf(expect_line, sizeof expect_line, "Average activities on weekdays: %lld.%lld, weekends: %lld.%lld",
                  static_cast<long long>(tenths(weekday_n, 5) / 10), static_cast<long long>(tenths(weekday_n, 5) % 10),
                  static_cast<long long>(tenths(weekend_n, 2) / 10), static_cast<long long>(tenths(weekend_n, 2) % 10));
    EXPECT_TRUE(has(expect_line)) << r.text;
  }
}

TEST(Summary, Deterministic) {
  const auto w = fourteen_and_seven();
  EXPECT_EQ(render_summary(w, TimeZone::utc()).text, render_summary(w, TimeZone::utc()).text);
  EXPECT_EQ(render_chronicle(w, TimeZone::utc()), render_chronicle(w, TimeZone::utc()));
}

TEST(Budget, SmallWeekLargeBudget) {
  const std::vector<AgentWeek> weeks{fourteen_and_seven()};
  const auto n = build_narrative(weeks, 1'000'000, TimeZone::utc());
  ASSERT_EQ(n.size(), 1u);
  EXPECT_EQ(n[0].chronicle, render_chronicle(weeks[0], TimeZone::utc()));
  EXPECT_EQ(n[0].summary, render_summary(weeks[0], TimeZone::utc()).text);
}

TEST(Budget, ThreeWeeksOnlyNewestTwoFit) {
  std::vector<AgentWeek> weeks;
  for (int k = 0; k < 3; ++k) {
    weeks.push_back(week_of({make_visit("a1", at(7 * k + 1, 9, 0), at(7 * k + 1, 10, 0), "Venue", {"Work"})}));
  }
  std::vector<std::size_t> sizes;
  for (const auto& w : weeks) {
    sizes.push_back(count_characters(render_chronicle(w, TimeZone::utc()) + "\n" +
                                     render_summary(w, TimeZone::utc()).text));
  }
  const std::size_t budget = sizes[2] + 1 + sizes[1];
  const auto n = build_narrative(weeks, budget, TimeZone::utc());
  ASSERT_EQ(n.size(), 2u);
  EXPECT_EQ(n[0].week_start, weeks[2].week_start);
  EXPECT_EQ(n[1].week_start, weeks[1].week_start);
  EXPECT_LE(count_characters(join_narratives(n)), budget);
  EXPECT_EQ(build_narrative(weeks, budget + sizes[0], TimeZone::utc()).size(), 2u);
  EXPECT_EQ(build_narrative(weeks, budget + sizes[0] + 1, TimeZone::utc()).size(), 3u);
}

TEST(Budget, OversizedWeekIsAnError) {
  const std::vector<AgentWeek> weeks{fourteen_and_seven()};
  EXPECT_THROW(build_narrative(weeks, 100, TimeZone::utc()), BudgetError);
  EXPECT_THROW(build_narrative(std::span<const AgentWeek>{}, 100, TimeZone::utc()), ValidationError);
}

TEST(Budget, CountsCodePointsNotBytes) {
  EXPECT_EQ(count_characters("Caf\xC3\xA9"), 4u);
  EXPECT_EQ(count_characters("\xE2\x80\x94"), 1u);
}

TEST(Narrative, JoinIsChronological) {
  std::vector<AgentWeek> weeks{week_of({make_visit("a1", at(8, 9, 0), at(8, 10, 0), "Second", {"Work"})}),
                               week_of({make_visit("a1", at(1, 9, 0), at(1, 10, 0), "First", {"Work"})})};
  const auto text = join_narratives(build_narrative(weeks, 100000, TimeZone::utc()));
  EXPECT_LT(text.find("First"), text.find("Second"));
}
