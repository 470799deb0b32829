#include <gtest/gtest.h>

#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "trajcot/categories.hpp"
#include "trajcot/civil_time.hpp"
#include "trajcot/csv.hpp"
#include "trajcot/error.hpp"
#include "trajcot/hash.hpp"
#include "trajcot/manifest.hpp"
#include "trajcot/rng.hpp"
#include "test_support.hpp"

using namespace trajcot;
using namespace std::chrono;

TEST(CivilTime, ParsesZuluAndOffsets) {
  EXPECT_EQ(format_rfc3339(parse_rfc3339("2024-01-29T09:10:30Z")), "2024-01-29T09:10:30Z");
  EXPECT_EQ(format_rfc3339(parse_rfc3339("2024-01-29T11:10:30+02:00")), "2024-01-29T09:10:30Z");
  EXPECT_EQ(format_rfc3339(parse_rfc3339("2024-01-29T09:10:30.987Z")), "2024-01-29T09:10:30Z");
  EXPECT_EQ(format_rfc3339(parse_rfc3339("2024-01-28T23:00:00-05:30")), "2024-01-29T04:30:00Z");
  // RFC 3339 permits a space in place of 'T'.
  EXPECT_EQ(format_rfc3339(parse_rfc3339("2024-01-29 09:10:30Z")), "2024-01-29T09:10:30Z");
}

TEST(CivilTime, RejectsMalformed) {
  for (const char* bad : {"", "2024-01-29", "2024-13-01T00:00:00Z", "2024-02-30T00:00:00Z",
                          "2024-01-29T25:00:00Z", "2024-01-29T09:10:30", "2024-01-29_09:10:30Z",
                          "2024-01-29T09:10:30+2:00"}) {
    EXPECT_THROW(parse_rfc3339(bad), ValidationError) << bad;
  }
}

TEST(CivilTime, FixedOffsetZones) {
  EXPECT_EQ(TimeZone::parse("UTC").offset(), minutes{0});
  EXPECT_EQ(TimeZone::parse("Z").offset(), minutes{0});
  EXPECT_EQ(TimeZone::parse("+05:30").offset(), minutes{330});
  EXPECT_EQ(TimeZone::parse("UTC-06:00").offset(), minutes{-360});
  EXPECT_THROW(TimeZone::parse("America/Chicago"), ValidationError);
  const auto tz = TimeZone::parse("-06:00");
  const auto ts = parse_rfc3339("2024-01-29T03:00:00Z");
  EXPECT_EQ(tz.to_utc(tz.to_local(ts)), ts);
}

TEST(CivilTime, MondayOfAndNames) {
  const local_days sunday{year{2024} / February / 4};
  EXPECT_EQ(format_date(monday_of(sunday)), "2024-01-29");
  EXPECT_EQ(format_date(monday_of(local_days{year{2024} / January / 29})), "2024-01-29");
  EXPECT_EQ(weekday_name(Monday), "Monday");
  EXPECT_EQ(month_name(January), "January");
  EXPECT_TRUE(is_weekend(Saturday));
  EXPECT_FALSE(is_weekend(Friday));
}

TEST(Csv, QuotedFieldsAndLineNumbers) {
  std::istringstream in("a,b\r\n\"x,1\",\"he said \"\"hi\"\"\"\n\n\"multi\nline\",z\n");
  const auto rows = csv::read(in, "t.csv");
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[1].fields, (std::vector<std::string>{"x,1", "he said \"hi\""}));
  EXPECT_EQ(rows[1].line, 2u);
  EXPECT_EQ(rows[2].fields[0], "multi\nline");
  EXPECT_EQ(rows[2].line, 4u);
}

TEST(Csv, UnterminatedQuoteIsParseError) {
  std::istringstream in("a,b\n\"open,b\n");
  EXPECT_THROW(csv::read(in, "t.csv"), ParseError);
}

TEST(Csv, EscapeRoundTrips) {
  const std::vector<std::string> fields{"plain", "with,comma", "quote\"d", "line\nbreak", ""};
  std::istringstream in(csv::join(fields) + "\n");
  const auto rows = csv::read(in, "t.csv");
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].fields, fields);
  EXPECT_EQ(csv::escape("plain"), "plain");
}

TEST(Hash, KnownVectors) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  Sha256 h;
  h.update("a");
  h.update("bc");
  EXPECT_EQ(h.hex_digest(), sha256_hex("abc"));
}

TEST(Rng, DeterministicAndBounded) {
  PinnedRng a(42), b(42);
  for (int i = 0; i < 1000; ++i) {
    const auto x = a.below(7);
    EXPECT_EQ(x, b.below(7));
    EXPECT_LT(x, 7u);
    const auto y = a.between(-3, 3);
    b.between(-3, 3);
    EXPECT_GE(y, -3);
    EXPECT_LE(y, 3);
    const double u = a.unit();
    b.unit();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
}

TEST(Rng, BelowIsRoughlyUniform) {
  PinnedRng rng(7);
  std::map<std::uint64_t, int> counts;
  const int draws = 60000;
  for (int i = 0; i < draws; ++i) ++counts[rng.below(6)];
  ASSERT_EQ(counts.size(), 6u);
  for (const auto& [k, c] : counts) EXPECT_NEAR(c, draws / 6, 500) << k;
}

TEST(Categories, IncomeBracketsAreFixed) {
  const auto& inc = income_categories();
  ASSERT_EQ(inc.size(), 6u);
  EXPECT_EQ(inc.ids(), (std::vector<std::string>{"VeryLow", "Low", "Middle", "UpperMiddle", "High",
                                                  "VeryHigh"}));
  EXPECT_NE(inc.prompt_list().find("- Upper-middle $75k-$125k"), std::string::npos);
  EXPECT_NE(inc.prompt_list().find("- Low $15k-$35k"), std::string::npos);
  EXPECT_EQ(default_age_categories().size(), required_category_count(Attribute::Age));
  EXPECT_EQ(default_education_categories().size(), required_category_count(Attribute::Education));
  EXPECT_THROW(parse_attribute("sex"), ValidationError);
  EXPECT_EQ(parse_attribute("INCOME"), Attribute::Income);
}

TEST(Manifest, RoundTripsAndValidates) {
  trajcot::testing::TempDir dir("manifest");
  auto m = DatasetManifest::defaults();
  m.timezone = TimeZone::parse("+01:00");
  m.save(dir / "manifest.json");
  const auto loaded = DatasetManifest::load(dir / "manifest.json");
  EXPECT_EQ(loaded.timezone, m.timezone);
  EXPECT_EQ(loaded.activity_types, m.activity_types);
  EXPECT_EQ(loaded.age.ids(), m.age.ids());

  trajcot::testing::write_file(dir / "bad.json",
                      R"({"timezone":"UTC","activity_types":["Work"],"categories":{"age":[{"id":"Young","display":"Young"}]}})");
  EXPECT_THROW(DatasetManifest::load(dir / "bad.json"), ValidationError);
}

TEST(Manifest, IncomeCannotBeOverridden) {
  trajcot::testing::TempDir dir("manifest-income");
  trajcot::testing::write_file(dir / "m.json",
                      R"({"timezone":"UTC","categories":{"income":[{"id":"A","display":"A"}]}})");
  EXPECT_THROW(DatasetManifest::load(dir / "m.json"), ValidationError);
}
