#include "trajcot/civil_time.hpp"

#include <array>
#include <cctype>
#include <cstdio>

#include "trajcot/error.hpp"

namespace trajcot {
namespace {

using namespace std::chrono;

bool read_digits(std::string_view text, std::size_t pos, std::size_t count, int& out) {
  if (pos + count > text.size()) return false;
  int value = 0;
  for (std::size_t i = 0; i < count; ++i) {
    const char c = text[pos + i];
    if (c < '0' || c > '9') return false;
    value = value * 10 + (c - '0');
  }
  out = value;
  return true;
}

[[noreturn]] void bad_timestamp(std::string_view text, std::string_view why) {
  throw ValidationError("invalid RFC 3339 timestamp '" + std::string(text) + "': " +
                        std::string(why));
}

}  // namespace

Timestamp parse_rfc3339(std::string_view text) {
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
  if (text.size() < 20) bad_timestamp(text, "too short");
  if (!read_digits(text, 0, 4, y) || text[4] != '-' || !read_digits(text, 5, 2, mo) ||
      text[7] != '-' || !read_digits(text, 8, 2, d)) {
    bad_timestamp(text, "bad date");
  }
  if (text[10] != 'T' && text[10] != 't' && text[10] != ' ') bad_timestamp(text, "missing 'T'");
  if (!read_digits(text, 11, 2, h) || text[13] != ':' || !read_digits(text, 14, 2, mi) ||
      text[16] != ':' || !read_digits(text, 17, 2, s)) {
    bad_timestamp(text, "bad time");
  }
  std::size_t pos = 19;
  if (pos < text.size() && text[pos] == '.') {
    ++pos;
    const std::size_t start = pos;
    while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
    if (pos == start) bad_timestamp(text, "empty fraction");
  }
  if (pos >= text.size()) bad_timestamp(text, "missing offset");
  minutes offset{0};
  if (text[pos] == 'Z' || text[pos] == 'z') {
    ++pos;
  } else if (text[pos] == '+' || text[pos] == '-') {
    int oh = 0, om = 0;
    if (!read_digits(text, pos + 1, 2, oh) || pos + 3 >= text.size() || text[pos + 3] != ':' ||
        !read_digits(text, pos + 4, 2, om) || oh > 23 || om > 59) {
      bad_timestamp(text, "bad offset");
    }
    offset = hours{oh} + minutes{om};
    if (text[pos] == '-') offset = -offset;
    pos += 6;
  } else {
    bad_timestamp(text, "bad offset");
  }
  if (pos != text.size()) bad_timestamp(text, "trailing characters");

  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)},
                           day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) bad_timestamp(text, "no such date");
  if (h > 23 || mi > 59 || s > 60) bad_timestamp(text, "time out of range");
  // Leap seconds are folded onto the following second.
  const auto local = sys_days{ymd} + hours{h} + minutes{mi} + seconds{s};
  return Timestamp{local - offset};
}

std::string format_rfc3339(Timestamp ts) {
  const auto day = floor<days>(ts);
  const year_month_day ymd{day};
  const hh_mm_ss tod{ts - day};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(tod.hours().count()), static_cast<int>(tod.minutes().count()),
                static_cast<int>(tod.seconds().count()));
  return buf;
}

TimeZone TimeZone::parse(std::string_view spec) {
  TimeZone tz;
  std::string_view rest = spec;
  if (rest == "UTC" || rest == "Z" || rest == "utc" || rest.empty()) return tz;
  if (rest.substr(0, 3) == "UTC") rest.remove_prefix(3);
  int oh = 0, om = 0;
  if (rest.size() != 6 || (rest[0] != '+' && rest[0] != '-') || !read_digits(rest, 1, 2, oh) ||
      rest[3] != ':' || !read_digits(rest, 4, 2, om) || oh > 23 || om > 59) {
    throw ValidationError("unsupported timezone '" + std::string(spec) +
                          "': use UTC or a fixed offset such as UTC-06:00");
  }
  tz.offset_ = hours{oh} + minutes{om};
  if (rest[0] == '-') tz.offset_ = -tz.offset_;
  if (tz.offset_ != minutes{0}) tz.name_ = "UTC" + std::string(rest);
  return tz;
}

local_days monday_of(local_days day) {
  const weekday wd{day};
  // iso_encoding: Monday = 1 ... Sunday = 7
  return day - days{wd.iso_encoding() - 1};
}

std::string format_date(local_days day) {
  const year_month_day ymd{day};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

std::string_view weekday_name(weekday wd) {
  static constexpr std::array<std::string_view, 7> kNames = {
      "Sunday", "Monday", "Tuesday", "Wednesday", "Thursday", "Friday", "Saturday"};
  return kNames.at(wd.c_encoding());
}

std::string_view month_name(month m) {
  static constexpr std::array<std::string_view, 12> kNames = {
      "January", "February", "March",     "April",   "May",      "June",
      "July",    "August",   "September", "October", "November", "December"};
  return kNames.at(static_cast<unsigned>(m) - 1);
}

}  // namespace trajcot
