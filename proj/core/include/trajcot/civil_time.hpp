#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace trajcot {

using Timestamp = std::chrono::sys_seconds;

/// Parses an RFC 3339 timestamp (`2024-01-29T09:10:30Z`, `...+02:00`,
/// optional fractional seconds which are truncated). Throws ValidationError.
Timestamp parse_rfc3339(std::string_view text);

/// Canonical UTC form: `YYYY-MM-DDTHH:MM:SSZ`.
std::string format_rfc3339(Timestamp ts);

/// A fixed UTC offset. Only `UTC`, `Z` and `[UTC]±HH:MM` are understood.
class TimeZone {
 public:
  TimeZone() = default;
  static TimeZone parse(std::string_view spec);
  static TimeZone utc() { return {}; }

  std::chrono::minutes offset() const { return offset_; }
  const std::string& name() const { return name_; }

  std::chrono::local_seconds to_local(Timestamp ts) const {
    return std::chrono::local_seconds{ts.time_since_epoch() + offset_};
  }
  Timestamp to_utc(std::chrono::local_seconds local) const {
    return Timestamp{local.time_since_epoch() - offset_};
  }

  bool operator==(const TimeZone&) const = default;

 private:
  std::chrono::minutes offset_{0};
  std::string name_{"UTC"};
};

/// Calendar date of the Monday opening the week containing `day`.
std::chrono::local_days monday_of(std::chrono::local_days day);

/// `2024-01-29`.
std::string format_date(std::chrono::local_days day);

/// English names, independent of the process locale.
std::string_view weekday_name(std::chrono::weekday wd);
std::string_view month_name(std::chrono::month m);

inline bool is_weekend(std::chrono::weekday wd) {
  return wd == std::chrono::Saturday || wd == std::chrono::Sunday;
}

}  // namespace trajcot
