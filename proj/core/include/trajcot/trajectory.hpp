#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "trajcot/categories.hpp"
#include "trajcot/civil_time.hpp"
#include "trajcot/manifest.hpp"

namespace trajcot {

/// One dwell interval at a POI.
struct StayPoint {
  std::string agent_id;
  Timestamp start_ts;
  Timestamp end_ts;
  std::string poi_id;
  double lon = 0.0;
  double lat = 0.0;

  bool operator==(const StayPoint&) const = default;
};

struct Poi {
  std::string poi_id;
  std::string name;
  std::vector<std::string> activity_types;
  double lon = 0.0;
  double lat = 0.0;

  bool operator==(const Poi&) const = default;
};

/// poi_id -> Poi, with ids unique. Iterates in poi_id order.
class PoiCatalog {
 public:
  /// Throws ValidationError on a duplicate id or an empty tag list.
  void add(Poi poi);
  const Poi* find(std::string_view poi_id) const;
  std::size_t size() const { return pois_.size(); }
  auto begin() const { return pois_.begin(); }
  auto end() const { return pois_.end(); }

 private:
  std::map<std::string, Poi, std::less<>> pois_;
};

/// A stay point resolved against the catalog.
struct Visit {
  StayPoint stay;
  std::string name;
  std::vector<std::string> activity_types;
  std::int64_t duration_s = 0;

  const std::string& agent_id() const { return stay.agent_id; }
  Timestamp start_ts() const { return stay.start_ts; }
  Timestamp end_ts() const { return stay.end_ts; }
  const std::string& poi_id() const { return stay.poi_id; }
};

/// Visits of one agent whose start falls in [week_start, week_start + 7d),
/// with week_start a Monday in the dataset timezone.
struct AgentWeek {
  std::string agent_id;
  std::chrono::local_days week_start;
  std::vector<Visit> visits;
};

struct DemographicLabel {
  std::string agent_id;
  std::string age_bracket;
  std::string income_bracket;
  std::string education_level;
  std::optional<std::string> sex;  // pass-through only

  const std::string& bracket(Attribute a) const;
};

// ---- file I/O -------------------------------------------------------------

inline constexpr std::string_view kStayPointHeader = "agent_id,start_ts,end_ts,poi_id,lon,lat";
inline constexpr std::string_view kPoiHeader = "poi_id,name,activity_types,lon,lat";
inline constexpr std::string_view kLabelHeader =
    "agent_id,age_bracket,income_bracket,education_level,sex";

std::vector<StayPoint> load_stay_points(const std::filesystem::path& path);
std::vector<StayPoint> parse_stay_points(std::istream& in, std::string_view file_name);
void write_stay_points(std::ostream& out, std::span<const StayPoint> stays);

/// When `vocabulary` is non-empty every tag must belong to it.
PoiCatalog load_poi_catalog(const std::filesystem::path& path,
                            std::span<const std::string> vocabulary = {});
PoiCatalog parse_poi_catalog(std::istream& in, std::string_view file_name,
                             std::span<const std::string> vocabulary = {});
void write_poi_catalog(std::ostream& out, const PoiCatalog& catalog);

std::vector<DemographicLabel> load_labels(const std::filesystem::path& path,
                                          const DatasetManifest& manifest);
std::vector<DemographicLabel> parse_labels(std::istream& in, std::string_view file_name,
                                           const DatasetManifest& manifest);
void write_labels(std::ostream& out, std::span<const DemographicLabel> labels);

/// Shortest decimal that round-trips to the same double.
std::string format_coordinate(double value);

// ---- joining and partitioning --------------------------------------------

enum class UnresolvedPoiPolicy { Error, Skip };

struct JoinResult {
  std::map<std::string, std::vector<Visit>> visits_by_agent;  // each list sorted
  std::size_t skipped = 0;
  std::vector<std::string> warnings;
};

/// Sort order for visits: start_ts ascending, ties by poi_id.
bool visit_order(const Visit& a, const Visit& b);

JoinResult join_visits(std::span<const StayPoint> stays, const PoiCatalog& catalog,
                       UnresolvedPoiPolicy policy = UnresolvedPoiPolicy::Error);

/// Groups visits by (agent, week). Output ordered by agent then week_start;
/// empty weeks never appear.
std::vector<AgentWeek> partition_weeks(std::span<const Visit> visits, const TimeZone& tz);

// ---- sampling -------------------------------------------------------------

/// Uniform sample without replacement: ids are sorted and deduplicated, then
/// a partial Fisher-Yates shuffle driven by PinnedRng(seed) picks `n`.
/// Throws ValidationError when n exceeds the population.
std::vector<std::string> sample_agents(std::vector<std::string> agent_ids, std::size_t n,
                                       std::uint64_t seed);

// ---- dataset bundle ------------------------------------------------------

struct DatasetPaths {
  std::filesystem::path stay_points;
  std::filesystem::path pois;
  std::filesystem::path labels;
  std::filesystem::path manifest;

  /// stay_points.csv, pois.csv, labels.csv, manifest.json inside `dir`.
  static DatasetPaths in_directory(const std::filesystem::path& dir);
};

struct Dataset {
  DatasetManifest manifest;
  std::vector<StayPoint> stay_points;
  PoiCatalog catalog;
  std::vector<DemographicLabel> labels;
  std::string hash;  // SHA-256 over the four input files

  static Dataset load(const DatasetPaths& paths);
};

/// SHA-256 over the raw bytes of the files, each prefixed by its length.
std::string hash_files(std::span<const std::filesystem::path> files);

}  // namespace trajcot
