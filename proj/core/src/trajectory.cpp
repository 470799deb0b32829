#include "trajcot/trajectory.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include "trajcot/csv.hpp"
#include "trajcot/error.hpp"
#include "trajcot/hash.hpp"
#include "trajcot/rng.hpp"

namespace trajcot {
namespace {

std::vector<std::string> split_header(std::string_view header) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = header.find(',', start);
    out.emplace_back(header.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::vector<csv::Row> read_table(std::istream& in, std::string_view file_name,
                                 std::string_view header) {
  auto rows = csv::read(in, file_name);
  if (rows.empty()) return rows;
  const auto expected = split_header(header);
  auto got = rows.front().fields;
  // Tolerate a UTF-8 byte-order mark on the first header cell.
  if (!got.empty() && got.front().rfind("\xEF\xBB\xBF", 0) == 0) got.front().erase(0, 3);
  if (got != expected) {
    throw ParseError(std::string(file_name), rows.front().line, "<header>",
                     "expected header '" + std::string(header) + "'");
  }
  rows.erase(rows.begin());
  for (const auto& row : rows) {
    if (row.fields.size() != expected.size()) {
      throw ParseError(std::string(file_name), row.line, "<row>",
                       "expected " + std::to_string(expected.size()) + " fields, got " +
                           std::to_string(row.fields.size()));
    }
  }
  return rows;
}

double parse_degrees(const csv::Row& row, std::size_t col, std::string_view field,
                     std::string_view file, double limit) {
  const std::string& text = row.fields[col];
  double value = 0.0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (text.empty() || ec != std::errc{} || ptr != last) {
    throw ParseError(std::string(file), row.line, std::string(field),
                     "not a number: '" + text + "'");
  }
  if (value < -limit || value > limit) {
    throw ParseError(std::string(file), row.line, std::string(field),
                     "out of range [-" + std::to_string(static_cast<int>(limit)) + ", " +
                         std::to_string(static_cast<int>(limit)) + "]");
  }
  return value;
}

void require_non_empty(const csv::Row& row, std::size_t col, std::string_view field,
                       std::string_view file) {
  if (row.fields[col].empty()) {
    throw ParseError(std::string(file), row.line, std::string(field), "must not be empty");
  }
}

std::vector<std::string> split_tags(const std::string& text) {
  std::vector<std::string> tags;
  if (text.empty()) return tags;
  std::size_t start = 0;
  while (true) {
    const auto bar = text.find('|', start);
    tags.push_back(text.substr(start, bar - start));
    if (bar == std::string::npos) break;
    start = bar + 1;
  }
  return tags;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  return in;
}

}  // namespace

void PoiCatalog::add(Poi poi) {
  if (poi.activity_types.empty()) {
    throw ValidationError("POI '" + poi.poi_id + "' has no activity types");
  }
  const std::string id = poi.poi_id;
  if (!pois_.emplace(id, std::move(poi)).second) {
    throw ValidationError("duplicate poi_id '" + id + "'");
  }
}

const Poi* PoiCatalog::find(std::string_view poi_id) const {
  const auto it = pois_.find(poi_id);
  return it == pois_.end() ? nullptr : &it->second;
}

const std::string& DemographicLabel::bracket(Attribute a) const {
  switch (a) {
    case Attribute::Age: return age_bracket;
    case Attribute::Education: return education_level;
    case Attribute::Income: break;
  }
  return income_bracket;
}

std::string format_coordinate(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  (void)ec;
  return std::string(buf, ptr);
}

// ---- stay points ---------------------------------------------------------

std::vector<StayPoint> parse_stay_points(std::istream& in, std::string_view file_name) {
  std::vector<StayPoint> out;
  for (const auto& row : read_table(in, file_name, kStayPointHeader)) {
    StayPoint sp;
    require_non_empty(row, 0, "agent_id", file_name);
    require_non_empty(row, 3, "poi_id", file_name);
    sp.agent_id = row.fields[0];
    sp.poi_id = row.fields[3];
    try {
      sp.start_ts = parse_rfc3339(row.fields[1]);
    } catch (const ValidationError& e) {
      throw ParseError(std::string(file_name), row.line, "start_ts", e.what());
    }
    try {
      sp.end_ts = parse_rfc3339(row.fields[2]);
    } catch (const ValidationError& e) {
      throw ParseError(std::string(file_name), row.line, "end_ts", e.what());
    }
    if (sp.end_ts <= sp.start_ts) {
      throw ParseError(std::string(file_name), row.line, "end_ts",
                       "row rejected: end_ts must be after start_ts");
    }
    sp.lon = parse_degrees(row, 4, "lon", file_name, 180.0);
    sp.lat = parse_degrees(row, 5, "lat", file_name, 90.0);
    out.push_back(std::move(sp));
  }
  return out;
}

std::vector<StayPoint> load_stay_points(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_stay_points(in, path.string());
}

void write_stay_points(std::ostream& out, std::span<const StayPoint> stays) {
  out << kStayPointHeader << "\n";
  for (const auto& sp : stays) {
    out << csv::join({sp.agent_id, format_rfc3339(sp.start_ts), format_rfc3339(sp.end_ts),
                      sp.poi_id, format_coordinate(sp.lon), format_coordinate(sp.lat)})
        << "\n";
  }
}

// ---- POIs ----------------------------------------------------------------

PoiCatalog parse_poi_catalog(std::istream& in, std::string_view file_name,
                             std::span<const std::string> vocabulary) {
  PoiCatalog catalog;
  for (const auto& row : read_table(in, file_name, kPoiHeader)) {
    Poi poi;
    require_non_empty(row, 0, "poi_id", file_name);
    poi.poi_id = row.fields[0];
    poi.name = row.fields[1];
    poi.activity_types = split_tags(row.fields[2]);
    if (poi.activity_types.empty()) {
      throw ParseError(std::string(file_name), row.line, "activity_types",
                       "POI '" + poi.poi_id + "' has an empty activity list");
    }
    for (const auto& tag : poi.activity_types) {
      if (tag.empty()) {
        throw ParseError(std::string(file_name), row.line, "activity_types", "empty tag");
      }
      if (!vocabulary.empty() &&
          std::find(vocabulary.begin(), vocabulary.end(), tag) == vocabulary.end()) {
        throw ParseError(std::string(file_name), row.line, "activity_types",
                         "tag '" + tag + "' is not in the declared vocabulary");
      }
    }
    poi.lon = parse_degrees(row, 3, "lon", file_name, 180.0);
    poi.lat = parse_degrees(row, 4, "lat", file_name, 90.0);
    if (catalog.find(poi.poi_id) != nullptr) {
      throw ParseError(std::string(file_name), row.line, "poi_id",
                       "duplicate poi_id '" + poi.poi_id + "'");
    }
    catalog.add(std::move(poi));
  }
  return catalog;
}

PoiCatalog load_poi_catalog(const std::filesystem::path& path,
                            std::span<const std::string> vocabulary) {
  auto in = open_input(path);
  return parse_poi_catalog(in, path.string(), vocabulary);
}

void write_poi_catalog(std::ostream& out, const PoiCatalog& catalog) {
  out << kPoiHeader << "\n";
  for (const auto& [id, poi] : catalog) {
    std::string tags;
    for (const auto& t : poi.activity_types) {
      if (!tags.empty()) tags.push_back('|');
      tags += t;
    }
    out << csv::join({poi.poi_id, poi.name, tags, format_coordinate(poi.lon),
                      format_coordinate(poi.lat)})
        << "\n";
  }
}

// ---- labels --------------------------------------------------------------

std::vector<DemographicLabel> parse_labels(std::istream& in, std::string_view file_name,
                                           const DatasetManifest& manifest) {
  std::vector<DemographicLabel> out;
  std::set<std::string, std::less<>> seen;
  for (const auto& row : read_table(in, file_name, kLabelHeader)) {
    require_non_empty(row, 0, "agent_id", file_name);
    DemographicLabel label;
    label.agent_id = row.fields[0];
    label.age_bracket = row.fields[1];
    label.income_bracket = row.fields[2];
    label.education_level = row.fields[3];
    if (!row.fields[4].empty()) label.sex = row.fields[4];
    const std::pair<Attribute, std::string_view> checks[] = {
        {Attribute::Age, "age_bracket"},
        {Attribute::Income, "income_bracket"},
        {Attribute::Education, "education_level"}};
    for (const auto& [attr, field] : checks) {
      if (!manifest.categories(attr).contains(label.bracket(attr))) {
        throw ParseError(std::string(file_name), row.line, std::string(field),
                         "unknown category '" + label.bracket(attr) + "'");
      }
    }
    if (!seen.insert(label.agent_id).second) {
      throw ParseError(std::string(file_name), row.line, "agent_id",
                       "duplicate agent '" + label.agent_id + "'");
    }
    out.push_back(std::move(label));
  }
  return out;
}

std::vector<DemographicLabel> load_labels(const std::filesystem::path& path,
                                          const DatasetManifest& manifest) {
  auto in = open_input(path);
  return parse_labels(in, path.string(), manifest);
}

void write_labels(std::ostream& out, std::span<const DemographicLabel> labels) {
  out << kLabelHeader << "\n";
  for (const auto& l : labels) {
    out << csv::join({l.agent_id, l.age_bracket, l.income_bracket, l.education_level,
                      l.sex.value_or("")})
        << "\n";
  }
}

// ---- join / partition ----------------------------------------------------

bool visit_order(const Visit& a, const Visit& b) {
  if (a.start_ts() != b.start_ts()) return a.start_ts() < b.start_ts();
  return a.poi_id() < b.poi_id();
}

JoinResult join_visits(std::span<const StayPoint> stays, const PoiCatalog& catalog,
                       UnresolvedPoiPolicy policy) {
  JoinResult result;
  for (const auto& sp : stays) {
    const Poi* poi = catalog.find(sp.poi_id);
    if (poi == nullptr) {
      if (policy == UnresolvedPoiPolicy::Error) {
        throw ValidationError("stay point of agent '" + sp.agent_id +
                              "' references unknown poi_id '" + sp.poi_id + "'");
      }
      ++result.skipped;
      result.warnings.push_back("skipped stay point of agent '" + sp.agent_id +
                                "': unknown poi_id '" + sp.poi_id + "'");
      continue;
    }
    Visit v;
    v.stay = sp;
    v.name = poi->name;
    v.activity_types = poi->activity_types;
    v.duration_s = (sp.end_ts - sp.start_ts).count();
    result.visits_by_agent[sp.agent_id].push_back(std::move(v));
  }
  for (auto& [agent, visits] : result.visits_by_agent) {
    std::stable_sort(visits.begin(), visits.end(), visit_order);
  }
  return result;
}

std::vector<AgentWeek> partition_weeks(std::span<const Visit> visits, const TimeZone& tz) {
  std::map<std::pair<std::string, std::chrono::local_days>, std::vector<Visit>> groups;
  for (const auto& v : visits) {
    const auto local_day = std::chrono::floor<std::chrono::days>(tz.to_local(v.start_ts()));
    groups[{v.agent_id(), monday_of(local_day)}].push_back(v);
  }
  std::vector<AgentWeek> weeks;
  weeks.reserve(groups.size());
  for (auto& [key, group] : groups) {
    std::stable_sort(group.begin(), group.end(), visit_order);
    weeks.push_back(AgentWeek{key.first, key.second, std::move(group)});
  }
  return weeks;
}

// ---- sampling ------------------------------------------------------------

std::vector<std::string> sample_agents(std::vector<std::string> agent_ids, std::size_t n,
                                       std::uint64_t seed) {
  std::sort(agent_ids.begin(), agent_ids.end());
  agent_ids.erase(std::unique(agent_ids.begin(), agent_ids.end()), agent_ids.end());
  if (n > agent_ids.size()) {
    throw ValidationError("cannot sample " + std::to_string(n) + " agents from a population of " +
                          std::to_string(agent_ids.size()));
  }
  PinnedRng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(agent_ids.size() - i));
    std::swap(agent_ids[i], agent_ids[j]);
  }
  agent_ids.resize(n);
  return agent_ids;
}

// ---- dataset -------------------------------------------------------------

DatasetPaths DatasetPaths::in_directory(const std::filesystem::path& dir) {
  return {dir / "stay_points.csv", dir / "pois.csv", dir / "labels.csv", dir / "manifest.json"};
}

std::string hash_files(std::span<const std::filesystem::path> files) {
  Sha256 h;
  for (const auto& path : files) {
    std::ifstream in(path, std::ios::binary);
    const std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    h.update(std::to_string(bytes.size()));
    h.update(":");
    h.update(bytes);
  }
  return h.hex_digest();
}

Dataset Dataset::load(const DatasetPaths& paths) {
  Dataset d;
  std::vector<std::filesystem::path> hashed;
  if (!paths.manifest.empty() && std::filesystem::exists(paths.manifest)) {
    d.manifest = DatasetManifest::load(paths.manifest);
    hashed.push_back(paths.manifest);
  } else {
    d.manifest = DatasetManifest::defaults();
  }
  d.stay_points = load_stay_points(paths.stay_points);
  d.catalog = load_poi_catalog(paths.pois, d.manifest.activity_types);
  d.labels = load_labels(paths.labels, d.manifest);
  hashed.insert(hashed.end(), {paths.stay_points, paths.pois, paths.labels});
  d.hash = hash_files(hashed);
  return d;
}

}  // namespace trajcot
