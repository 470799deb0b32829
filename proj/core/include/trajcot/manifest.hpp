#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "trajcot/categories.hpp"
#include "trajcot/civil_time.hpp"

namespace trajcot {

/// Dataset-level configuration that travels with the CSV files.
struct DatasetManifest {
  TimeZone timezone;
  std::vector<std::string> activity_types;  // declared tag vocabulary
  CategorySet age = default_age_categories();
  CategorySet education = default_education_categories();

  const CategorySet& categories(Attribute a) const;
  bool has_activity_type(std::string_view tag) const;

  static DatasetManifest defaults();
  static DatasetManifest load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
};

/// The default activity vocabulary (NUMOSIM-style activity types).
std::vector<std::string> default_activity_types();

void to_json(nlohmann::json& j, const DatasetManifest& m);
/// Validates category counts and rejects an `income` override.
void from_json(const nlohmann::json& j, DatasetManifest& m);

}  // namespace trajcot
