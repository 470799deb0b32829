#include "trajcot/manifest.hpp"

#include <algorithm>
#include <fstream>

#include <nlohmann/json.hpp>

#include "trajcot/error.hpp"

namespace trajcot {
namespace {

CategorySet read_categories(const nlohmann::json& j, Attribute a) {
  auto cats = j.get<std::vector<Category>>();
  if (cats.size() != required_category_count(a)) {
    throw ValidationError(std::string(to_string(a)) + " needs exactly " +
                          std::to_string(required_category_count(a)) + " categories, got " +
                          std::to_string(cats.size()));
  }
  return CategorySet(a, std::move(cats));
}

}  // namespace

std::vector<std::string> default_activity_types() {
  return {"Home",      "Work",   "School",     "ChildCare", "BuyGoods",
          "Services",  "EatOut", "Errands",    "Recreation", "Exercise",
          "Visit",     "HealthCare", "Religious", "SomethingElse", "DropOff"};
}

DatasetManifest DatasetManifest::defaults() {
  DatasetManifest m;
  m.activity_types = default_activity_types();
  return m;
}

const CategorySet& DatasetManifest::categories(Attribute a) const {
  switch (a) {
    case Attribute::Age: return age;
    case Attribute::Education: return education;
    case Attribute::Income: break;
  }
  return income_categories();
}

bool DatasetManifest::has_activity_type(std::string_view tag) const {
  return std::find(activity_types.begin(), activity_types.end(), tag) != activity_types.end();
}

DatasetManifest DatasetManifest::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open manifest " + path.string());
  nlohmann::json j;
  try {
    in >> j;
    return j.get<DatasetManifest>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("invalid manifest " + path.string() + ": " + e.what());
  }
}

void DatasetManifest::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write manifest " + path.string());
  out << nlohmann::json(*this).dump(2) << "\n";
}

void to_json(nlohmann::json& j, const DatasetManifest& m) {
  j = nlohmann::json{{"timezone", m.timezone.name()},
                     {"activity_types", m.activity_types},
                     {"categories", {{"age", m.age.categories()},
                                     {"education", m.education.categories()}}}};
}

void from_json(const nlohmann::json& j, DatasetManifest& m) {
  m = DatasetManifest::defaults();
  if (j.contains("timezone")) m.timezone = TimeZone::parse(j.at("timezone").get<std::string>());
  if (j.contains("activity_types")) {
    m.activity_types = j.at("activity_types").get<std::vector<std::string>>();
    if (m.activity_types.empty()) throw ValidationError("activity_types must not be empty");
  }
  if (j.contains("categories")) {
    const auto& cats = j.at("categories");
    if (cats.contains("income")) {
      throw ValidationError("income brackets are fixed and cannot be overridden");
    }
    if (cats.contains("age")) m.age = read_categories(cats.at("age"), Attribute::Age);
    if (cats.contains("education")) {
      m.education = read_categories(cats.at("education"), Attribute::Education);
    }
  }
}

}  // namespace trajcot
