#include "trajcot/categories.hpp"

#include <algorithm>
#include <cctype>

#include <nlohmann/json.hpp>

#include "trajcot/error.hpp"

namespace trajcot {

std::string_view to_string(Attribute a) {
  switch (a) {
    case Attribute::Age: return "age";
    case Attribute::Income: return "income";
    case Attribute::Education: return "education";
  }
  return "unknown";
}

Attribute parse_attribute(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "age") return Attribute::Age;
  if (lower == "income") return Attribute::Income;
  if (lower == "education") return Attribute::Education;
  throw ValidationError("unknown attribute '" + std::string(text) +
                        "' (expected age, income or education)");
}

CategorySet::CategorySet(Attribute attribute, std::vector<Category> categories)
    : attribute_(attribute), categories_(std::move(categories)) {
  if (categories_.empty()) throw ValidationError("category set must not be empty");
  for (std::size_t i = 0; i < categories_.size(); ++i) {
    if (categories_[i].id.empty() || categories_[i].display.empty()) {
      throw ValidationError("category id and display name must be non-empty");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (categories_[i].id == categories_[j].id) {
        throw ValidationError("duplicate category id '" + categories_[i].id + "'");
      }
    }
  }
}

std::optional<std::size_t> CategorySet::index_of(std::string_view id) const {
  for (std::size_t i = 0; i < categories_.size(); ++i) {
    if (categories_[i].id == id) return i;
  }
  return std::nullopt;
}

const Category& CategorySet::by_id(std::string_view id) const {
  const auto i = index_of(id);
  if (!i) {
    throw ValidationError("unknown " + std::string(to_string(attribute_)) + " category '" +
                          std::string(id) + "'");
  }
  return categories_[*i];
}

std::vector<std::string> CategorySet::ids() const {
  std::vector<std::string> out;
  out.reserve(categories_.size());
  for (const auto& c : categories_) out.push_back(c.id);
  return out;
}

std::string CategorySet::prompt_list() const {
  std::string out;
  for (const auto& c : categories_) {
    out += "- " + c.display;
    if (!c.description.empty()) out += " " + c.description;
    out += "\n";
  }
  if (!out.empty()) out.pop_back();
  return out;
}

const CategorySet& income_categories() {
  static const CategorySet kIncome{Attribute::Income,
                                   {
                                       {"VeryLow", "Very Low", "<$15k"},
                                       {"Low", "Low", "$15k-$35k"},
                                       {"Middle", "Middle", "$35k-$75k"},
                                       {"UpperMiddle", "Upper-middle", "$75k-$125k"},
                                       {"High", "High", "$125k-$200k"},
                                       {"VeryHigh", "Very high", ">$200k"},
                                   }};
  return kIncome;
}

CategorySet default_age_categories() {
  return {Attribute::Age,
          {
              {"Under25", "Under 25", "years old"},
              {"Age25to44", "25-44", "years old"},
              {"Age45to64", "45-64", "years old"},
              {"Age65Plus", "65+", "years old"},
          }};
}

CategorySet default_education_categories() {
  return {Attribute::Education,
          {
              {"NoHighSchool", "No high school", "(did not complete high school)"},
              {"HighSchool", "High school", "(high school diploma or equivalent)"},
              {"SomeCollege", "Some college", "(some college or associate degree)"},
              {"Bachelors", "Bachelor's", "(bachelor's degree)"},
              {"Graduate", "Graduate", "(master's, professional or doctoral degree)"},
          }};
}

std::size_t required_category_count(Attribute a) {
  switch (a) {
    case Attribute::Age: return 4;
    case Attribute::Income: return 6;
    case Attribute::Education: return 5;
  }
  return 0;
}

void to_json(nlohmann::json& j, const Category& c) {
  j = nlohmann::json{{"id", c.id}, {"display", c.display}, {"description", c.description}};
}

void from_json(const nlohmann::json& j, Category& c) {
  c.id = j.at("id").get<std::string>();
  c.display = j.value("display", c.id);
  c.description = j.value("description", std::string{});
}

}  // namespace trajcot
