#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace trajcot {

enum class Attribute { Age, Income, Education };

inline constexpr Attribute kAllAttributes[] = {Attribute::Age, Attribute::Income,
                                               Attribute::Education};

std::string_view to_string(Attribute a);
/// Accepts `age`, `income`, `education` (case-insensitive). Throws ValidationError.
Attribute parse_attribute(std::string_view text);

struct Category {
  std::string id;           // canonical identifier used in label files
  std::string display;      // name shown to the model, e.g. "Upper-middle"
  std::string description;  // optional qualifier, e.g. "$75k-$125k"
};

/// The ordered label set of one attribute.
class CategorySet {
 public:
  CategorySet() = default;
  CategorySet(Attribute attribute, std::vector<Category> categories);

  Attribute attribute() const { return attribute_; }
  const std::vector<Category>& categories() const { return categories_; }
  std::size_t size() const { return categories_.size(); }

  std::optional<std::size_t> index_of(std::string_view id) const;
  bool contains(std::string_view id) const { return index_of(id).has_value(); }
  const Category& at(std::size_t i) const { return categories_.at(i); }
  const Category& by_id(std::string_view id) const;

  std::vector<std::string> ids() const;

  /// One `- {display} {description}` line per category, in order.
  std::string prompt_list() const;

 private:
  Attribute attribute_ = Attribute::Income;
  std::vector<Category> categories_;
};

/// The six income brackets. Fixed; not configurable.
const CategorySet& income_categories();
CategorySet default_age_categories();
CategorySet default_education_categories();

/// Required category count per attribute: age 4, income 6, education 5.
std::size_t required_category_count(Attribute a);

void to_json(nlohmann::json& j, const Category& c);
void from_json(const nlohmann::json& j, Category& c);

}  // namespace trajcot
