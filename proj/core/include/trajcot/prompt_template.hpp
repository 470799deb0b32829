#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "trajcot/categories.hpp"

namespace trajcot {

enum class Stage { S1, S2, S3 };

std::string_view to_string(Stage s);
Stage parse_stage(std::string_view text);

inline constexpr std::string_view kNarrativeSlot = "NARRATIVE";
inline constexpr std::string_view kStage1Slot = "S1_RESPONSE";
inline constexpr std::string_view kStage2Slot = "S2_RESPONSE";
inline constexpr std::string_view kCategoriesSlot = "CATEGORIES";

/// A versioned prompt with `{PLACEHOLDER}` slots.
///
/// Files start with a front-matter block:
///
///     ---
///     stage: S3
///     attribute: income      (or `any`)
///     version: s3-income-v1
///     ---
///
/// Only `{NAME}` with NAME in [A-Z0-9_]+ is a slot; other braces are literal.
/// The slots a stage may use are fixed: S1 {NARRATIVE}; S2 {NARRATIVE},
/// {S1_RESPONSE}; S3 {S1_RESPONSE}, {S2_RESPONSE}, {CATEGORIES}. All of a
/// stage's slots must appear.
class PromptTemplate {
 public:
  PromptTemplate(Stage stage, std::optional<Attribute> attribute, std::string version,
                 std::string body);

  static PromptTemplate parse(std::string_view text, std::string_view source_name);
  static PromptTemplate load(const std::filesystem::path& path);

  Stage stage() const { return stage_; }
  const std::optional<Attribute>& attribute() const { return attribute_; }
  const std::string& version() const { return version_; }
  const std::string& body() const { return body_; }
  /// `{version}#{first 16 hex of sha256(body)}`; changes with any body byte.
  const std::string& template_id() const { return id_; }
  const std::set<std::string>& placeholders() const { return placeholders_; }

  /// Single-pass substitution; values are never re-expanded. Throws
  /// TemplateError when a slot in the body has no value.
  std::string render(const std::map<std::string, std::string, std::less<>>& values) const;

 private:
  Stage stage_;
  std::optional<Attribute> attribute_;
  std::string version_;
  std::string body_;
  std::string id_;
  std::set<std::string> placeholders_;
};

/// Slot names found in `body`, in order of first appearance.
std::vector<std::string> scan_placeholders(std::string_view body);

/// Templates indexed by (stage, attribute); attribute-specific entries win
/// over `any`.
class PromptLibrary {
 public:
  void add(PromptTemplate tmpl);
  const PromptTemplate& get(Stage stage, Attribute attribute) const;
  std::vector<const PromptTemplate*> all() const;

  /// The templates shipped with the library.
  static PromptLibrary defaults();
  /// Every `*.tmpl` file in `dir`, layered over nothing.
  static PromptLibrary load_directory(const std::filesystem::path& dir);

 private:
  std::map<std::pair<Stage, int>, PromptTemplate> templates_;  // attribute index, -1 = any
};

}  // namespace trajcot
