#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "trajcot/categories.hpp"

namespace trajcot {

enum class ParseStatus { Clean, Repaired, Unparsed };

std::string_view to_string(ParseStatus s);
ParseStatus parse_parse_status(std::string_view text);

inline constexpr std::size_t kIncomeIndicatorCount = 5;
inline constexpr std::array<std::string_view, kIncomeIndicatorCount> kIncomeIndicators = {
    "location economic levels", "neighborhood characteristics", "leisure cost levels",
    "shopping patterns", "commuting patterns"};

struct DemographicPrediction {
  std::string agent_id;
  Attribute attribute = Attribute::Income;
  std::optional<std::string> label;  // canonical id; empty means Unparsed
  std::optional<int> confidence;     // 1..5
  std::optional<std::array<int, kIncomeIndicatorCount>> indicators;  // 1..10, income only
  std::vector<std::string> alternatives;  // canonical ids, ranked
  std::string reasoning;
  ParseStatus status = ParseStatus::Unparsed;

  bool operator==(const DemographicPrediction&) const = default;
};

void to_json(nlohmann::json& j, const DemographicPrediction& p);
void from_json(const nlohmann::json& j, DemographicPrediction& p);

/// Per-attribute alias data. Weak aliases (bare words like "high") are
/// accepted in an answer field but only count in free prose when followed
/// by "income", "bracket", "earner" or "(".
struct SynonymTable {
  struct Entry {
    std::vector<std::string> aliases;
    std::vector<std::string> weak_aliases;
  };

  Attribute attribute = Attribute::Income;
  std::string version;
  std::map<std::string, Entry> entries;  // by category id

  static SynonymTable defaults(Attribute attribute);
  static SynonymTable load(const std::filesystem::path& path);
  static SynonymTable from_json(const nlohmann::json& j);
};

/// Matches category mentions in text. Matching is case-insensitive, on whole
/// tokens, and prefers the longest match at overlapping positions, so
/// "upper-middle" never also counts as "middle".
class LabelNormalizer {
 public:
  LabelNormalizer(CategorySet categories, const SynonymTable& synonyms);

  struct Mention {
    std::size_t offset = 0;  // into the folded text
    std::size_t length = 0;
    std::size_t category = 0;
    bool from_amount = false;  // dollar-range or bound expression
  };

  enum class Outcome { Match, NoMatch, Ambiguous };
  struct Result {
    Outcome outcome = Outcome::NoMatch;
    std::optional<std::string> id;
  };

  /// Classifies a short fragment such as an answer-field value.
  Result classify(std::string_view fragment) const;
  /// The canonical id, or none when nothing or more than one category matches.
  std::optional<std::string> normalize(std::string_view fragment) const;

  /// All non-overlapping mentions in `text`, in order. With `prose` set,
  /// weak aliases need a following context word.
  std::vector<Mention> mentions(std::string_view text, bool prose) const;

  const CategorySet& categories() const { return categories_; }

 private:
  struct Pattern {
    std::string text;  // folded
    std::size_t category;
    bool weak;
  };

  CategorySet categories_;
  std::vector<Pattern> patterns_;
};

/// Lower-cases ASCII, folds en/em dashes to '-', curly quotes to '\'', drops
/// thousands separators inside numbers and collapses whitespace runs.
std::string fold_text(std::string_view text);

std::optional<std::string> normalize_label(std::string_view fragment,
                                           const CategorySet& categories,
                                           const SynonymTable& synonyms);

struct ScoreSchema {
  bool indicators = false;
  std::size_t indicator_count = kIncomeIndicatorCount;
};

struct ExtractedScores {
  std::optional<int> confidence;
  std::optional<std::vector<int>> indicators;
  bool repaired = false;  // a value was clamped or the indicator list was malformed
};

/// Reads `CONFIDENCE:` and `INDICATORS:` lines (the last occurrence wins),
/// clamping into [1,5] and [1,10].
ExtractedScores extract_scores(std::string_view raw, const ScoreSchema& schema);

/// Stage-3 response parser for one attribute.
///
/// The answer block (`PREDICTION:` / `CONFIDENCE:` / `INDICATORS:` /
/// `ALTERNATIVES:` / `REASONING:`) is preferred. Without a usable block the
/// parser falls back to the last explicit category mention, then to the
/// last dollar-range mention (status repaired), and otherwise reports
/// Unparsed. Never throws on content.
class ResponseParser {
 public:
  ResponseParser(CategorySet categories, const SynonymTable& synonyms);
  ResponseParser(CategorySet categories);  // default synonyms

  DemographicPrediction parse(std::string_view raw, std::string_view agent_id = {}) const;

  /// Canonical answer block for a prediction with a label.
  std::string serialize(const DemographicPrediction& p) const;

  const LabelNormalizer& normalizer() const { return normalizer_; }

 private:
  LabelNormalizer normalizer_;
};

DemographicPrediction parse_stage3(std::string_view raw, const CategorySet& categories);

}  // namespace trajcot
