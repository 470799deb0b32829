#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "trajcot/categories.hpp"

namespace trajcot {

struct PredictedLabel {
  std::string agent_id;
  std::optional<std::string> label;  // none = Unparsed
};

struct TrueLabel {
  std::string agent_id;
  std::string label;
};

/// Classes averaged by macro-F1: those seen in truths or predictions, or the
/// attribute's full canonical set.
enum class F1Universe { Observed, Canonical };

std::string_view to_string(F1Universe u);
F1Universe parse_f1_universe(std::string_view text);

/// Fraction of exact matches; Unparsed never matches. Throws ValidationError
/// when the lists are empty, differ in length, or are not aligned by agent.
double accuracy(std::span<const PredictedLabel> preds, std::span<const TrueLabel> truths);

/// Unweighted mean of per-class F1 (Unparsed is not a class). A class with
/// zero precision and recall contributes 0. `categories` is required for
/// the Canonical universe.
double macro_f1(std::span<const PredictedLabel> preds, std::span<const TrueLabel> truths,
                F1Universe universe = F1Universe::Observed,
                const CategorySet* categories = nullptr);

struct ClassMetrics {
  std::string id;
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  std::int64_t support = 0;  // truth count
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Rows are truth classes in canonical order; columns are the same classes
/// followed by Unparsed.
struct ConfusionMatrix {
  std::vector<std::string> rows;
  std::vector<std::string> columns;
  std::vector<std::vector<std::int64_t>> counts;

  std::int64_t total() const;
  std::int64_t trace() const;
  std::int64_t row_sum(std::size_t row) const;
};

inline constexpr std::string_view kUnparsedLabel = "Unparsed";

ConfusionMatrix confusion_matrix(std::span<const PredictedLabel> preds,
                                 std::span<const TrueLabel> truths,
                                 const CategorySet& categories);

/// Per-class counts over the canonical categories plus any extra labels
/// present in the data.
std::vector<ClassMetrics> per_class_metrics(std::span<const PredictedLabel> preds,
                                            std::span<const TrueLabel> truths,
                                            const CategorySet& categories);

struct AttributeMetrics {
  Attribute attribute = Attribute::Income;
  std::int64_t n = 0;
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  std::vector<ClassMetrics> classes;
  ConfusionMatrix confusion;
  std::int64_t unparsed = 0;
  std::int64_t repaired = 0;
  std::int64_t chain_failures = 0;
  double parse_failure_rate = 0.0;  // unparsed / n
};

AttributeMetrics evaluate_attribute(std::span<const PredictedLabel> preds,
                                    std::span<const TrueLabel> truths,
                                    const CategorySet& categories, F1Universe universe);

void to_json(nlohmann::json& j, const ClassMetrics& m);
void to_json(nlohmann::json& j, const ConfusionMatrix& m);
void to_json(nlohmann::json& j, const AttributeMetrics& m);

}  // namespace trajcot
