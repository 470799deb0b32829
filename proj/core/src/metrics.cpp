#include "trajcot/metrics.hpp"

#include <algorithm>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "trajcot/error.hpp"

namespace trajcot {
namespace {

void check_aligned(std::span<const PredictedLabel> preds, std::span<const TrueLabel> truths) {
  if (preds.empty() || truths.empty()) throw ValidationError("metrics need at least one prediction");
  if (preds.size() != truths.size()) {
    throw ValidationError("prediction and truth lists differ in length (" +
                          std::to_string(preds.size()) + " vs " + std::to_string(truths.size()) +
                          ")");
  }
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i].agent_id != truths[i].agent_id) {
      throw ValidationError("predictions are not aligned with truths at index " +
                            std::to_string(i) + " (" + preds[i].agent_id + " vs " +
                            truths[i].agent_id + ")");
    }
  }
}

struct Counts {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
};

std::map<std::string, Counts> count_classes(std::span<const PredictedLabel> preds,
                                            std::span<const TrueLabel> truths) {
  std::map<std::string, Counts> out;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const auto& truth = truths[i].label;
    if (preds[i].label && *preds[i].label == truth) {
      ++out[truth].tp;
    } else {
      ++out[truth].fn;
      if (preds[i].label) ++out[*preds[i].label].fp;
    }
  }
  return out;
}

ClassMetrics finish(std::string id, const Counts& c) {
  ClassMetrics m;
  m.id = std::move(id);
  m.tp = c.tp;
  m.fp = c.fp;
  m.fn = c.fn;
  m.support = c.tp + c.fn;
  m.precision = c.tp + c.fp > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp) : 0.0;
  m.recall = c.tp + c.fn > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn) : 0.0;
  m.f1 = m.precision + m.recall > 0 ? 2 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  return m;
}

}  // namespace

std::string_view to_string(F1Universe u) {
  return u == F1Universe::Observed ? "observed" : "canonical";
}

F1Universe parse_f1_universe(std::string_view text) {
  if (text == "observed") return F1Universe::Observed;
  if (text == "canonical") return F1Universe::Canonical;
  throw ValidationError("unknown F1 universe '" + std::string(text) +
                        "' (expected observed or canonical)");
}

double accuracy(std::span<const PredictedLabel> preds, std::span<const TrueLabel> truths) {
  check_aligned(preds, truths);
  std::int64_t hits = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i].label && *preds[i].label == truths[i].label) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

double macro_f1(std::span<const PredictedLabel> preds, std::span<const TrueLabel> truths,
                F1Universe universe, const CategorySet* categories) {
  check_aligned(preds, truths);
  const auto counts = count_classes(preds, truths);
  std::set<std::string> classes;
  if (universe == F1Universe::Canonical) {
    if (categories == nullptr) throw ValidationError("canonical macro-F1 needs the category set");
    for (const auto& id : categories->ids()) classes.insert(id);
  } else {
    for (const auto& [id, c] : counts) classes.insert(id);
  }
  double sum = 0.0;
  for (const auto& id : classes) {
    const auto it = counts.find(id);
    sum += finish(id, it == counts.end() ? Counts{} : it->second).f1;
  }
  return sum / static_cast<double>(classes.size());
}

std::int64_t ConfusionMatrix::total() const {
  std::int64_t t = 0;
  for (std::size_t r = 0; r < counts.size(); ++r) t += row_sum(r);
  return t;
}

std::int64_t ConfusionMatrix::trace() const {
  std::int64_t t = 0;
  for (std::size_t r = 0; r < counts.size() && r < columns.size(); ++r) t += counts[r][r];
  return t;
}

std::int64_t ConfusionMatrix::row_sum(std::size_t row) const {
  std::int64_t t = 0;
  for (const auto v : counts.at(row)) t += v;
  return t;
}

ConfusionMatrix confusion_matrix(std::span<const PredictedLabel> preds,
                                 std::span<const TrueLabel> truths,
                                 const CategorySet& categories) {
  check_aligned(preds, truths);
  ConfusionMatrix m;
  m.rows = categories.ids();
  m.columns = m.rows;
  m.columns.emplace_back(kUnparsedLabel);
  m.counts.assign(m.rows.size(), std::vector<std::int64_t>(m.columns.size(), 0));
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const auto row = categories.index_of(truths[i].label);
    if (!row) {
      throw ValidationError("true label '" + truths[i].label + "' of agent " + truths[i].agent_id +
                            " is not a " + std::string(to_string(categories.attribute())) +
                            " category");
    }
    std::size_t col = m.rows.size();
    if (preds[i].label) {
      if (const auto c = categories.index_of(*preds[i].label)) col = *c;
    }
    ++m.counts[*row][col];
  }
  return m;
}

std::vector<ClassMetrics> per_class_metrics(std::span<const PredictedLabel> preds,
                                            std::span<const TrueLabel> truths,
                                            const CategorySet& categories) {
  check_aligned(preds, truths);
  const auto counts = count_classes(preds, truths);
  std::vector<ClassMetrics> out;
  for (const auto& id : categories.ids()) {
    const auto it = counts.find(id);
    out.push_back(finish(id, it == counts.end() ? Counts{} : it->second));
  }
  for (const auto& [id, c] : counts) {
    if (!categories.contains(id)) out.push_back(finish(id, c));
  }
  return out;
}

AttributeMetrics evaluate_attribute(std::span<const PredictedLabel> preds,
                                    std::span<const TrueLabel> truths,
                                    const CategorySet& categories, F1Universe universe) {
  AttributeMetrics m;
  m.attribute = categories.attribute();
  m.n = static_cast<std::int64_t>(preds.size());
  m.accuracy = accuracy(preds, truths);
  m.macro_f1 = macro_f1(preds, truths, universe, &categories);
  m.classes = per_class_metrics(preds, truths, categories);
  m.confusion = confusion_matrix(preds, truths, categories);
  m.unparsed = static_cast<std::int64_t>(
      std::count_if(preds.begin(), preds.end(), [](const PredictedLabel& p) { return !p.label; }));
  m.parse_failure_rate = static_cast<double>(m.unparsed) / static_cast<double>(m.n);
  return m;
}

void to_json(nlohmann::json& j, const ClassMetrics& m) {
  j = nlohmann::json{{"id", m.id},         {"tp", m.tp},
                     {"fp", m.fp},         {"fn", m.fn},
                     {"support", m.support}, {"precision", m.precision},
                     {"recall", m.recall}, {"f1", m.f1}};
}

void to_json(nlohmann::json& j, const ConfusionMatrix& m) {
  j = nlohmann::json{{"rows", m.rows}, {"columns", m.columns}, {"counts", m.counts}};
}

void to_json(nlohmann::json& j, const AttributeMetrics& m) {
  j = nlohmann::json{{"attribute", to_string(m.attribute)},
                     {"n", m.n},
                     {"accuracy", m.accuracy},
                     {"macro_f1", m.macro_f1},
                     {"classes", m.classes},
                     {"confusion", m.confusion},
                     {"unparsed", m.unparsed},
                     {"repaired", m.repaired},
                     {"chain_failures", m.chain_failures},
                     {"parse_failure_rate", m.parse_failure_rate}};
}

}  // namespace trajcot
