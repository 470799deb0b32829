#include <chrono>
#include <cstdio>
#include <fstream>

#include "trajcot/civil_time.hpp"
#include "trajcot/error.hpp"
#include "trajcot/experiment.hpp"

namespace trajcot {
namespace {

std::string fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string signed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%+.3f", v);
  return buf;
}

std::string title(Attribute a) {
  std::string s(to_string(a));
  s[0] = static_cast<char>(s[0] - 'a' + 'A');
  return s;
}

std::string header_row(const std::vector<Attribute>& attrs) {
  std::string head = "| Variant |";
  std::string rule = "|---|";
  for (const auto a : attrs) {
    head += " " + title(a) + " Acc. | " + title(a) + " F1 |";
    rule += "---:|---:|";
  }
  return head + "\n" + rule + "\n";
}

std::string confusion_table(const ConfusionMatrix& m) {
  std::string out = "| truth \\ predicted |";
  for (const auto& c : m.columns) out += " " + c + " |";
  out += "\n|---|";
  for (std::size_t i = 0; i < m.columns.size(); ++i) out += "---:|";
  out += "\n";
  for (std::size_t r = 0; r < m.rows.size(); ++r) {
    out += "| " + m.rows[r] + " |";
    for (const auto v : m.counts[r]) out += " " + std::to_string(v) + " |";
    out += "\n";
  }
  return out;
}

}  // namespace

const AttributeMetrics& EvalReport::metrics(Attribute a) const {
  for (const auto& m : attributes) {
    if (m.attribute == a) return m;
  }
  throw ValidationError("report has no " + std::string(to_string(a)) + " metrics");
}

const EvalReport& AblationReport::variant(Variant v) const {
  for (const auto& r : variants) {
    if (r.variant == v) return r;
  }
  throw ValidationError("ablation has no " + std::string(to_string(v)) + " run");
}

void to_json(nlohmann::json& j, const EvalReport& r) {
  j = nlohmann::json{{"generated_at", r.generated_at},
                     {"variant", to_string(r.variant)},
                     {"run", r.run},
                     {"metrics", r.attributes}};
}

std::string render_markdown(const EvalReport& r) {
  std::vector<Attribute> attrs;
  for (const auto& m : r.attributes) attrs.push_back(m.attribute);
  std::string out = "# Evaluation report\n\n";
  out += "Generated " + r.generated_at + ".\n\n";
  out += header_row(attrs);
  out += "| " + std::string(display_name(r.variant)) + " |";
  for (const auto& m : r.attributes) out += " " + fixed3(m.accuracy) + " | " + fixed3(m.macro_f1) + " |";
  out += "\n";
  for (const auto& m : r.attributes) {
    out += "\n## " + title(m.attribute) + "\n\n";
    out += "Agents: " + std::to_string(m.n) + ". Unparsed: " + std::to_string(m.unparsed) +
           ". Repaired: " + std::to_string(m.repaired) +
           ". Chain failures: " + std::to_string(m.chain_failures) + ".\n\n";
    out += "| Class | Precision | Recall | F1 | Support |\n|---|---:|---:|---:|---:|\n";
    for (const auto& c : m.classes) {
      out += "| " + c.id + " | " + fixed3(c.precision) + " | " + fixed3(c.recall) + " | " +
             fixed3(c.f1) + " | " + std::to_string(c.support) + " |\n";
    }
    out += "\n" + confusion_table(m.confusion);
  }
  return out;
}

void to_json(nlohmann::json& j, const AblationReport& r) {
  std::vector<std::string> attrs;
  for (const auto a : r.attributes) attrs.emplace_back(to_string(a));
  nlohmann::json rows = nlohmann::json::array();
  const EvalReport* full = nullptr;
  for (const auto& v : r.variants) {
    if (v.variant == Variant::Full) full = &v;
  }
  for (const auto& v : r.variants) {
    nlohmann::json row = {{"variant", to_string(v.variant)}, {"display", display_name(v.variant)}};
    for (const auto& m : v.attributes) {
      nlohmann::json cell = {{"accuracy", m.accuracy}, {"macro_f1", m.macro_f1}};
      if (full != nullptr) {
        const auto& base = full->metrics(m.attribute);
        cell["delta_accuracy"] = m.accuracy - base.accuracy;
        cell["delta_macro_f1"] = m.macro_f1 - base.macro_f1;
      }
      row[std::string(to_string(m.attribute))] = cell;
    }
    rows.push_back(row);
  }
  j = nlohmann::json{{"generated_at", r.generated_at},
                     {"run", r.run},
                     {"attributes", attrs},
                     {"rows", rows},
                     {"variants", r.variants}};
}

std::string render_markdown(const AblationReport& r) {
  std::string out = "# Ablation report\n\nGenerated " + r.generated_at + ".\n\n";
  out += header_row(r.attributes);
  const EvalReport* full = nullptr;
  for (const auto& v : r.variants) {
    if (v.variant == Variant::Full) full = &v;
  }
  for (const auto& v : r.variants) {
    out += "| " + std::string(display_name(v.variant)) + " |";
    for (const auto a : r.attributes) {
      const auto& m = v.metrics(a);
      std::string acc = fixed3(m.accuracy);
      std::string f1 = fixed3(m.macro_f1);
      if (full != nullptr && v.variant != Variant::Full) {
        acc += " (" + signed3(m.accuracy - full->metrics(a).accuracy) + ")";
        f1 += " (" + signed3(m.macro_f1 - full->metrics(a).macro_f1) + ")";
      }
      out += " " + acc + " | " + f1 + " |";
    }
    out += "\n";
  }
  return out;
}

void write_predictions(const std::filesystem::path& path,
                       std::span<const DemographicPrediction> predictions) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto& p : predictions) out << nlohmann::json(p).dump() << "\n";
}

std::vector<DemographicPrediction> read_predictions(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open predictions file " + path.string());
  std::vector<DemographicPrediction> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(nlohmann::json::parse(line).get<DemographicPrediction>());
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path.filename().string(), number, "prediction", e.what());
    }
  }
  return out;
}

std::string utc_now_rfc3339() {
  return format_rfc3339(std::chrono::time_point_cast<std::chrono::seconds>(
      std::chrono::system_clock::now()));
}

}  // namespace trajcot
