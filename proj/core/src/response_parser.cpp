#include "trajcot/response_parser.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "trajcot/error.hpp"
#include "trajcot/resources.hpp"

namespace trajcot {
namespace {

bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

bool starts_with_at(std::string_view text, std::size_t pos, std::string_view what) {
  return pos <= text.size() && text.substr(pos, what.size()) == what;
}

bool iequals_prefix(std::string_view text, std::string_view upper_key) {
  if (text.size() < upper_key.size()) return false;
  for (std::size_t i = 0; i < upper_key.size(); ++i) {
    if (std::toupper(static_cast<unsigned char>(text[i])) != upper_key[i]) return false;
  }
  return true;
}

/// Removes `<think>...</think>` spans; text before a dangling `</think>` is dropped.
std::string strip_think_blocks(std::string_view raw) {
  std::string text(raw);
  auto find_ci = [&](std::string_view needle, std::size_t from) {
    for (std::size_t i = from; i + needle.size() <= text.size(); ++i) {
      bool ok = true;
      for (std::size_t k = 0; k < needle.size() && ok; ++k) {
        ok = std::tolower(static_cast<unsigned char>(text[i + k])) == needle[k];
      }
      if (ok) return i;
    }
    return std::string::npos;
  };
  const auto first_open = find_ci("<think>", 0);
  const auto first_close = find_ci("</think>", 0);
  if (first_close != std::string::npos && (first_open == std::string::npos || first_close < first_open)) {
    text.erase(0, first_close + 8);
  }
  std::size_t open;
  while ((open = find_ci("<think>", 0)) != std::string::npos) {
    const auto close = find_ci("</think>", open);
    if (close == std::string::npos) break;
    text.erase(open, close + 8 - open);
  }
  return text;
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) {
      out.push_back(text.substr(pos));
      break;
    }
    out.push_back(text.substr(pos, nl - pos));
    pos = nl + 1;
  }
  return out;
}

enum class Field { Prediction, Confidence, Indicators, Alternatives, Reasoning };

struct FieldLine {
  Field field;
  std::size_t line;
  std::string_view value;
};

constexpr std::pair<std::string_view, Field> kFieldKeys[] = {
    {"PREDICTION", Field::Prediction},     {"CONFIDENCE", Field::Confidence},
    {"INDICATORS", Field::Indicators},     {"ALTERNATIVES", Field::Alternatives},
    {"REASONING", Field::Reasoning}};

std::string_view strip_decoration(std::string_view s) {
  auto deco = [](char c) { return is_space(c) || c == '*' || c == '_' || c == '`' || c == '"'; };
  while (!s.empty() && deco(s.front())) s.remove_prefix(1);
  while (!s.empty() && (deco(s.back()) || s.back() == '.')) s.remove_suffix(1);
  return s;
}

std::optional<FieldLine> parse_field_line(std::string_view line, std::size_t index) {
  std::size_t i = 0;
  while (i < line.size() &&
         (is_space(line[i]) || line[i] == '*' || line[i] == '#' || line[i] == '>' ||
          line[i] == '-' || line[i] == '`' || line[i] == '_')) {
    ++i;
  }
  const auto rest = line.substr(i);
  for (const auto& [key, field] : kFieldKeys) {
    if (!iequals_prefix(rest, key)) continue;
    std::size_t j = key.size();
    while (j < rest.size() && (rest[j] == '*' || rest[j] == '_' || rest[j] == ' ' || rest[j] == '`')) ++j;
    if (j >= rest.size() || rest[j] != ':') return std::nullopt;
    return FieldLine{field, index, strip_decoration(rest.substr(j + 1))};
  }
  return std::nullopt;
}

/// Integer at the start of `s` (after optional spaces); saturates instead of overflowing.
std::optional<long long> leading_integer(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size() && !is_digit(s[i]) && s[i] != '-') {
    if (is_alnum(s[i])) {
      // Skip a word label such as "Location:".
      while (i < s.size() && s[i] != ':' && s[i] != '=' && !is_digit(s[i])) ++i;
      continue;
    }
    ++i;
  }
  if (i >= s.size()) return std::nullopt;
  bool negative = false;
  if (s[i] == '-') {
    negative = true;
    ++i;
  }
  if (i >= s.size() || !is_digit(s[i])) return std::nullopt;
  long long v = 0;
  for (; i < s.size() && is_digit(s[i]); ++i) {
    v = std::min<long long>(v * 10 + (s[i] - '0'), 1'000'000'000LL);
  }
  return negative ? -v : v;
}

int clamp_flag(long long v, int lo, int hi, bool& clamped) {
  if (v < lo) {
    clamped = true;
    return lo;
  }
  if (v > hi) {
    clamped = true;
    return hi;
  }
  return static_cast<int>(v);
}

std::optional<int> read_confidence(std::string_view value, bool& repaired) {
  const auto v = leading_integer(value);
  if (!v) {
    repaired = true;
    return std::nullopt;
  }
  return clamp_flag(*v, 1, 5, repaired);
}

std::optional<std::vector<int>> read_indicators(std::string_view value, std::size_t count,
                                                bool& repaired) {
  std::vector<int> out;
  std::size_t pos = 0;
  while (pos <= value.size()) {
    auto sep = value.find_first_of(",;", pos);
    const auto item = trim(value.substr(pos, sep == std::string_view::npos ? sep : sep - pos));
    if (!item.empty()) {
      const auto v = leading_integer(item);
      if (!v) {
        repaired = true;
        return std::nullopt;
      }
      out.push_back(clamp_flag(*v, 1, 10, repaired));
    }
    if (sep == std::string_view::npos) break;
    pos = sep + 1;
  }
  if (out.size() != count) {
    repaired = true;
    return std::nullopt;
  }
  return out;
}

struct Money {
  std::size_t start = 0;
  std::size_t end = 0;
  double value = 0.0;  // as written
  bool dollar = false;
  bool kilo = false;
};

/// `$15k`, `15k`, `$15000`, `$15.5k` starting exactly at `pos` in folded text.
std::optional<Money> read_money(std::string_view t, std::size_t pos) {
  Money m;
  m.start = pos;
  std::size_t i = pos;
  if (i < t.size() && t[i] == '$') {
    m.dollar = true;
    ++i;
    if (i < t.size() && t[i] == ' ') ++i;
  }
  const std::size_t digits_start = i;
  double v = 0.0;
  while (i < t.size() && is_digit(t[i]) && i - digits_start < 9) v = v * 10 + (t[i++] - '0');
  if (i == digits_start || (i < t.size() && is_digit(t[i]))) return std::nullopt;
  if (i + 1 < t.size() && t[i] == '.' && is_digit(t[i + 1])) {
    double scale = 0.1;
    ++i;
    while (i < t.size() && is_digit(t[i])) {
      v += (t[i++] - '0') * scale;
      scale /= 10;
    }
  }
  if (i < t.size() && t[i] == 'k' && (i + 1 == t.size() || !is_alnum(t[i + 1]))) {
    m.kilo = true;
    ++i;
  } else if (i < t.size() && is_alnum(t[i])) {
    return std::nullopt;
  }
  m.value = v;
  m.end = i;
  return m;
}

double thousands(const Money& m, bool peer_kilo) {
  if (m.kilo) return m.value;
  if (m.value >= 1000) return m.value / 1000.0;
  return peer_kilo ? m.value : m.value;
}

bool near(double a, double b) { return a > b - 1e-9 && a < b + 1e-9; }

bool ends_with_word(std::string_view before, std::string_view word) {
  before = trim(before);
  if (before.size() < word.size()) return false;
  if (before.substr(before.size() - word.size()) != word) return false;
  const std::size_t start = before.size() - word.size();
  return start == 0 || !is_alnum(before[start - 1]) || !is_alnum(word.front());
}

}  // namespace

// ---- text folding --------------------------------------------------------

std::string fold_text(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const auto c = static_cast<unsigned char>(text[i]);
    char mapped = static_cast<char>(c);
    if (c == 0xE2 && i + 2 < text.size() && static_cast<unsigned char>(text[i + 1]) == 0x80) {
      const auto c3 = static_cast<unsigned char>(text[i + 2]);
      if (c3 == 0x93 || c3 == 0x94) mapped = '-';
      else if (c3 == 0x98 || c3 == 0x99) mapped = '\'';
      else if (c3 == 0x9C || c3 == 0x9D) mapped = '"';
      if (mapped != static_cast<char>(c)) i += 2;
    } else if (c == 0xE2 && i + 2 < text.size() && static_cast<unsigned char>(text[i + 1]) == 0x88 &&
               static_cast<unsigned char>(text[i + 2]) == 0x92) {
      mapped = '-';
      i += 2;
    }
    if (is_space(mapped)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(mapped))));
  }
  // Drop thousands separators: d,ddd (not followed by another digit).
  std::string result;
  result.reserve(out.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i] == ',' && i > 0 && is_digit(out[i - 1]) && i + 3 < out.size() + 0 &&
        is_digit(out[i + 1]) && is_digit(out[i + 2]) && is_digit(out[i + 3]) &&
        (i + 4 >= out.size() || !is_digit(out[i + 4]))) {
      continue;
    }
    result.push_back(out[i]);
  }
  return result;
}

// ---- status / prediction json --------------------------------------------

std::string_view to_string(ParseStatus s) {
  switch (s) {
    case ParseStatus::Clean: return "clean";
    case ParseStatus::Repaired: return "repaired";
    case ParseStatus::Unparsed: return "unparsed";
  }
  return "?";
}

ParseStatus parse_parse_status(std::string_view text) {
  if (text == "clean") return ParseStatus::Clean;
  if (text == "repaired") return ParseStatus::Repaired;
  if (text == "unparsed") return ParseStatus::Unparsed;
  throw ValidationError("unknown parse status '" + std::string(text) + "'");
}

void to_json(nlohmann::json& j, const DemographicPrediction& p) {
  j = nlohmann::json{{"agent_id", p.agent_id},
                     {"attribute", to_string(p.attribute)},
                     {"label", p.label ? *p.label : std::string("Unparsed")},
                     {"confidence", nullptr},
                     {"indicators", nullptr},
                     {"alternatives", p.alternatives},
                     {"reasoning", p.reasoning},
                     {"parse_status", to_string(p.status)}};
  if (p.confidence) j["confidence"] = *p.confidence;
  if (p.indicators) j["indicators"] = *p.indicators;
}

void from_json(const nlohmann::json& j, DemographicPrediction& p) {
  p = DemographicPrediction{};
  p.agent_id = j.at("agent_id").get<std::string>();
  p.attribute = parse_attribute(j.at("attribute").get<std::string>());
  const auto label = j.at("label").get<std::string>();
  if (label != "Unparsed") p.label = label;
  if (j.contains("confidence") && !j.at("confidence").is_null()) {
    p.confidence = j.at("confidence").get<int>();
  }
  if (j.contains("indicators") && !j.at("indicators").is_null()) {
    p.indicators = j.at("indicators").get<std::array<int, kIncomeIndicatorCount>>();
  }
  p.alternatives = j.value("alternatives", std::vector<std::string>{});
  p.reasoning = j.value("reasoning", std::string{});
  p.status = parse_parse_status(j.value("parse_status", std::string("unparsed")));
}

// ---- synonyms ------------------------------------------------------------

SynonymTable SynonymTable::from_json(const nlohmann::json& j) {
  SynonymTable t;
  t.attribute = parse_attribute(j.at("attribute").get<std::string>());
  t.version = j.value("version", std::string{});
  for (const auto& [id, entry] : j.at("entries").items()) {
    Entry e;
    e.aliases = entry.value("aliases", std::vector<std::string>{});
    e.weak_aliases = entry.value("weak_aliases", std::vector<std::string>{});
    t.entries.emplace(id, std::move(e));
  }
  return t;
}

SynonymTable SynonymTable::defaults(Attribute attribute) {
  const auto name = "synonyms/" + std::string(to_string(attribute)) + ".json";
  const auto text = resources::find(name);
  if (!text) throw Error("missing embedded resource " + name);
  return from_json(nlohmann::json::parse(*text));
}

SynonymTable SynonymTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open synonym table " + path.string());
  try {
    nlohmann::json j;
    in >> j;
    return from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("invalid synonym table " + path.string() + ": " + e.what());
  }
}

// ---- normalizer ----------------------------------------------------------

LabelNormalizer::LabelNormalizer(CategorySet categories, const SynonymTable& synonyms)
    : categories_(std::move(categories)) {
  auto add = [&](std::string_view text, std::size_t cat, bool weak) {
    auto folded = fold_text(text);
    if (folded.empty()) return;
    for (const auto& p : patterns_) {
      if (p.text == folded && p.category == cat) return;
    }
    patterns_.push_back({std::move(folded), cat, weak});
  };
  for (std::size_t i = 0; i < categories_.size(); ++i) {
    const auto& c = categories_.at(i);
    // Ids and display names that fold onto a weak alias stay weak.
    auto is_weak = [&](std::string_view text) {
      const auto it = synonyms.entries.find(c.id);
      if (it == synonyms.entries.end()) return false;
      const auto folded = fold_text(text);
      return std::any_of(it->second.weak_aliases.begin(), it->second.weak_aliases.end(),
                         [&](const std::string& a) { return fold_text(a) == folded; });
    };
    add(c.id, i, is_weak(c.id));
    add(c.display, i, is_weak(c.display));
    if (const auto it = synonyms.entries.find(c.id); it != synonyms.entries.end()) {
      for (const auto& a : it->second.aliases) add(a, i, false);
      for (const auto& a : it->second.weak_aliases) add(a, i, true);
    }
  }
  // Longer patterns first so equal-offset overlaps resolve to the longest.
  std::stable_sort(patterns_.begin(), patterns_.end(),
                   [](const Pattern& a, const Pattern& b) { return a.text.size() > b.text.size(); });
}

std::vector<LabelNormalizer::Mention> LabelNormalizer::mentions(std::string_view raw,
                                                                bool prose) const {
  const std::string t = fold_text(raw);
  std::vector<Mention> candidates;

  for (const auto& p : patterns_) {
    std::size_t pos = 0;
    while ((pos = t.find(p.text, pos)) != std::string::npos) {
      const std::size_t end = pos + p.text.size();
      const bool left_ok = !is_alnum(p.text.front()) || pos == 0 || !is_alnum(t[pos - 1]);
      const bool right_ok = !is_alnum(p.text.back()) || end == t.size() || !is_alnum(t[end]);
      bool context_ok = true;
      if (left_ok && right_ok && p.weak && prose) {
        std::size_t k = end;
        while (k < t.size() && (t[k] == ' ' || t[k] == '-')) ++k;
        context_ok = starts_with_at(t, k, "income") || starts_with_at(t, k, "bracket") ||
                     starts_with_at(t, k, "earner") || starts_with_at(t, k, "(");
      }
      if (left_ok && right_ok && context_ok) {
        candidates.push_back({pos, p.text.size(), p.category, false});
      }
      ++pos;
    }
  }

  if (categories_.attribute() == Attribute::Income) {
    static constexpr std::pair<double, double> kRanges[] = {
        {15, 35}, {35, 75}, {75, 125}, {125, 200}};
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (t[i] != '$' && !is_digit(t[i])) continue;
      if (i > 0 && (is_alnum(t[i - 1]) || t[i - 1] == '.' || t[i - 1] == '$')) continue;
      const auto m1 = read_money(t, i);
      if (!m1) continue;
      // Range: m1 ( '-' | 'to' ) m2
      std::size_t k = m1->end;
      while (k < t.size() && t[k] == ' ') ++k;
      std::size_t after_sep = std::string::npos;
      if (k < t.size() && t[k] == '-') after_sep = k + 1;
      else if (starts_with_at(t, k, "to ")) after_sep = k + 3;
      if (after_sep != std::string::npos) {
        while (after_sep < t.size() && t[after_sep] == ' ') ++after_sep;
        if (const auto m2 = read_money(t, after_sep);
            m2 && (m1->dollar || m1->kilo || m2->dollar || m2->kilo)) {
          const bool kilo = m1->kilo || m2->kilo;
          const double lo = thousands(*m1, kilo);
          const double hi = thousands(*m2, kilo);
          for (std::size_t r = 0; r < std::size(kRanges); ++r) {
            if (near(lo, kRanges[r].first) && near(hi, kRanges[r].second)) {
              candidates.push_back({m1->start, m2->end - m1->start, r + 1, true});
            }
          }
          i = m2->end - 1;
          continue;
        }
      }
      if (!(m1->dollar || m1->kilo)) continue;
      const double v = thousands(*m1, m1->kilo);
      const std::string_view before = std::string_view(t).substr(0, m1->start);
      const auto b = trim(before);
      const bool below = (!b.empty() && b.back() == '<') || ends_with_word(b, "under") ||
                         ends_with_word(b, "below") || ends_with_word(b, "less than");
      const bool above = (!b.empty() && b.back() == '>') || ends_with_word(b, "over") ||
                         ends_with_word(b, "above") || ends_with_word(b, "more than") ||
                         (m1->end < t.size() && t[m1->end] == '+');
      if (below && near(v, 15)) {
        const std::size_t start = b.empty() ? m1->start : std::min(m1->start, static_cast<std::size_t>(b.size() - 1));
        candidates.push_back({start, m1->end - start, 0, true});
      } else if (above && near(v, 200)) {
        const bool plus = m1->end < t.size() && t[m1->end] == '+';
        const std::size_t start = plus || b.empty() ? m1->start : std::min(m1->start, static_cast<std::size_t>(b.size() - 1));
        candidates.push_back({start, m1->end + (plus ? 1 : 0) - start, 5, true});
      }
    }
  }

  // Longest first; drop anything overlapping an accepted mention.
  std::stable_sort(candidates.begin(), candidates.end(), [](const Mention& a, const Mention& b) {
    if (a.length != b.length) return a.length > b.length;
    return a.offset < b.offset;
  });
  std::vector<Mention> accepted;
  for (const auto& c : candidates) {
    const bool overlaps = std::any_of(accepted.begin(), accepted.end(), [&](const Mention& a) {
      return c.offset < a.offset + a.length && a.offset < c.offset + c.length;
    });
    if (!overlaps) accepted.push_back(c);
  }
  std::sort(accepted.begin(), accepted.end(),
            [](const Mention& a, const Mention& b) { return a.offset < b.offset; });
  return accepted;
}

LabelNormalizer::Result LabelNormalizer::classify(std::string_view fragment) const {
  std::set<std::size_t> cats;
  for (const auto& m : mentions(fragment, false)) cats.insert(m.category);
  if (cats.empty()) return {Outcome::NoMatch, std::nullopt};
  if (cats.size() > 1) return {Outcome::Ambiguous, std::nullopt};
  return {Outcome::Match, categories_.at(*cats.begin()).id};
}

std::optional<std::string> LabelNormalizer::normalize(std::string_view fragment) const {
  return classify(fragment).id;
}

std::optional<std::string> normalize_label(std::string_view fragment, const CategorySet& categories,
                                           const SynonymTable& synonyms) {
  return LabelNormalizer(categories, synonyms).normalize(fragment);
}

// ---- scores --------------------------------------------------------------

ExtractedScores extract_scores(std::string_view raw, const ScoreSchema& schema) {
  ExtractedScores out;
  std::optional<std::string_view> confidence;
  std::optional<std::string_view> indicators;
  const auto lines = split_lines(raw);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto f = parse_field_line(lines[i], i);
    if (!f) continue;
    if (f->field == Field::Confidence) confidence = f->value;
    if (f->field == Field::Indicators) indicators = f->value;
  }
  if (confidence) out.confidence = read_confidence(*confidence, out.repaired);
  if (schema.indicators && indicators) {
    out.indicators = read_indicators(*indicators, schema.indicator_count, out.repaired);
  }
  return out;
}

// ---- parser --------------------------------------------------------------

ResponseParser::ResponseParser(CategorySet categories, const SynonymTable& synonyms)
    : normalizer_(std::move(categories), synonyms) {}

ResponseParser::ResponseParser(CategorySet categories)
    : normalizer_(categories, SynonymTable::defaults(categories.attribute())) {}

DemographicPrediction ResponseParser::parse(std::string_view raw, std::string_view agent_id) const {
  DemographicPrediction p;
  p.agent_id = std::string(agent_id);
  p.attribute = normalizer_.categories().attribute();
  p.status = ParseStatus::Unparsed;

  const std::string text = strip_think_blocks(raw);
  const auto lines = split_lines(text);
  std::vector<FieldLine> fields;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (auto f = parse_field_line(lines[i], i)) fields.push_back(*f);
  }

  // Answer block: the last PREDICTION line that names a category wins.
  std::optional<std::size_t> chosen;
  for (std::size_t k = fields.size(); k-- > 0;) {
    if (fields[k].field != Field::Prediction) continue;
    const auto r = normalizer_.classify(fields[k].value);
    if (r.outcome == LabelNormalizer::Outcome::Ambiguous) return p;
    if (r.outcome == LabelNormalizer::Outcome::Match) {
      chosen = k;
      p.label = r.id;
      break;
    }
  }

  if (chosen) {
    bool repaired = false;
    const std::size_t from_line = fields[*chosen].line;
    auto after = [&](Field f) -> std::optional<FieldLine> {
      for (std::size_t k = *chosen + 1; k < fields.size(); ++k) {
        if (fields[k].field == f) return fields[k];
      }
      return std::nullopt;
    };
    if (const auto c = after(Field::Confidence)) {
      p.confidence = read_confidence(c->value, repaired);
    } else {
      repaired = true;
    }
    if (p.attribute == Attribute::Income) {
      if (const auto ind = after(Field::Indicators)) {
        if (auto v = read_indicators(ind->value, kIncomeIndicatorCount, repaired)) {
          std::array<int, kIncomeIndicatorCount> arr{};
          std::copy(v->begin(), v->end(), arr.begin());
          p.indicators = arr;
        }
      } else {
        repaired = true;
      }
    }
    if (const auto alts = after(Field::Alternatives)) {
      const std::string folded = fold_text(alts->value);
      if (!(folded.empty() || folded == "none" || folded == "n/a" || folded == "na" ||
            folded == "-")) {
        std::size_t pos = 0;
        while (pos <= folded.size()) {
          const auto sep = folded.find_first_of(",;", pos);
          const auto item = trim(std::string_view(folded).substr(
              pos, sep == std::string::npos ? sep : sep - pos));
          if (!item.empty()) {
            const auto r = normalizer_.classify(item);
            if (r.outcome != LabelNormalizer::Outcome::Match) {
              repaired = true;
            } else if (*r.id != *p.label && std::find(p.alternatives.begin(), p.alternatives.end(),
                                                      *r.id) == p.alternatives.end()) {
              p.alternatives.push_back(*r.id);
            }
          }
          if (sep == std::string::npos) break;
          pos = sep + 1;
        }
      }
    } else {
      repaired = true;
    }
    if (const auto reason = after(Field::Reasoning)) {
      std::string body(reason->value);
      for (std::size_t i = reason->line + 1; i < lines.size(); ++i) {
        body += "\n";
        body += lines[i];
      }
      p.reasoning = std::string(trim(body));
    }
    (void)from_line;
    p.status = repaired ? ParseStatus::Repaired : ParseStatus::Clean;
    return p;
  }

  // Prose fallback: last named category, then last dollar-range mention.
  const auto ms = normalizer_.mentions(text, true);
  const LabelNormalizer::Mention* pick = nullptr;
  for (const auto& m : ms) {
    if (!m.from_amount) pick = &m;
  }
  if (pick == nullptr) {
    for (const auto& m : ms) pick = &m;
  }
  if (pick == nullptr) return p;

  p.label = normalizer_.categories().at(pick->category).id;
  const auto scores = extract_scores(text, {p.attribute == Attribute::Income, kIncomeIndicatorCount});
  p.confidence = scores.confidence;
  if (scores.indicators) {
    std::array<int, kIncomeIndicatorCount> arr{};
    std::copy(scores.indicators->begin(), scores.indicators->end(), arr.begin());
    p.indicators = arr;
  }
  p.reasoning = std::string(trim(text));
  p.status = ParseStatus::Repaired;
  return p;
}

std::string ResponseParser::serialize(const DemographicPrediction& p) const {
  const auto& cats = normalizer_.categories();
  std::string out;
  out += "PREDICTION: " + (p.label ? cats.by_id(*p.label).display : std::string("Unparsed")) + "\n";
  if (p.confidence) out += "CONFIDENCE: " + std::to_string(*p.confidence) + "\n";
  if (p.indicators) {
    out += "INDICATORS: ";
    for (std::size_t i = 0; i < p.indicators->size(); ++i) {
      if (i) out += ",";
      out += std::to_string((*p.indicators)[i]);
    }
    out += "\n";
  }
  out += "ALTERNATIVES: ";
  if (p.alternatives.empty()) {
    out += "none";
  } else {
    for (std::size_t i = 0; i < p.alternatives.size(); ++i) {
      if (i) out += ", ";
      out += cats.by_id(p.alternatives[i]).display;
    }
  }
  out += "\n";
  out += "REASONING: " + p.reasoning + "\n";
  return out;
}

DemographicPrediction parse_stage3(std::string_view raw, const CategorySet& categories) {
  return ResponseParser(categories).parse(raw);
}

}  // namespace trajcot
