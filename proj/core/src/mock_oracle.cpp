#include "trajcot/mock_oracle.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>

#include "trajcot/error.hpp"
#include "trajcot/response_parser.hpp"

namespace trajcot {
namespace {

std::vector<std::string_view> lines_of(std::string_view text) {
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

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool contains_word(std::string_view haystack, std::string_view word) {
  const std::string h = lower(haystack);
  const std::string w = lower(word);
  if (w.empty()) return false;
  std::size_t pos = 0;
  while ((pos = h.find(w, pos)) != std::string::npos) {
    const bool left = pos == 0 || !std::isalnum(static_cast<unsigned char>(h[pos - 1]));
    const std::size_t end = pos + w.size();
    const bool right = end == h.size() || !std::isalnum(static_cast<unsigned char>(h[end]));
    if (left && right) return true;
    ++pos;
  }
  return false;
}

std::string join(const std::vector<std::string>& items, std::string_view sep) {
  std::string out;
  for (const auto& s : items) {
    if (!out.empty()) out += sep;
    out += s;
  }
  return out;
}

void add_unique(std::vector<std::string>& out, std::string value) {
  if (std::find(out.begin(), out.end(), value) == out.end()) out.push_back(std::move(value));
}

}  // namespace

std::vector<std::string> extract_chronicle_venues(std::string_view text) {
  static constexpr std::string_view kMarker = " mins): ";
  std::vector<std::string> out;
  for (const auto line : lines_of(text)) {
    const auto m = line.find(kMarker);
    if (m == std::string_view::npos) continue;
    const auto rest = line.substr(m + kMarker.size());
    const auto dash = rest.rfind(" - ");
    const auto name = trim(dash == std::string_view::npos ? rest : rest.substr(0, dash));
    if (!name.empty()) add_unique(out, std::string(name));
  }
  return out;
}

std::vector<std::string> extract_evidence(std::string_view text, std::string_view tag) {
  std::vector<std::string> out;
  for (const auto raw : lines_of(text)) {
    const auto line = trim(raw);
    if (line.size() <= tag.size() || line.substr(0, tag.size()) != tag ||
        line[tag.size()] != ':') {
      continue;
    }
    auto rest = line.substr(tag.size() + 1);
    std::size_t pos = 0;
    while (pos <= rest.size()) {
      const auto semi = rest.find(';', pos);
      const auto item = trim(rest.substr(pos, semi == std::string_view::npos ? semi : semi - pos));
      if (!item.empty()) add_unique(out, std::string(item));
      if (semi == std::string_view::npos) break;
      pos = semi + 1;
    }
  }
  return out;
}

MockOracle::MockOracle(std::vector<KeywordRule> rules, DatasetManifest manifest,
                       MockOptions options)
    : rules_(std::move(rules)), manifest_(std::move(manifest)), options_(options) {
  for (const auto& r : rules_) {
    if (!manifest_.categories(r.attribute).contains(r.category_id)) {
      throw ValidationError("mock rule '" + r.keyword + "' targets unknown category '" +
                            r.category_id + "'");
    }
  }
}

std::string MockOracle::describe() const {
  return std::string(kId) +
         (options_.evidence == EvidenceSource::Stage1Only ? "+s1-evidence" : "");
}

Completion MockOracle::complete(const CompletionRequest& request) {
  return Completion{respond(request.prompt()), 1, false};
}

std::string MockOracle::respond(std::string_view prompt) const {
  const auto nl = prompt.find('\n');
  const auto first = trim(prompt.substr(0, nl));
  static constexpr std::string_view kOpen = "[[STAGE ";
  if (first.substr(0, kOpen.size()) != kOpen || first.size() < kOpen.size() + 4 ||
      first.substr(first.size() - 2) != "]]") {
    throw MockError("mock oracle: prompt does not start with a stage marker");
  }
  const char stage = first[kOpen.size()];
  switch (stage) {
    case '1': return stage1(prompt);
    case '2': return stage2(prompt);
    case '3': {
      const auto dash = first.rfind(" - ");
      if (dash == std::string_view::npos) {
        throw MockError("mock oracle: Stage 3 marker does not name an attribute");
      }
      const auto name = first.substr(dash + 3, first.size() - 2 - (dash + 3));
      try {
        return stage3(prompt, parse_attribute(name));
      } catch (const ValidationError& e) {
        throw MockError(std::string("mock oracle: ") + e.what());
      }
    }
    default:
      throw MockError("mock oracle: unknown stage '" + std::string(1, stage) + "'");
  }
}

std::string MockOracle::stage1(std::string_view prompt) const {
  const auto venues = extract_chronicle_venues(prompt);
  std::string out;
  out += "Location inventory:\n";
  out += "- Distinct venues in the records: " + std::to_string(venues.size()) + "\n";
  out += "EVIDENCE-S1: " + join(venues, "; ") + "\n";
  out += "Temporal patterns:\n- Visits follow the dated entries listed in the records.\n";
  out += "Spatial characteristics:\n- Only venue names and types are available.\n";
  out += "Sequence observations:\n";
  if (!venues.empty()) {
    out += "- First venue listed: " + venues.front() + "; last venue listed: " + venues.back() +
           ".\n";
  } else {
    out += "- No visits could be identified.\n";
  }
  return out;
}

std::string MockOracle::stage2(std::string_view prompt) const {
  std::string out;
  out += "Temporal patterns (work-life structure): visits are spread across the week.\n";
  if (options_.evidence == EvidenceSource::Stage1Only) {
    out += "Economic patterns (spending preferences): see the venue inventory.\n";
  } else {
    const auto venues = extract_chronicle_venues(prompt);
    out += "Economic patterns (spending preferences): spending observed at the listed venues.\n";
    out += "EVIDENCE-S2: " + join(venues, "; ") + "\n";
  }
  out += "Social patterns (lifestyle choices): a mix of errands and leisure.\n";
  out += "Spatial patterns (living environment): a stable set of places.\n";
  out += "Stability patterns (routine consistency): the routine repeats from week to week.\n";
  return out;
}

std::string MockOracle::stage3(std::string_view prompt, Attribute attribute) const {
  const CategorySet& cats = manifest_.categories(attribute);
  std::vector<std::string> evidence = extract_evidence(prompt, "EVIDENCE-S1");
  if (options_.evidence == EvidenceSource::AllStages) {
    for (auto& v : extract_evidence(prompt, "EVIDENCE-S2")) add_unique(evidence, std::move(v));
  }

  std::vector<std::int64_t> votes(cats.size(), 0);
  std::vector<std::string> examples(cats.size());
  std::int64_t total = 0;
  for (const auto& venue : evidence) {
    for (const auto& rule : rules_) {
      if (rule.attribute != attribute || !contains_word(venue, rule.keyword)) continue;
      const auto idx = *cats.index_of(rule.category_id);
      ++votes[idx];
      ++total;
      if (examples[idx].empty()) examples[idx] = venue;
    }
  }

  std::size_t best = (cats.size() - 1) / 2;
  if (total > 0) {
    best = 0;
    for (std::size_t i = 1; i < votes.size(); ++i) {
      if (votes[i] > votes[best]) best = i;
    }
  }
  const int confidence = total == 0 ? 1 : static_cast<int>(1 + (4 * votes[best]) / total);

  std::vector<std::size_t> alternatives;
  for (std::size_t i = 0; i < votes.size(); ++i) {
    if (i != best && votes[i] > 0) alternatives.push_back(i);
  }
  std::stable_sort(alternatives.begin(), alternatives.end(),
                   [&](std::size_t a, std::size_t b) { return votes[a] > votes[b]; });
  if (alternatives.size() > 2) alternatives.resize(2);

  const std::string& label = cats.at(best).display;
  std::string out = "Assessment based on the venues identified in the earlier analysis.\n";
  out += "PREDICTION: " + label + "\n";
  out += "CONFIDENCE: " + std::to_string(confidence) + "\n";
  if (attribute == Attribute::Income) {
    const std::size_t score = 1 + (best * 9 + 2) / 5;
    std::string s = std::to_string(score);
    out += "INDICATORS: " + s + "," + s + "," + s + "," + s + "," + s + "\n";
  }
  std::vector<std::string> alt_names;
  for (auto i : alternatives) alt_names.push_back(cats.at(i).display);
  out += "ALTERNATIVES: " + (alt_names.empty() ? std::string("none") : join(alt_names, ", ")) +
         "\n";
  if (total == 0) {
    out += "REASONING: No venue evidence was available, so the central category is the default.\n";
  } else {
    out += "REASONING: " + std::to_string(votes[best]) + " of " + std::to_string(total) +
           " keyword-matched venues (e.g. " + examples[best] + ") point to " + label + ".\n";
  }
  return out;
}

}  // namespace trajcot
