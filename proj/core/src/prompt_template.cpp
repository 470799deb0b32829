#include "trajcot/prompt_template.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>

#include "trajcot/error.hpp"
#include "trajcot/hash.hpp"
#include "trajcot/resources.hpp"

namespace trajcot {
namespace {

bool is_slot_char(char c) { return (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_'; }

const std::vector<std::string_view>& slots_for(Stage stage) {
  static const std::vector<std::string_view> kS1 = {kNarrativeSlot};
  static const std::vector<std::string_view> kS2 = {kNarrativeSlot, kStage1Slot};
  static const std::vector<std::string_view> kS3 = {kStage1Slot, kStage2Slot, kCategoriesSlot};
  switch (stage) {
    case Stage::S1: return kS1;
    case Stage::S2: return kS2;
    case Stage::S3: break;
  }
  return kS3;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

int attribute_key(const std::optional<Attribute>& a) { return a ? static_cast<int>(*a) : -1; }

}  // namespace

std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::S1: return "S1";
    case Stage::S2: return "S2";
    case Stage::S3: return "S3";
  }
  return "?";
}

Stage parse_stage(std::string_view text) {
  if (text == "S1" || text == "s1") return Stage::S1;
  if (text == "S2" || text == "s2") return Stage::S2;
  if (text == "S3" || text == "s3") return Stage::S3;
  throw TemplateError("unknown stage '" + std::string(text) + "'");
}

std::vector<std::string> scan_placeholders(std::string_view body) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < body.size(); ++i) {
    if (body[i] != '{') continue;
    std::size_t j = i + 1;
    while (j < body.size() && is_slot_char(body[j])) ++j;
    if (j > i + 1 && j < body.size() && body[j] == '}') {
      std::string name(body.substr(i + 1, j - i - 1));
      if (std::find(out.begin(), out.end(), name) == out.end()) out.push_back(std::move(name));
      i = j;
    }
  }
  return out;
}

PromptTemplate::PromptTemplate(Stage stage, std::optional<Attribute> attribute,
                               std::string version, std::string body)
    : stage_(stage),
      attribute_(attribute),
      version_(std::move(version)),
      body_(std::move(body)) {
  if (version_.empty()) throw TemplateError("template version must not be empty");
  const auto& allowed = slots_for(stage_);
  for (const auto& name : scan_placeholders(body_)) {
    if (std::find(allowed.begin(), allowed.end(), name) == allowed.end()) {
      throw TemplateError("template " + version_ + ": stage " + std::string(to_string(stage_)) +
                          " may not use placeholder {" + name + "}");
    }
    placeholders_.insert(name);
  }
  for (const auto slot : allowed) {
    if (!placeholders_.contains(std::string(slot))) {
      throw TemplateError("template " + version_ + ": stage " + std::string(to_string(stage_)) +
                          " must use placeholder {" + std::string(slot) + "}");
    }
  }
  id_ = version_ + "#" + sha256_hex(body_).substr(0, 16);
}

PromptTemplate PromptTemplate::parse(std::string_view text, std::string_view source_name) {
  auto fail = [&](const std::string& why) -> TemplateError {
    return TemplateError(std::string(source_name) + ": " + why);
  };
  auto next_line = [&](std::size_t& pos) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? nl : nl - pos);
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    return trim(line);
  };

  std::size_t pos = 0;
  if (next_line(pos) != "---") throw fail("missing front-matter opening '---'");
  std::optional<Stage> stage;
  std::optional<Attribute> attribute;
  std::string version;
  bool closed = false;
  while (pos < text.size()) {
    const auto line = next_line(pos);
    if (line == "---") {
      closed = true;
      break;
    }
    if (line.empty()) continue;
    const auto colon = line.find(':');
    if (colon == std::string_view::npos) throw fail("bad front-matter line '" + std::string(line) + "'");
    const auto key = trim(line.substr(0, colon));
    const auto value = trim(line.substr(colon + 1));
    if (key == "stage") {
      stage = parse_stage(value);
    } else if (key == "attribute") {
      if (value != "any") attribute = parse_attribute(value);
    } else if (key == "version") {
      version = std::string(value);
    } else {
      throw fail("unknown front-matter key '" + std::string(key) + "'");
    }
  }
  if (!closed) throw fail("front matter is not closed with '---'");
  if (!stage) throw fail("front matter lacks 'stage'");
  if (version.empty()) throw fail("front matter lacks 'version'");
  std::string body(text.substr(pos));
  while (!body.empty() && (body.back() == '\n' || body.back() == '\r')) body.pop_back();
  return PromptTemplate(*stage, attribute, std::move(version), std::move(body));
}

PromptTemplate PromptTemplate::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw TemplateError("cannot open template " + path.string());
  const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return parse(text, path.string());
}

std::string PromptTemplate::render(
    const std::map<std::string, std::string, std::less<>>& values) const {
  std::string out;
  out.reserve(body_.size());
  for (std::size_t i = 0; i < body_.size(); ++i) {
    if (body_[i] == '{') {
      std::size_t j = i + 1;
      while (j < body_.size() && is_slot_char(body_[j])) ++j;
      if (j > i + 1 && j < body_.size() && body_[j] == '}') {
        const auto name = std::string_view(body_).substr(i + 1, j - i - 1);
        const auto it = values.find(name);
        if (it == values.end()) {
          throw TemplateError("template " + id_ + ": unresolved placeholder {" +
                              std::string(name) + "}");
        }
        out += it->second;
        i = j;
        continue;
      }
    }
    out.push_back(body_[i]);
  }
  return out;
}

void PromptLibrary::add(PromptTemplate tmpl) {
  const auto key = std::make_pair(tmpl.stage(), attribute_key(tmpl.attribute()));
  templates_.insert_or_assign(key, std::move(tmpl));
}

const PromptTemplate& PromptLibrary::get(Stage stage, Attribute attribute) const {
  auto it = templates_.find({stage, static_cast<int>(attribute)});
  if (it == templates_.end()) it = templates_.find({stage, -1});
  if (it == templates_.end()) {
    throw TemplateError("no " + std::string(to_string(stage)) + " template for attribute " +
                        std::string(to_string(attribute)));
  }
  return it->second;
}

std::vector<const PromptTemplate*> PromptLibrary::all() const {
  std::vector<const PromptTemplate*> out;
  for (const auto& [key, tmpl] : templates_) out.push_back(&tmpl);
  return out;
}

PromptLibrary PromptLibrary::defaults() {
  PromptLibrary lib;
  for (const auto name : resources::names()) {
    if (name.rfind("templates/", 0) != 0) continue;
    lib.add(PromptTemplate::parse(*resources::find(name), name));
  }
  return lib;
}

PromptLibrary PromptLibrary::load_directory(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw TemplateError("template directory " + dir.string() + " does not exist");
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() == ".tmpl") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  PromptLibrary lib;
  for (const auto& f : files) lib.add(PromptTemplate::load(f));
  return lib;
}

}  // namespace trajcot
