#include "trajcot/orchestrator.hpp"

#include <atomic>
#include <chrono>
#include <fstream>

#include <nlohmann/json.hpp>

#include "trajcot/error.hpp"

namespace trajcot {
namespace {

/// Nanosecond stamp that never repeats or goes backwards within the process.
std::int64_t next_timestamp_ns() {
  static std::atomic<std::int64_t> last{0};
  const std::int64_t now = std::chrono::duration_cast<std::chrono::nanoseconds>(
                               std::chrono::system_clock::now().time_since_epoch())
                               .count();
  std::int64_t prev = last.load();
  std::int64_t next = 0;
  do {
    next = std::max(now, prev + 1);
  } while (!last.compare_exchange_weak(prev, next));
  return next;
}

}  // namespace

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::Full: return "full";
    case Variant::NoS1: return "no_s1";
    case Variant::NoS2: return "no_s2";
  }
  return "?";
}

std::string_view display_name(Variant v) {
  switch (v) {
    case Variant::Full: return "Full-CoT";
    case Variant::NoS1: return "No-S1";
    case Variant::NoS2: return "No-S2";
  }
  return "?";
}

Variant parse_variant(std::string_view text) {
  if (text == "full" || text == "Full-CoT") return Variant::Full;
  if (text == "no_s1" || text == "No-S1") return Variant::NoS1;
  if (text == "no_s2" || text == "No-S2") return Variant::NoS2;
  throw ValidationError("unknown variant '" + std::string(text) + "' (expected full, no_s1, no_s2)");
}

std::string build_stage1_prompt(const PromptLibrary& library, Attribute attribute,
                                std::string_view narrative) {
  if (narrative.empty()) throw ValidationError("Stage 1 needs a non-empty narrative");
  return library.get(Stage::S1, attribute)
      .render({{std::string(kNarrativeSlot), std::string(narrative)}});
}

std::string build_stage2_prompt(const PromptLibrary& library, Attribute attribute,
                                std::string_view narrative,
                                std::optional<std::string_view> s1_response) {
  if (narrative.empty()) throw ValidationError("Stage 2 needs a non-empty narrative");
  if (s1_response && s1_response->empty()) {
    throw ValidationError("Stage 2 was given an empty Stage 1 response");
  }
  return library.get(Stage::S2, attribute)
      .render({{std::string(kNarrativeSlot), std::string(narrative)},
               {std::string(kStage1Slot), std::string(s1_response.value_or(kStage1Sentinel))}});
}

std::string build_stage3_prompt(const PromptLibrary& library, const CategorySet& categories,
                                std::optional<std::string_view> s1_response,
                                std::optional<std::string_view> s2_response,
                                std::optional<std::string_view> narrative) {
  std::string prompt =
      library.get(Stage::S3, categories.attribute())
          .render({{std::string(kStage1Slot), std::string(s1_response.value_or(kStage1Sentinel))},
                   {std::string(kStage2Slot), std::string(s2_response.value_or(kStage2Sentinel))},
                   {std::string(kCategoriesSlot), categories.prompt_list()}});
  if (narrative) {
    prompt += "\n\nOriginal mobility records:\n";
    prompt += *narrative;
  }
  return prompt;
}

const StageRecord* StageTranscript::find(Stage s) const {
  for (const auto& r : stages) {
    if (r.stage == s) return &r;
  }
  return nullptr;
}

std::optional<std::string_view> StageTranscript::final_response() const {
  if (failed) return std::nullopt;
  const auto* r = find(Stage::S3);
  if (r == nullptr) return std::nullopt;
  return r->response;
}

std::map<std::string, std::string> StageTranscript::template_ids() const {
  std::map<std::string, std::string> out;
  for (const auto& r : stages) out[std::string(to_string(r.stage))] = r.template_id;
  return out;
}

StageTranscript run_chain(std::string_view agent_id, std::string_view narrative,
                          const CategorySet& categories, Variant variant,
                          const PromptLibrary& library, CompletionBackend& backend,
                          const ChainOptions& options) {
  StageTranscript t;
  t.agent_id = std::string(agent_id);
  t.attribute = categories.attribute();
  t.variant = variant;

  std::optional<std::string> s1;
  std::optional<std::string> s2;

  auto call = [&](Stage stage, std::string prompt) -> std::optional<std::string> {
    StageRecord r;
    r.stage = stage;
    r.template_id = library.get(stage, categories.attribute()).template_id();
    r.model = options.model;
    r.temperature = options.temperature;
    r.max_tokens = options.max_tokens;
    CompletionRequest req{options.model, {{"user", prompt}}, options.temperature,
                          options.max_tokens};
    r.request_id = req.request_id();
    r.prompt = std::move(prompt);
    r.timestamp_ns = next_timestamp_ns();
    const auto started = std::chrono::steady_clock::now();
    try {
      Completion c = backend.complete(req);
      r.response = std::move(c.text);
      r.attempts = c.attempts;
      r.from_cache = c.from_cache;
    } catch (const BackendError& e) {
      r.latency_ms = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - started).count();
      t.stages.push_back(std::move(r));
      t.failed = true;
      t.failed_stage = stage;
      t.error = e.what();
      return std::nullopt;
    }
    r.latency_ms = std::chrono::duration<double, std::milli>(
                       std::chrono::steady_clock::now() - started).count();
    std::string response = r.response;
    t.stages.push_back(std::move(r));
    return response;
  };

  const Attribute attr = categories.attribute();
  if (variant != Variant::NoS1) {
    s1 = call(Stage::S1, build_stage1_prompt(library, attr, narrative));
    if (t.failed) return t;
  }
  if (variant != Variant::NoS2) {
    s2 = call(Stage::S2, build_stage2_prompt(library, attr, narrative,
                                             s1 ? std::optional<std::string_view>(*s1)
                                                : std::nullopt));
    if (t.failed) return t;
  }
  const auto as_view = [](const std::optional<std::string>& s) {
    return s ? std::optional<std::string_view>(*s) : std::nullopt;
  };
  call(Stage::S3,
       build_stage3_prompt(library, categories, as_view(s1), as_view(s2),
                           options.append_narrative_to_stage3
                               ? std::optional<std::string_view>(narrative)
                               : std::nullopt));
  return t;
}

// ---- serialization -------------------------------------------------------

void to_json(nlohmann::json& j, const StageRecord& r) {
  j = nlohmann::json{{"stage", to_string(r.stage)},
                     {"template_id", r.template_id},
                     {"prompt", r.prompt},
                     {"response", r.response},
                     {"request_id", r.request_id},
                     {"params", {{"model", r.model},
                                 {"temperature", r.temperature},
                                 {"max_tokens", r.max_tokens}}},
                     {"latency_ms", r.latency_ms},
                     {"timestamp_ns", r.timestamp_ns},
                     {"attempts", r.attempts},
                     {"from_cache", r.from_cache}};
}

void from_json(const nlohmann::json& j, StageRecord& r) {
  r.stage = parse_stage(j.at("stage").get<std::string>());
  r.template_id = j.at("template_id").get<std::string>();
  r.prompt = j.at("prompt").get<std::string>();
  r.response = j.value("response", std::string{});
  r.request_id = j.value("request_id", std::string{});
  const auto& p = j.at("params");
  r.model = p.value("model", std::string{});
  r.temperature = p.value("temperature", 0.0);
  r.max_tokens = p.value("max_tokens", 0);
  r.latency_ms = j.value("latency_ms", 0.0);
  r.timestamp_ns = j.value("timestamp_ns", std::int64_t{0});
  r.attempts = j.value("attempts", 0);
  r.from_cache = j.value("from_cache", false);
}

void to_json(nlohmann::json& j, const StageTranscript& t) {
  j = nlohmann::json{{"agent_id", t.agent_id},
                     {"attribute", to_string(t.attribute)},
                     {"variant", to_string(t.variant)},
                     {"template_ids", t.template_ids()},
                     {"stages", t.stages},
                     {"status", t.failed ? "failed" : "ok"}};
  if (t.failed) {
    j["failed_stage"] = t.failed_stage ? to_string(*t.failed_stage) : "";
    j["error"] = t.error;
  }
}

void from_json(const nlohmann::json& j, StageTranscript& t) {
  t.agent_id = j.at("agent_id").get<std::string>();
  t.attribute = parse_attribute(j.at("attribute").get<std::string>());
  t.variant = parse_variant(j.at("variant").get<std::string>());
  t.stages = j.at("stages").get<std::vector<StageRecord>>();
  t.failed = j.value("status", std::string("ok")) == "failed";
  if (t.failed) {
    const auto stage = j.value("failed_stage", std::string{});
    if (!stage.empty()) t.failed_stage = parse_stage(stage);
    t.error = j.value("error", std::string{});
  }
}

std::string transcript_file_name(const StageTranscript& t) {
  return t.agent_id + "." + std::string(to_string(t.attribute)) + "." +
         std::string(to_string(t.variant)) + ".json";
}

void save_transcript(const std::filesystem::path& path, const StageTranscript& t) {
  if (!path.parent_path().empty()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write transcript " + path.string());
  out << nlohmann::json(t).dump(2) << "\n";
}

StageTranscript load_transcript(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read transcript " + path.string());
  nlohmann::json j;
  in >> j;
  return j.get<StageTranscript>();
}

}  // namespace trajcot
