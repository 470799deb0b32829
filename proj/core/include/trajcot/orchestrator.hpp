#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "trajcot/backend.hpp"
#include "trajcot/categories.hpp"
#include "trajcot/prompt_template.hpp"

namespace trajcot {

/// Full three-stage chain, or one with Stage 1 / Stage 2 ablated.
enum class Variant { Full, NoS1, NoS2 };

inline constexpr Variant kAllVariants[] = {Variant::Full, Variant::NoS1, Variant::NoS2};

/// `full`, `no_s1`, `no_s2`.
std::string_view to_string(Variant v);
/// `Full-CoT`, `No-S1`, `No-S2`.
std::string_view display_name(Variant v);
Variant parse_variant(std::string_view text);

/// Text that fills an ablated stage's slot so later prompts keep their shape.
inline constexpr std::string_view kStage1Sentinel = "Stage 1 analysis unavailable.";
inline constexpr std::string_view kStage2Sentinel = "Stage 2 analysis unavailable.";

std::string build_stage1_prompt(const PromptLibrary& library, Attribute attribute,
                                std::string_view narrative);

/// `s1_response` empty means Stage 1 was ablated.
std::string build_stage2_prompt(const PromptLibrary& library, Attribute attribute,
                                std::string_view narrative,
                                std::optional<std::string_view> s1_response);

/// Missing responses are replaced by their sentinels. When `narrative` is
/// given it is appended after the rendered template.
std::string build_stage3_prompt(const PromptLibrary& library, const CategorySet& categories,
                                std::optional<std::string_view> s1_response,
                                std::optional<std::string_view> s2_response,
                                std::optional<std::string_view> narrative = std::nullopt);

struct StageRecord {
  Stage stage = Stage::S1;
  std::string template_id;
  std::string prompt;
  std::string response;
  std::string request_id;
  std::string model;
  double temperature = 0.0;
  int max_tokens = 0;
  double latency_ms = 0.0;
  std::int64_t timestamp_ns = 0;  // strictly increasing within a process
  int attempts = 0;
  bool from_cache = false;
};

/// Audit/replay record of one (agent, attribute, variant) chain.
struct StageTranscript {
  std::string agent_id;
  Attribute attribute = Attribute::Income;
  Variant variant = Variant::Full;
  std::vector<StageRecord> stages;
  bool failed = false;
  std::optional<Stage> failed_stage;
  std::string error;

  const StageRecord* find(Stage s) const;
  /// Stage-3 raw response, when the chain completed.
  std::optional<std::string_view> final_response() const;
  std::map<std::string, std::string> template_ids() const;
};

void to_json(nlohmann::json& j, const StageRecord& r);
void from_json(const nlohmann::json& j, StageRecord& r);
void to_json(nlohmann::json& j, const StageTranscript& t);
void from_json(const nlohmann::json& j, StageTranscript& t);

void save_transcript(const std::filesystem::path& path, const StageTranscript& t);
StageTranscript load_transcript(const std::filesystem::path& path);
/// `{agent}.{attribute}.{variant}.json`
std::string transcript_file_name(const StageTranscript& t);

struct ChainOptions {
  std::string model;
  double temperature = 0.0;
  int max_tokens = 1024;
  bool append_narrative_to_stage3 = false;
};

/// Runs S1 -> S2 -> S3 (skipping the ablated stage) strictly in order. A
/// backend failure marks the transcript failed at that stage and stops the
/// chain; it does not throw. Template errors do throw.
StageTranscript run_chain(std::string_view agent_id, std::string_view narrative,
                          const CategorySet& categories, Variant variant,
                          const PromptLibrary& library, CompletionBackend& backend,
                          const ChainOptions& options);

}  // namespace trajcot
