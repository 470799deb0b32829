#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "trajcot/backend.hpp"
#include "trajcot/metrics.hpp"
#include "trajcot/orchestrator.hpp"
#include "trajcot/response_parser.hpp"
#include "trajcot/trajectory.hpp"

namespace trajcot {

struct RunConfig {
  DatasetPaths dataset;
  std::filesystem::path backend_config;  // empty for the mock or pure replay
  std::vector<Attribute> attributes{Attribute::Income};
  Variant variant = Variant::Full;
  std::size_t sample_size = 0;  // 0 = every labeled agent
  std::uint64_t seed = 0;
  std::size_t narrative_budget = 24000;
  std::filesystem::path output_dir;  // empty = nothing written
  std::size_t parallelism = 4;
  F1Universe f1_universe = F1Universe::Observed;
  UnresolvedPoiPolicy unresolved_poi = UnresolvedPoiPolicy::Error;
  bool append_narrative_to_stage3 = false;
  std::filesystem::path templates_dir;  // empty = shipped templates
  std::filesystem::path synonyms_dir;   // empty = shipped synonym tables
  std::size_t dead_backend_threshold = 8;  // consecutive chain failures that abort
};

void to_json(nlohmann::json& j, const RunConfig& c);

/// Decoding parameters and model id sent with every request.
struct ModelSettings {
  std::string model = "mock-oracle";
  double temperature = 0.0;
  int max_tokens = 1024;
};

void to_json(nlohmann::json& j, const ModelSettings& m);

struct EvalReport {
  nlohmann::json run;  // provenance: config, dataset hash, seed, model, templates
  std::string generated_at;
  Variant variant = Variant::Full;
  std::vector<AttributeMetrics> attributes;

  const AttributeMetrics& metrics(Attribute a) const;
};

void to_json(nlohmann::json& j, const EvalReport& r);

/// Markdown table with one row and accuracy/F1 columns per attribute.
std::string render_markdown(const EvalReport& r);

struct ExperimentResult {
  EvalReport report;
  std::vector<DemographicPrediction> predictions;  // sorted by attribute, then agent
  std::vector<StageTranscript> transcripts;
  std::vector<std::string> sampled_agents;
  std::size_t narrative_failures = 0;
};

/// Thrown when the backend keeps failing; partial transcripts are on disk.
class BackendDeadError : public BackendError {
 public:
  using BackendError::BackendError;
  const char* kind() const noexcept override { return "backend_dead"; }
};

/// Shared, loaded state for one or more runs over the same dataset.
struct ExperimentInputs {
  Dataset dataset;
  PromptLibrary library;
  std::map<Attribute, SynonymTable> synonyms;

  static ExperimentInputs load(const RunConfig& config);
};

ExperimentResult run_experiment(const RunConfig& config, CompletionBackend& backend,
                                const ModelSettings& model);
ExperimentResult run_experiment(const RunConfig& config, const ExperimentInputs& inputs,
                                CompletionBackend& backend, const ModelSettings& model);

/// Scores stored predictions against labels (the `eval` subcommand).
EvalReport evaluate_predictions(std::span<const DemographicPrediction> predictions,
                                std::span<const DemographicLabel> labels,
                                const DatasetManifest& manifest, F1Universe universe,
                                nlohmann::json run);

struct AblationReport {
  nlohmann::json run;
  std::string generated_at;
  std::vector<Attribute> attributes;
  std::vector<EvalReport> variants;  // Full, NoS1, NoS2 order

  const EvalReport& variant(Variant v) const;
};

void to_json(nlohmann::json& j, const AblationReport& r);
/// Markdown table, one row per variant, with deltas against Full-CoT.
std::string render_markdown(const AblationReport& r);

/// Three runs over one shared agent sample; outputs go to `{out}/{variant}/`.
AblationReport run_ablation(const RunConfig& config, CompletionBackend& backend,
                            const ModelSettings& model);

/// Writes predictions as JSON lines / reads them back.
void write_predictions(const std::filesystem::path& path,
                       std::span<const DemographicPrediction> predictions);
std::vector<DemographicPrediction> read_predictions(const std::filesystem::path& path);

std::string utc_now_rfc3339();

}  // namespace trajcot
