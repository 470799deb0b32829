#include "trajcot/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>

#include "trajcot/error.hpp"
#include "trajcot/narrative.hpp"
#include "trajcot/rng.hpp"

namespace trajcot {
namespace {

std::string_view to_string(UnresolvedPoiPolicy p) {
  return p == UnresolvedPoiPolicy::Error ? "error" : "skip";
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

struct Job {
  Attribute attribute;
  std::string agent_id;
  const std::string* narrative;  // null when the narrative could not be built
  std::string narrative_error;
};

}  // namespace

void to_json(nlohmann::json& j, const RunConfig& c) {
  std::vector<std::string> attrs;
  for (const auto a : c.attributes) attrs.emplace_back(to_string(a));
  j = nlohmann::json{{"stay_points", c.dataset.stay_points.string()},
                     {"pois", c.dataset.pois.string()},
                     {"labels", c.dataset.labels.string()},
                     {"manifest", c.dataset.manifest.string()},
                     {"backend_config", c.backend_config.string()},
                     {"attributes", attrs},
                     {"variant", to_string(c.variant)},
                     {"sample_size", c.sample_size},
                     {"seed", c.seed},
                     {"narrative_budget", c.narrative_budget},
                     {"output_dir", c.output_dir.string()},
                     {"parallelism", c.parallelism},
                     {"f1_universe", to_string(c.f1_universe)},
                     {"unresolved_poi", to_string(c.unresolved_poi)},
                     {"append_narrative_to_stage3", c.append_narrative_to_stage3},
                     {"templates_dir", c.templates_dir.string()},
                     {"synonyms_dir", c.synonyms_dir.string()},
                     {"dead_backend_threshold", c.dead_backend_threshold}};
}

void to_json(nlohmann::json& j, const ModelSettings& m) {
  j = nlohmann::json{{"model", m.model}, {"temperature", m.temperature}, {"max_tokens", m.max_tokens}};
}

ExperimentInputs ExperimentInputs::load(const RunConfig& config) {
  ExperimentInputs in;
  in.dataset = Dataset::load(config.dataset);
  in.library = config.templates_dir.empty() ? PromptLibrary::defaults()
                                            : PromptLibrary::load_directory(config.templates_dir);
  for (const auto a : kAllAttributes) {
    const auto file = config.synonyms_dir / (std::string(to_string(a)) + ".json");
    if (!config.synonyms_dir.empty() && std::filesystem::exists(file)) {
      auto table = SynonymTable::load(file);
      if (table.attribute != a) {
        throw ValidationError(file.string() + " declares attribute " +
                              std::string(to_string(table.attribute)));
      }
      in.synonyms.emplace(a, std::move(table));
    } else {
      in.synonyms.emplace(a, SynonymTable::defaults(a));
    }
  }
  return in;
}

ExperimentResult run_experiment(const RunConfig& config, CompletionBackend& backend,
                                const ModelSettings& model) {
  return run_experiment(config, ExperimentInputs::load(config), backend, model);
}

ExperimentResult run_experiment(const RunConfig& config, const ExperimentInputs& inputs,
                                CompletionBackend& backend, const ModelSettings& model) {
  using clock = std::chrono::steady_clock;
  const auto started = clock::now();
  if (config.attributes.empty()) throw ValidationError("at least one attribute is required");
  if (config.parallelism == 0) throw ValidationError("parallelism must be at least 1");
  if (config.dead_backend_threshold == 0) throw ValidationError("dead-backend threshold must be positive");

  const auto& data = inputs.dataset;
  const auto& tz = data.manifest.timezone;
  const auto joined = join_visits(data.stay_points, data.catalog, config.unresolved_poi);

  std::map<std::string, const DemographicLabel*> labels;
  for (const auto& l : data.labels) labels.emplace(l.agent_id, &l);

  std::vector<std::string> eligible;
  for (const auto& [agent, visits] : joined.visits_by_agent) {
    if (!visits.empty() && labels.contains(agent)) eligible.push_back(agent);
  }
  if (eligible.empty()) throw ValidationError("no labeled agent has any stay point");
  const std::size_t n = config.sample_size == 0 ? eligible.size() : config.sample_size;
  if (n > eligible.size()) {
    throw ValidationError("sample size " + std::to_string(n) + " exceeds the " +
                          std::to_string(eligible.size()) + " labeled agents with stay points");
  }

  ExperimentResult result;
  result.sampled_agents = sample_agents(eligible, n, config.seed);
  std::sort(result.sampled_agents.begin(), result.sampled_agents.end());

  // Narratives are shared by every attribute of an agent.
  std::map<std::string, std::string> narratives;
  std::map<std::string, std::string> narrative_errors;
  for (const auto& agent : result.sampled_agents) {
    const auto& visits = joined.visits_by_agent.at(agent);
    const auto weeks = partition_weeks(visits, tz);
    try {
      narratives[agent] = join_narratives(build_narrative(weeks, config.narrative_budget, tz));
    } catch (const BudgetError& e) {
      narrative_errors[agent] = e.what();
      ++result.narrative_failures;
    }
  }

  std::vector<Job> jobs;
  for (const auto a : config.attributes) {
    for (const auto& agent : result.sampled_agents) {
      const auto it = narratives.find(agent);
      jobs.push_back({a, agent, it == narratives.end() ? nullptr : &it->second,
                      it == narratives.end() ? narrative_errors.at(agent) : std::string{}});
    }
  }

  std::map<Attribute, ResponseParser> parsers;
  for (const auto a : config.attributes) {
    parsers.emplace(a, ResponseParser(data.manifest.categories(a), inputs.synonyms.at(a)));
  }

  const auto transcripts_dir = config.output_dir / "transcripts";
  if (!config.output_dir.empty()) std::filesystem::create_directories(transcripts_dir);

  nlohmann::json config_json = config;
  config_json.erase("parallelism");

  ChainOptions chain{model.model, model.temperature, model.max_tokens,
                     config.append_narrative_to_stage3};
  std::vector<StageTranscript> transcripts(jobs.size());
  std::vector<DemographicPrediction> predictions(jobs.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> dead{false};
  std::mutex failure_mutex;
  std::size_t consecutive_failures = 0;
  std::string last_error;
  std::exception_ptr fatal;

  auto worker = [&] {
    while (!dead.load()) {
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      const Job& job = jobs[i];
      const auto& cats = data.manifest.categories(job.attribute);
      StageTranscript t;
      DemographicPrediction p;
      p.agent_id = job.agent_id;
      p.attribute = job.attribute;
      if (job.narrative == nullptr) {
        t.agent_id = job.agent_id;
        t.attribute = job.attribute;
        t.variant = config.variant;
        t.failed = true;
        t.error = job.narrative_error;
        p.reasoning = job.narrative_error;
      } else {
        try {
          t = run_chain(job.agent_id, *job.narrative, cats, config.variant, inputs.library,
                        backend, chain);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!fatal) fatal = std::current_exception();
          dead = true;
          return;
        }
        if (const auto response = t.final_response(); response && !t.failed) {
          p = parsers.at(job.attribute).parse(*response, job.agent_id);
        } else {
          p.reasoning = t.error;
        }
        std::lock_guard lock(failure_mutex);
        if (t.failed) {
          last_error = t.error;
          if (++consecutive_failures >= config.dead_backend_threshold) dead = true;
        } else {
          consecutive_failures = 0;
        }
      }
      if (!config.output_dir.empty()) {
        nlohmann::json doc = t;
        doc["run_config"] = config_json;
        write_text(transcripts_dir / transcript_file_name(t), doc.dump(2) + "\n");
      }
      transcripts[i] = std::move(t);
      predictions[i] = std::move(p);
    }
  };

  const std::size_t threads = std::min(config.parallelism, jobs.size());
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t k = 0; k < threads; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (fatal) std::rethrow_exception(fatal);
  if (dead) {
    throw BackendDeadError("backend failed " + std::to_string(config.dead_backend_threshold) +
                           " chains in a row; last error: " + last_error);
  }

  if (result.narrative_failures == result.sampled_agents.size()) {
    throw BudgetError("no sampled agent has a narrative within the " +
                      std::to_string(config.narrative_budget) + "-character budget");
  }

  // Metrics per attribute, agents in sorted order.
  EvalReport& report = result.report;
  report.variant = config.variant;
  std::vector<std::string> attrs;
  for (const auto a : config.attributes) attrs.emplace_back(to_string(a));
  nlohmann::json templates = nlohmann::json::object();
  nlohmann::json synonyms = nlohmann::json::object();
  for (const auto a : config.attributes) {
    for (const auto s : {Stage::S1, Stage::S2, Stage::S3}) {
      const auto& tmpl = inputs.library.get(s, a);
      templates[std::string(to_string(a))][std::string(to_string(s))] = tmpl.template_id();
    }
    synonyms[std::string(to_string(a))] = inputs.synonyms.at(a).version;
  }
  report.run = {{"config", config_json},
                {"dataset_hash", data.hash},
                {"attributes", attrs},
                {"variant", to_string(config.variant)},
                {"sample_size", n},
                {"seed", config.seed},
                {"rng", PinnedRng::kAlgorithm},
                {"sampled_agents", result.sampled_agents},
                {"narrative_budget", config.narrative_budget},
                {"narrative_failures", result.narrative_failures},
                {"skipped_stay_points", joined.skipped},
                {"unresolved_poi", to_string(config.unresolved_poi)},
                {"append_narrative_to_stage3", config.append_narrative_to_stage3},
                {"f1_universe", to_string(config.f1_universe)},
                {"model", model},
                {"templates", templates},
                {"synonyms", synonyms}};

  for (const auto a : config.attributes) {
    std::vector<PredictedLabel> preds;
    std::vector<TrueLabel> truths;
    std::int64_t repaired = 0;
    std::int64_t failures = 0;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      // Agents without a narrative never reached the model and are not scored.
      if (jobs[i].attribute != a || jobs[i].narrative == nullptr) continue;
      preds.push_back({predictions[i].agent_id, predictions[i].label});
      truths.push_back({jobs[i].agent_id, labels.at(jobs[i].agent_id)->bracket(a)});
      if (predictions[i].status == ParseStatus::Repaired) ++repaired;
      if (transcripts[i].failed) ++failures;
    }
    auto m = evaluate_attribute(preds, truths, data.manifest.categories(a), config.f1_universe);
    m.repaired = repaired;
    m.chain_failures = failures;
    report.attributes.push_back(std::move(m));
  }
  report.generated_at = utc_now_rfc3339();
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    if (jobs[i].narrative != nullptr) result.predictions.push_back(std::move(predictions[i]));
  }
  result.transcripts = std::move(transcripts);

  if (!config.output_dir.empty()) {
    write_predictions(config.output_dir / "predictions.jsonl", result.predictions);
    write_text(config.output_dir / "report.json", nlohmann::json(report).dump(2) + "\n");
    write_text(config.output_dir / "report.md", render_markdown(report));
    std::size_t cached = 0;
    for (const auto& t : result.transcripts) {
      for (const auto& s : t.stages) cached += s.from_cache ? 1 : 0;
    }
    const nlohmann::json execution = {
        {"config", config},
        {"backend", backend.describe()},
        {"cached_stage_calls", cached},
        {"wall_seconds",
         std::chrono::duration<double>(clock::now() - started).count()},
        {"warnings", joined.warnings},
        {"generated_at", report.generated_at}};
    write_text(config.output_dir / "execution.json", execution.dump(2) + "\n");
  }
  return result;
}

EvalReport evaluate_predictions(std::span<const DemographicPrediction> predictions,
                                std::span<const DemographicLabel> labels,
                                const DatasetManifest& manifest, F1Universe universe,
                                nlohmann::json run) {
  if (predictions.empty()) throw ValidationError("no predictions to evaluate");
  std::map<std::string, const DemographicLabel*> by_agent;
  for (const auto& l : labels) by_agent.emplace(l.agent_id, &l);

  std::map<Attribute, std::vector<const DemographicPrediction*>> grouped;
  std::set<std::pair<Attribute, std::string>> seen;
  for (const auto& p : predictions) {
    if (!seen.emplace(p.attribute, p.agent_id).second) {
      throw ValidationError("duplicate " + std::string(to_string(p.attribute)) +
                            " prediction for agent " + p.agent_id);
    }
    if (!by_agent.contains(p.agent_id)) {
      throw ValidationError("prediction for unlabeled agent " + p.agent_id);
    }
    grouped[p.attribute].push_back(&p);
  }

  EvalReport report;
  report.run = std::move(run);
  for (const auto a : kAllAttributes) {
    auto it = grouped.find(a);
    if (it == grouped.end()) continue;
    auto& list = it->second;
    std::sort(list.begin(), list.end(),
              [](const auto* x, const auto* y) { return x->agent_id < y->agent_id; });
    std::vector<PredictedLabel> preds;
    std::vector<TrueLabel> truths;
    std::int64_t repaired = 0;
    for (const auto* p : list) {
      preds.push_back({p->agent_id, p->label});
      truths.push_back({p->agent_id, by_agent.at(p->agent_id)->bracket(a)});
      if (p->status == ParseStatus::Repaired) ++repaired;
    }
    auto m = evaluate_attribute(preds, truths, manifest.categories(a), universe);
    m.repaired = repaired;
    report.attributes.push_back(std::move(m));
  }
  report.generated_at = utc_now_rfc3339();
  return report;
}

AblationReport run_ablation(const RunConfig& config, CompletionBackend& backend,
                            const ModelSettings& model) {
  const auto inputs = ExperimentInputs::load(config);
  AblationReport ablation;
  ablation.attributes = config.attributes;
  for (const auto v : kAllVariants) {
    RunConfig rc = config;
    rc.variant = v;
    if (!config.output_dir.empty()) rc.output_dir = config.output_dir / std::string(to_string(v));
    ablation.variants.push_back(run_experiment(rc, inputs, backend, model).report);
  }
  ablation.run = ablation.variants.front().run;
  ablation.run.erase("variant");
  ablation.generated_at = utc_now_rfc3339();
  if (!config.output_dir.empty()) {
    std::filesystem::create_directories(config.output_dir);
    write_text(config.output_dir / "ablation.json", nlohmann::json(ablation).dump(2) + "\n");
    write_text(config.output_dir / "ablation.md", render_markdown(ablation));
  }
  return ablation;
}

}  // namespace trajcot
