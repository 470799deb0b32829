#include "cli.hpp"

#include <fstream>
#include <iostream>
#include <memory>
#include <mutex>
#include <optional>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "trajcot/backend.hpp"
#include "trajcot/error.hpp"
#include "trajcot/experiment.hpp"
#include "trajcot/http_transport.hpp"
#include "trajcot/mock_oracle.hpp"
#include "trajcot/narrative.hpp"
#include "trajcot/synth.hpp"
#include "trajcot/trajectory.hpp"

namespace trajcot::cli {
namespace {

/// Bad or missing arguments detected after CLI11 parsing.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DatasetArgs {
  std::string data;
  std::string stay;
  std::string poi;
  std::string labels;
  std::string manifest;
  std::string unresolved = "error";

  void add_to(CLI::App* app) {
    app->add_option("--data", data, "Directory with stay_points.csv, pois.csv, labels.csv, manifest.json");
    app->add_option("--stay", stay, "Stay-point CSV (overrides --data)");
    app->add_option("--poi", poi, "POI CSV (overrides --data)");
    app->add_option("--labels", labels, "Label CSV (overrides --data)");
    app->add_option("--manifest", manifest, "Dataset manifest JSON (overrides --data)");
    app->add_option("--unresolved", unresolved, "Stay points with unknown POI: error or skip")
        ->check(CLI::IsMember({"error", "skip"}));
  }

  DatasetPaths paths() const {
    DatasetPaths p;
    if (!data.empty()) p = DatasetPaths::in_directory(data);
    if (!stay.empty()) p.stay_points = stay;
    if (!poi.empty()) p.pois = poi;
    if (!labels.empty()) p.labels = labels;
    if (!manifest.empty()) p.manifest = manifest;
    if (p.stay_points.empty() || p.pois.empty() || p.labels.empty()) {
      throw UsageError("a dataset is required: pass --data DIR or --stay, --poi and --labels");
    }
    return p;
  }

  UnresolvedPoiPolicy policy() const {
    return unresolved == "skip" ? UnresolvedPoiPolicy::Skip : UnresolvedPoiPolicy::Error;
  }
};

struct RunArgs {
  DatasetArgs dataset;
  std::vector<std::string> attributes{"income"};
  std::string variant = "full";
  std::string backend;
  bool mock = false;
  std::string mock_evidence = "all";
  std::size_t sample = 0;
  std::uint64_t seed = 0;
  std::optional<std::size_t> parallel;
  std::size_t budget = 24000;
  std::string record;
  std::string replay;
  bool strict = false;
  std::string model;
  std::string out;
  std::string f1 = "observed";
  bool append_narrative = false;
  std::string templates;
  std::string synonyms;

  void add_to(CLI::App* app, bool with_variant) {
    dataset.add_to(app);
    app->add_option("--attribute", attributes, "age, income or education (repeatable)")
        ->check(CLI::IsMember({"age", "income", "education"}));
    if (with_variant) {
      app->add_option("--variant", variant, "full, no_s1 or no_s2")
          ->check(CLI::IsMember({"full", "no_s1", "no_s2"}));
    }
    app->add_option("--backend", backend, "Backend configuration JSON");
    app->add_flag("--mock", mock, "Use the deterministic mock oracle");
    app->add_option("--mock-evidence", mock_evidence, "Mock Stage-3 evidence: all or stage1")
        ->check(CLI::IsMember({"all", "stage1"}));
    app->add_option("--sample", sample, "Agents to sample (0 = all)");
    app->add_option("--seed", seed, "Sampling seed");
    app->add_option("--parallel", parallel, "Concurrent chains")->check(CLI::PositiveNumber);
    app->add_option("--budget", budget, "Narrative character budget")->check(CLI::PositiveNumber);
    app->add_option("--record", record, "Record completions to this cache file");
    app->add_option("--replay", replay, "Serve completions from this cache file");
    app->add_flag("--strict", strict, "With --replay, fail on a cache miss");
    app->add_option("--model", model, "Model name (replay without a backend)");
    app->add_option("--out", out, "Output directory");
    app->add_option("--f1-universe", f1, "observed or canonical")
        ->check(CLI::IsMember({"observed", "canonical"}));
    app->add_flag("--append-narrative", append_narrative, "Append the narrative to Stage-3 prompts");
    app->add_option("--templates", templates, "Directory of prompt templates");
    app->add_option("--synonyms", synonyms, "Directory of synonym tables");
  }

  RunConfig config() const {
    RunConfig c;
    c.dataset = dataset.paths();
    c.unresolved_poi = dataset.policy();
    c.backend_config = backend;
    c.attributes.clear();
    for (const auto& a : attributes) {
      const auto parsed = parse_attribute(a);
      if (std::find(c.attributes.begin(), c.attributes.end(), parsed) == c.attributes.end()) {
        c.attributes.push_back(parsed);
      }
    }
    c.variant = parse_variant(variant);
    c.sample_size = sample;
    c.seed = seed;
    c.narrative_budget = budget;
    c.output_dir = out;
    c.f1_universe = parse_f1_universe(f1);
    c.append_narrative_to_stage3 = append_narrative;
    c.templates_dir = templates;
    c.synonyms_dir = synonyms;
    return c;
  }
};

struct BackendSetup {
  std::shared_ptr<CompletionBackend> backend;
  ModelSettings model;
  std::size_t parallelism = 4;
};

BackendSetup make_backend(const RunArgs& args, const DatasetManifest& manifest, bool force_strict,
                          std::ostream& err) {
  static std::mutex err_mutex;
  if (args.mock && !args.backend.empty()) throw UsageError("--mock and --backend are exclusive");
  if (!args.record.empty() && !args.replay.empty()) throw UsageError("--record and --replay are exclusive");

  BackendSetup s;
  std::shared_ptr<CompletionBackend> inner;
  std::optional<BackendConfig> config;
  if (args.mock) {
    MockOptions options;
    options.evidence = args.mock_evidence == "stage1" ? EvidenceSource::Stage1Only
                                                      : EvidenceSource::AllStages;
    inner = std::make_shared<MockOracle>(keyword_rules(SynthRules::defaults()), manifest, options);
    s.model.model = "mock-oracle";
  } else if (!args.backend.empty()) {
    config = BackendConfig::load(args.backend);
    auto live = std::make_shared<OpenAiChatBackend>(*config);
    live->set_retry_logger([&err](int attempt, const std::string& reason) {
      std::lock_guard lock(err_mutex);
      err << nlohmann::json{{"retry", attempt}, {"reason", reason}}.dump() << "\n";
    });
    inner = live;
    s.model = {config->model, config->temperature, config->max_tokens};
    s.parallelism = config->parallelism;
  }

  CacheMode mode = CacheMode::Off;
  std::filesystem::path cache;
  if (!args.record.empty()) {
    mode = CacheMode::Record;
    cache = args.record;
  } else if (!args.replay.empty()) {
    mode = args.strict || force_strict || !inner ? CacheMode::ReplayStrict : CacheMode::Replay;
    cache = args.replay;
  } else if (config && config->cache_mode != CacheMode::Off) {
    mode = config->cache_mode;
    cache = config->cache_path;
  }
  if (force_strict && mode != CacheMode::ReplayStrict) throw UsageError("replay needs --replay CACHE");
  if (!inner && mode != CacheMode::ReplayStrict) {
    throw UsageError("choose a backend: --mock, --backend CONFIG or --replay CACHE");
  }
  if (mode == CacheMode::Record && !inner) throw UsageError("--record needs --mock or --backend");

  if (mode == CacheMode::Off) {
    s.backend = inner;
  } else {
    auto cached = std::make_shared<CachedBackend>(force_strict ? nullptr : inner, mode, cache);
    if (!inner || force_strict) {
      if (!args.model.empty()) {
        s.model.model = args.model;
      } else if (!inner) {
        const auto models = cached->recorded_models();
        if (models.size() != 1) {
          throw UsageError("the cache holds " + std::to_string(models.size()) +
                           " model names; pass --model");
        }
        s.model.model = *models.begin();
      }
    }
    s.backend = cached;
  }
  if (!args.model.empty()) s.model.model = args.model;
  if (args.parallel) s.parallelism = *args.parallel;
  return s;
}

nlohmann::json metrics_summary(const EvalReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& m : r.attributes) {
    rows.push_back({{"attribute", to_string(m.attribute)},
                    {"n", m.n},
                    {"accuracy", m.accuracy},
                    {"macro_f1", m.macro_f1},
                    {"unparsed", m.unparsed},
                    {"repaired", m.repaired},
                    {"chain_failures", m.chain_failures}});
  }
  return {{"variant", to_string(r.variant)}, {"metrics", rows}};
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

int cmd_ingest(const DatasetArgs& args, std::ostream& out) {
  const auto data = Dataset::load(args.paths());
  const auto joined = join_visits(data.stay_points, data.catalog, args.policy());
  std::size_t weeks = 0;
  for (const auto& [agent, visits] : joined.visits_by_agent) {
    weeks += partition_weeks(visits, data.manifest.timezone).size();
  }
  out << nlohmann::json{{"agents", joined.visits_by_agent.size()},
                        {"labeled_agents", data.labels.size()},
                        {"stay_points", data.stay_points.size()},
                        {"pois", data.catalog.size()},
                        {"agent_weeks", weeks},
                        {"skipped_stay_points", joined.skipped},
                        {"warnings", joined.warnings},
                        {"timezone", data.manifest.timezone.name()},
                        {"dataset_hash", data.hash}}
             .dump(2)
      << "\n";
  return 0;
}

int cmd_narrate(const DatasetArgs& args, const std::string& out_dir, std::size_t budget,
                const std::vector<std::string>& agents, std::ostream& out, std::ostream& err) {
  if (out_dir.empty()) throw UsageError("narrate needs --out DIR");
  const auto data = Dataset::load(args.paths());
  const auto& tz = data.manifest.timezone;
  const auto joined = join_visits(data.stay_points, data.catalog, args.policy());
  std::filesystem::create_directories(out_dir);
  std::size_t written = 0;
  std::vector<std::string> failures;
  for (const auto& [agent, visits] : joined.visits_by_agent) {
    if (!agents.empty() && std::find(agents.begin(), agents.end(), agent) == agents.end()) continue;
    const auto weeks = partition_weeks(visits, tz);
    try {
      const auto narrative = build_narrative(weeks, budget, tz);
      const auto text = join_narratives(narrative);
      write_text(std::filesystem::path(out_dir) / (agent + ".narrative.txt"), text + "\n");
      const nlohmann::json stats = {{"agent_id", agent},
                                    {"characters", count_characters(text)},
                                    {"weeks_available", weeks.size()},
                                    {"weeks", narrative}};
      write_text(std::filesystem::path(out_dir) / (agent + ".stats.json"), stats.dump(2) + "\n");
      ++written;
    } catch (const BudgetError& e) {
      err << nlohmann::json{{"agent_id", agent}, {"error", e.what()}, {"kind", e.kind()}}.dump() << "\n";
      failures.push_back(agent);
    }
  }
  for (const auto& a : agents) {
    if (!joined.visits_by_agent.contains(a)) throw ValidationError("agent " + a + " has no stay points");
  }
  out << nlohmann::json{{"written", written}, {"budget_failures", failures}}.dump(2) << "\n";
  return 0;
}

int cmd_infer(const RunArgs& args, bool replay_only, std::ostream& out, std::ostream& err) {
  auto config = args.config();
  std::optional<NetworkGuard> guard;
  if (replay_only) guard.emplace();
  const auto manifest = config.dataset.manifest.empty() || !std::filesystem::exists(config.dataset.manifest)
                            ? DatasetManifest::defaults()
                            : DatasetManifest::load(config.dataset.manifest);
  auto setup = make_backend(args, manifest, replay_only, err);
  config.parallelism = setup.parallelism;
  const auto result = run_experiment(config, *setup.backend, setup.model);
  auto summary = metrics_summary(result.report);
  summary["agents"] = result.sampled_agents.size();
  summary["narrative_failures"] = result.narrative_failures;
  if (!config.output_dir.empty()) summary["output_dir"] = config.output_dir.string();
  if (replay_only) summary["network_calls_blocked"] = guard->blocked_calls();
  out << summary.dump(2) << "\n";
  return 0;
}

int cmd_ablate(const RunArgs& args, std::ostream& out, std::ostream& err) {
  auto config = args.config();
  std::optional<NetworkGuard> guard;
  if (!args.replay.empty() && !args.mock && args.backend.empty()) guard.emplace();
  const auto manifest = config.dataset.manifest.empty() || !std::filesystem::exists(config.dataset.manifest)
                            ? DatasetManifest::defaults()
                            : DatasetManifest::load(config.dataset.manifest);
  auto setup = make_backend(args, manifest, false, err);
  config.parallelism = setup.parallelism;
  const auto report = run_ablation(config, *setup.backend, setup.model);
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& v : report.variants) rows.push_back(metrics_summary(v));
  out << nlohmann::json{{"variants", rows}}.dump(2) << "\n";
  return 0;
}

int cmd_eval(const DatasetArgs& dataset, const std::string& predictions, const std::string& f1,
             const std::string& out_dir, std::ostream& out) {
  if (predictions.empty()) throw UsageError("eval needs --predictions FILE");
  DatasetPaths paths;
  if (!dataset.data.empty()) paths = DatasetPaths::in_directory(dataset.data);
  if (!dataset.labels.empty()) paths.labels = dataset.labels;
  if (!dataset.manifest.empty()) paths.manifest = dataset.manifest;
  if (paths.labels.empty()) throw UsageError("eval needs --labels FILE or --data DIR");
  const auto manifest = paths.manifest.empty() || !std::filesystem::exists(paths.manifest)
                            ? DatasetManifest::defaults()
                            : DatasetManifest::load(paths.manifest);
  const auto labels = load_labels(paths.labels, manifest);
  const auto preds = read_predictions(predictions);
  const auto report = evaluate_predictions(preds, labels, manifest, parse_f1_universe(f1),
                                           {{"predictions", predictions}, {"f1_universe", f1}});
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    write_text(std::filesystem::path(out_dir) / "report.json", nlohmann::json(report).dump(2) + "\n");
    write_text(std::filesystem::path(out_dir) / "report.md", render_markdown(report));
  }
  out << metrics_summary(report).dump(2) << "\n";
  return 0;
}

int cmd_synth(const std::string& out_dir, const SynthOptions& options, std::ostream& out) {
  if (out_dir.empty()) throw UsageError("synth needs --out DIR");
  const auto rules = SynthRules::defaults();
  const auto data = generate_agents(options, rules);
  write_dataset(data, options, rules, out_dir);
  out << nlohmann::json{{"agents", data.labels.size()},
                        {"stay_points", data.stay_points.size()},
                        {"pois", data.catalog.size()},
                        {"rules_hash", rules.hash()},
                        {"output_dir", out_dir}}
             .dump(2)
      << "\n";
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Mobility-trajectory demographic inference with staged prompting"};
  app.name("trajcot");
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML/INI file with option values");
  app.fallthrough();

  DatasetArgs ingest_args;
  auto* ingest = app.add_subcommand("ingest", "Validate a dataset and print a summary");
  ingest_args.add_to(ingest);

  DatasetArgs narrate_args;
  std::string narrate_out;
  std::size_t narrate_budget = 24000;
  std::vector<std::string> narrate_agents;
  auto* narrate = app.add_subcommand("narrate", "Render weekly narratives per agent");
  narrate_args.add_to(narrate);
  narrate->add_option("--out", narrate_out, "Output directory");
  narrate->add_option("--budget", narrate_budget, "Narrative character budget")->check(CLI::PositiveNumber);
  narrate->add_option("--agent", narrate_agents, "Only these agents (repeatable)");

  RunArgs infer_args;
  auto* infer = app.add_subcommand("infer", "Run the staged inference chain and score it");
  infer_args.add_to(infer, true);

  RunArgs ablate_args;
  auto* ablate = app.add_subcommand("ablate", "Run Full-CoT, No-S1 and No-S2 on one agent sample");
  ablate_args.add_to(ablate, false);

  RunArgs replay_args;
  auto* replay = app.add_subcommand("replay", "Re-run inference from a cache with the network disabled");
  replay_args.add_to(replay, true);

  DatasetArgs eval_args;
  std::string eval_predictions;
  std::string eval_f1 = "observed";
  std::string eval_out;
  auto* eval = app.add_subcommand("eval", "Score a predictions.jsonl file against labels");
  eval_args.add_to(eval);
  eval->add_option("--predictions", eval_predictions, "predictions.jsonl");
  eval->add_option("--f1-universe", eval_f1, "observed or canonical")
      ->check(CLI::IsMember({"observed", "canonical"}));
  eval->add_option("--out", eval_out, "Output directory for report.json and report.md");

  SynthOptions synth_options;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset with planted signals");
  synth->add_option("--out", synth_out, "Output directory");
  synth->add_option("--n", synth_options.n, "Agents")->check(CLI::PositiveNumber);
  synth->add_option("--seed", synth_options.seed, "Generator seed");
  synth->add_option("--weeks", synth_options.weeks, "Weeks per agent")->check(CLI::PositiveNumber);
  synth->add_option("--sigma", synth_options.sigma, "Probability of using own-bracket venues")
      ->check(CLI::Range(0.0, 1.0));

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  if (argv.empty()) argv.push_back("trajcot");
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*ingest) return cmd_ingest(ingest_args, out);
    if (*narrate) return cmd_narrate(narrate_args, narrate_out, narrate_budget, narrate_agents, out, err);
    if (*infer) return cmd_infer(infer_args, false, out, err);
    if (*ablate) return cmd_ablate(ablate_args, out, err);
    if (*replay) return cmd_infer(replay_args, true, out, err);
    if (*eval) return cmd_eval(eval_args, eval_predictions, eval_f1, eval_out, out);
    if (*synth) return cmd_synth(synth_out, synth_options, out);
  } catch (const UsageError& e) {
    err << nlohmann::json{{"error", e.what()}, {"kind", "usage"}}.dump() << "\n";
    return 2;
  } catch (const Error& e) {
    err << nlohmann::json{{"error", e.what()}, {"kind", e.kind()}}.dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << nlohmann::json{{"error", e.what()}, {"kind", "internal"}}.dump() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace trajcot::cli
