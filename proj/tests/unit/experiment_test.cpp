#include <gtest/gtest.h>

#include <atomic>

#include <nlohmann/json.hpp>

#include "trajcot/error.hpp"
#include "trajcot/experiment.hpp"
#include "trajcot/http_transport.hpp"
#include "trajcot/mock_oracle.hpp"
#include "trajcot/narrative.hpp"
#include "trajcot/synth.hpp"
#include "test_support.hpp"

using namespace trajcot;

namespace {

class ExperimentTest : public ::testing::Test {
 protected:
  void SetUp() override {
    SynthOptions o;
    o.n = 24;
    o.seed = 7;
    write_dataset(generate_agents(o, rules_), o, rules_, data_.path());
  }

  RunConfig config(const std::filesystem::path& out = {}) const {
    RunConfig c;
    c.dataset = DatasetPaths::in_directory(data_.path());
    c.attributes = {Attribute::Income, Attribute::Age, Attribute::Education};
    c.output_dir = out;
    c.seed = 1;
    return c;
  }

  MockOracle oracle(EvidenceSource e = EvidenceSource::AllStages) const {
    return MockOracle(keyword_rules(rules_), DatasetManifest::defaults(), {e});
  }

  SynthRules rules_ = SynthRules::defaults();
  trajcot::testing::TempDir data_{"exp-data"};
  trajcot::testing::TempDir out_{"exp-out"};
  ModelSettings model_{"mock-oracle", 0.0, 512};
};

class FailingBackend : public CompletionBackend {
 public:
  std::atomic<int> calls{0};
  Completion complete(const CompletionRequest&) override {
    ++calls;
    throw BackendError("HTTP 503 from upstream");
  }
  std::string describe() const override { return "failing"; }
};

nlohmann::json without_generated_at(const std::filesystem::path& p) {
  auto j = nlohmann::json::parse(trajcot::testing::read_file(p));
  j.erase("generated_at");
  return j;
}

}  // namespace

TEST_F(ExperimentTest, MockRecoversPlantedLabels) {
  auto mock = oracle();
  const auto r = run_experiment(config(out_.path()), mock, model_);
  EXPECT_EQ(r.sampled_agents.size(), 24u);
  ASSERT_EQ(r.report.attributes.size(), 3u);
  for (const auto& m : r.report.attributes) {
    EXPECT_EQ(m.n, 24);
    EXPECT_DOUBLE_EQ(m.accuracy, 1.0) << to_string(m.attribute);
    EXPECT_EQ(m.unparsed, 0);
  }
  EXPECT_EQ(r.predictions.size(), 72u);
  EXPECT_TRUE(std::is_sorted(r.predictions.begin(), r.predictions.begin() + 24,
                             [](const auto& a, const auto& b) { return a.agent_id < b.agent_id; }));

  for (const char* f : {"report.json", "report.md", "predictions.jsonl", "execution.json"}) {
    EXPECT_TRUE(std::filesystem::exists(out_ / f)) << f;
  }
  std::size_t transcripts = 0;
  for (const auto& e : std::filesystem::directory_iterator(out_ / "transcripts")) {
    const auto doc = nlohmann::json::parse(trajcot::testing::read_file(e.path()));
    EXPECT_TRUE(doc.contains("run_config"));
    ++transcripts;
  }
  EXPECT_EQ(transcripts, 72u);

  const auto report = nlohmann::json::parse(trajcot::testing::read_file(out_ / "report.json"));
  const auto& run = report.at("run");
  for (const char* key : {"config", "dataset_hash", "seed", "rng", "model", "templates", "synonyms",
                          "sampled_agents", "narrative_budget"}) {
    EXPECT_TRUE(run.contains(key)) << key;
  }
  EXPECT_FALSE(run.at("config").contains("parallelism"));
  EXPECT_EQ(run.at("model").at("model"), "mock-oracle");
}

TEST_F(ExperimentTest, SampleIsStableAndSeeded) {
  auto mock = oracle();
  auto c = config();
  c.attributes = {Attribute::Income};
  c.sample_size = 10;
  c.seed = 5;
  const auto a = run_experiment(c, mock, model_);
  const auto b = run_experiment(c, mock, model_);
  EXPECT_EQ(a.sampled_agents, b.sampled_agents);
  EXPECT_EQ(a.sampled_agents.size(), 10u);
  EXPECT_TRUE(std::is_sorted(a.sampled_agents.begin(), a.sampled_agents.end()));
  c.seed = 6;
  EXPECT_NE(run_experiment(c, mock, model_).sampled_agents, a.sampled_agents);
  c.sample_size = 25;
  EXPECT_THROW(run_experiment(c, mock, model_), ValidationError);
}

TEST_F(ExperimentTest, ParallelismDoesNotChangeResults) {
  auto mock = oracle();
  auto c = config();
  c.parallelism = 1;
  const auto serial = run_experiment(c, mock, model_);
  c.parallelism = 8;
  const auto parallel = run_experiment(c, mock, model_);
  EXPECT_EQ(serial.predictions, parallel.predictions);
}

TEST_F(ExperimentTest, ReplayReproducesReportWithoutNetwork) {
  auto mock = std::make_shared<MockOracle>(oracle());
  const auto cache = out_ / "cache.jsonl";
  {
    CachedBackend rec(mock, CacheMode::Record, cache);
    run_experiment(config(out_ / "live"), rec, model_);
  }
  CachedBackend replay(nullptr, CacheMode::ReplayStrict, cache);
  NetworkGuard guard;
  const auto before = network_call_count();
  run_experiment(config(out_ / "replayed"), replay, model_);
  EXPECT_EQ(network_call_count(), before);
  EXPECT_EQ(guard.blocked_calls(), 0u);
  EXPECT_EQ(replay.misses(), 0u);
  EXPECT_EQ(without_generated_at(out_ / "live" / "report.json")["attributes"],
            without_generated_at(out_ / "replayed" / "report.json")["attributes"]);
  EXPECT_EQ(trajcot::testing::read_file(out_ / "live" / "predictions.jsonl"),
            trajcot::testing::read_file(out_ / "replayed" / "predictions.jsonl"));
}

TEST_F(ExperimentTest, DeadBackendAborts) {
  FailingBackend failing;
  auto c = config(out_.path());
  c.parallelism = 1;
  c.dead_backend_threshold = 3;
  try {
    run_experiment(c, failing, model_);
    FAIL() << "expected BackendDeadError";
  } catch (const BackendDeadError& e) {
    EXPECT_STREQ(e.kind(), "backend_dead");
    EXPECT_NE(std::string(e.what()).find("503"), std::string::npos);
  }
  EXPECT_EQ(failing.calls.load(), 3);
  // Partial transcripts are kept for diagnosis.
  EXPECT_TRUE(std::filesystem::exists(out_ / "transcripts"));
}

TEST_F(ExperimentTest, IsolatedFailuresScoreAsUnparsed) {
  // Fails every 5th Stage-1 call only, below the dead threshold.
  class Flaky : public CompletionBackend {
   public:
    explicit Flaky(MockOracle m) : mock_(std::move(m)) {}
    Completion complete(const CompletionRequest& r) override {
      if (r.prompt().rfind("[[STAGE 1", 0) == 0 && ++s1_ % 5 == 0) throw BackendError("flaky");
      return mock_.complete(r);
    }
    std::string describe() const override { return "flaky"; }

   private:
    MockOracle mock_;
    int s1_ = 0;
  };
  Flaky flaky(oracle());
  auto c = config();
  c.attributes = {Attribute::Income};
  c.parallelism = 1;
  const auto r = run_experiment(c, flaky, model_);
  const auto& m = r.report.metrics(Attribute::Income);
  EXPECT_EQ(m.n, 24);
  EXPECT_EQ(m.chain_failures, 4);
  EXPECT_EQ(m.unparsed, 4);
  EXPECT_DOUBLE_EQ(m.accuracy, 20.0 / 24.0);
}

TEST_F(ExperimentTest, NarrativeFailuresAreExcluded) {
  const auto data = Dataset::load(DatasetPaths::in_directory(data_.path()));
  const auto joined = join_visits(data.stay_points, data.catalog);
  std::vector<std::size_t> costs;
  for (const auto& [agent, visits] : joined.visits_by_agent) {
    const auto weeks = partition_weeks(visits, data.manifest.timezone);
    const auto kept = build_narrative(weeks, 1'000'000, data.manifest.timezone);
    costs.push_back(count_characters(kept.front().text()));
  }
  std::sort(costs.begin(), costs.end());
  ASSERT_LT(costs.front(), costs.back());
  const std::size_t budget = costs[costs.size() / 2];
  const auto expected_failures =
      static_cast<std::size_t>(std::count_if(costs.begin(), costs.end(), [&](auto c) { return c > budget; }));
  ASSERT_GT(expected_failures, 0u);

  auto mock = oracle();
  auto c = config();
  c.attributes = {Attribute::Income};
  c.narrative_budget = budget;
  const auto r = run_experiment(c, mock, model_);
  EXPECT_EQ(r.narrative_failures, expected_failures);
  EXPECT_EQ(r.report.metrics(Attribute::Income).n, static_cast<std::int64_t>(24 - expected_failures));
  EXPECT_EQ(r.predictions.size(), 24 - expected_failures);
  EXPECT_EQ(r.report.run.at("narrative_failures"), expected_failures);

  c.narrative_budget = 10;
  EXPECT_THROW(run_experiment(c, mock, model_), BudgetError);
}

TEST_F(ExperimentTest, StoredPredictionsReEvaluateIdentically) {
  auto mock = oracle();
  const auto r = run_experiment(config(out_.path()), mock, model_);
  const auto preds = read_predictions(out_ / "predictions.jsonl");
  EXPECT_EQ(preds, r.predictions);
  const auto data = Dataset::load(DatasetPaths::in_directory(data_.path()));
  const auto report = evaluate_predictions(preds, data.labels, data.manifest, F1Universe::Observed, {});
  for (const auto a : kAllAttributes) {
    EXPECT_DOUBLE_EQ(report.metrics(a).accuracy, r.report.metrics(a).accuracy);
    EXPECT_DOUBLE_EQ(report.metrics(a).macro_f1, r.report.metrics(a).macro_f1);
  }
  auto dup = preds;
  dup.push_back(preds.front());
  EXPECT_THROW(evaluate_predictions(dup, data.labels, data.manifest, F1Universe::Observed, {}), ValidationError);
  auto stranger = preds;
  stranger.front().agent_id = "nobody";
  EXPECT_THROW(evaluate_predictions(stranger, data.labels, data.manifest, F1Universe::Observed, {}),
               ValidationError);
}

TEST_F(ExperimentTest, AblationShowsStage1Dependence) {
  auto mock = oracle(EvidenceSource::Stage1Only);
  auto c = config(out_.path());
  c.attributes = {Attribute::Income};
  const auto ab = run_ablation(c, mock, model_);
  ASSERT_EQ(ab.variants.size(), 3u);
  const double full = ab.variant(Variant::Full).metrics(Attribute::Income).accuracy;
  const double no_s1 = ab.variant(Variant::NoS1).metrics(Attribute::Income).accuracy;
  const double no_s2 = ab.variant(Variant::NoS2).metrics(Attribute::Income).accuracy;
  EXPECT_DOUBLE_EQ(full, 1.0);
  EXPECT_DOUBLE_EQ(no_s2, 1.0);
  EXPECT_LT(no_s1, full);
  for (const char* f : {"ablation.json", "ablation.md", "full/report.json", "no_s1/report.json", "no_s2/report.json"}) {
    EXPECT_TRUE(std::filesystem::exists(out_ / f)) << f;
  }
  EXPECT_EQ(ab.variant(Variant::Full).run.at("sampled_agents"), ab.variant(Variant::NoS1).run.at("sampled_agents"));
  const auto md = trajcot::testing::read_file(out_ / "ablation.md");
  EXPECT_NE(md.find("No-S1"), std::string::npos);
  EXPECT_NE(md.find("(+0.000)"), std::string::npos);
}

TEST(Predictions, BadLineIsParseError) {
  trajcot::testing::TempDir dir("preds");
  trajcot::testing::write_file(dir / "p.jsonl", "{\"agent_id\":\"a\",\"attribute\":\"income\",\"label\":\"Low\"}\nnot json\n");
  EXPECT_THROW(read_predictions(dir / "p.jsonl"), ParseError);
}
