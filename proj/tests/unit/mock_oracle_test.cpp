#include <gtest/gtest.h>

#include "trajcot/error.hpp"
#include "trajcot/mock_oracle.hpp"
#include "trajcot/orchestrator.hpp"
#include "trajcot/response_parser.hpp"
#include "trajcot/synth.hpp"

using namespace trajcot;

namespace {

const std::string kLuxeNarrative =
    "Activity chronicle for the week of Monday, January 29, 2024:\n"
    "Monday, January 29 (Weekday): 2 visits\n"
    "Monday, January 29 (Weekday) - 09:10-10:14 (63 mins): Luxe Spa - Leisure, Personal Care\n"
    "Monday, January 29 (Weekday) - 12:00-12:30 (30 mins): Riverside Park - Outdoors\n"
    "Tuesday, January 30 (Weekday): 2 visits\n"
    "Tuesday, January 30 (Weekday) - 19:00-21:00 (120 mins): Luxe Bistro - Dining\n"
    "Tuesday, January 30 (Weekday) - 21:30-22:00 (30 mins): Thrift Market - Shopping\n";

MockOracle make_oracle(EvidenceSource evidence = EvidenceSource::AllStages) {
  return MockOracle(keyword_rules(SynthRules::defaults()), DatasetManifest::defaults(), {evidence});
}

StageTranscript chain(MockOracle& oracle, Variant v, Attribute a = Attribute::Income) {
  const auto manifest = DatasetManifest::defaults();
  return run_chain("a", kLuxeNarrative, manifest.categories(a), v, PromptLibrary::defaults(), oracle,
                   ChainOptions{"mock", 0.0, 512, false});
}

}  // namespace

TEST(ChronicleVenues, ExtractedInOrderWithoutDuplicates) {
  EXPECT_EQ(extract_chronicle_venues(kLuxeNarrative),
            (std::vector<std::string>{"Luxe Spa", "Riverside Park", "Luxe Bistro", "Thrift Market"}));
  EXPECT_EQ(extract_evidence("x\nEVIDENCE-S1: A b; C\ny", "EVIDENCE-S1"),
            (std::vector<std::string>{"A b", "C"}));
}

TEST(MockOracle, MajorityKeywordWinsThroughFullChain) {
  auto oracle = make_oracle();
  const auto t = chain(oracle, Variant::Full);
  ASSERT_FALSE(t.failed) << t.error;
  const auto p = ResponseParser(income_categories()).parse(*t.final_response());
  EXPECT_EQ(p.label, "VeryHigh");
  EXPECT_EQ(p.status, ParseStatus::Clean);
  EXPECT_EQ(p.alternatives, (std::vector<std::string>{"VeryLow"}));
  EXPECT_EQ(p.confidence, 3);  // 1 + 4*2/3
}

TEST(MockOracle, Deterministic) {
  auto a = make_oracle();
  auto b = make_oracle();
  for (const auto v : kAllVariants) {
    const auto ta = chain(a, v);
    const auto tb = chain(b, v);
    ASSERT_EQ(ta.stages.size(), tb.stages.size());
    for (std::size_t i = 0; i < ta.stages.size(); ++i) {
      EXPECT_EQ(ta.stages[i].response, tb.stages[i].response);
      EXPECT_EQ(ta.stages[i].request_id, tb.stages[i].request_id);
    }
  }
}

TEST(MockOracle, Stage1OnlyEvidenceMakesStage1Necessary) {
  auto oracle = make_oracle(EvidenceSource::Stage1Only);
  const ResponseParser parser(income_categories());
  EXPECT_EQ(parser.parse(*chain(oracle, Variant::Full).final_response()).label, "VeryHigh");
  EXPECT_EQ(parser.parse(*chain(oracle, Variant::NoS2).final_response()).label, "VeryHigh");
  const auto no_s1 = parser.parse(*chain(oracle, Variant::NoS1).final_response());
  EXPECT_EQ(no_s1.label, "Middle");
  EXPECT_EQ(no_s1.confidence, 1);
}

TEST(MockOracle, AllStagesEvidenceSurvivesEitherAblation) {
  auto oracle = make_oracle(EvidenceSource::AllStages);
  const ResponseParser parser(income_categories());
  EXPECT_EQ(parser.parse(*chain(oracle, Variant::NoS1).final_response()).label, "VeryHigh");
  EXPECT_EQ(parser.parse(*chain(oracle, Variant::NoS2).final_response()).label, "VeryHigh");
}

TEST(MockOracle, AnswersEveryAttribute) {
  auto oracle = make_oracle();
  const auto manifest = DatasetManifest::defaults();
  for (const auto a : kAllAttributes) {
    const auto t = chain(oracle, Variant::Full, a);
    const auto p = ResponseParser(manifest.categories(a)).parse(*t.final_response());
    EXPECT_TRUE(p.label.has_value()) << to_string(a);
    EXPECT_EQ(p.indicators.has_value(), a == Attribute::Income);
  }
}

TEST(MockOracle, RejectsPromptsWithoutMarker) {
  auto oracle = make_oracle();
  EXPECT_THROW(oracle.respond("Tell me a story"), MockError);
  EXPECT_THROW(oracle.respond("[[STAGE 9: X]]"), MockError);
  CompletionRequest r;
  r.model = "mock";
  r.messages = {{"user", "no marker"}};
  EXPECT_THROW(oracle.complete(r), MockError);
}

TEST(MockOracle, RuleForUnknownCategoryIsRejected) {
  EXPECT_THROW(MockOracle({{Attribute::Income, "Gold", "Platinum"}}, DatasetManifest::defaults()),
               ValidationError);
}
