#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "trajcot/backend.hpp"
#include "trajcot/categories.hpp"
#include "trajcot/manifest.hpp"

namespace trajcot {

/// Venue-name keyword that votes for one category of one attribute.
struct KeywordRule {
  Attribute attribute = Attribute::Income;
  std::string keyword;
  std::string category_id;
};

enum class EvidenceSource {
  AllStages,   // Stage 3 reads venue evidence from both earlier responses
  Stage1Only,  // Stage 3 reads only Stage-1 evidence; Stage 2 names no venues
};

struct MockOptions {
  EvidenceSource evidence = EvidenceSource::AllStages;
};

/// Deterministic stand-in for a chat model, keyed on the `[[STAGE n: ...]]`
/// marker that opens every shipped template.
///
/// Stage 1 and 2 echo the venue names found in the chronicle as
/// `EVIDENCE-S1:` / `EVIDENCE-S2:` lines. Stage 3 counts keyword hits over
/// the evidence venues and answers with a well-formed answer block for the
/// majority category (ties go to the earlier category). With no evidence it
/// answers the middle category with confidence 1.
class MockOracle : public CompletionBackend {
 public:
  static constexpr std::string_view kId = "mock-oracle/v1";

  MockOracle(std::vector<KeywordRule> rules, DatasetManifest manifest,
             MockOptions options = {});

  Completion complete(const CompletionRequest& request) override;
  std::string describe() const override;

  /// Throws MockError when the prompt does not open with a stage marker.
  std::string respond(std::string_view prompt) const;

  const std::vector<KeywordRule>& rules() const { return rules_; }

 private:
  std::string stage1(std::string_view prompt) const;
  std::string stage2(std::string_view prompt) const;
  std::string stage3(std::string_view prompt, Attribute attribute) const;

  std::vector<KeywordRule> rules_;
  DatasetManifest manifest_;
  MockOptions options_;
};

/// Venue names from chronicle lines (`... (N mins): Venue - Tags`), deduplicated
/// in order of first appearance.
std::vector<std::string> extract_chronicle_venues(std::string_view text);

/// Venue names listed on `{tag}: a; b; c` lines.
std::vector<std::string> extract_evidence(std::string_view text, std::string_view tag);

}  // namespace trajcot
