#pragma once

#include <array>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "trajcot/categories.hpp"
#include "trajcot/manifest.hpp"
#include "trajcot/mock_oracle.hpp"
#include "trajcot/trajectory.hpp"

namespace trajcot {

struct VenueSpec {
  std::string name;
  std::vector<std::string> activity_types;
  std::string tier;  // economic tier: budget ... luxury, or "neutral"
};

/// How agents in one bracket of one attribute behave. Every signature venue
/// name contains `keyword` as a whole word; no other rule's venues do.
struct ProfileRule {
  Attribute attribute = Attribute::Income;
  std::string category_id;
  std::string keyword;
  std::vector<VenueSpec> venues;
  std::int64_t weekday_min = 2;
  std::int64_t weekday_max = 4;
  std::int64_t weekend_min = 2;
  std::int64_t weekend_max = 5;
  std::array<double, 4> daypart_weights{0.0, 1.0, 1.0, 1.0};  // Night..Evening
};

struct SynthRules {
  std::vector<ProfileRule> profiles;
  std::vector<VenueSpec> common_venues;
  // Share of visits drawn from each source; the remainder goes to common venues.
  double income_share = 0.45;
  double age_share = 0.2;
  double education_share = 0.2;

  const ProfileRule& profile(Attribute a, std::string_view category_id) const;
  /// Throws ValidationError unless every category of every attribute has a rule.
  void validate(const DatasetManifest& manifest) const;
  std::string hash() const;

  static SynthRules defaults();
};

void to_json(nlohmann::json& j, const SynthRules& r);

/// The planted rule table for the mock oracle: keyword -> bracket.
std::vector<KeywordRule> keyword_rules(const SynthRules& rules);

struct SynthOptions {
  std::size_t n = 200;
  std::uint64_t seed = 7;
  std::size_t weeks = 2;
  double sigma = 1.0;  // 1 = signature venues never borrowed from other brackets
  std::chrono::local_days first_monday{std::chrono::year{2024} / std::chrono::January / 29};
};

struct SyntheticDataset {
  DatasetManifest manifest;
  std::vector<StayPoint> stay_points;
  PoiCatalog catalog;
  std::vector<DemographicLabel> labels;
  std::map<std::string, std::size_t> visits_per_agent;  // generator bookkeeping
};

/// Deterministic in (options, rules). Income brackets are assigned round-robin
/// so n agents split as evenly as possible over the six brackets.
SyntheticDataset generate_agents(const SynthOptions& options, const SynthRules& rules,
                                 const DatasetManifest& manifest = DatasetManifest::defaults());

/// Writes stay_points.csv, pois.csv, labels.csv, manifest.json and
/// synth_manifest.json (seed, sigma, rule hash) into `dir`.
void write_dataset(const SyntheticDataset& data, const SynthOptions& options,
                   const SynthRules& rules, const std::filesystem::path& dir);

}  // namespace trajcot
