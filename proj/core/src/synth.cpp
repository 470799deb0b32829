#include "trajcot/synth.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>

#include "trajcot/error.hpp"
#include "trajcot/hash.hpp"
#include "trajcot/narrative.hpp"
#include "trajcot/rng.hpp"

namespace trajcot {
namespace {

using namespace std::chrono;

VenueSpec venue(std::string name, std::vector<std::string> tags, std::string tier) {
  return VenueSpec{std::move(name), std::move(tags), std::move(tier)};
}

ProfileRule make_profile(Attribute a, std::string id, std::string keyword, std::string tier,
                    std::vector<std::pair<std::string, std::vector<std::string>>> venues) {
  ProfileRule r;
  r.attribute = a;
  r.category_id = std::move(id);
  r.keyword = keyword;
  for (auto& [suffix, tags] : venues) r.venues.push_back(venue(keyword + " " + suffix, tags, tier));
  return r;
}

bool contains_word(std::string_view haystack, std::string_view word) {
  auto lower = [](std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
  };
  const auto h = lower(haystack);
  const auto w = lower(word);
  std::size_t pos = 0;
  while (!w.empty() && (pos = h.find(w, pos)) != std::string::npos) {
    const std::size_t end = pos + w.size();
    const bool left = pos == 0 || !std::isalnum(static_cast<unsigned char>(h[pos - 1]));
    const bool right = end == h.size() || !std::isalnum(static_cast<unsigned char>(h[end]));
    if (left && right) return true;
    ++pos;
  }
  return false;
}

std::uint64_t mix(std::uint64_t x) {
  // splitmix64 finalizer
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

double round5(double v) { return std::round(v * 1e5) / 1e5; }

std::size_t weighted_pick(PinnedRng& rng, const std::vector<double>& weights) {
  double total = 0.0;
  for (const auto w : weights) total += w;
  double r = rng.unit() * total;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0) continue;
    if (r < weights[i]) return i;
    r -= weights[i];
  }
  for (std::size_t i = weights.size(); i-- > 0;) {
    if (weights[i] > 0) return i;
  }
  return 0;
}

const VenueSpec& pick_venue(PinnedRng& rng, const SynthRules& rules, const DatasetManifest& manifest,
                            const DemographicLabel& label, double sigma) {
  const double u = rng.unit();
  std::optional<Attribute> source;
  if (u < rules.income_share) source = Attribute::Income;
  else if (u < rules.income_share + rules.age_share) source = Attribute::Age;
  else if (u < rules.income_share + rules.age_share + rules.education_share) source = Attribute::Education;

  if (!source) return rules.common_venues[rng.below(rules.common_venues.size())];

  const auto& cats = manifest.categories(*source);
  std::string bracket = label.bracket(*source);
  if (cats.size() > 1 && !rng.chance(sigma)) {
    // Borrow a signature venue from a different bracket.
    const auto own = *cats.index_of(bracket);
    auto other = rng.below(cats.size() - 1);
    if (other >= own) ++other;
    bracket = cats.at(other).id;
  }
  const auto& rule = rules.profile(*source, bracket);
  return rule.venues[rng.below(rule.venues.size())];
}

}  // namespace

const ProfileRule& SynthRules::profile(Attribute a, std::string_view category_id) const {
  for (const auto& p : profiles) {
    if (p.attribute == a && p.category_id == category_id) return p;
  }
  throw ValidationError("no synthetic profile for " + std::string(to_string(a)) + " category '" +
                        std::string(category_id) + "'");
}

void SynthRules::validate(const DatasetManifest& manifest) const {
  for (const auto a : kAllAttributes) {
    for (const auto& c : manifest.categories(a).categories()) (void)profile(a, c.id);
  }
  if (common_venues.empty()) throw ValidationError("synthetic rules need common venues");
  if (income_share < 0 || age_share < 0 || education_share < 0 ||
      income_share + age_share + education_share > 1.0) {
    throw ValidationError("synthetic visit shares must be non-negative and sum to at most 1");
  }
  auto check_tags = [&](const VenueSpec& v) {
    if (v.activity_types.empty()) throw ValidationError("venue '" + v.name + "' has no activity type");
    for (const auto& t : v.activity_types) {
      if (!manifest.has_activity_type(t)) {
        throw ValidationError("venue '" + v.name + "' uses undeclared activity type '" + t + "'");
      }
    }
  };
  for (const auto& p : profiles) {
    if (p.venues.empty()) throw ValidationError("profile '" + p.keyword + "' has no venues");
    if (p.weekday_min < 0 || p.weekday_min > p.weekday_max || p.weekend_min < 0 ||
        p.weekend_min > p.weekend_max || p.weekday_max > 40 || p.weekend_max > 40) {
      throw ValidationError("profile '" + p.keyword + "' has an invalid daily visit range");
    }
    for (const auto& v : p.venues) {
      check_tags(v);
      for (const auto& q : profiles) {
        if (&q != &p && contains_word(v.name, q.keyword)) {
          throw ValidationError("venue '" + v.name + "' contains foreign keyword '" + q.keyword + "'");
        }
      }
      if (!contains_word(v.name, p.keyword)) {
        throw ValidationError("venue '" + v.name + "' lacks its keyword '" + p.keyword + "'");
      }
    }
  }
  for (const auto& v : common_venues) {
    check_tags(v);
    for (const auto& q : profiles) {
      if (contains_word(v.name, q.keyword)) {
        throw ValidationError("common venue '" + v.name + "' contains keyword '" + q.keyword + "'");
      }
    }
  }
}

std::string SynthRules::hash() const {
  nlohmann::json j = *this;
  return sha256_hex(j.dump());
}

SynthRules SynthRules::defaults() {
  using A = Attribute;
  SynthRules r;
  r.profiles = {
      make_profile(A::Income, "VeryLow", "Thrift", "budget",
              {{"Store", {"BuyGoods"}}, {"Laundromat", {"Services"}}, {"Food Pantry", {"Errands"}}}),
      make_profile(A::Income, "Low", "Discount", "budget",
              {{"Grocery", {"BuyGoods"}}, {"Burger Stand", {"EatOut"}}, {"Auto Repair", {"Services"}}}),
      make_profile(A::Income, "Middle", "Family", "moderate",
              {{"Supermarket", {"BuyGoods"}}, {"Diner", {"EatOut"}}, {"Fitness Center", {"Exercise"}}}),
      make_profile(A::Income, "UpperMiddle", "Select", "comfortable",
              {{"Organic Market", {"BuyGoods"}}, {"Bistro", {"EatOut"}}, {"Yoga Studio", {"Exercise"}}}),
      make_profile(A::Income, "High", "Premier", "affluent",
              {{"Steakhouse", {"EatOut"}}, {"Tennis Club", {"Exercise", "Recreation"}},
               {"Wine Shop", {"BuyGoods"}}}),
      make_profile(A::Income, "VeryHigh", "Luxe", "luxury",
              {{"Boutique", {"BuyGoods"}}, {"Spa", {"Services", "Recreation"}},
               {"Yacht Club", {"Recreation"}}}),
      make_profile(A::Age, "Under25", "Arcade", "neutral",
              {{"Game Hall", {"Recreation"}}, {"Bubble Tea", {"EatOut"}}}),
      make_profile(A::Age, "Age25to44", "Playgroup", "neutral",
              {{"Daycare", {"ChildCare", "DropOff"}}, {"Pediatrics", {"HealthCare"}}}),
      make_profile(A::Age, "Age45to64", "Fairway", "neutral",
              {{"Golf Course", {"Recreation", "Exercise"}}, {"Hardware", {"BuyGoods"}}}),
      make_profile(A::Age, "Age65Plus", "Silver", "neutral",
              {{"Senior Center", {"Recreation", "Visit"}}, {"Cardiology", {"HealthCare"}}}),
      make_profile(A::Education, "NoHighSchool", "Dayworks", "neutral",
              {{"Labor Hall", {"Work"}}, {"Loading Dock", {"Work"}}}),
      make_profile(A::Education, "HighSchool", "Tradehouse", "neutral",
              {{"Workshop", {"Work"}}, {"Supply Depot", {"BuyGoods", "Work"}}}),
      make_profile(A::Education, "SomeCollege", "Annex", "neutral",
              {{"Evening Classes", {"School"}}, {"Study Hall", {"School"}}}),
      make_profile(A::Education, "Bachelors", "Alumni", "neutral",
              {{"Office Tower", {"Work"}}, {"Book Club", {"Recreation"}}}),
      make_profile(A::Education, "Graduate", "Faculty", "neutral",
              {{"Research Lab", {"Work"}}, {"Lecture Theater", {"School", "Work"}}}),
  };
  // Higher brackets get a little more weekend activity and evening time.
  const std::int64_t weekend_max[] = {3, 4, 4, 5, 5, 6};
  const double evening[] = {0.6, 0.8, 1.0, 1.2, 1.4, 1.6};
  for (std::size_t i = 0; i < 6; ++i) {
    r.profiles[i].weekend_max = weekend_max[i];
    r.profiles[i].daypart_weights = {0.05, 1.0, 1.0, evening[i]};
  }
  r.common_venues = {
      venue("Maple Street Pharmacy", {"HealthCare", "BuyGoods"}, "neutral"),
      venue("Riverside Park", {"Recreation", "Exercise"}, "neutral"),
      venue("Central Library", {"Recreation"}, "neutral"),
      venue("Oak Avenue Post Office", {"Services", "Errands"}, "neutral"),
      venue("Lakeview Gas Station", {"Errands"}, "neutral"),
      venue("Grace Community Church", {"Religious"}, "neutral"),
      venue("Harbor Medical Clinic", {"HealthCare"}, "neutral"),
      venue("Northgate Bank", {"Services"}, "neutral"),
  };
  return r;
}

void to_json(nlohmann::json& j, const SynthRules& r) {
  auto venues = [](const std::vector<VenueSpec>& vs) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& v : vs) {
      arr.push_back({{"name", v.name}, {"activity_types", v.activity_types}, {"tier", v.tier}});
    }
    return arr;
  };
  j = nlohmann::json::object();
  j["income_share"] = r.income_share;
  j["age_share"] = r.age_share;
  j["education_share"] = r.education_share;
  j["common_venues"] = venues(r.common_venues);
  auto& profiles = j["profiles"] = nlohmann::json::array();
  for (const auto& p : r.profiles) {
    profiles.push_back({{"attribute", to_string(p.attribute)},
                        {"category_id", p.category_id},
                        {"keyword", p.keyword},
                        {"venues", venues(p.venues)},
                        {"weekday_visits", {p.weekday_min, p.weekday_max}},
                        {"weekend_visits", {p.weekend_min, p.weekend_max}},
                        {"daypart_weights", p.daypart_weights}});
  }
}

std::vector<KeywordRule> keyword_rules(const SynthRules& rules) {
  std::vector<KeywordRule> out;
  for (const auto& p : rules.profiles) out.push_back({p.attribute, p.keyword, p.category_id});
  return out;
}

SyntheticDataset generate_agents(const SynthOptions& options, const SynthRules& rules,
                                 const DatasetManifest& manifest) {
  if (options.n == 0) throw ValidationError("synthetic population size must be positive");
  if (options.weeks == 0) throw ValidationError("synthetic horizon must be at least one week");
  if (!(options.sigma >= 0.0 && options.sigma <= 1.0)) {
    throw ValidationError("sigma must lie in [0, 1]");
  }
  if (weekday{options.first_monday} != Monday) {
    throw ValidationError("synthetic start date must be a Monday");
  }
  rules.validate(manifest);

  SyntheticDataset data;
  data.manifest = manifest;

  // One POI per venue, ids in rule order.
  std::map<std::string, const Poi*> poi_by_name;
  {
    PinnedRng rng(mix(options.seed ^ 0x504F49ULL));
    std::size_t next_id = 1;
    auto add = [&](const VenueSpec& v) {
      std::ostringstream id;
      id << "P" << std::setw(4) << std::setfill('0') << next_id++;
      Poi poi{id.str(), v.name, v.activity_types, round5(-118.45 + 0.4 * rng.unit()),
              round5(33.90 + 0.3 * rng.unit())};
      data.catalog.add(std::move(poi));
    };
    for (const auto& p : rules.profiles) {
      for (const auto& v : p.venues) add(v);
    }
    for (const auto& v : rules.common_venues) add(v);
    for (const auto& [id, poi] : data.catalog) poi_by_name[poi.name] = &poi;
  }

  const auto& income = manifest.categories(Attribute::Income);
  const auto& age = manifest.categories(Attribute::Age);
  const auto& education = manifest.categories(Attribute::Education);
  const int width = std::max<int>(4, static_cast<int>(std::to_string(options.n).size()));

  for (std::size_t i = 0; i < options.n; ++i) {
    std::ostringstream id;
    id << "agent_" << std::setw(width) << std::setfill('0') << (i + 1);
    DemographicLabel label;
    label.agent_id = id.str();
    label.income_bracket = income.at(i % income.size()).id;
    label.age_bracket = age.at((i / income.size()) % age.size()).id;
    label.education_level = education.at((i / (income.size() * age.size())) % education.size()).id;
    label.sex = i % 2 == 0 ? "F" : "M";

    const auto& rhythm = rules.profile(Attribute::Income, label.income_bracket);
    PinnedRng rng(mix(options.seed * 0x100000001B3ULL + i));
    std::size_t count = 0;

    for (std::size_t d = 0; d < options.weeks * 7; ++d) {
      const local_days day = options.first_monday + days{static_cast<int>(d)};
      const bool weekend = is_weekend(weekday{day});
      const auto k = rng.between(weekend ? rhythm.weekend_min : rhythm.weekday_min,
                                 weekend ? rhythm.weekend_max : rhythm.weekday_max);

      // Pick k distinct half-hour slots weighted by daypart.
      std::vector<double> weights(48);
      for (std::size_t s = 0; s < 48; ++s) {
        weights[s] = rhythm.daypart_weights[static_cast<std::size_t>(daypart_of_hour(static_cast<int>(s / 2)))];
      }
      std::vector<std::size_t> slots;
      for (std::int64_t v = 0; v < k; ++v) {
        const auto s = weighted_pick(rng, weights);
        if (weights[s] <= 0) break;
        weights[s] = 0;
        slots.push_back(s);
      }
      std::sort(slots.begin(), slots.end());

      for (std::size_t v = 0; v < slots.size(); ++v) {
        const std::int64_t start_min = static_cast<std::int64_t>(slots[v]) * 30 + rng.between(0, 9);
        const std::int64_t limit = v + 1 < slots.size()
                                       ? static_cast<std::int64_t>(slots[v + 1]) * 30 - 1
                                       : 24 * 60 - 1;
        const std::int64_t room = std::min<std::int64_t>(limit - start_min, 180);
        const std::int64_t minutes = rng.between(std::min<std::int64_t>(10, room), room);
        const std::int64_t extra_s = minutes > 1 ? rng.between(0, 59) : 30;
        const local_seconds start = day + std::chrono::minutes{start_min};
        const local_seconds end = start + std::chrono::minutes{minutes - 1} + seconds{extra_s};

        const auto& spec = pick_venue(rng, rules, manifest, label, options.sigma);
        const Poi* poi = poi_by_name.at(spec.name);
        data.stay_points.push_back({label.agent_id, manifest.timezone.to_utc(start),
                                    manifest.timezone.to_utc(end), poi->poi_id, poi->lon, poi->lat});
        ++count;
      }
    }
    data.visits_per_agent[label.agent_id] = count;
    data.labels.push_back(std::move(label));
  }
  return data;
}

void write_dataset(const SyntheticDataset& data, const SynthOptions& options,
                   const SynthRules& rules, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto paths = DatasetPaths::in_directory(dir);
  auto open = [](const std::filesystem::path& p) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error("cannot write " + p.string());
    return out;
  };
  {
    auto out = open(paths.stay_points);
    write_stay_points(out, data.stay_points);
  }
  {
    auto out = open(paths.pois);
    write_poi_catalog(out, data.catalog);
  }
  {
    auto out = open(paths.labels);
    write_labels(out, data.labels);
  }
  data.manifest.save(paths.manifest);

  nlohmann::json meta = {{"n", options.n},
                         {"seed", options.seed},
                         {"weeks", options.weeks},
                         {"sigma", options.sigma},
                         {"first_monday", format_date(options.first_monday)},
                         {"rng", PinnedRng::kAlgorithm},
                         {"rules_hash", rules.hash()},
                         {"rules", rules},
                         {"stay_points", data.stay_points.size()},
                         {"pois", data.catalog.size()}};
  auto out = open(dir / "synth_manifest.json");
  out << meta.dump(2) << "\n";
}

}  // namespace trajcot
