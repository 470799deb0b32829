#include <benchmark/benchmark.h>

#include "trajcot/narrative.hpp"
#include "trajcot/synth.hpp"

using namespace trajcot;

namespace {

std::vector<AgentWeek> sample_weeks() {
  SynthOptions o;
  o.n = 1;
  o.weeks = 4;
  const auto d = generate_agents(o, SynthRules::defaults());
  const auto joined = join_visits(d.stay_points, d.catalog);
  return partition_weeks(joined.visits_by_agent.begin()->second, d.manifest.timezone);
}

void BM_RenderChronicle(benchmark::State& state) {
  const auto weeks = sample_weeks();
  const auto tz = TimeZone::utc();
  for (auto _ : state) benchmark::DoNotOptimize(render_chronicle(weeks.front(), tz));
}
BENCHMARK(BM_RenderChronicle);

void BM_BuildNarrative(benchmark::State& state) {
  const auto weeks = sample_weeks();
  const auto tz = TimeZone::utc();
  for (auto _ : state) benchmark::DoNotOptimize(join_narratives(build_narrative(weeks, 24000, tz)));
}
BENCHMARK(BM_BuildNarrative);

}  // namespace
