#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "grid_map.hpp"
#include "harness/episode.hpp"
#include "harness/metrics.hpp"
#include "json.hpp"
#include "world.hpp"

namespace patrol::harness {

// Repeat-run settings shared by simulate/evaluate/compare.
struct SimulateOptions {
  int episodes = 10;
  int horizon = 14400;
  int n_agents = 1;
  int burnin = 0;
  uint64_t seed = 1;
  bool require_success = false;  // drop episodes with battery failures
  int workers = 0;               // 0 = hardware concurrency
  bool write_events = false;     // events.jsonl (per step; large)
  bool write_csv = false;        // steps.csv for external plotting
};

struct SimulationResult {
  std::string strategy_name;
  std::vector<int> episode_indices;     // kept episodes, original order
  std::vector<uint64_t> episode_seeds;  // aligned with episode_indices
  std::vector<EpisodeMetrics> episodes; // aligned with episode_indices
  int discarded = 0;                    // filtered out by require_success
  AggregateReport report;

  nlohmann::json metrics_json(const SimulateOptions& opt) const;
  nlohmann::json episode_json(size_t kept_index) const;
};

// Runs opt.episodes seeded episodes of one strategy, fanned out over a
// worker pool (episode i is driven entirely by the i-th pre-drawn seed, so
// results do not depend on scheduling), folds them into an aggregate, and —
// when out_dir is non-empty — writes metrics.json, episodes.jsonl and the
// optional events.jsonl / steps.csv. Episode seeds depend only on opt.seed
// and the index, never on the strategy, so compared strategies face the
// same initial worlds.
SimulationResult simulate(std::shared_ptr<const GridMap> map,
                          const EnvParams& env, const StrategySpec& strategy,
                          const SimulateOptions& opt,
                          const std::string& out_dir);

// simulate() once per strategy with identical options; when out_dir is
// non-empty writes compare.json holding one aggregate row per strategy.
std::vector<SimulationResult> compare(
    std::shared_ptr<const GridMap> map, const EnvParams& env,
    const std::vector<StrategySpec>& strategies, const SimulateOptions& opt,
    const std::string& out_dir);

}  // namespace patrol::harness
