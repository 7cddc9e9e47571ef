#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "baselines.hpp"
#include "grid_map.hpp"
#include "harness/metrics.hpp"
#include "world.hpp"

namespace patrol::harness {

// Which decision source drives an episode. The classical strategies are
// parameterized by BaselineParams; "rl" loads a trained actor checkpoint and
// needs the dense/GRU widths it was trained with (checkpoints store weights,
// not architecture — copy the widths from the run's config.json).
struct StrategySpec {
  std::string kind = "cr";  // cr | part | sebs | rl
  BaselineParams baseline{};
  std::string checkpoint;
  int dense1 = 512;
  int dense2 = 341;
  int dense3 = 227;
  int gru = 227;
  double c_norm = 200.0;  // observation normalization for the rl actor
};

struct RunSpec {
  StrategySpec strategy;
  int n_agents = 1;
  int horizon = 14400;
  int burnin = 0;  // steps excluded from the idleness means
  uint64_t seed = 1;
};

// One line of the per-step event log: everything needed to recompute the
// episode metrics without rerunning the simulation.
struct StepEvent {
  int step = 0;
  double duration_minutes = 0.0;
  double clock_minutes = 0.0;
  double mean_idleness = 0.0;
  double max_idleness = 0.0;
  int active_agents = 0;
  int collisions = 0;
  std::vector<std::pair<int, std::string>> agent_events;  // (agent, kind)
};

using EventSink = std::function<void(const StepEvent&)>;

// Builds the decision source named by the spec. The rl strategy samples both
// heads with its own seeded generator, mirroring the trainer's two-pass
// messaging (communication pass over an empty message channel, then the
// movement pass over the freshly sampled messages); part derives its
// partition from the same seed. Throws BadConfig for an unknown kind.
std::unique_ptr<Strategy> make_strategy(const StrategySpec& spec,
                                        const GridMap& map, uint64_t seed);

// Runs one seeded episode to completion and returns its metrics; when a sink
// is given it receives one StepEvent per step. The seed splits into
// independent world and strategy streams, so equal seeds reproduce the run
// bit-exactly. Throws InvalidHorizon for horizon < 1 or burnin >= horizon.
EpisodeMetrics run_episode(std::shared_ptr<const GridMap> map,
                           const EnvParams& env, const RunSpec& spec,
                           const EventSink& sink = {});

}  // namespace patrol::harness
