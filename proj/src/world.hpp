#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "grid.hpp"
#include "grid_map.hpp"
#include "rng.hpp"

namespace patrol {

// Size of the discrete message alphabet agents broadcast each step.
constexpr int kNumMessages = 16;

struct EnvParams {
  double b_max = 550.0;            // battery capacity in step-units
  int b_swap_min = 80;             // hot-swap delay, inclusive step range
  int b_swap_max = 150;
  double b_init_min = 0.90;        // initial battery as fraction of b_max
  double b_init_max = 1.00;
  double p_dyn_max = 0.05;         // per-agent perturbation level upper bound
  double dt_minutes = 0.1;         // base step duration
  double duration_multiplier_max = 1.2;
  double drain_min = 0.9;          // per-step battery drain in step-units
  double drain_max = 1.1;

  enum class InitIdleness { Zero, Saturated };
  InitIdleness init_idleness = InitIdleness::Zero;
  // Idleness assigned to vertices in Saturated mode. 10x the default
  // normalization constant, which puts f(i) within 5e-5 of 1.
  double saturated_idleness_minutes = 2000.0;
};

enum class AgentStatus : uint8_t { Active, Swapping, Failed };

struct AgentState {
  int id = 0;
  Coord location{0, 0};
  double battery = 0.0;  // step-units remaining, in [0, b_max]
  AgentStatus status = AgentStatus::Active;
  int swap_remaining = 0;       // steps left while Swapping
  Coord swap_station{-1, -1};   // station that absorbed the agent
  double p_dyn = 0.0;           // episode-constant perturbation probability
  int last_message = 0;         // 1..16, or 0 before the first step

  bool active() const { return status == AgentStatus::Active; }
};

enum class EventKind : uint8_t {
  Moved,
  Bounced,
  StartedSwap,
  Redeployed,
  BatteryFailed,
};

const char* event_name(EventKind kind);

struct AgentEvent {
  int agent = 0;
  EventKind kind = EventKind::Moved;
};

struct StepOutcome {
  double duration_minutes = 0.0;
  int collisions = 0;  // number of bounced agents this step
  std::vector<AgentEvent> events;
  // Indexed by agent slot:
  std::vector<uint8_t> involved_in_collision;  // contested a cell (winner too)
  std::vector<uint8_t> bounced;
  std::vector<uint8_t> perturbed;
  // Idleness (minutes) each active agent's final cell held after this step's
  // growth and before the agent zeroed it; -1 for non-active slots. This is
  // the counterfactual input for the difference reward.
  std::vector<double> pre_visit_idleness;
};

// Outcome of pure intent resolution, agent slots aligned with the inputs.
struct ConflictResult {
  std::vector<Coord> final_pos;
  std::vector<uint8_t> bounced;
  std::vector<uint8_t> involved;
  int collisions = 0;
};

// Resolves simultaneous movement intents. For each contested cell one
// uniformly random contender wins and the rest bounce back to their origin;
// an agent standing on (or bounced back to) a cell always keeps it. Two
// agents exchanging cells bounce both. Bounces cascade until no cell holds
// more than one agent.
//
// Draw order: rounds over the contested cells in row-major order; within a
// cell, contenders are ordered by slot index and one rng.index(k) picks the
// winner (no draw when an origin-holder wins).
ConflictResult resolve_conflicts(const std::vector<Coord>& origins,
                                 const std::vector<Coord>& targets, Rng& rng);

// Lockstep patrolling world. One instance is confined to a single episode
// worker; parallel episodes use independent instances and seeds.
//
// All randomness flows through the owned rng in a fixed documented order
// (see step() in world.cpp), which is what makes seeded episodes bit-exact
// reproducible and lets the test-suite oracle replay them.
class World {
 public:
  World(std::shared_ptr<const GridMap> map, int n_agents,
        const EnvParams& params, uint64_t seed);

  // Fixture constructor: places agents at given coordinates with given
  // battery step-units and zero perturbation probability by default.
  World(std::shared_ptr<const GridMap> map,
        const std::vector<Coord>& placements,
        const std::vector<double>& batteries, const EnvParams& params,
        uint64_t seed);

  // messages[i] in 1..16 and actions[i] mask-valid, for every *active* slot
  // (entries of inactive slots are ignored).
  StepOutcome step(const std::vector<int>& messages,
                   const std::vector<int>& actions);

  ActionMask valid_actions(int agent) const;  // throws UnknownAgent

  const GridMap& map() const { return *map_; }
  std::shared_ptr<const GridMap> map_ptr() const { return map_; }
  const EnvParams& params() const { return params_; }
  const Grid<double>& idleness() const { return idleness_; }
  double clock_minutes() const { return clock_minutes_; }
  int step_index() const { return step_index_; }
  const std::vector<AgentState>& agents() const { return agents_; }
  int n_agents() const { return static_cast<int>(agents_.size()); }
  int active_count() const;

  // Battery fraction samples captured when agents entered hot-swap.
  const std::vector<double>& recharge_samples() const {
    return recharge_samples_;
  }
  int battery_failures() const { return battery_failures_; }

  // Mean and max idleness over Vertex cells (stations and obstacles carry
  // pinned values and are excluded from both).
  double idleness_mean() const;
  double idleness_max() const;

  // Test hook: overrides an agent's perturbation probability.
  void set_agent_p_dyn(int agent, double p_dyn);

 private:
  void init_idleness();
  void zero_under_active_agents();

  std::shared_ptr<const GridMap> map_;
  EnvParams params_;
  Grid<double> idleness_;  // minutes; obstacles pinned -1, stations pinned 0
  double clock_minutes_ = 0.0;
  int step_index_ = 0;
  std::vector<AgentState> agents_;
  Rng rng_;
  std::vector<double> recharge_samples_;
  int battery_failures_ = 0;
};

// Spec-named constructor: agents on distinct random vertices with battery
// uniform in [b_init_min, b_init_max] * b_max.
World reset(std::shared_ptr<const GridMap> map, int n_agents,
            const EnvParams& params, uint64_t seed);

}  // namespace patrol
