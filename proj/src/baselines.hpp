#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "grid.hpp"
#include "grid_map.hpp"
#include "shortest_path.hpp"
#include "world.hpp"

namespace patrol {

// Knobs shared by the classical strategies.
struct BaselineParams {
  double b_l = 0.135;    // battery fraction that triggers the charging run
  double theta = 0.5;    // gain temperature of the Bayesian scorer
  double kappa = 0.02;   // posterior discount for vertices claimed by others
  double c_norm = 200.0; // idleness normalization constant, minutes
};

// One message + one action per agent slot, ready to feed World::step.
// Classical strategies have nothing to say, so they broadcast message 1.
struct JointDecision {
  std::vector<int> messages;
  std::vector<int> actions;
};

// A per-step decision source. reset() is called once with the freshly reset
// world before the first decide().
class Strategy {
 public:
  virtual ~Strategy() = default;
  virtual void reset(const World& world) = 0;
  virtual JointDecision decide(const World& world) = 0;
  virtual std::string name() const = 0;
};

// --- Conscientious Reactive -------------------------------------------------

// Greedy: move to the mask-valid neighbor with the highest idleness; ties
// break by the fixed action order; Stay only when no movement is valid.
int cr_next_action(const World& world, int agent);

// --- Partitioning ------------------------------------------------------------

struct PartitionAssignment {
  Grid<int> region_of;  // region id per Vertex cell, -1 elsewhere
  std::vector<std::vector<Coord>> regions;  // region id -> its vertices
  // regions[i] and regions[j] share boundary_[i][j] directly adjacent
  // vertex pairs; used to pick merge targets when an owner goes offline.
  std::vector<std::vector<int>> boundary;
};

// Splits the Vertex cells into n connected regions of near-equal size
// (max - min <= 1, and 0 when n divides the vertex count) via seeded
// farthest-point region growing plus boundary-transfer repair. A region
// counts as connected when its vertices form one component in the subgraph
// of (own vertices + stations): stations are shared corridors. Throws
// PartitionFailure when bounded repair cannot satisfy the invariants.
PartitionAssignment partition_map(const GridMap& map, int n_agents,
                                  uint64_t seed);

// CR restricted to the agent's working set (the union of the regions listed
// in working_regions); outside it, the first hop of a shortest path back.
int part_next_action(const World& world, int agent,
                     const PartitionAssignment& assignment,
                     const std::vector<int>& working_regions);

// Region ids each active agent patrols this step: its own region plus any
// region whose owner is offline and whose shared boundary with this agent's
// region is the longest among active agents (distance breaks boundary ties,
// lower id breaks exact ties).
std::vector<std::vector<int>> merged_working_sets(
    const World& world, const PartitionAssignment& assignment);

// --- State-Exchange Bayesian ------------------------------------------------

struct SebsChoice {
  int action = static_cast<int>(Action::Stay);
  Coord intention{-1, -1};  // target cell broadcast to the other agents
};

// Scores every mask-valid movement target v with
//   posterior(v) = (1 - e^(-g(v)/theta)) * kappa^[v claimed by another agent]
// where g(v) = f(idleness(v)) * (1 + priority(v)), picks the argmax (fixed
// action order on ties), and declares the chosen target. Stay only when no
// movement is valid.
SebsChoice sebs_next_action(const World& world, int agent,
                            const std::vector<Coord>& shared_intentions,
                            const BaselineParams& params);

// --- Charging policy ---------------------------------------------------------

struct ChargingState {
  bool committed = false;  // once true, head for the station until the swap
  int blocked_streak = 0;
  bool detouring = false;
  int detour_anchor = -1;  // station distance when the detour began
  Coord last_position{-1, -1};
  int last_action = static_cast<int>(Action::Stay);
};

// Returns the override action when the battery requires a charging run:
// commit when battery fraction <= b_l + steps_to_station * drain_max / b_max,
// then follow the station field. When a hop is denied two steps in a row the
// agent detours, planning around the other active agents' current cells each
// step until it stands strictly closer to a station than where the detour
// began (one re-plan would oscillate: the static field immediately pulls it
// back into the same block). station_field must be the
// distances_from(map, map.stations()) field. Throws NoPathToStation if the
// agent stands on a cell the stations cannot reach.
std::optional<int> charging_policy(const World& world, int agent,
                                   const DistanceField& station_field,
                                   ChargingState& state,
                                   const BaselineParams& params);

// --- Strategy objects ---------------------------------------------------------

std::unique_ptr<Strategy> make_cr_strategy(const BaselineParams& params);
std::unique_ptr<Strategy> make_part_strategy(const BaselineParams& params,
                                             uint64_t partition_seed);
std::unique_ptr<Strategy> make_sebs_strategy(const BaselineParams& params);

}  // namespace patrol
