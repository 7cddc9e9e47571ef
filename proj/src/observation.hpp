#pragma once

#include <vector>

#include "grid.hpp"
#include "grid_map.hpp"
#include "world.hpp"

namespace patrol {

// Cell markers used by the observation channels. The station indicator must
// stay above the largest value a location-plus-message cell can take
// (1 + kNumMessages) so the two are never confusable.
inline constexpr double kStationIndicator = 100.0;
inline constexpr double kObstacleIndicator = -1.0;
inline constexpr double kOwnLocationIndicator = 1.0;
inline constexpr double kOtherLocationIndicator = -2.0;

static_assert(kStationIndicator > 1.0 + kNumMessages);

// Stacked per-cell channels plus the flat values that skip the convolution
// and enter the first dense layer directly.
//
// Actor views carry 4 channels (structure, normalized idleness, locations,
// messages) plus battery_scalar and action_mask. Critic views carry 2
// channels (structure, normalized idleness) plus the padded battery_vector
// and location_list; messages and per-agent masks are actor-side only.
struct ObservationView {
  std::vector<Grid<double>> channels;
  double battery_scalar = 0.0;         // own battery as a fraction of capacity
  std::vector<double> battery_vector;  // one fraction per slot up to max_agents
  std::vector<double> location_list;   // (row, col) pairs normalized by map size
  ActionMask action_mask{};

  // The dense-layer tail in its contract order: actor views yield
  // {battery_scalar, mask...}, critic views yield
  // {battery_vector..., location_list...}.
  std::vector<double> extras() const;
  int conv_channels() const { return static_cast<int>(channels.size()); }
};

// Per-agent actor input. messages holds one entry per agent slot: 0 for "no
// message yet" (the communication pass observes an all-zero channel) or a
// value in 1..16. The viewing agent sees its own message positive and every
// other active agent's message negated.
ObservationView encode_actor_view(const GridMap& map, const World& world,
                                  int agent, const std::vector<int>& messages,
                                  double c_norm);

// Global critic input. Slots of swapping/failed agents and slots beyond the
// current agent count read as vacant: battery 1.0 and a charging-station
// location (a swapping agent reports the station absorbing it).
ObservationView encode_critic_view(const GridMap& map, const World& world,
                                   int max_agents, double c_norm);

// Snapshot overloads: identical encodings computed from stored state instead
// of a live world, so trainers can replay recorded steps bit-exactly.
ObservationView encode_actor_view(const GridMap& map,
                                  const std::vector<AgentState>& agents,
                                  const Grid<double>& idleness, double b_max,
                                  int agent, const std::vector<int>& messages,
                                  double c_norm);
ObservationView encode_critic_view(const GridMap& map,
                                   const std::vector<AgentState>& agents,
                                   const Grid<double>& idleness, double b_max,
                                   int max_agents, double c_norm);

}  // namespace patrol
