#pragma once

#include "grid.hpp"
#include "grid_map.hpp"

namespace patrol {

struct RewardParams {
  double c_norm = 200.0;  // idleness normalization constant, minutes
  double c_rp = 0.5;      // scale on the global patrol score
  double c_d = 10.0;      // scale on the difference reward (50 / max agents)
  double c_pb = 50.0;     // flat penalty for running the battery to zero
  double c_pbm = 20.0;    // slope numerator of the low-battery penalty
  double c_pbb = 1.0;     // intercept of the low-battery penalty
  double c_pc = 1.0;      // collision involvement penalty
  double b_l = 0.135;     // low-battery threshold, fraction of capacity

  static RewardParams with_max_agents(int max_agents) {
    RewardParams p;
    p.c_d = 50.0 / static_cast<double>(max_agents);
    return p;
  }
};

// f(i) = 1 - e^(-i / c_norm): maps idleness minutes into [0, 1), strictly
// increasing, f(0) = 0. Throws NegativeIdleness for i < 0.
double normalize_idleness(double idleness_minutes, double c_norm);

// Normalized idleness over the map: f applied to vertex cells; stations stay
// 0 (their idleness is pinned) and obstacles stay 0 so every entry lies in
// [0, 1).
Grid<double> normalized_idleness(const GridMap& map,
                                 const Grid<double>& idleness_minutes,
                                 double c_norm);

// Global patrol score R'_p = (2 - mean - max) / 2 over the normalized
// idleness of Vertex cells. 1 when everything was just visited, 0 at full
// saturation.
double patrol_score(const GridMap& map, const Grid<double>& normalized);

// R_p for agent k: R'_p * c_rp + (R'_p - R'_{p,-k}) * c_d, where the second
// matrix is the counterfactual with agent k's visit this step undone.
double patrol_reward(const GridMap& map, const Grid<double>& normalized_with_k,
                     const Grid<double>& normalized_without_k,
                     const RewardParams& params);

// R_b: -c_pb at empty battery, a linear term -(c_pbm / b_l) * b + c_pbb on
// (0, b_l], zero above the threshold. b is a fraction of capacity.
double battery_reward(double battery_fraction, const RewardParams& params);

// R_c: -c_pc for agents involved in a collision this step (winners of a
// contested cell included), 0 otherwise.
double collision_reward(bool involved, const RewardParams& params);

}  // namespace patrol
