#include "rewards.hpp"

#include <algorithm>
#include <cmath>

#include "error.hpp"

namespace patrol {

double normalize_idleness(double idleness_minutes, double c_norm) {
  if (idleness_minutes < 0.0)
    fail(Err::negative_idleness, "idleness must be non-negative");
  return -std::expm1(-idleness_minutes / c_norm);
}

Grid<double> normalized_idleness(const GridMap& map,
                                 const Grid<double>& idleness_minutes,
                                 double c_norm) {
  Grid<double> out(map.height(), map.width(), 0.0);
  for (Coord v : map.vertices())
    out.at(v) = normalize_idleness(std::max(0.0, idleness_minutes.at(v)), c_norm);
  return out;
}

double patrol_score(const GridMap& map, const Grid<double>& normalized) {
  if (normalized.height() != map.height() || normalized.width() != map.width())
    fail(Err::shape_mismatch, "normalized idleness shape differs from map");
  double sum = 0.0;
  double peak = 0.0;
  for (Coord v : map.vertices()) {
    sum += normalized.at(v);
    peak = std::max(peak, normalized.at(v));
  }
  double mean = sum / static_cast<double>(map.vertices().size());
  return (2.0 - mean - peak) / 2.0;
}

double patrol_reward(const GridMap& map, const Grid<double>& normalized_with_k,
                     const Grid<double>& normalized_without_k,
                     const RewardParams& params) {
  double with_k = patrol_score(map, normalized_with_k);
  double without_k = patrol_score(map, normalized_without_k);
  double difference = with_k - without_k;
  return with_k * params.c_rp + difference * params.c_d;
}

double battery_reward(double battery_fraction, const RewardParams& params) {
  if (battery_fraction < 0.0 || battery_fraction > 1.0)
    fail(Err::out_of_range, "battery fraction outside [0, 1]");
  if (battery_fraction == 0.0) return -params.c_pb;
  if (battery_fraction <= params.b_l)
    return -(params.c_pbm / params.b_l) * battery_fraction + params.c_pbb;
  return 0.0;
}

double collision_reward(bool involved, const RewardParams& params) {
  return involved ? -params.c_pc : 0.0;
}

}  // namespace patrol
