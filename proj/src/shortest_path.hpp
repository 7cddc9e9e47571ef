#pragma once

#include <cstdint>
#include <vector>

#include "grid.hpp"
#include "grid_map.hpp"

namespace patrol {

// Breadth-first distance field over the 4-connected non-obstacle grid.
// distance = steps to the nearest source (-1 for obstacles, blocked or
// unreachable cells); step = the action index moving one cell closer to a
// source (-1 on sources and unreachable cells), ties broken by the fixed
// action order so paths are reproducible.
struct DistanceField {
  Grid<int> distance;
  Grid<int8_t> step;

  bool reachable(Coord c) const { return distance.at(c) >= 0; }
};

// blocked, when given, marks additional cells to treat as obstacles for this
// query (used to route around other agents); entries must be 0 or 1.
DistanceField distances_from(const GridMap& map,
                             const std::vector<Coord>& sources,
                             const Grid<uint8_t>* blocked = nullptr);

}  // namespace patrol
