#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "grid.hpp"

namespace patrol {

enum class CellKind : uint8_t { Vertex = 0, Obstacle = 1, Station = 2 };

// Movement actions in fixed order; Stay last. The order is part of the
// contract: action masks, tie-breaking and policy heads all use it.
enum class Action : uint8_t { Up = 0, Down = 1, Left = 2, Right = 3, Stay = 4 };

constexpr int kNumActions = 5;
constexpr int kNumMoveActions = 4;

inline Coord action_delta(Action a) {
  switch (a) {
    case Action::Up: return {-1, 0};
    case Action::Down: return {1, 0};
    case Action::Left: return {0, -1};
    case Action::Right: return {0, 1};
    case Action::Stay: return {0, 0};
  }
  return {0, 0};
}

inline const char* action_name(Action a) {
  switch (a) {
    case Action::Up: return "up";
    case Action::Down: return "down";
    case Action::Left: return "left";
    case Action::Right: return "right";
    case Action::Stay: return "stay";
  }
  return "?";
}

using ActionMask = std::array<bool, kNumActions>;

// Static patrolling map: cell kinds plus per-vertex visit priorities.
// Immutable after construction and freely shareable across threads.
class GridMap {
 public:
  GridMap(Grid<CellKind> cells, Grid<int> priority, double cell_edge_meters = 50.0);

  int height() const { return cells_.height(); }
  int width() const { return cells_.width(); }
  double cell_edge_meters() const { return cell_edge_meters_; }

  CellKind kind(int row, int col) const { return cells_.at(row, col); }
  CellKind kind(Coord c) const { return cells_.at(c); }
  int priority(int row, int col) const { return priority_.at(row, col); }
  int priority(Coord c) const { return priority_.at(c); }
  bool in_bounds(Coord c) const { return cells_.in_bounds(c); }

  bool walkable(Coord c) const {
    return cells_.in_bounds(c) && cells_.at(c) != CellKind::Obstacle;
  }
  bool is_vertex(Coord c) const {
    return cells_.in_bounds(c) && cells_.at(c) == CellKind::Vertex;
  }
  bool is_station(Coord c) const {
    return cells_.in_bounds(c) && cells_.at(c) == CellKind::Station;
  }

  const std::vector<Coord>& vertices() const { return vertices_; }
  const std::vector<Coord>& stations() const { return stations_; }
  size_t walkable_count() const { return vertices_.size() + stations_.size(); }

  const Grid<CellKind>& cells() const { return cells_; }
  const Grid<int>& priorities() const { return priority_; }

 private:
  Grid<CellKind> cells_;
  Grid<int> priority_;
  double cell_edge_meters_;
  std::vector<Coord> vertices_;
  std::vector<Coord> stations_;
};

// Parses the text map format: '.' priority-0 vertex, '1'..'9' prioritized
// vertex, '#' obstacle, 'C' charging station; ';' starts a comment line.
// Throws Error with the offending row/column for UnknownGlyph,
// NonRectangular, NoStation, NoVertex and DisconnectedGraph.
GridMap parse_map(const std::string& text);

// parse_map over a file's contents; throws IO when the file is unreadable.
GridMap load_map(const std::string& path);

// Inverse of parse_map up to comments/blank lines.
std::string render_map(const GridMap& map);

struct MapGenOptions {
  int width = 8;
  int height = 8;
  double obstacle_density = 0.2;
  double priority_density = 0.1;
  int max_priority = 9;
  int stations = 1;
};

// Random connected map with at least one station; rejection-samples obstacle
// layouts until the walkable cells form one 4-connected component.
GridMap generate_map(const MapGenOptions& options, uint64_t seed);

// Validity of each action from (row, col): target in bounds and not an
// obstacle; Stay always valid. Occupancy by other agents is deliberately not
// masked — collision avoidance is the learning problem, not a mask rule.
ActionMask action_mask_at(const GridMap& map, Coord pos);

inline int mask_popcount(const ActionMask& m) {
  int n = 0;
  for (bool b : m) n += b ? 1 : 0;
  return n;
}

}  // namespace patrol
