#include "shortest_path.hpp"

#include <queue>

#include "error.hpp"

namespace patrol {

DistanceField distances_from(const GridMap& map,
                             const std::vector<Coord>& sources,
                             const Grid<uint8_t>* blocked) {
  if (blocked != nullptr && (blocked->height() != map.height() ||
                             blocked->width() != map.width()))
    fail(Err::shape_mismatch, "blocked mask shape differs from map");

  auto passable = [&](Coord c) {
    return map.walkable(c) && (blocked == nullptr || !blocked->at(c));
  };

  DistanceField field;
  field.distance = Grid<int>(map.height(), map.width(), -1);
  field.step = Grid<int8_t>(map.height(), map.width(), -1);

  std::queue<Coord> queue;
  for (Coord s : sources) {
    if (!passable(s) || field.distance.at(s) == 0) continue;
    field.distance.at(s) = 0;
    queue.push(s);
  }
  while (!queue.empty()) {
    Coord c = queue.front();
    queue.pop();
    for (int a = 0; a < kNumMoveActions; ++a) {
      Coord d = action_delta(static_cast<Action>(a));
      Coord n{c.row + d.row, c.col + d.col};
      if (!passable(n) || field.distance.at(n) >= 0) continue;
      field.distance.at(n) = field.distance.at(c) + 1;
      queue.push(n);
    }
  }

  // Downhill step: the first movement action (fixed order) whose target is
  // one step closer to a source.
  for (int r = 0; r < map.height(); ++r)
    for (int c = 0; c < map.width(); ++c) {
      int dist = field.distance.at(r, c);
      if (dist <= 0) continue;
      for (int a = 0; a < kNumMoveActions; ++a) {
        Coord d = action_delta(static_cast<Action>(a));
        Coord n{r + d.row, c + d.col};
        if (map.in_bounds(n) && field.distance.at(n) == dist - 1) {
          field.step.at(r, c) = static_cast<int8_t>(a);
          break;
        }
      }
    }
  return field;
}

}  // namespace patrol
