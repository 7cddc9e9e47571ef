#include "grid_map.hpp"

#include <algorithm>
#include <fstream>
#include <queue>
#include <sstream>

#include "error.hpp"
#include "rng.hpp"

namespace patrol {

namespace {

// BFS over walkable cells; returns number reached from `start`.
size_t count_reachable(const Grid<CellKind>& cells, Coord start) {
  Grid<uint8_t> seen(cells.height(), cells.width(), 0);
  std::queue<Coord> queue;
  queue.push(start);
  seen.at(start) = 1;
  size_t reached = 0;
  while (!queue.empty()) {
    Coord c = queue.front();
    queue.pop();
    ++reached;
    const Coord deltas[4] = {{-1, 0}, {1, 0}, {0, -1}, {0, 1}};
    for (Coord d : deltas) {
      Coord n{c.row + d.row, c.col + d.col};
      if (!cells.in_bounds(n) || seen.at(n) || cells.at(n) == CellKind::Obstacle)
        continue;
      seen.at(n) = 1;
      queue.push(n);
    }
  }
  return reached;
}

void validate(const Grid<CellKind>& cells) {
  Coord first_walkable{-1, -1};
  size_t walkable = 0, stations = 0, vertices = 0;
  for (int r = 0; r < cells.height(); ++r) {
    for (int c = 0; c < cells.width(); ++c) {
      CellKind k = cells.at(r, c);
      if (k == CellKind::Obstacle) continue;
      ++walkable;
      if (first_walkable.row < 0) first_walkable = {r, c};
      if (k == CellKind::Station) ++stations;
      if (k == CellKind::Vertex) ++vertices;
    }
  }
  if (stations == 0)
    fail(Err::no_station, "map has no charging station ('C') cell");
  if (vertices == 0) fail(Err::no_vertex, "map has no patrollable vertex cell");
  if (count_reachable(cells, first_walkable) != walkable) {
    // Report one unreachable cell to make the message actionable.
    Grid<uint8_t> seen(cells.height(), cells.width(), 0);
    std::queue<Coord> queue;
    queue.push(first_walkable);
    seen.at(first_walkable) = 1;
    while (!queue.empty()) {
      Coord c = queue.front();
      queue.pop();
      const Coord deltas[4] = {{-1, 0}, {1, 0}, {0, -1}, {0, 1}};
      for (Coord d : deltas) {
        Coord n{c.row + d.row, c.col + d.col};
        if (!cells.in_bounds(n) || seen.at(n) ||
            cells.at(n) == CellKind::Obstacle)
          continue;
        seen.at(n) = 1;
        queue.push(n);
      }
    }
    for (int r = 0; r < cells.height(); ++r)
      for (int c = 0; c < cells.width(); ++c)
        if (cells.at(r, c) != CellKind::Obstacle && !seen.at(r, c)) {
          std::ostringstream msg;
          msg << "walkable cells are not 4-connected: cell at row " << r
              << ", col " << c << " is unreachable";
          fail(Err::disconnected_graph, msg.str());
        }
  }
}

}  // namespace

GridMap::GridMap(Grid<CellKind> cells, Grid<int> priority,
                 double cell_edge_meters)
    : cells_(std::move(cells)), priority_(std::move(priority)),
      cell_edge_meters_(cell_edge_meters) {
  validate(cells_);
  for (int r = 0; r < cells_.height(); ++r)
    for (int c = 0; c < cells_.width(); ++c) {
      if (cells_.at(r, c) == CellKind::Vertex) vertices_.push_back({r, c});
      if (cells_.at(r, c) == CellKind::Station) stations_.push_back({r, c});
    }
}

GridMap parse_map(const std::string& text) {
  std::vector<std::string> rows;
  std::istringstream in(text);
  std::string line;
  int source_line = 0;
  std::vector<int> source_lines;
  while (std::getline(in, line)) {
    ++source_line;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == ';') continue;
    rows.push_back(line);
    source_lines.push_back(source_line);
  }
  if (rows.empty()) fail(Err::no_vertex, "map text contains no rows");

  const size_t width = rows[0].size();
  for (size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != width) {
      std::ostringstream msg;
      msg << "row " << i << " (line " << source_lines[i] << ") has length "
          << rows[i].size() << ", expected " << width;
      fail(Err::non_rectangular, msg.str());
    }
  }

  Grid<CellKind> cells(static_cast<int>(rows.size()), static_cast<int>(width));
  Grid<int> priority(static_cast<int>(rows.size()), static_cast<int>(width));
  for (int r = 0; r < cells.height(); ++r) {
    for (int c = 0; c < cells.width(); ++c) {
      char glyph = rows[r][static_cast<size_t>(c)];
      if (glyph == '.') {
        cells.at(r, c) = CellKind::Vertex;
        priority.at(r, c) = 0;
      } else if (glyph >= '1' && glyph <= '9') {
        cells.at(r, c) = CellKind::Vertex;
        priority.at(r, c) = glyph - '0';
      } else if (glyph == '#') {
        cells.at(r, c) = CellKind::Obstacle;
        priority.at(r, c) = -1;
      } else if (glyph == 'C') {
        cells.at(r, c) = CellKind::Station;
        priority.at(r, c) = 0;
      } else {
        std::ostringstream msg;
        msg << "unknown glyph '" << glyph << "' at row " << r << ", col " << c;
        fail(Err::unknown_glyph, msg.str());
      }
    }
  }
  return GridMap(std::move(cells), std::move(priority));
}

GridMap load_map(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Err::io, "cannot open map file " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_map(text.str());
}

std::string render_map(const GridMap& map) {
  std::string out;
  out.reserve(static_cast<size_t>(map.height()) * (map.width() + 1));
  for (int r = 0; r < map.height(); ++r) {
    for (int c = 0; c < map.width(); ++c) {
      switch (map.kind(r, c)) {
        case CellKind::Obstacle: out += '#'; break;
        case CellKind::Station: out += 'C'; break;
        case CellKind::Vertex: {
          int p = map.priority(r, c);
          out += p == 0 ? '.' : static_cast<char>('0' + p);
          break;
        }
      }
    }
    out += '\n';
  }
  return out;
}

GridMap generate_map(const MapGenOptions& options, uint64_t seed) {
  if (options.width < 2 || options.height < 1)
    fail(Err::invalid_argument, "generated maps need at least 1x2 cells");
  if (options.stations < 1)
    fail(Err::invalid_argument, "generated maps need at least one station");
  Rng rng(seed);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    Grid<CellKind> cells(options.height, options.width, CellKind::Vertex);
    Grid<int> priority(options.height, options.width, 0);
    for (int r = 0; r < options.height; ++r)
      for (int c = 0; c < options.width; ++c) {
        if (rng.bernoulli(options.obstacle_density)) {
          cells.at(r, c) = CellKind::Obstacle;
          priority.at(r, c) = -1;
        } else if (rng.bernoulli(options.priority_density)) {
          priority.at(r, c) =
              static_cast<int>(rng.int_range(1, options.max_priority));
        }
      }
    std::vector<Coord> open;
    for (int r = 0; r < options.height; ++r)
      for (int c = 0; c < options.width; ++c)
        if (cells.at(r, c) != CellKind::Obstacle) open.push_back({r, c});
    if (open.size() < static_cast<size_t>(options.stations) + 1) continue;
    // Place stations on distinct open cells.
    for (int s = 0; s < options.stations; ++s) {
      size_t pick = rng.index(open.size());
      Coord station = open[pick];
      open.erase(open.begin() + static_cast<long>(pick));
      cells.at(station) = CellKind::Station;
      priority.at(station) = 0;
    }
    size_t walkable = 0;
    Coord start{-1, -1};
    for (int r = 0; r < options.height; ++r)
      for (int c = 0; c < options.width; ++c)
        if (cells.at(r, c) != CellKind::Obstacle) {
          ++walkable;
          if (start.row < 0) start = {r, c};
        }
    if (count_reachable(cells, start) != walkable) continue;
    bool has_vertex = false;
    for (int r = 0; r < options.height && !has_vertex; ++r)
      for (int c = 0; c < options.width && !has_vertex; ++c)
        has_vertex = cells.at(r, c) == CellKind::Vertex;
    if (!has_vertex) continue;
    return GridMap(std::move(cells), std::move(priority));
  }
  fail(Err::internal, "map generation did not produce a connected layout");
}

ActionMask action_mask_at(const GridMap& map, Coord pos) {
  ActionMask mask{};
  for (int a = 0; a < kNumActions; ++a) {
    Coord d = action_delta(static_cast<Action>(a));
    Coord target{pos.row + d.row, pos.col + d.col};
    mask[static_cast<size_t>(a)] = map.walkable(target);
  }
  mask[static_cast<size_t>(Action::Stay)] = true;
  return mask;
}

}  // namespace patrol
