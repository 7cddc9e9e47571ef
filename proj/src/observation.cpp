#include "observation.hpp"

#include <string>

#include "error.hpp"
#include "rewards.hpp"

namespace patrol {

std::vector<double> ObservationView::extras() const {
  std::vector<double> out;
  if (battery_vector.empty()) {
    out.reserve(1 + kNumActions);
    out.push_back(battery_scalar);
    for (bool b : action_mask) out.push_back(b ? 1.0 : 0.0);
  } else {
    out.reserve(battery_vector.size() + location_list.size());
    out.insert(out.end(), battery_vector.begin(), battery_vector.end());
    out.insert(out.end(), location_list.begin(), location_list.end());
  }
  return out;
}

namespace {

Grid<double> structure_channel(const GridMap& map) {
  Grid<double> out(map.height(), map.width(), 0.0);
  for (int r = 0; r < map.height(); ++r)
    for (int c = 0; c < map.width(); ++c) {
      switch (map.kind(r, c)) {
        case CellKind::Vertex: break;
        case CellKind::Obstacle: out.at(r, c) = kObstacleIndicator; break;
        case CellKind::Station: out.at(r, c) = kStationIndicator; break;
      }
    }
  return out;
}

void check_shape(const GridMap& map, const Grid<double>& idleness) {
  if (idleness.height() != map.height() || idleness.width() != map.width())
    fail(Err::shape_mismatch, "map and idleness dimensions differ");
}

}  // namespace

ObservationView encode_actor_view(const GridMap& map,
                                  const std::vector<AgentState>& agents,
                                  const Grid<double>& idleness, double b_max,
                                  int agent, const std::vector<int>& messages,
                                  double c_norm) {
  check_shape(map, idleness);
  const int n_agents = static_cast<int>(agents.size());
  if (agent < 0 || agent >= n_agents)
    fail(Err::unknown_agent, "no agent slot " + std::to_string(agent));
  if (!agents[static_cast<size_t>(agent)].active())
    fail(Err::invalid_argument,
         "agent " + std::to_string(agent) + " is not active");
  if (messages.size() != agents.size())
    fail(Err::length_mismatch, "messages must have one entry per agent slot");
  for (size_t i = 0; i < messages.size(); ++i) {
    if (!agents[i].active()) continue;
    if (messages[i] < 0 || messages[i] > kNumMessages)
      fail(Err::message_out_of_range,
           "agent " + std::to_string(i) + " message " +
               std::to_string(messages[i]) + " outside 0.." +
               std::to_string(kNumMessages));
  }

  ObservationView view;
  view.channels.reserve(4);
  view.channels.push_back(structure_channel(map));
  view.channels.push_back(normalized_idleness(map, idleness, c_norm));

  Grid<double> locations(map.height(), map.width(), 0.0);
  Grid<double> message_channel(map.height(), map.width(), 0.0);
  for (int i = 0; i < n_agents; ++i) {
    const AgentState& a = agents[static_cast<size_t>(i)];
    if (!a.active()) continue;
    const bool own = i == agent;
    locations.at(a.location) =
        own ? kOwnLocationIndicator : kOtherLocationIndicator;
    const int m = messages[static_cast<size_t>(i)];
    if (m != 0) message_channel.at(a.location) = own ? m : -m;
  }
  view.channels.push_back(std::move(locations));
  view.channels.push_back(std::move(message_channel));

  const AgentState& self = agents[static_cast<size_t>(agent)];
  view.battery_scalar = self.battery / b_max;
  view.action_mask = action_mask_at(map, self.location);
  return view;
}

ObservationView encode_critic_view(const GridMap& map,
                                   const std::vector<AgentState>& agents,
                                   const Grid<double>& idleness, double b_max,
                                   int max_agents, double c_norm) {
  check_shape(map, idleness);
  const int n_agents = static_cast<int>(agents.size());
  if (max_agents <= 0)
    fail(Err::invalid_argument, "max_agents must be positive");
  if (n_agents > max_agents)
    fail(Err::too_many_agents,
         std::to_string(n_agents) + " agents exceed the assumed " +
             "maximum of " + std::to_string(max_agents));

  ObservationView view;
  view.channels.reserve(2);
  view.channels.push_back(structure_channel(map));
  view.channels.push_back(normalized_idleness(map, idleness, c_norm));

  const auto& stations = map.stations();
  const double h = map.height();
  const double w = map.width();
  view.battery_vector.reserve(static_cast<size_t>(max_agents));
  view.location_list.reserve(static_cast<size_t>(2 * max_agents));
  size_t vacant = 0;
  for (int slot = 0; slot < max_agents; ++slot) {
    Coord where;
    double battery;
    const AgentState* a =
        slot < n_agents ? &agents[static_cast<size_t>(slot)] : nullptr;
    if (a != nullptr && a->active()) {
      where = a->location;
      battery = a->battery / b_max;
    } else if (a != nullptr && a->status == AgentStatus::Swapping) {
      where = a->swap_station;
      battery = 1.0;
    } else {
      where = stations[vacant++ % stations.size()];
      battery = 1.0;
    }
    view.battery_vector.push_back(battery);
    view.location_list.push_back(where.row / h);
    view.location_list.push_back(where.col / w);
  }
  return view;
}

ObservationView encode_actor_view(const GridMap& map, const World& world,
                                  int agent, const std::vector<int>& messages,
                                  double c_norm) {
  return encode_actor_view(map, world.agents(), world.idleness(),
                           world.params().b_max, agent, messages, c_norm);
}

ObservationView encode_critic_view(const GridMap& map, const World& world,
                                   int max_agents, double c_norm) {
  return encode_critic_view(map, world.agents(), world.idleness(),
                            world.params().b_max, max_agents, c_norm);
}

}  // namespace patrol
