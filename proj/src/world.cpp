#include "world.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include "error.hpp"

namespace patrol {

const char* event_name(EventKind kind) {
  switch (kind) {
    case EventKind::Moved: return "moved";
    case EventKind::Bounced: return "bounced";
    case EventKind::StartedSwap: return "started_swap";
    case EventKind::Redeployed: return "redeployed";
    case EventKind::BatteryFailed: return "battery_failed";
  }
  return "?";
}

ConflictResult resolve_conflicts(const std::vector<Coord>& origins,
                                 const std::vector<Coord>& targets, Rng& rng) {
  const size_t n = origins.size();
  if (targets.size() != n)
    fail(Err::length_mismatch, "origins and targets differ in length");

  ConflictResult result;
  result.final_pos = targets;
  result.bounced.assign(n, 0);
  result.involved.assign(n, 0);

  auto bounce = [&](size_t i) {
    result.final_pos[i] = origins[i];
    result.bounced[i] = 1;
    result.involved[i] = 1;
  };

  // Two agents exchanging cells would pass through each other: both bounce.
  for (size_t i = 0; i < n; ++i)
    for (size_t j = i + 1; j < n; ++j) {
      if (origins[i] == targets[i] || origins[j] == targets[j]) continue;
      if (targets[i] == origins[j] && targets[j] == origins[i]) {
        bounce(i);
        bounce(j);
      }
    }

  // Iterate until every cell holds at most one agent. A bounced agent
  // reclaims its origin, which can evict a previous winner (cascade).
  for (;;) {
    std::map<Coord, std::vector<size_t>> by_cell;
    for (size_t i = 0; i < n; ++i) by_cell[result.final_pos[i]].push_back(i);

    bool any_contested = false;
    for (auto& [cell, contenders] : by_cell) {
      if (contenders.size() < 2) continue;
      any_contested = true;
      // The agent already holding the cell (staying or bounced back) keeps
      // it; otherwise one mover wins uniformly at random.
      size_t winner = contenders.size();
      for (size_t i : contenders)
        if (origins[i] == cell) winner = i;
      if (winner == contenders.size())
        winner = contenders[rng.index(contenders.size())];
      for (size_t i : contenders) {
        result.involved[i] = 1;
        if (i != winner) bounce(i);
      }
    }
    if (!any_contested) break;
  }

  result.collisions = 0;
  for (uint8_t b : result.bounced) result.collisions += b;
  return result;
}

World::World(std::shared_ptr<const GridMap> map, int n_agents,
             const EnvParams& params, uint64_t seed)
    : map_(std::move(map)), params_(params),
      idleness_(map_->height(), map_->width(), 0.0), rng_(seed) {
  const auto& vertices = map_->vertices();
  if (n_agents < 0 || static_cast<size_t>(n_agents) > vertices.size()) {
    std::ostringstream msg;
    msg << "cannot place " << n_agents << " agents on " << vertices.size()
        << " vertices";
    fail(Err::too_many_agents, msg.str());
  }

  // Draw order at reset: placements (partial Fisher-Yates over the row-major
  // vertex list), then batteries, then per-agent perturbation levels.
  std::vector<Coord> pool = vertices;
  agents_.resize(static_cast<size_t>(n_agents));
  for (int i = 0; i < n_agents; ++i) {
    size_t j = static_cast<size_t>(i) +
               rng_.index(pool.size() - static_cast<size_t>(i));
    std::swap(pool[static_cast<size_t>(i)], pool[j]);
    agents_[static_cast<size_t>(i)].id = i;
    agents_[static_cast<size_t>(i)].location = pool[static_cast<size_t>(i)];
  }
  for (auto& agent : agents_)
    agent.battery = rng_.range(params_.b_init_min, params_.b_init_max) *
                    params_.b_max;
  for (auto& agent : agents_) agent.p_dyn = rng_.range(0.0, params_.p_dyn_max);

  init_idleness();
  zero_under_active_agents();
}

World::World(std::shared_ptr<const GridMap> map,
             const std::vector<Coord>& placements,
             const std::vector<double>& batteries, const EnvParams& params,
             uint64_t seed)
    : map_(std::move(map)), params_(params),
      idleness_(map_->height(), map_->width(), 0.0), rng_(seed) {
  if (placements.size() != batteries.size())
    fail(Err::length_mismatch, "placements and batteries differ in length");
  agents_.resize(placements.size());
  for (size_t i = 0; i < placements.size(); ++i) {
    if (!map_->walkable(placements[i]))
      fail(Err::invalid_argument, "agent placed on an unwalkable cell");
    agents_[i].id = static_cast<int>(i);
    agents_[i].location = placements[i];
    agents_[i].battery = batteries[i];
    agents_[i].p_dyn = 0.0;
  }
  for (size_t i = 0; i < placements.size(); ++i)
    for (size_t j = i + 1; j < placements.size(); ++j)
      if (placements[i] == placements[j])
        fail(Err::invalid_argument, "two agents share a starting cell");
  init_idleness();
  zero_under_active_agents();
}

World reset(std::shared_ptr<const GridMap> map, int n_agents,
            const EnvParams& params, uint64_t seed) {
  return World(std::move(map), n_agents, params, seed);
}

void World::init_idleness() {
  for (int r = 0; r < map_->height(); ++r)
    for (int c = 0; c < map_->width(); ++c) {
      switch (map_->kind(r, c)) {
        case CellKind::Obstacle: idleness_.at(r, c) = -1.0; break;
        case CellKind::Station: idleness_.at(r, c) = 0.0; break;
        case CellKind::Vertex:
          idleness_.at(r, c) =
              params_.init_idleness == EnvParams::InitIdleness::Saturated
                  ? params_.saturated_idleness_minutes
                  : 0.0;
          break;
      }
    }
}

void World::zero_under_active_agents() {
  for (const auto& agent : agents_)
    if (agent.active()) idleness_.at(agent.location) = 0.0;
}

ActionMask World::valid_actions(int agent) const {
  if (agent < 0 || agent >= n_agents())
    fail(Err::unknown_agent, "no agent with id " + std::to_string(agent));
  return action_mask_at(*map_, agents_[static_cast<size_t>(agent)].location);
}

int World::active_count() const {
  int n = 0;
  for (const auto& agent : agents_) n += agent.active() ? 1 : 0;
  return n;
}

double World::idleness_mean() const {
  double sum = 0.0;
  for (Coord v : map_->vertices()) sum += idleness_.at(v);
  return sum / static_cast<double>(map_->vertices().size());
}

double World::idleness_max() const {
  double best = 0.0;
  for (Coord v : map_->vertices()) best = std::max(best, idleness_.at(v));
  return best;
}

void World::set_agent_p_dyn(int agent, double p_dyn) {
  if (agent < 0 || agent >= n_agents())
    fail(Err::unknown_agent, "no agent with id " + std::to_string(agent));
  agents_[static_cast<size_t>(agent)].p_dyn = p_dyn;
}

// Step phases, with rng draws in this exact order:
//   1. per active agent (slot order): perturbation roll; on hit, one
//      rng.index over its mask-valid actions picks the replacement
//   2. conflict resolution (see resolve_conflicts)
//   3. one duration-multiplier draw, only if some agent was perturbed
//   4. idleness growth then zeroing under active agents (no draws)
//   5. per active agent (slot order): drain draw; then swap entries sample
//      their timer (slot order); then pre-existing swaps count down
// The test-suite replay oracle reproduces this sequence verbatim.
StepOutcome World::step(const std::vector<int>& messages,
                        const std::vector<int>& actions) {
  const size_t n = agents_.size();
  if (messages.size() != n || actions.size() != n)
    fail(Err::length_mismatch,
         "messages/actions must have one entry per agent slot");

  StepOutcome outcome;
  outcome.involved_in_collision.assign(n, 0);
  outcome.bounced.assign(n, 0);
  outcome.perturbed.assign(n, 0);
  outcome.pre_visit_idleness.assign(n, -1.0);

  // Validate inputs for active agents.
  for (size_t i = 0; i < n; ++i) {
    if (!agents_[i].active()) continue;
    if (messages[i] < 1 || messages[i] > kNumMessages)
      fail(Err::message_out_of_range,
           "agent " + std::to_string(i) + " message " +
               std::to_string(messages[i]) + " outside 1.." +
               std::to_string(kNumMessages));
    ActionMask mask = action_mask_at(*map_, agents_[i].location);
    if (actions[i] < 0 || actions[i] >= kNumActions ||
        !mask[static_cast<size_t>(actions[i])])
      fail(Err::invalid_action, "agent " + std::to_string(i) +
                                    " submitted a masked-out action");
  }

  // Phase 1: environmental dynamics may redirect the chosen movement.
  std::vector<int> effective(actions);
  bool any_perturbed = false;
  for (size_t i = 0; i < n; ++i) {
    if (!agents_[i].active()) continue;
    agents_[i].last_message = messages[i];
    if (rng_.unit() < agents_[i].p_dyn) {
      ActionMask mask = action_mask_at(*map_, agents_[i].location);
      std::vector<int> valid;
      for (int a = 0; a < kNumActions; ++a)
        if (mask[static_cast<size_t>(a)]) valid.push_back(a);
      effective[i] = valid[rng_.index(valid.size())];
      outcome.perturbed[i] = 1;
      any_perturbed = true;
    }
  }

  // Phase 2: conflict resolution over active agents.
  std::vector<size_t> active_slots;
  std::vector<Coord> origins, targets;
  for (size_t i = 0; i < n; ++i) {
    if (!agents_[i].active()) continue;
    active_slots.push_back(i);
    origins.push_back(agents_[i].location);
    Coord d = action_delta(static_cast<Action>(effective[i]));
    targets.push_back(
        {agents_[i].location.row + d.row, agents_[i].location.col + d.col});
  }
  ConflictResult moves = resolve_conflicts(origins, targets, rng_);
  for (size_t k = 0; k < active_slots.size(); ++k) {
    size_t i = active_slots[k];
    outcome.bounced[i] = moves.bounced[k];
    outcome.involved_in_collision[i] = moves.involved[k];
    if (moves.bounced[k]) {
      outcome.events.push_back({static_cast<int>(i), EventKind::Bounced});
    } else if (moves.final_pos[k] != origins[k]) {
      outcome.events.push_back({static_cast<int>(i), EventKind::Moved});
    }
    agents_[i].location = moves.final_pos[k];
  }
  outcome.collisions = moves.collisions;

  // Phase 3: step duration. Dynamics lengthen the step for everyone.
  double duration = params_.dt_minutes;
  if (any_perturbed)
    duration *= rng_.range(1.0, params_.duration_multiplier_max);
  outcome.duration_minutes = duration;
  clock_minutes_ += duration;
  ++step_index_;

  // Phase 4: idleness grows at (1 + priority) per minute, then cells under
  // active agents reset to zero.
  for (int r = 0; r < map_->height(); ++r)
    for (int c = 0; c < map_->width(); ++c)
      if (map_->kind(r, c) == CellKind::Vertex)
        idleness_.at(r, c) += duration * (1.0 + map_->priority(r, c));
  for (size_t i = 0; i < n; ++i) {
    if (!agents_[i].active()) continue;
    outcome.pre_visit_idleness[i] = idleness_.at(agents_[i].location);
    idleness_.at(agents_[i].location) = 0.0;
  }

  // Phase 5: battery drain, hot-swap entry, failure, swap countdown.
  for (size_t i = 0; i < n; ++i) {
    if (!agents_[i].active()) continue;
    double drain = rng_.range(params_.drain_min, params_.drain_max);
    agents_[i].battery = std::max(0.0, agents_[i].battery - drain);
  }
  std::vector<uint8_t> entered_swap(n, 0);
  for (size_t i = 0; i < n; ++i) {
    auto& agent = agents_[i];
    if (!agent.active()) continue;
    bool intentional_station_landing = !outcome.perturbed[i] &&
                                       !outcome.bounced[i] &&
                                       map_->is_station(agent.location);
    if (intentional_station_landing) {
      agent.status = AgentStatus::Swapping;
      agent.swap_remaining =
          static_cast<int>(rng_.int_range(params_.b_swap_min, params_.b_swap_max));
      agent.swap_station = agent.location;
      recharge_samples_.push_back(agent.battery / params_.b_max);
      entered_swap[i] = 1;
      outcome.events.push_back({static_cast<int>(i), EventKind::StartedSwap});
    } else if (agent.battery < 1.0) {
      // Less than one step-unit cannot complete another step: the agent is
      // lost off-station and removed from the grid.
      agent.status = AgentStatus::Failed;
      ++battery_failures_;
      outcome.events.push_back({static_cast<int>(i), EventKind::BatteryFailed});
    }
  }
  for (size_t i = 0; i < n; ++i) {
    auto& agent = agents_[i];
    if (agent.status != AgentStatus::Swapping || entered_swap[i]) continue;
    if (agent.swap_remaining > 0) --agent.swap_remaining;
    if (agent.swap_remaining == 0) {
      // The replacement deploys at the station once no active agent blocks
      // the cell; otherwise it waits there with the timer expired.
      bool blocked = false;
      for (size_t j = 0; j < n; ++j)
        if (agents_[j].active() && agents_[j].location == agent.swap_station)
          blocked = true;
      if (!blocked) {
        agent.status = AgentStatus::Active;
        agent.battery = params_.b_max;
        agent.location = agent.swap_station;
        outcome.events.push_back({static_cast<int>(i), EventKind::Redeployed});
      }
    }
  }

  return outcome;
}

}  // namespace patrol
