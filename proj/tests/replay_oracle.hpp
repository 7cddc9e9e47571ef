#pragma once

// Brute-force reference interpreter for the patrolling environment, written
// directly against the documented draw-order contract in src/world.cpp. The
// tests drive this and the production World with the same seed and inputs
// and require exact (bit-level) agreement on every piece of state. Keep this
// file dumb and explicit: its value is being independently checkable.

#include <cstdint>
#include <utility>
#include <vector>

#include "grid_map.hpp"
#include "rng.hpp"
#include "world.hpp"

namespace patrol::oracle {

struct OracleAgent {
  int row = 0;
  int col = 0;
  double battery = 0.0;
  int status = 0;  // 0 active, 1 swapping, 2 failed
  int swap_left = 0;
  int swap_row = -1;
  int swap_col = -1;
  double p_dyn = 0.0;
};

struct OracleOutcome {
  double duration = 0.0;
  int collisions = 0;
  std::vector<uint8_t> bounced;
  std::vector<uint8_t> involved;
  std::vector<uint8_t> perturbed;
  std::vector<double> pre_visit;
  std::vector<std::pair<int, EventKind>> events;
};

class ReplayOracle {
 public:
  // Mirrors the random-reset draw order: placements via partial
  // Fisher-Yates over the row-major vertex list, then batteries, then
  // perturbation levels.
  ReplayOracle(const GridMap& map, int n_agents, const EnvParams& params,
               uint64_t seed)
      : map_(&map), params_(params), rng_(seed) {
    std::vector<Coord> pool = map.vertices();
    agents_.resize(static_cast<size_t>(n_agents));
    for (size_t i = 0; i < agents_.size(); ++i) {
      size_t j = i + rng_.index(pool.size() - i);
      Coord tmp = pool[i];
      pool[i] = pool[j];
      pool[j] = tmp;
      agents_[i].row = pool[i].row;
      agents_[i].col = pool[i].col;
    }
    for (auto& a : agents_)
      a.battery = rng_.range(params.b_init_min, params.b_init_max) * params.b_max;
    for (auto& a : agents_) a.p_dyn = rng_.range(0.0, params.p_dyn_max);
    init_idleness();
  }

  // Mirrors the fixture constructor: no draws, p_dyn = 0.
  ReplayOracle(const GridMap& map, const std::vector<Coord>& placements,
               const std::vector<double>& batteries, const EnvParams& params,
               uint64_t seed)
      : map_(&map), params_(params), rng_(seed) {
    agents_.resize(placements.size());
    for (size_t i = 0; i < placements.size(); ++i) {
      agents_[i].row = placements[i].row;
      agents_[i].col = placements[i].col;
      agents_[i].battery = batteries[i];
    }
    init_idleness();
  }

  void set_p_dyn(size_t agent, double p) { agents_[agent].p_dyn = p; }

  OracleOutcome step(const std::vector<int>& actions) {
    const size_t n = agents_.size();
    OracleOutcome out;
    out.bounced.assign(n, 0);
    out.involved.assign(n, 0);
    out.perturbed.assign(n, 0);
    out.pre_visit.assign(n, -1.0);

    // Phase 1: dynamics may replace each active agent's action.
    std::vector<int> effective = actions;
    bool any_perturbed = false;
    for (size_t i = 0; i < n; ++i) {
      if (agents_[i].status != 0) continue;
      if (rng_.unit() < agents_[i].p_dyn) {
        std::vector<int> valid = valid_list(i);
        effective[i] = valid[rng_.index(valid.size())];
        out.perturbed[i] = 1;
        any_perturbed = true;
      }
    }

    // Phase 2: conflict resolution over the active agents.
    std::vector<size_t> act;
    for (size_t i = 0; i < n; ++i)
      if (agents_[i].status == 0) act.push_back(i);
    std::vector<Coord> origin(act.size()), final_pos(act.size());
    for (size_t k = 0; k < act.size(); ++k) {
      origin[k] = {agents_[act[k]].row, agents_[act[k]].col};
      Coord d = action_delta(static_cast<Action>(effective[act[k]]));
      final_pos[k] = {origin[k].row + d.row, origin[k].col + d.col};
    }
    std::vector<uint8_t> bounced(act.size(), 0), involved(act.size(), 0);
    // Swap-pairs both bounce.
    for (size_t a = 0; a < act.size(); ++a)
      for (size_t b = a + 1; b < act.size(); ++b)
        if (final_pos[a] == origin[b] && final_pos[b] == origin[a] &&
            !(origin[a] == final_pos[a]) && !(origin[b] == final_pos[b])) {
          final_pos[a] = origin[a];
          final_pos[b] = origin[b];
          bounced[a] = bounced[b] = 1;
          involved[a] = involved[b] = 1;
        }
    // Rounds: freeze the per-cell contender lists at round start, then
    // resolve the frozen lists in row-major cell order. Bounces during a
    // round do not join that round's contests; the next round picks them up.
    for (;;) {
      std::vector<std::pair<Coord, std::vector<size_t>>> snapshot;
      for (size_t a = 0; a < act.size(); ++a) {
        std::vector<size_t>* list = nullptr;
        for (auto& entry : snapshot)
          if (entry.first == final_pos[a]) list = &entry.second;
        if (list == nullptr) {
          snapshot.push_back({final_pos[a], {}});
          list = &snapshot.back().second;
        }
        list->push_back(a);
      }
      for (size_t x = 0; x < snapshot.size(); ++x)
        for (size_t y = x + 1; y < snapshot.size(); ++y)
          if (snapshot[y].first < snapshot[x].first)
            std::swap(snapshot[x], snapshot[y]);

      bool contested = false;
      for (const auto& [cell, here] : snapshot) {
        if (here.size() < 2) continue;
        contested = true;
        size_t winner = here.size();
        for (size_t a : here)
          if (origin[a] == cell) winner = a;
        if (winner == here.size()) winner = here[rng_.index(here.size())];
        for (size_t a : here) {
          involved[a] = 1;
          if (a == winner) continue;
          final_pos[a] = origin[a];
          bounced[a] = 1;
        }
      }
      if (!contested) break;
    }
    for (size_t k = 0; k < act.size(); ++k) {
      size_t i = act[k];
      out.bounced[i] = bounced[k];
      out.involved[i] = involved[k];
      if (bounced[k])
        out.events.push_back({static_cast<int>(i), EventKind::Bounced});
      else if (!(final_pos[k] == origin[k]))
        out.events.push_back({static_cast<int>(i), EventKind::Moved});
      agents_[i].row = final_pos[k].row;
      agents_[i].col = final_pos[k].col;
      out.collisions += bounced[k];
    }

    // Phase 3: duration.
    double duration = params_.dt_minutes;
    if (any_perturbed)
      duration *= rng_.range(1.0, params_.duration_multiplier_max);
    out.duration = duration;
    clock_ += duration;

    // Phase 4: idleness grows at (1 + priority), then occupied cells reset.
    for (int r = 0; r < map_->height(); ++r)
      for (int c = 0; c < map_->width(); ++c)
        if (map_->kind(r, c) == CellKind::Vertex)
          idleness_[index(r, c)] += duration * (1.0 + map_->priority(r, c));
    for (size_t i = 0; i < n; ++i) {
      if (agents_[i].status != 0) continue;
      out.pre_visit[i] = idleness_[index(agents_[i].row, agents_[i].col)];
      idleness_[index(agents_[i].row, agents_[i].col)] = 0.0;
    }

    // Phase 5: drain, then swap entry / failure, then countdown + redeploy.
    for (size_t i = 0; i < n; ++i) {
      if (agents_[i].status != 0) continue;
      double drain = rng_.range(params_.drain_min, params_.drain_max);
      double next = agents_[i].battery - drain;
      agents_[i].battery = next > 0.0 ? next : 0.0;
    }
    std::vector<uint8_t> fresh_swap(n, 0);
    for (size_t i = 0; i < n; ++i) {
      OracleAgent& a = agents_[i];
      if (a.status != 0) continue;
      bool intentional = !out.perturbed[i] && !out.bounced[i] &&
                         map_->is_station({a.row, a.col});
      if (intentional) {
        a.status = 1;
        a.swap_left = static_cast<int>(
            rng_.int_range(params_.b_swap_min, params_.b_swap_max));
        a.swap_row = a.row;
        a.swap_col = a.col;
        recharge_samples_.push_back(a.battery / params_.b_max);
        fresh_swap[i] = 1;
        out.events.push_back({static_cast<int>(i), EventKind::StartedSwap});
      } else if (a.battery < 1.0) {
        a.status = 2;
        ++battery_failures_;
        out.events.push_back({static_cast<int>(i), EventKind::BatteryFailed});
      }
    }
    for (size_t i = 0; i < n; ++i) {
      OracleAgent& a = agents_[i];
      if (a.status != 1 || fresh_swap[i]) continue;
      if (a.swap_left > 0) --a.swap_left;
      if (a.swap_left == 0) {
        bool blocked = false;
        for (size_t j = 0; j < n; ++j)
          if (agents_[j].status == 0 && agents_[j].row == a.swap_row &&
              agents_[j].col == a.swap_col)
            blocked = true;
        if (!blocked) {
          a.status = 0;
          a.battery = params_.b_max;
          a.row = a.swap_row;
          a.col = a.swap_col;
          out.events.push_back({static_cast<int>(i), EventKind::Redeployed});
        }
      }
    }
    return out;
  }

  const std::vector<OracleAgent>& agents() const { return agents_; }
  double clock() const { return clock_; }
  double idleness_at(int r, int c) const { return idleness_[index(r, c)]; }
  const std::vector<double>& recharge_samples() const {
    return recharge_samples_;
  }
  int battery_failures() const { return battery_failures_; }

 private:
  size_t index(int r, int c) const {
    return static_cast<size_t>(r) * map_->width() + static_cast<size_t>(c);
  }

  void init_idleness() {
    idleness_.assign(static_cast<size_t>(map_->height()) * map_->width(), 0.0);
    for (int r = 0; r < map_->height(); ++r)
      for (int c = 0; c < map_->width(); ++c) {
        if (map_->kind(r, c) == CellKind::Obstacle)
          idleness_[index(r, c)] = -1.0;
        else if (map_->kind(r, c) == CellKind::Vertex &&
                 params_.init_idleness == EnvParams::InitIdleness::Saturated)
          idleness_[index(r, c)] = params_.saturated_idleness_minutes;
      }
    for (const auto& a : agents_)
      if (a.status == 0) idleness_[index(a.row, a.col)] = 0.0;
  }

  std::vector<int> valid_list(size_t agent) const {
    std::vector<int> valid;
    for (int a = 0; a < kNumActions; ++a) {
      Coord d = action_delta(static_cast<Action>(a));
      Coord t{agents_[agent].row + d.row, agents_[agent].col + d.col};
      bool ok = a == static_cast<int>(Action::Stay) ||
                (map_->in_bounds(t) && map_->kind(t) != CellKind::Obstacle);
      if (ok) valid.push_back(a);
    }
    return valid;
  }

  const GridMap* map_;
  EnvParams params_;
  Rng rng_;
  std::vector<OracleAgent> agents_;
  std::vector<double> idleness_;
  double clock_ = 0.0;
  std::vector<double> recharge_samples_;
  int battery_failures_ = 0;
};

}  // namespace patrol::oracle
