#include "baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include "error.hpp"
#include "rewards.hpp"
#include "rng.hpp"

namespace patrol {

namespace {

Coord target_of(Coord pos, int action) {
  Coord d = action_delta(static_cast<Action>(action));
  return {pos.row + d.row, pos.col + d.col};
}

}  // namespace

// --- Conscientious Reactive -------------------------------------------------

int cr_next_action(const World& world, int agent) {
  const Coord pos = world.agents()[static_cast<size_t>(agent)].location;
  ActionMask mask = action_mask_at(world.map(), pos);
  int best = -1;
  double best_idle = -std::numeric_limits<double>::infinity();
  for (int a = 0; a < kNumMoveActions; ++a) {
    if (!mask[static_cast<size_t>(a)]) continue;
    double idle = world.idleness().at(target_of(pos, a));
    if (idle > best_idle) {
      best_idle = idle;
      best = a;
    }
  }
  return best >= 0 ? best : static_cast<int>(Action::Stay);
}

// --- Partitioning ------------------------------------------------------------

namespace {

// Region connectivity treats stations as shared corridors: the region is
// connected when its vertices form one component in the subgraph of (its own
// cells + all stations).
bool region_connected(const GridMap& map, const Grid<int>& region_of, int id,
                      const std::vector<Coord>& cells) {
  if (cells.empty()) return false;
  Grid<uint8_t> seen(map.height(), map.width(), 0);
  std::queue<Coord> queue;
  queue.push(cells[0]);
  seen.at(cells[0]) = 1;
  size_t reached = 1;
  while (!queue.empty()) {
    Coord c = queue.front();
    queue.pop();
    for (int a = 0; a < kNumMoveActions; ++a) {
      Coord n = target_of(c, a);
      if (!map.in_bounds(n) || seen.at(n)) continue;
      bool in_region = map.is_vertex(n) && region_of.at(n) == id;
      if (!in_region && !map.is_station(n)) continue;
      seen.at(n) = 1;
      if (in_region) ++reached;
      queue.push(n);
    }
  }
  return reached == cells.size();
}

// True when cell v touches region `id` directly or through a chain of
// station cells.
bool touches_region(const GridMap& map, const Grid<int>& region_of, Coord v,
                    int id) {
  Grid<uint8_t> seen(map.height(), map.width(), 0);
  std::queue<Coord> queue;
  queue.push(v);
  seen.at(v) = 1;
  while (!queue.empty()) {
    Coord c = queue.front();
    queue.pop();
    for (int a = 0; a < kNumMoveActions; ++a) {
      Coord n = target_of(c, a);
      if (!map.in_bounds(n) || seen.at(n)) continue;
      if (map.is_vertex(n) && region_of.at(n) == id) return true;
      if (!map.is_station(n)) continue;
      seen.at(n) = 1;
      queue.push(n);
    }
  }
  return false;
}

std::vector<std::vector<int>> boundary_matrix(
    const GridMap& map, const Grid<int>& region_of, int n) {
  std::vector<std::vector<int>> boundary(
      static_cast<size_t>(n), std::vector<int>(static_cast<size_t>(n), 0));
  for (Coord v : map.vertices()) {
    int self = region_of.at(v);
    // Count each adjacent pair once via the Down/Right neighbors.
    for (int a : {static_cast<int>(Action::Down), static_cast<int>(Action::Right)}) {
      Coord n = target_of(v, a);
      if (!map.in_bounds(n) || !map.is_vertex(n)) continue;
      int other = region_of.at(n);
      if (other == self) continue;
      ++boundary[static_cast<size_t>(self)][static_cast<size_t>(other)];
      ++boundary[static_cast<size_t>(other)][static_cast<size_t>(self)];
    }
  }
  return boundary;
}

struct PartitionDraft {
  Grid<int> region_of;
  std::vector<std::vector<Coord>> regions;
};

void move_vertex(PartitionDraft& draft, Coord v, int from, int to) {
  auto& cells = draft.regions[static_cast<size_t>(from)];
  cells.erase(std::find(cells.begin(), cells.end(), v));
  draft.regions[static_cast<size_t>(to)].push_back(v);
  draft.region_of.at(v) = to;
}

// One attempt: farthest-point seeds, smallest-first growth, then
// boundary-transfer repair. Returns false when repair gets stuck.
bool try_partition(const GridMap& map, int n, Rng& rng, PartitionDraft& out) {
  const auto& vertices = map.vertices();
  PartitionDraft draft;
  draft.region_of = Grid<int>(map.height(), map.width(), -1);
  draft.regions.assign(static_cast<size_t>(n), {});

  // Farthest-point seeding over the walkable graph.
  std::vector<Coord> seeds;
  seeds.push_back(vertices[rng.index(vertices.size())]);
  while (seeds.size() < static_cast<size_t>(n)) {
    DistanceField field = distances_from(map, seeds);
    Coord best{-1, -1};
    int best_dist = -1;
    for (Coord v : vertices) {
      if (draft.region_of.at(v) >= 0) continue;
      bool taken = false;
      for (Coord s : seeds) taken = taken || s == v;
      if (taken) continue;
      if (field.distance.at(v) > best_dist) {
        best_dist = field.distance.at(v);
        best = v;
      }
    }
    if (best.row < 0) return false;  // fewer free vertices than regions
    seeds.push_back(best);
  }
  for (int k = 0; k < n; ++k) {
    draft.region_of.at(seeds[static_cast<size_t>(k)]) = k;
    draft.regions[static_cast<size_t>(k)].push_back(seeds[static_cast<size_t>(k)]);
  }

  // Growth: the smallest region that can claim an adjacent unassigned vertex
  // grows by one cell, repeated until everything is claimed.
  size_t assigned = static_cast<size_t>(n);
  while (assigned < vertices.size()) {
    int grower = -1;
    size_t grower_size = vertices.size() + 1;
    Coord claim{-1, -1};
    for (int k = 0; k < n; ++k) {
      size_t size = draft.regions[static_cast<size_t>(k)].size();
      if (size >= grower_size) continue;
      for (Coord v : vertices) {
        if (draft.region_of.at(v) >= 0) continue;
        if (!touches_region(map, draft.region_of, v, k)) continue;
        grower = k;
        grower_size = size;
        claim = v;
        break;
      }
    }
    if (grower < 0) return false;  // unreachable pocket; reseed
    draft.region_of.at(claim) = grower;
    draft.regions[static_cast<size_t>(grower)].push_back(claim);
    ++assigned;
  }

  // Repair: shift one vertex at a time from the largest region toward the
  // smallest along a path in the region-adjacency graph, keeping every
  // donor connected.
  const size_t lo = vertices.size() / static_cast<size_t>(n);
  const size_t hi = lo + (vertices.size() % static_cast<size_t>(n) == 0 ? 0 : 1);
  for (int guard = 0; guard < 10 * static_cast<int>(vertices.size()); ++guard) {
    int biggest = 0, smallest = 0;
    for (int k = 0; k < n; ++k) {
      if (draft.regions[static_cast<size_t>(k)].size() >
          draft.regions[static_cast<size_t>(biggest)].size())
        biggest = k;
      if (draft.regions[static_cast<size_t>(k)].size() <
          draft.regions[static_cast<size_t>(smallest)].size())
        smallest = k;
    }
    size_t max_size = draft.regions[static_cast<size_t>(biggest)].size();
    size_t min_size = draft.regions[static_cast<size_t>(smallest)].size();
    if (max_size <= hi && min_size >= lo && max_size - min_size <= hi - lo) {
      out = std::move(draft);
      return true;
    }

    // Breadth-first path from the biggest region to the smallest through
    // adjacent regions.
    std::vector<int> parent(static_cast<size_t>(n), -2);
    parent[static_cast<size_t>(biggest)] = -1;
    std::queue<int> frontier;
    frontier.push(biggest);
    while (!frontier.empty() && parent[static_cast<size_t>(smallest)] == -2) {
      int cur = frontier.front();
      frontier.pop();
      for (int next = 0; next < n; ++next) {
        if (parent[static_cast<size_t>(next)] != -2) continue;
        bool adjacent = false;
        for (Coord v : draft.regions[static_cast<size_t>(cur)])
          if (touches_region(map, draft.region_of, v, next)) {
            adjacent = true;
            break;
          }
        if (!adjacent) continue;
        parent[static_cast<size_t>(next)] = cur;
        frontier.push(next);
      }
    }
    if (parent[static_cast<size_t>(smallest)] == -2) return false;

    std::vector<int> path;  // biggest ... smallest
    for (int k = smallest; k != -1; k = parent[static_cast<size_t>(k)])
      path.push_back(k);
    std::reverse(path.begin(), path.end());

    // Transfer one vertex across every edge of the path.
    bool moved_all = true;
    for (size_t e = 0; e + 1 < path.size(); ++e) {
      int donor = path[e];
      int recipient = path[e + 1];
      bool moved = false;
      std::vector<Coord> candidates = draft.regions[static_cast<size_t>(donor)];
      std::sort(candidates.begin(), candidates.end());
      for (Coord v : candidates) {
        if (!touches_region(map, draft.region_of, v, recipient)) continue;
        move_vertex(draft, v, donor, recipient);
        if (region_connected(map, draft.region_of, donor,
                             draft.regions[static_cast<size_t>(donor)]) &&
            region_connected(map, draft.region_of, recipient,
                             draft.regions[static_cast<size_t>(recipient)])) {
          moved = true;
          break;
        }
        move_vertex(draft, v, recipient, donor);  // undo
      }
      if (!moved) {
        moved_all = false;
        break;
      }
    }
    if (!moved_all) return false;
  }
  return false;
}

}  // namespace

PartitionAssignment partition_map(const GridMap& map, int n_agents,
                                  uint64_t seed) {
  if (n_agents <= 0)
    fail(Err::invalid_argument, "partitioning needs at least one agent");
  if (static_cast<size_t>(n_agents) > map.vertices().size())
    fail(Err::too_many_agents, "more agents than patrollable vertices");

  Rng rng(seed);
  for (int attempt = 0; attempt < 24; ++attempt) {
    Rng attempt_rng = rng.spawn(static_cast<uint64_t>(attempt));
    PartitionDraft draft;
    if (!try_partition(map, n_agents, attempt_rng, draft)) continue;
    PartitionAssignment assignment;
    assignment.region_of = std::move(draft.region_of);
    assignment.regions = std::move(draft.regions);
    for (auto& region : assignment.regions)
      std::sort(region.begin(), region.end());
    assignment.boundary =
        boundary_matrix(map, assignment.region_of, n_agents);
    return assignment;
  }
  fail(Err::partition_failure,
       "no balanced connected partition found within the attempt budget");
}

namespace {

// Minimum BFS distance between any cell of region `a` and any cell of
// region `b` over the walkable graph.
int region_distance(const GridMap& map, const PartitionAssignment& assignment,
                    int a, int b) {
  DistanceField field =
      distances_from(map, assignment.regions[static_cast<size_t>(a)]);
  int best = std::numeric_limits<int>::max();
  for (Coord v : assignment.regions[static_cast<size_t>(b)])
    if (field.reachable(v)) best = std::min(best, field.distance.at(v));
  return best;
}

}  // namespace

std::vector<std::vector<int>> merged_working_sets(
    const World& world, const PartitionAssignment& assignment) {
  const int n = static_cast<int>(assignment.regions.size());
  std::vector<std::vector<int>> working(static_cast<size_t>(n));
  std::vector<int> owners;
  for (int i = 0; i < n; ++i) {
    if (i < world.n_agents() && world.agents()[static_cast<size_t>(i)].active()) {
      working[static_cast<size_t>(i)].push_back(i);
      owners.push_back(i);
    }
  }
  if (owners.empty()) return working;

  for (int j = 0; j < n; ++j) {
    bool active = j < world.n_agents() &&
                  world.agents()[static_cast<size_t>(j)].active();
    if (active) continue;
    // Longest shared boundary wins; BFS distance breaks zero-boundary and
    // exact ties; lower id breaks the rest.
    int best = owners[0];
    int best_boundary = -1;
    int best_distance = std::numeric_limits<int>::max();
    for (int k : owners) {
      int b = assignment.boundary[static_cast<size_t>(j)][static_cast<size_t>(k)];
      if (b > best_boundary) {
        best = k;
        best_boundary = b;
        best_distance = std::numeric_limits<int>::max();
      } else if (b == best_boundary) {
        if (best_distance == std::numeric_limits<int>::max())
          best_distance = region_distance(world.map(), assignment, j, best);
        int d = region_distance(world.map(), assignment, j, k);
        if (d < best_distance) {
          best = k;
          best_distance = d;
        }
      }
    }
    working[static_cast<size_t>(best)].push_back(j);
  }
  return working;
}

int part_next_action(const World& world, int agent,
                     const PartitionAssignment& assignment,
                     const std::vector<int>& working_regions) {
  if (working_regions.empty()) return cr_next_action(world, agent);
  const Coord pos = world.agents()[static_cast<size_t>(agent)].location;
  auto in_working = [&](Coord c) {
    if (!world.map().is_vertex(c)) return false;
    int id = assignment.region_of.at(c);
    for (int w : working_regions)
      if (w == id) return true;
    return false;
  };

  ActionMask mask = action_mask_at(world.map(), pos);
  if (in_working(pos)) {
    int best = -1;
    double best_idle = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < kNumMoveActions; ++a) {
      if (!mask[static_cast<size_t>(a)]) continue;
      Coord t = target_of(pos, a);
      if (!in_working(t)) continue;
      double idle = world.idleness().at(t);
      if (idle > best_idle) {
        best_idle = idle;
        best = a;
      }
    }
    return best >= 0 ? best : static_cast<int>(Action::Stay);
  }

  // Displaced: first hop of a shortest path back to the working set.
  std::vector<Coord> sources;
  for (int w : working_regions)
    for (Coord v : assignment.regions[static_cast<size_t>(w)])
      sources.push_back(v);
  DistanceField field = distances_from(world.map(), sources);
  if (!field.reachable(pos) || field.distance.at(pos) == 0)
    return static_cast<int>(Action::Stay);
  return field.step.at(pos);
}

// --- State-Exchange Bayesian ------------------------------------------------

SebsChoice sebs_next_action(const World& world, int agent,
                            const std::vector<Coord>& shared_intentions,
                            const BaselineParams& params) {
  const Coord pos = world.agents()[static_cast<size_t>(agent)].location;
  ActionMask mask = action_mask_at(world.map(), pos);
  SebsChoice choice;
  choice.intention = pos;
  double best = -1.0;
  for (int a = 0; a < kNumMoveActions; ++a) {
    if (!mask[static_cast<size_t>(a)]) continue;
    Coord t = target_of(pos, a);
    double idle = std::max(0.0, world.idleness().at(t));
    double gain = normalize_idleness(idle, params.c_norm) *
                  (1.0 + std::max(0, world.map().priority(t)));
    double likelihood = -std::expm1(-gain / params.theta);
    bool claimed = false;
    for (const Coord& intent : shared_intentions)
      claimed = claimed || intent == t;
    double posterior = likelihood * (claimed ? params.kappa : 1.0);
    if (posterior > best) {
      best = posterior;
      choice.action = a;
      choice.intention = t;
    }
  }
  return choice;
}

// --- Charging policy ---------------------------------------------------------

std::optional<int> charging_policy(const World& world, int agent,
                                   const DistanceField& station_field,
                                   ChargingState& state,
                                   const BaselineParams& params) {
  const AgentState& a = world.agents()[static_cast<size_t>(agent)];
  if (!a.active()) {
    state = ChargingState{};
    return std::nullopt;
  }
  if (!station_field.reachable(a.location))
    fail(Err::no_path_to_station, "agent cell unreachable from every station");

  const int dist = station_field.distance.at(a.location);
  const double fraction = a.battery / world.params().b_max;
  if (!state.committed) {
    double margin = dist * world.params().drain_max / world.params().b_max;
    if (fraction <= params.b_l + margin) state.committed = true;
  }
  if (!state.committed) {
    state.blocked_streak = 0;
    state.last_position = a.location;
    state.last_action = static_cast<int>(Action::Stay);
    return std::nullopt;
  }

  // A movement we ordered that did not change the position means the hop was
  // denied (collision loss); two denials in a row start a detour, which
  // lasts until the agent is strictly closer to a station than where the
  // blockage happened.
  if (state.last_action != static_cast<int>(Action::Stay) &&
      a.location == state.last_position)
    ++state.blocked_streak;
  else
    state.blocked_streak = 0;
  if (!state.detouring && state.blocked_streak >= 2) {
    state.detouring = true;
    state.detour_anchor = dist;
  }
  if (state.detouring && dist < state.detour_anchor) {
    state.detouring = false;
    state.blocked_streak = 0;
  }

  int action = static_cast<int>(Action::Stay);
  if (dist > 0) {
    action = station_field.step.at(a.location);
    if (state.detouring) {
      Grid<uint8_t> blocked(world.map().height(), world.map().width(), 0);
      for (int j = 0; j < world.n_agents(); ++j) {
        if (j == agent) continue;
        const AgentState& other = world.agents()[static_cast<size_t>(j)];
        if (other.active()) blocked.at(other.location) = 1;
      }
      DistanceField detour =
          distances_from(world.map(), world.map().stations(), &blocked);
      if (detour.reachable(a.location) && detour.distance.at(a.location) > 0)
        action = detour.step.at(a.location);
    }
  }
  state.last_position = a.location;
  state.last_action = action;
  return action;
}

// --- Strategy objects ---------------------------------------------------------

namespace {

class BaselineStrategy : public Strategy {
 public:
  explicit BaselineStrategy(const BaselineParams& params) : params_(params) {}

  void reset(const World& world) override {
    station_field_ = distances_from(world.map(), world.map().stations());
    charging_.assign(static_cast<size_t>(world.n_agents()), ChargingState{});
    on_reset(world);
  }

  JointDecision decide(const World& world) override {
    const int n = world.n_agents();
    JointDecision out;
    out.messages.assign(static_cast<size_t>(n), 1);
    out.actions.assign(static_cast<size_t>(n), static_cast<int>(Action::Stay));
    begin_step(world);
    for (int i = 0; i < n; ++i) {
      if (!world.agents()[static_cast<size_t>(i)].active()) {
        charging_[static_cast<size_t>(i)] = ChargingState{};
        on_inactive(i);
        continue;
      }
      std::optional<int> override_action = charging_policy(
          world, i, station_field_, charging_[static_cast<size_t>(i)], params_);
      out.actions[static_cast<size_t>(i)] =
          override_action ? *override_action : pick(world, i);
      after_pick(world, i, out.actions[static_cast<size_t>(i)]);
    }
    return out;
  }

 protected:
  virtual void on_reset(const World&) {}
  virtual void begin_step(const World&) {}
  virtual void on_inactive(int) {}
  virtual int pick(const World& world, int agent) = 0;
  virtual void after_pick(const World&, int, int) {}

  BaselineParams params_;
  DistanceField station_field_;
  std::vector<ChargingState> charging_;
};

class CrStrategy final : public BaselineStrategy {
 public:
  using BaselineStrategy::BaselineStrategy;
  std::string name() const override { return "cr"; }

 protected:
  int pick(const World& world, int agent) override {
    return cr_next_action(world, agent);
  }
};

class PartStrategy final : public BaselineStrategy {
 public:
  PartStrategy(const BaselineParams& params, uint64_t partition_seed)
      : BaselineStrategy(params), partition_seed_(partition_seed) {}
  std::string name() const override { return "part"; }

  const PartitionAssignment& assignment() const { return assignment_; }

 protected:
  void on_reset(const World& world) override {
    if (world.n_agents() == 0) {
      assignment_ = PartitionAssignment{};
      return;
    }
    assignment_ =
        partition_map(world.map(), world.n_agents(), partition_seed_);
  }

  void begin_step(const World& world) override {
    working_ = merged_working_sets(world, assignment_);
  }

  int pick(const World& world, int agent) override {
    return part_next_action(world, agent, assignment_,
                            working_[static_cast<size_t>(agent)]);
  }

 private:
  uint64_t partition_seed_;
  PartitionAssignment assignment_;
  std::vector<std::vector<int>> working_;
};

class SebsStrategy final : public BaselineStrategy {
 public:
  using BaselineStrategy::BaselineStrategy;
  std::string name() const override { return "sebs"; }

 protected:
  void on_reset(const World& world) override {
    intentions_.assign(static_cast<size_t>(world.n_agents()), Coord{-1, -1});
  }

  void on_inactive(int agent) override {
    intentions_[static_cast<size_t>(agent)] = Coord{-1, -1};
  }

  int pick(const World& world, int agent) override {
    // The exchanged state is each peer's current vertex plus its declared
    // target. Earlier slots already declared this step; later slots still
    // show their previous declaration. Claiming the current vertex too keeps
    // agents from swapping places or walking into a parked (or mid-swap)
    // peer, both of which the environment scores as collisions.
    std::vector<Coord> shared;
    for (int j = 0; j < world.n_agents(); ++j) {
      if (j == agent) continue;
      const AgentState& peer = world.agents()[static_cast<size_t>(j)];
      if (peer.status != AgentStatus::Failed) shared.push_back(peer.location);
      const Coord& intent = intentions_[static_cast<size_t>(j)];
      if (intent.row >= 0) shared.push_back(intent);
    }
    SebsChoice choice = sebs_next_action(world, agent, shared, params_);
    intentions_[static_cast<size_t>(agent)] = choice.intention;
    return choice.action;
  }

  void after_pick(const World& world, int agent, int action) override {
    // Charging overrides replace the pick; make the claim match the hop so
    // the other agents route around a charging run.
    Coord pos = world.agents()[static_cast<size_t>(agent)].location;
    intentions_[static_cast<size_t>(agent)] = target_of(pos, action);
  }

 private:
  std::vector<Coord> intentions_;
};

}  // namespace

std::unique_ptr<Strategy> make_cr_strategy(const BaselineParams& params) {
  return std::make_unique<CrStrategy>(params);
}

std::unique_ptr<Strategy> make_part_strategy(const BaselineParams& params,
                                             uint64_t partition_seed) {
  return std::make_unique<PartStrategy>(params, partition_seed);
}

std::unique_ptr<Strategy> make_sebs_strategy(const BaselineParams& params) {
  return std::make_unique<SebsStrategy>(params);
}

}  // namespace patrol
