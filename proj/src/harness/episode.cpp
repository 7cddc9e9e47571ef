#include "harness/episode.hpp"

#include <utility>

#include "error.hpp"
#include "mappo/mappo.hpp"
#include "nn/policy.hpp"
#include "observation.hpp"
#include "rng.hpp"

namespace patrol::harness {

namespace {

// Trained-policy decision source: one recurrent actor shared by all agents,
// advanced twice per step (communication pass, then movement pass) exactly
// like the rollout collector. Offline slots keep their recurrent state
// frozen; both heads are sampled, not argmaxed, so evaluation matches the
// distribution the policy was trained to produce.
class RlStrategy final : public Strategy {
 public:
  RlStrategy(const StrategySpec& spec, const GridMap& map, uint64_t seed)
      : c_norm_(spec.c_norm), rng_(seed) {
    auto cfg = nn::actor_config(map.height(), map.width());
    cfg.dense1 = spec.dense1;
    cfg.dense2 = spec.dense2;
    cfg.dense3 = spec.dense3;
    cfg.gru = spec.gru;
    net_ = std::make_unique<nn::PolicyNet>(cfg, 0);
    nn::load_checkpoint(spec.checkpoint, {{"actor", net_.get()}});
  }

  void reset(const World& world) override {
    states_.assign(static_cast<size_t>(world.n_agents()),
                   net_->initial_state());
  }

  JointDecision decide(const World& world) override {
    const int n = world.n_agents();
    JointDecision out;
    out.messages.assign(static_cast<size_t>(n), 1);
    out.actions.assign(static_cast<size_t>(n),
                       static_cast<int>(Action::Stay));
    const std::vector<int> zero_msgs(static_cast<size_t>(n), 0);
    std::vector<int> msgs(static_cast<size_t>(n), 0);
    std::vector<std::vector<double>> comm_states(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
      if (!world.agents()[i].active()) continue;
      auto view = encode_actor_view(world.map(), world, i, zero_msgs, c_norm_);
      auto res = nn::forward_actor(*net_, view, states_[i]);
      msgs[i] = mappo::sample_categorical(res.message_probs, rng_) + 1;
      comm_states[i] = std::move(res.state);
    }
    for (int i = 0; i < n; ++i) {
      if (!world.agents()[i].active()) continue;
      auto view = encode_actor_view(world.map(), world, i, msgs, c_norm_);
      auto res = nn::forward_actor(*net_, view, comm_states[i]);
      out.messages[i] = msgs[i];
      out.actions[i] = mappo::sample_categorical(res.move_probs, rng_);
      states_[i] = std::move(res.state);
    }
    return out;
  }

  std::string name() const override { return "rl"; }

 private:
  double c_norm_;
  Rng rng_;
  std::unique_ptr<nn::PolicyNet> net_;
  std::vector<std::vector<double>> states_;
};

}  // namespace

std::unique_ptr<Strategy> make_strategy(const StrategySpec& spec,
                                        const GridMap& map, uint64_t seed) {
  if (spec.kind == "cr") return make_cr_strategy(spec.baseline);
  if (spec.kind == "part") return make_part_strategy(spec.baseline, seed);
  if (spec.kind == "sebs") return make_sebs_strategy(spec.baseline);
  if (spec.kind == "rl") {
    if (spec.checkpoint.empty())
      fail(Err::bad_config, "rl strategy needs a checkpoint path");
    return std::make_unique<RlStrategy>(spec, map, seed);
  }
  fail(Err::bad_config, "unknown strategy kind: " + spec.kind);
}

EpisodeMetrics run_episode(std::shared_ptr<const GridMap> map,
                           const EnvParams& env, const RunSpec& spec,
                           const EventSink& sink) {
  if (spec.horizon < 1)
    fail(Err::invalid_horizon, "horizon must be at least one step");
  if (spec.burnin < 0 || spec.burnin >= spec.horizon)
    fail(Err::invalid_horizon, "burn-in must leave at least one measured step");

  Rng master(spec.seed);
  const uint64_t world_seed = master.next_u64();
  const uint64_t strategy_seed = master.next_u64();

  World world = reset(map, spec.n_agents, env, world_seed);
  auto strategy = make_strategy(spec.strategy, *map, strategy_seed);
  strategy->reset(world);

  MetricsAccumulator acc(spec.burnin);
  for (int step = 1; step <= spec.horizon; ++step) {
    JointDecision decision = strategy->decide(world);
    StepOutcome outcome = world.step(decision.messages, decision.actions);
    const double mean = world.idleness_mean();
    const double max = world.idleness_max();
    acc.observe(step, mean, max, outcome.collisions, world.active_count());
    if (sink) {
      StepEvent ev;
      ev.step = step;
      ev.duration_minutes = outcome.duration_minutes;
      ev.clock_minutes = world.clock_minutes();
      ev.mean_idleness = mean;
      ev.max_idleness = max;
      ev.active_agents = world.active_count();
      ev.collisions = outcome.collisions;
      ev.agent_events.reserve(outcome.events.size());
      for (const AgentEvent& e : outcome.events)
        ev.agent_events.emplace_back(e.agent, event_name(e.kind));
      sink(ev);
    }
  }
  return acc.finish(spec.horizon, spec.n_agents, world.battery_failures(),
                    world.recharge_samples());
}

}  // namespace patrol::harness
