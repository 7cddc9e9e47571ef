#include <exception>
#include <thread>
#include <utility>

#include "error.hpp"
#include "mappo/mappo.hpp"
#include "rewards.hpp"

namespace patrol::mappo {

int sample_categorical(const std::vector<double>& probs, Rng& rng) {
  const double u = rng.unit();
  double cum = 0.0;
  int last_positive = -1;
  for (size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    cum += probs[i];
    last_positive = static_cast<int>(i);
    if (u < cum) return last_positive;
  }
  if (last_positive < 0)
    fail(Err::zero_probability, "sample_categorical: no positive mass");
  return last_positive;
}

namespace {

EpisodeLane run_lane(std::shared_ptr<const GridMap> map, const EnvParams& env,
                     const RewardParams& rew, nn::PolicyNet& actor,
                     nn::PolicyNet& critic, const TrainConfig& cfg,
                     int n_agents, uint64_t world_seed,
                     uint64_t sampler_seed) {
  EpisodeLane lane;
  lane.n_agents = n_agents;
  lane.seed = world_seed;
  lane.steps.reserve(static_cast<size_t>(cfg.horizon));

  World world = reset(map, n_agents, env, world_seed);
  Rng sampler(sampler_seed);

  std::vector<std::vector<double>> actor_h(
      n_agents, actor.initial_state());
  std::vector<double> critic_h = critic.initial_state();
  const std::vector<int> zero_msgs(n_agents, 0);

  for (int t = 0; t < cfg.horizon; ++t) {
    StepRecord rec;
    rec.agents = world.agents();
    rec.idleness = world.idleness();
    rec.messages.assign(n_agents, 0);
    rec.actions.assign(n_agents, -1);
    rec.p_message.assign(n_agents, 1.0);
    rec.p_action.assign(n_agents, 1.0);
    rec.masks.assign(n_agents, ActionMask{});
    rec.offline.assign(n_agents, 0);
    rec.rewards.assign(n_agents, 0.0);
    rec.actor_state = actor_h;
    rec.critic_state = critic_h;

    const auto critic_view =
        encode_critic_view(*map, rec.agents, rec.idleness, env.b_max,
                           cfg.max_agents, cfg.c_norm);
    auto [value, next_critic_h] = forward_critic(critic, critic_view, critic_h);
    rec.value = value;
    critic_h = std::move(next_critic_h);

    // Communication pass: everyone speaks before anyone moves, each agent
    // deciding its message from a silent channel.
    std::vector<std::vector<double>> comm_state(n_agents);
    for (int i = 0; i < n_agents; ++i) {
      if (!rec.agents[i].active()) {
        rec.offline[i] = 1;
        continue;
      }
      const auto view = encode_actor_view(*map, rec.agents, rec.idleness,
                                          env.b_max, i, zero_msgs, cfg.c_norm);
      auto out = forward_actor(actor, view, actor_h[i]);
      const int m = sample_categorical(out.message_probs, sampler);
      rec.messages[i] = m + 1;
      rec.p_message[i] = out.message_probs[m];
      comm_state[i] = std::move(out.state);
    }

    // Action pass: the fresh messages are visible to every agent.
    std::vector<int> world_msgs(n_agents, 1);
    std::vector<int> world_actions(n_agents, static_cast<int>(Action::Stay));
    for (int i = 0; i < n_agents; ++i) {
      if (rec.offline[i]) continue;
      const auto view =
          encode_actor_view(*map, rec.agents, rec.idleness, env.b_max, i,
                            rec.messages, cfg.c_norm);
      rec.masks[i] = view.action_mask;
      auto out = forward_actor(actor, view, comm_state[i]);
      const int a = sample_categorical(out.move_probs, sampler);
      rec.actions[i] = a;
      rec.p_action[i] = out.move_probs[a];
      actor_h[i] = std::move(out.state);
      world_msgs[i] = rec.messages[i];
      world_actions[i] = a;
    }

    const StepOutcome outcome = world.step(world_msgs, world_actions);

    std::vector<uint8_t> failed_now(n_agents, 0);
    for (const auto& ev : outcome.events)
      if (ev.kind == EventKind::BatteryFailed) failed_now[ev.agent] = 1;

    const Grid<double> norm_with =
        normalized_idleness(*map, world.idleness(), cfg.c_norm);
    for (int i = 0; i < n_agents; ++i) {
      if (rec.offline[i]) continue;
      // Counterfactual map with this agent's visit undone: only its final
      // cell differs, so patch that one entry.
      Grid<double> norm_without = norm_with;
      const Coord cell = world.agents()[i].location;
      norm_without.at(cell) =
          normalize_idleness(outcome.pre_visit_idleness[i], cfg.c_norm);
      const double r_p = patrol_reward(*map, norm_with, norm_without, rew);
      // A failed agent ran its battery out; it is scored as empty even when
      // the clamp left a sub-step residue.
      const double frac =
          failed_now[i] ? 0.0 : world.agents()[i].battery / env.b_max;
      const double r_b = battery_reward(frac, rew);
      const double r_c =
          collision_reward(outcome.involved_in_collision[i] != 0, rew);
      rec.rewards[i] = r_p + r_b + r_c;
    }

    lane.steps.push_back(std::move(rec));
  }
  return lane;
}

}  // namespace

RolloutBuffer collect_rollouts(std::shared_ptr<const GridMap> map,
                               const EnvParams& env,
                               const RewardParams& rewards,
                               nn::PolicyNet& actor, nn::PolicyNet& critic,
                               const TrainConfig& cfg,
                               const std::vector<int>& lane_agents,
                               uint64_t seed) {
  const int lanes = static_cast<int>(lane_agents.size());
  if (lanes == 0) fail(Err::bad_config, "collect_rollouts: no lanes");

  // Lane seeds are drawn up front in lane order, and every lane works on its
  // own frozen weight copy, so the result is independent of scheduling.
  Rng master(seed);
  std::vector<std::pair<uint64_t, uint64_t>> lane_seeds(lanes);
  for (auto& s : lane_seeds) {
    s.first = master.next_u64();
    s.second = master.next_u64();
  }

  std::vector<std::unique_ptr<nn::PolicyNet>> actors, critics;
  actors.reserve(lanes);
  critics.reserve(lanes);
  for (int l = 0; l < lanes; ++l) {
    actors.push_back(std::make_unique<nn::PolicyNet>(actor.config(), 0));
    nn::copy_params(*actors.back(), actor);
    critics.push_back(std::make_unique<nn::PolicyNet>(critic.config(), 0));
    nn::copy_params(*critics.back(), critic);
  }

  RolloutBuffer buffer;
  buffer.lanes.resize(lanes);
  std::vector<std::exception_ptr> errors(lanes);
  std::vector<std::thread> threads;
  threads.reserve(lanes);
  for (int l = 0; l < lanes; ++l) {
    threads.emplace_back([&, l] {
      try {
        buffer.lanes[l] =
            run_lane(map, env, rewards, *actors[l], *critics[l], cfg,
                     lane_agents[l], lane_seeds[l].first, lane_seeds[l].second);
      } catch (...) {
        errors[l] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  reconstruct_offline_segments(buffer);
  return buffer;
}

void reconstruct_offline_segments(RolloutBuffer& buffer) {
  for (auto& lane : buffer.lanes) {
    const size_t n = static_cast<size_t>(lane.n_agents);
    lane.total_reward.assign(n, 0.0);
    for (auto& rec : lane.steps) {
      if (rec.offline.size() != n || rec.rewards.size() != n ||
          rec.messages.size() != n || rec.actions.size() != n ||
          rec.p_message.size() != n || rec.p_action.size() != n)
        fail(Err::length_mismatch, "rollout record width != lane agent count");
      rec.online_count = 0;
      for (size_t i = 0; i < n; ++i) {
        if (rec.offline[i]) {
          // Offline slots take no decision: neutral probabilities keep the
          // importance ratio at 1 and the zero reward carries no credit.
          rec.messages[i] = 0;
          rec.actions[i] = -1;
          rec.p_message[i] = 1.0;
          rec.p_action[i] = 1.0;
          rec.rewards[i] = 0.0;
        } else {
          ++rec.online_count;
        }
        lane.total_reward[i] += rec.rewards[i];
      }
    }
  }
}

}  // namespace patrol::mappo
