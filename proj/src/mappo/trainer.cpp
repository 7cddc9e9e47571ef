#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "error.hpp"
#include "mappo/mappo.hpp"
#include "params_json.hpp"

namespace patrol::mappo {

namespace {

uint64_t nth_seed(uint64_t seed, int n) {
  uint64_t x = seed;
  uint64_t v = 0;
  for (int i = 0; i <= n; ++i) v = Rng::splitmix64(x);
  return v;
}

nn::PolicyNetConfig sized_actor(const GridMap& map, const TrainConfig& cfg) {
  auto c = nn::actor_config(map.height(), map.width());
  c.dense1 = cfg.dense1;
  c.dense2 = cfg.dense2;
  c.dense3 = cfg.dense3;
  c.gru = cfg.gru;
  return c;
}

nn::PolicyNetConfig sized_critic(const GridMap& map, const TrainConfig& cfg) {
  auto c = nn::critic_config(map.height(), map.width(), cfg.max_agents);
  c.dense1 = cfg.dense1;
  c.dense2 = cfg.dense2;
  c.dense3 = cfg.dense3;
  c.gru = cfg.gru;
  return c;
}

nlohmann::json config_json(const GridMap& map, const EnvParams& env,
                           const RewardParams& rew, const TrainConfig& cfg) {
  nlohmann::json stages = nlohmann::json::array();
  for (const auto& s : cfg.curriculum)
    stages.push_back({{"until_episode", s.until_episode},
                      {"lane_agents", s.lane_agents}});
  return {
      {"map", {{"height", map.height()}, {"width", map.width()}}},
      {"env", env_to_json(env)},
      {"rewards", rewards_to_json(rew)},
      {"strategy",
       {{"kind", "rl"},
        {"c_norm", cfg.c_norm},
        {"dense1", cfg.dense1},
        {"dense2", cfg.dense2},
        {"dense3", cfg.dense3},
        {"gru", cfg.gru}}},
      {"train",
       {{"gamma", cfg.gamma},
        {"gae_lambda", cfg.gae_lambda},
        {"clip_eps", cfg.clip_eps},
        {"batches", cfg.batches},
        {"epochs", cfg.epochs},
        {"entropy_coef", cfg.entropy_coef},
        {"lr_initial", cfg.lr_initial},
        {"lr_late", cfg.lr_late},
        {"lr_switch_episode", cfg.lr_switch_episode},
        {"episodes", cfg.episodes},
        {"horizon", cfg.horizon},
        {"parallel_episodes", cfg.parallel_episodes},
        {"curriculum", stages},
        {"max_agents", cfg.max_agents},
        {"truncation", cfg.truncation},
        {"checkpoint_every", cfg.checkpoint_every},
        {"seed", cfg.seed},
        {"c_norm", cfg.c_norm},
        {"dense1", cfg.dense1},
        {"dense2", cfg.dense2},
        {"dense3", cfg.dense3},
        {"gru", cfg.gru}}},
  };
}

}  // namespace

Trainer::Trainer(std::shared_ptr<const GridMap> map, const EnvParams& env,
                 const RewardParams& rewards, const TrainConfig& cfg)
    : map_(std::move(map)),
      env_(env),
      rewards_(rewards),
      cfg_((cfg.validate(), cfg)),
      actor_(sized_actor(*map_, cfg_), nth_seed(cfg_.seed, 0)),
      critic_(sized_critic(*map_, cfg_), nth_seed(cfg_.seed, 1)),
      actor_opt_(actor_.params()),
      critic_opt_(critic_.params()),
      rng_(nth_seed(cfg_.seed, 2)) {}

IterationStats Trainer::iterate() {
  IterationStats out;
  out.episode_start = episode_;
  out.lane_agents = cfg_.lane_agents_at(episode_);
  out.lr = cfg_.lr_at(episode_);

  const uint64_t rollout_seed = rng_.next_u64();
  const auto buffer =
      collect_rollouts(map_, env_, rewards_, actor_, critic_, cfg_,
                       out.lane_agents, rollout_seed);
  for (const auto& lane : buffer.lanes) {
    double sum = 0.0;
    for (double r : lane.total_reward) sum += r;
    out.lane_mean_agent_reward.push_back(
        lane.total_reward.empty()
            ? 0.0
            : sum / static_cast<double>(lane.total_reward.size()));
  }

  out.update = update(*map_, env_, actor_, critic_, actor_opt_, critic_opt_,
                      buffer, cfg_, out.lr, rng_);
  episode_ += cfg_.parallel_episodes;
  return out;
}

void Trainer::run(const std::string& run_dir) {
  std::filesystem::create_directories(run_dir);
  {
    std::ofstream f(run_dir + "/config.json");
    if (!f) fail(Err::io, "cannot write " + run_dir + "/config.json");
    f << config_json(*map_, env_, rewards_, cfg_).dump(2) << "\n";
  }
  std::ofstream metrics(run_dir + "/metrics.jsonl");
  if (!metrics) fail(Err::io, "cannot write " + run_dir + "/metrics.jsonl");

  while (episode_ < cfg_.episodes) {
    const int before = episode_;
    const IterationStats it = iterate();
    const nlohmann::json line = {
        {"episode", it.episode_start},
        {"episodes_done", episode_},
        {"lane_agents", it.lane_agents},
        {"lane_mean_agent_reward", it.lane_mean_agent_reward},
        {"lr", it.lr},
        {"actor_loss", it.update.actor_loss},
        {"critic_loss", it.update.critic_loss},
        {"entropy", it.update.entropy},
        {"mean_ratio", it.update.mean_ratio},
        {"clip_fraction", it.update.clip_fraction},
        {"policy_steps", it.update.policy_steps},
    };
    metrics << line.dump() << "\n";
    metrics.flush();

    if (cfg_.checkpoint_every > 0 &&
        episode_ / cfg_.checkpoint_every > before / cfg_.checkpoint_every) {
      nn::save_checkpoint(
          run_dir + "/checkpoint_ep" + std::to_string(episode_) + ".bin",
          {{"actor", &actor_}, {"critic", &critic_}});
    }
  }
  nn::save_checkpoint(run_dir + "/final.bin",
                      {{"actor", &actor_}, {"critic", &critic_}});
}

}  // namespace patrol::mappo
