#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "grid.hpp"
#include "grid_map.hpp"
#include "nn/policy.hpp"
#include "observation.hpp"
#include "rewards.hpp"
#include "world.hpp"

namespace patrol::mappo {

// --- Advantage estimation -----------------------------------------------------

// Standard generalized advantage estimation:
//   delta_t = r_t + gamma * V_{t+1} - V_t   (V_T = bootstrap)
//   A_t     = delta_t + gamma * lambda * A_{t+1}
// returns_t = A_t + V_t. Throws LengthMismatch when the sequences disagree.
struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> returns;
};
GaeResult compute_gae(const std::vector<double>& rewards,
                      const std::vector<double>& values, double gamma,
                      double lambda, double bootstrap);

// Factorized policy ratio in log space:
//   (p_m_new * p_a_new) / (p_m_old * p_a_old).
// Throws ZeroProbability when any input is not strictly positive.
double joint_ratio(double p_m_old, double p_a_old, double p_m_new,
                   double p_a_new);

// Negated clipped objective for minimization:
//   -min(ratio * A, clip(ratio, 1-eps, 1+eps) * A).
double clipped_surrogate(double ratio, double advantage, double eps);

// Shannon entropy of a (possibly masked) categorical; zero entries skipped.
double distribution_entropy(const std::vector<double>& probs);

// Inverse-CDF draw; entries with zero mass are skipped so a masked action can
// never be sampled even under floating-point rounding. Throws ZeroProbability
// when every entry is zero.
int sample_categorical(const std::vector<double>& probs, Rng& rng);

// --- Rollout storage ------------------------------------------------------------

// One environment step of one episode lane, stored compactly: observations
// are re-encoded from this snapshot at update time (encoding is pure).
struct StepRecord {
  // Decision-time snapshot.
  std::vector<AgentState> agents;
  Grid<double> idleness;
  // Joint decision and its probabilities under the rollout policy.
  std::vector<int> messages;     // sampled message per slot, 0 when offline
  std::vector<int> actions;      // sampled action per slot, -1 when offline
  std::vector<double> p_message; // probability of the sampled message, 1 offline
  std::vector<double> p_action;  // probability of the sampled action, 1 offline
  std::vector<ActionMask> masks;
  std::vector<uint8_t> offline;  // 1 = slot not active at decision time
  // Stored recurrent states at decision time (stale-state training regime).
  std::vector<std::vector<double>> actor_state;  // per slot
  std::vector<double> critic_state;
  // Filled by the collector after stepping the world:
  std::vector<double> rewards;   // per slot, 0 when offline
  double value = 0.0;            // critic estimate of the decision-time state
  int online_count = 0;
};

struct EpisodeLane {
  int n_agents = 0;
  uint64_t seed = 0;
  std::vector<StepRecord> steps;
  std::vector<double> total_reward;  // per slot over the episode
};

struct RolloutBuffer {
  std::vector<EpisodeLane> lanes;
  size_t step_count() const {
    size_t n = 0;
    for (const auto& lane : lanes) n += lane.steps.size();
    return n;
  }
};

// --- Configuration ---------------------------------------------------------------

struct CurriculumStage {
  int until_episode;            // applies while episode < until_episode
  std::vector<int> lane_agents; // one agent count per parallel lane
};

// Reference hyperparameters; the lane table grows the agent count in four
// stages up to 5 agents.
struct TrainConfig {
  double gamma = 0.95;
  double gae_lambda = 0.95;
  double clip_eps = 0.15;
  int batches = 50;  // minibatch count per epoch
  int epochs = 3;
  double entropy_coef = 0.002;
  double lr_initial = 2e-4;
  double lr_late = 1e-4;
  int lr_switch_episode = 1000;
  int episodes = 1500;
  int horizon = 5000;
  int parallel_episodes = 8;
  std::vector<CurriculumStage> curriculum = {
      {200, {1, 1, 1, 1, 2, 2, 2, 2}},
      {400, {1, 1, 1, 1, 2, 2, 3, 3}},
      {600, {1, 1, 1, 1, 2, 3, 3, 4}},
      {-1, {1, 1, 1, 1, 2, 3, 4, 5}},  // -1 = open-ended final stage
  };
  int max_agents = 5;      // critic slot padding
  int truncation = 16;     // recurrent chunk length for backprop
  int checkpoint_every = 100;  // episodes between checkpoints (0 = final only)
  uint64_t seed = 1;
  double c_norm = 200.0;
  // Network sizing (defaults are the reference widths; tests shrink them).
  int dense1 = 512, dense2 = 341, dense3 = 227, gru = 227;

  // Agent counts for the lanes at a given cumulative episode index.
  std::vector<int> lane_agents_at(int episode) const;
  double lr_at(int episode) const {
    return episode < lr_switch_episode ? lr_initial : lr_late;
  }
  void validate() const;  // throws BadConfig on out-of-range values
};

// --- Collection --------------------------------------------------------------------

// Runs one episode per lane in parallel threads against frozen weight
// snapshots and returns the per-step records. Each lane draws its own seed
// stream; the result does not depend on scheduling.
RolloutBuffer collect_rollouts(std::shared_ptr<const GridMap> map,
                               const EnvParams& env,
                               const RewardParams& rewards,
                               nn::PolicyNet& actor, nn::PolicyNet& critic,
                               const TrainConfig& cfg,
                               const std::vector<int>& lane_agents,
                               uint64_t seed);

// Offline bookkeeping pass: the global critic record already carries every
// step's state, so reconstruction normalizes the offline slots (no action,
// probability 1, zero reward — hence zero policy-loss weight) and counts the
// online agents so fully-offline steps can be masked out of the losses.
void reconstruct_offline_segments(RolloutBuffer& buffer);

// --- Optimizer -----------------------------------------------------------------------

// First-order adaptive-moment optimizer over a parameter registry.
class Adam {
 public:
  explicit Adam(std::vector<nn::ParamView> params, double beta1 = 0.9,
                double beta2 = 0.999, double eps = 1e-8);
  void step(double lr);

 private:
  std::vector<nn::ParamView> params_;
  double beta1_, beta2_, eps_;
  int t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

// --- Update ---------------------------------------------------------------------------

struct UpdateStats {
  double actor_loss = 0.0;
  double critic_loss = 0.0;
  double entropy = 0.0;
  double mean_ratio = 0.0;
  double clip_fraction = 0.0;
  int policy_steps = 0;  // agent-steps contributing policy gradients
};

// Recurrent chunk of one agent's trajectory inside one lane; the update
// re-runs the policy over [begin, end) starting from the stored state.
struct Chunk {
  int lane = 0;
  int agent = 0;  // -1 marks a critic chunk
  int begin = 0;
  int end = 0;
};

// Deterministic chunk partition of the buffer (actor chunks per agent plus
// critic chunks per lane), each at most cfg.truncation steps long and never
// spanning an offline gap boundary for actors.
std::vector<Chunk> chunk_buffer(const RolloutBuffer& buffer,
                                const TrainConfig& cfg);

// Accumulates gradients for one actor chunk into `actor` and returns its
// loss terms. The scalar whose gradient is accumulated is
//   sum_t [surrogate_t - entropy_coef * entropy_t]
// over the chunk's steps, with each step's advantage normalized as
// (A - adv_mean) / adv_std. Exposed for the finite-difference oracle.
struct ChunkLoss {
  double surrogate = 0.0;   // sum of clipped policy terms
  double entropy = 0.0;     // sum of move+message entropies
  double ratio_sum = 0.0;
  int clipped = 0;          // steps with |ratio - 1| > eps
  int steps = 0;
};
ChunkLoss actor_chunk_loss(const GridMap& map, const EnvParams& env,
                           nn::PolicyNet& actor, const EpisodeLane& lane,
                           const Chunk& chunk,
                           const std::vector<std::vector<double>>& advantages,
                           double adv_mean, double adv_std,
                           const TrainConfig& cfg, bool accumulate_grads);

// Critic chunk: sum over steps of the value-clipped squared error against
// the GAE returns averaged over online agents; fully-offline steps advance
// the recurrent state but contribute no loss. Returns the loss sum.
double critic_chunk_loss(const GridMap& map, const EnvParams& env,
                         nn::PolicyNet& critic, const EpisodeLane& lane,
                         const Chunk& chunk,
                         const std::vector<double>& step_returns,
                         const std::vector<double>& old_values,
                         const TrainConfig& cfg, bool accumulate_grads);

// Full PPO update: per-agent GAE, per-minibatch advantage normalization,
// cfg.epochs passes over cfg.batches minibatches of chunks, one optimizer
// step per minibatch. Throws NonFinite (naming the minibatch) on a
// non-finite loss. Deterministic given the rng state.
UpdateStats update(const GridMap& map, const EnvParams& env,
                   nn::PolicyNet& actor, nn::PolicyNet& critic,
                   Adam& actor_opt, Adam& critic_opt,
                   const RolloutBuffer& buffer, const TrainConfig& cfg,
                   double lr, Rng& rng);

// --- Trainer ---------------------------------------------------------------------------

struct IterationStats {
  int episode_start = 0;       // cumulative episode index before this iteration
  std::vector<int> lane_agents;
  std::vector<double> lane_mean_agent_reward;  // per lane: mean over slots
  UpdateStats update;
  double lr = 0.0;
};

class Trainer {
 public:
  Trainer(std::shared_ptr<const GridMap> map, const EnvParams& env,
          const RewardParams& rewards, const TrainConfig& cfg);

  // One collect+update iteration (parallel_episodes episodes).
  IterationStats iterate();

  // Full run: iterates until cfg.episodes, writing config.json,
  // metrics.jsonl and periodic checkpoints under run_dir.
  void run(const std::string& run_dir);

  nn::PolicyNet& actor() { return actor_; }
  nn::PolicyNet& critic() { return critic_; }
  int episode() const { return episode_; }

 private:
  std::shared_ptr<const GridMap> map_;
  EnvParams env_;
  RewardParams rewards_;
  TrainConfig cfg_;
  nn::PolicyNet actor_;
  nn::PolicyNet critic_;
  Adam actor_opt_;
  Adam critic_opt_;
  Rng rng_;
  int episode_ = 0;
};

}  // namespace patrol::mappo
