#include <algorithm>
#include <cmath>

#include "error.hpp"
#include "mappo/mappo.hpp"

namespace patrol::mappo {

GaeResult compute_gae(const std::vector<double>& rewards,
                      const std::vector<double>& values, double gamma,
                      double lambda, double bootstrap) {
  if (rewards.size() != values.size())
    fail(Err::length_mismatch, "compute_gae: rewards and values differ");
  const int n = static_cast<int>(rewards.size());
  GaeResult out;
  out.advantages.assign(n, 0.0);
  out.returns.assign(n, 0.0);
  double next_adv = 0.0;
  double next_value = bootstrap;
  for (int t = n - 1; t >= 0; --t) {
    const double delta = rewards[t] + gamma * next_value - values[t];
    next_adv = delta + gamma * lambda * next_adv;
    out.advantages[t] = next_adv;
    out.returns[t] = next_adv + values[t];
    next_value = values[t];
  }
  return out;
}

double joint_ratio(double p_m_old, double p_a_old, double p_m_new,
                   double p_a_new) {
  for (double p : {p_m_old, p_a_old, p_m_new, p_a_new})
    if (!(p > 0.0))
      fail(Err::zero_probability, "joint_ratio: non-positive probability");
  // Grouped as per-head log differences: each difference is small when the
  // policies are close, and an unchanged policy yields exactly exp(0) = 1.
  return std::exp((std::log(p_m_new) - std::log(p_m_old)) +
                  (std::log(p_a_new) - std::log(p_a_old)));
}

double clipped_surrogate(double ratio, double advantage, double eps) {
  const double clipped = std::clamp(ratio, 1.0 - eps, 1.0 + eps);
  return -std::min(ratio * advantage, clipped * advantage);
}

double distribution_entropy(const std::vector<double>& probs) {
  double h = 0.0;
  for (double p : probs)
    if (p > 0.0) h -= p * std::log(p);
  return h;
}

std::vector<int> TrainConfig::lane_agents_at(int episode) const {
  for (const auto& stage : curriculum)
    if (stage.until_episode < 0 || episode < stage.until_episode)
      return stage.lane_agents;
  return curriculum.back().lane_agents;
}

void TrainConfig::validate() const {
  if (gamma <= 0.0 || gamma > 1.0 || gae_lambda < 0.0 || gae_lambda > 1.0)
    fail(Err::bad_config, "train config: gamma/lambda out of range");
  if (clip_eps <= 0.0 || clip_eps >= 1.0)
    fail(Err::bad_config, "train config: clip_eps out of range");
  if (batches < 1 || epochs < 1 || episodes < 1 || horizon < 1 ||
      parallel_episodes < 1 || truncation < 1 || max_agents < 1)
    fail(Err::bad_config, "train config: counts must be positive");
  if (lr_initial <= 0.0 || lr_late <= 0.0)
    fail(Err::bad_config, "train config: learning rates must be positive");
  if (curriculum.empty())
    fail(Err::bad_config, "train config: curriculum is empty");
  for (const auto& stage : curriculum) {
    if (static_cast<int>(stage.lane_agents.size()) != parallel_episodes)
      fail(Err::bad_config, "train config: stage width != parallel_episodes");
    for (int n : stage.lane_agents)
      if (n < 1 || n > max_agents)
        fail(Err::bad_config, "train config: lane agent count out of range");
  }
  if (curriculum.back().until_episode >= 0 &&
      curriculum.back().until_episode < episodes)
    fail(Err::bad_config, "train config: curriculum does not cover the run");
}

Adam::Adam(std::vector<nn::ParamView> params, double beta1, double beta2,
           double eps)
    : params_(std::move(params)), beta1_(beta1), beta2_(beta2), eps_(eps) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const auto& p : params_) {
    m_.emplace_back(p.value->size(), 0.0);
    v_.emplace_back(p.value->size(), 0.0);
  }
}

void Adam::step(double lr) {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, t_);
  const double bc2 = 1.0 - std::pow(beta2_, t_);
  for (size_t i = 0; i < params_.size(); ++i) {
    auto& p = params_[i];
    auto& m = m_[i];
    auto& v = v_[i];
    for (size_t j = 0; j < m.size(); ++j) {
      const double g = (*p.grad)[j];
      m[j] = beta1_ * m[j] + (1.0 - beta1_) * g;
      v[j] = beta2_ * v[j] + (1.0 - beta2_) * g * g;
      (*p.value)[j] -= lr * (m[j] / bc1) / (std::sqrt(v[j] / bc2) + eps_);
    }
  }
}

}  // namespace patrol::mappo
