#include <algorithm>
#include <cmath>

#include "error.hpp"
#include "mappo/mappo.hpp"
#include "nn/layers.hpp"

namespace patrol::mappo {

namespace {

std::vector<uint8_t> mask_vec(const ActionMask& mask) {
  std::vector<uint8_t> out(mask.size());
  for (size_t i = 0; i < mask.size(); ++i) out[i] = mask[i] ? 1 : 0;
  return out;
}

// Adds the gradient of (-coef * entropy) w.r.t. the probabilities.
void add_entropy_grad(const std::vector<double>& probs, double coef,
                      std::vector<double>& g) {
  for (size_t i = 0; i < probs.size(); ++i)
    if (probs[i] > 0.0) g[i] += coef * (std::log(probs[i]) + 1.0);
}

void scale_grads(nn::PolicyNet& net, double s) {
  for (auto& p : net.params())
    for (double& g : *p.grad) g *= s;
}

}  // namespace

std::vector<Chunk> chunk_buffer(const RolloutBuffer& buffer,
                                const TrainConfig& cfg) {
  std::vector<Chunk> out;
  for (int l = 0; l < static_cast<int>(buffer.lanes.size()); ++l) {
    const auto& lane = buffer.lanes[l];
    const int T = static_cast<int>(lane.steps.size());
    for (int b = 0; b < T; b += cfg.truncation)
      out.push_back({l, -1, b, std::min(b + cfg.truncation, T)});
    for (int a = 0; a < lane.n_agents; ++a) {
      int t = 0;
      while (t < T) {
        if (lane.steps[t].offline[a]) {
          ++t;
          continue;
        }
        const int start = t;
        while (t < T && !lane.steps[t].offline[a]) ++t;
        for (int b = start; b < t; b += cfg.truncation)
          out.push_back({l, a, b, std::min(b + cfg.truncation, t)});
      }
    }
  }
  return out;
}

ChunkLoss actor_chunk_loss(const GridMap& map, const EnvParams& env,
                           nn::PolicyNet& actor, const EpisodeLane& lane,
                           const Chunk& chunk,
                           const std::vector<std::vector<double>>& advantages,
                           double adv_mean, double adv_std,
                           const TrainConfig& cfg, bool accumulate_grads) {
  const int a = chunk.agent;
  if (a < 0 || a >= lane.n_agents)
    fail(Err::bad_config, "actor_chunk_loss: bad agent index");

  struct StepTape {
    std::vector<double> msg_probs, move_probs;
    std::vector<uint8_t> mask;
    int m_idx = 0, a_idx = 0;
    double dl_dpm = 0.0, dl_dpa = 0.0;
  };
  std::vector<StepTape> tape;

  ChunkLoss out;
  const std::vector<int> zero_msgs(lane.n_agents, 0);
  std::vector<double> h = lane.steps[chunk.begin].actor_state[a];

  for (int t = chunk.begin; t < chunk.end; ++t) {
    const auto& rec = lane.steps[t];
    if (rec.offline[a])
      fail(Err::bad_config, "actor_chunk_loss: chunk spans an offline step");

    // Both decision passes are replayed exactly as collected: first the
    // message from a silent channel, then the move with everyone's fresh
    // messages visible.
    const auto view_c = encode_actor_view(map, rec.agents, rec.idleness,
                                          env.b_max, a, zero_msgs, cfg.c_norm);
    const auto h_c = actor.step(view_c, h, accumulate_grads);
    const auto msg_probs =
        nn::softmax(actor.message_logits(h_c, accumulate_grads));

    const auto view_a = encode_actor_view(map, rec.agents, rec.idleness,
                                          env.b_max, a, rec.messages,
                                          cfg.c_norm);
    auto h_a = actor.step(view_a, h_c, accumulate_grads);
    auto mvec = mask_vec(rec.masks[a]);
    const auto move_probs = nn::masked_softmax(
        actor.move_logits(h_a, accumulate_grads), mvec);

    const int m_idx = rec.messages[a] - 1;
    const int a_idx = rec.actions[a];
    if (m_idx < 0 || m_idx >= static_cast<int>(msg_probs.size()) || a_idx < 0 ||
        a_idx >= static_cast<int>(move_probs.size()))
      fail(Err::bad_config, "actor_chunk_loss: record has no decision");

    const double p_m_new = msg_probs[m_idx];
    const double p_a_new = move_probs[a_idx];
    const double ratio =
        joint_ratio(rec.p_message[a], rec.p_action[a], p_m_new, p_a_new);
    const double adv = (advantages[a][t] - adv_mean) / adv_std;
    const double clipped_r =
        std::clamp(ratio, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps);
    out.surrogate += -std::min(ratio * adv, clipped_r * adv);
    out.entropy +=
        distribution_entropy(msg_probs) + distribution_entropy(move_probs);
    out.ratio_sum += ratio;
    if (std::abs(ratio - 1.0) > cfg.clip_eps) ++out.clipped;
    ++out.steps;

    if (accumulate_grads) {
      StepTape st;
      // min() took the unclipped branch iff its product is <=; only that
      // branch carries a ratio gradient (the clipped one is flat in the
      // region where it is selected).
      const double dl_dr =
          (ratio * adv <= clipped_r * adv) ? -adv : 0.0;
      st.dl_dpm = dl_dr * ratio / p_m_new;
      st.dl_dpa = dl_dr * ratio / p_a_new;
      st.msg_probs = msg_probs;
      st.move_probs = move_probs;
      st.mask = std::move(mvec);
      st.m_idx = m_idx;
      st.a_idx = a_idx;
      tape.push_back(std::move(st));
    }
    h = std::move(h_a);
  }

  if (!accumulate_grads) return out;

  // Unwind strictly in reverse of the recording order: move head, action
  // pass, message head, communication pass — newest step first.
  const std::vector<uint8_t> full_mask(16, 1);
  std::vector<double> grad_h(static_cast<size_t>(actor.state_size()), 0.0);
  for (int k = static_cast<int>(tape.size()) - 1; k >= 0; --k) {
    const auto& st = tape[k];

    std::vector<double> g_move_probs(st.move_probs.size(), 0.0);
    g_move_probs[st.a_idx] += st.dl_dpa;
    add_entropy_grad(st.move_probs, cfg.entropy_coef, g_move_probs);
    auto g_feat_a = actor.move_logits_backward(
        nn::masked_softmax_backward(st.move_probs, st.mask, g_move_probs));
    for (size_t i = 0; i < g_feat_a.size(); ++i) g_feat_a[i] += grad_h[i];
    auto g_hc = actor.step_backward(g_feat_a);

    std::vector<double> g_msg_probs(st.msg_probs.size(), 0.0);
    g_msg_probs[st.m_idx] += st.dl_dpm;
    add_entropy_grad(st.msg_probs, cfg.entropy_coef, g_msg_probs);
    auto g_feat_c = actor.message_logits_backward(
        nn::masked_softmax_backward(st.msg_probs, full_mask, g_msg_probs));
    for (size_t i = 0; i < g_feat_c.size(); ++i) g_feat_c[i] += g_hc[i];
    grad_h = actor.step_backward(g_feat_c);
  }
  // grad_h now refers to the stored stale state: the truncation boundary.
  return out;
}

double critic_chunk_loss(const GridMap& map, const EnvParams& env,
                         nn::PolicyNet& critic, const EpisodeLane& lane,
                         const Chunk& chunk,
                         const std::vector<double>& step_returns,
                         const std::vector<double>& old_values,
                         const TrainConfig& cfg, bool accumulate_grads) {
  double loss = 0.0;
  std::vector<double> tape;  // dL/dv per step, zero where masked
  std::vector<double> h = lane.steps[chunk.begin].critic_state;

  for (int t = chunk.begin; t < chunk.end; ++t) {
    const auto& rec = lane.steps[t];
    const auto view = encode_critic_view(map, rec.agents, rec.idleness,
                                         env.b_max, cfg.max_agents, cfg.c_norm);
    auto feats = critic.step(view, h, accumulate_grads);
    const double v = critic.value(feats, accumulate_grads);
    double g_v = 0.0;
    if (rec.online_count > 0) {
      const double target = step_returns[t];
      const double v_old = old_values[t];
      const double v_clip =
          v_old + std::clamp(v - v_old, -cfg.clip_eps, cfg.clip_eps);
      const double e_raw = v - target;
      const double e_clip = v_clip - target;
      // Pessimistic value clipping: take the larger squared error so the
      // update cannot benefit from moving far from the rollout value.
      if (e_raw * e_raw >= e_clip * e_clip) {
        loss += e_raw * e_raw;
        g_v = 2.0 * e_raw;
      } else {
        loss += e_clip * e_clip;
        g_v = std::abs(v - v_old) < cfg.clip_eps ? 2.0 * e_clip : 0.0;
      }
    }
    if (accumulate_grads) tape.push_back(g_v);
    h = std::move(feats);
  }

  if (!accumulate_grads) return loss;

  std::vector<double> grad_h(static_cast<size_t>(critic.state_size()), 0.0);
  for (int k = static_cast<int>(tape.size()) - 1; k >= 0; --k) {
    auto g_feat = critic.value_backward(tape[k]);
    for (size_t i = 0; i < g_feat.size(); ++i) g_feat[i] += grad_h[i];
    grad_h = critic.step_backward(g_feat);
  }
  return loss;
}

UpdateStats update(const GridMap& map, const EnvParams& env,
                   nn::PolicyNet& actor, nn::PolicyNet& critic,
                   Adam& actor_opt, Adam& critic_opt,
                   const RolloutBuffer& buffer, const TrainConfig& cfg,
                   double lr, Rng& rng) {
  if (buffer.step_count() == 0)
    fail(Err::bad_config, "update: empty rollout buffer");

  // Per-agent GAE against the shared critic values, then the critic's own
  // regression target: the mean return over the agents online at each step.
  const int n_lanes = static_cast<int>(buffer.lanes.size());
  std::vector<std::vector<std::vector<double>>> adv(n_lanes);
  std::vector<std::vector<double>> step_returns(n_lanes), old_values(n_lanes);
  for (int l = 0; l < n_lanes; ++l) {
    const auto& lane = buffer.lanes[l];
    const int T = static_cast<int>(lane.steps.size());
    old_values[l].resize(T);
    for (int t = 0; t < T; ++t) old_values[l][t] = lane.steps[t].value;

    adv[l].resize(lane.n_agents);
    std::vector<std::vector<double>> returns(lane.n_agents);
    std::vector<double> rewards_seq(T);
    for (int a = 0; a < lane.n_agents; ++a) {
      for (int t = 0; t < T; ++t) rewards_seq[t] = lane.steps[t].rewards[a];
      auto g = compute_gae(rewards_seq, old_values[l], cfg.gamma,
                           cfg.gae_lambda, 0.0);
      adv[l][a] = std::move(g.advantages);
      returns[a] = std::move(g.returns);
    }
    step_returns[l].assign(T, 0.0);
    for (int t = 0; t < T; ++t) {
      const auto& rec = lane.steps[t];
      if (rec.online_count == 0) continue;
      double sum = 0.0;
      for (int a = 0; a < lane.n_agents; ++a)
        if (!rec.offline[a]) sum += returns[a][t];
      step_returns[l][t] = sum / rec.online_count;
    }
  }

  std::vector<Chunk> actor_chunks, critic_chunks;
  for (const auto& c : chunk_buffer(buffer, cfg))
    (c.agent >= 0 ? actor_chunks : critic_chunks).push_back(c);

  auto shuffle = [&rng](std::vector<Chunk>& v) {
    for (size_t i = v.size(); i > 1; --i)
      std::swap(v[i - 1], v[rng.index(i)]);
  };
  auto slice = [&](const std::vector<Chunk>& v, int b, int& begin, int& end) {
    const int n = static_cast<int>(v.size());
    begin = static_cast<int>(static_cast<int64_t>(n) * b / cfg.batches);
    end = static_cast<int>(static_cast<int64_t>(n) * (b + 1) / cfg.batches);
  };

  UpdateStats stats;
  double surrogate_accum = 0.0, critic_accum = 0.0, entropy_accum = 0.0;
  double ratio_accum = 0.0;
  int64_t clip_count = 0, policy_steps = 0;
  int actor_batches = 0, critic_batches = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle(actor_chunks);
    shuffle(critic_chunks);
    for (int b = 0; b < cfg.batches; ++b) {
      int begin, end;

      slice(actor_chunks, b, begin, end);
      if (end > begin) {
        // Normalize advantages over exactly the agent-steps in this batch.
        double sum = 0.0, sum2 = 0.0;
        int64_t n = 0;
        for (int c = begin; c < end; ++c) {
          const auto& ch = actor_chunks[c];
          for (int t = ch.begin; t < ch.end; ++t) {
            const double v = adv[ch.lane][ch.agent][t];
            sum += v;
            sum2 += v * v;
            ++n;
          }
        }
        const double mean = sum / static_cast<double>(n);
        const double var =
            std::max(0.0, sum2 / static_cast<double>(n) - mean * mean);
        const double sd = std::sqrt(var) + 1e-8;

        actor.zero_grad();
        actor.clear_cache();
        ChunkLoss total;
        for (int c = begin; c < end; ++c) {
          const auto& ch = actor_chunks[c];
          const auto cl =
              actor_chunk_loss(map, env, actor, buffer.lanes[ch.lane], ch,
                               adv[ch.lane], mean, sd, cfg, true);
          total.surrogate += cl.surrogate;
          total.entropy += cl.entropy;
          total.ratio_sum += cl.ratio_sum;
          total.clipped += cl.clipped;
          total.steps += cl.steps;
        }
        const double mb_loss =
            (total.surrogate - cfg.entropy_coef * total.entropy) / total.steps;
        if (!std::isfinite(mb_loss))
          fail(Err::non_finite, "update: non-finite actor loss in epoch " +
                                    std::to_string(epoch) + " minibatch " +
                                    std::to_string(b));
        scale_grads(actor, 1.0 / total.steps);
        actor_opt.step(lr);

        surrogate_accum += total.surrogate / total.steps;
        entropy_accum += total.entropy / total.steps;
        ratio_accum += total.ratio_sum;
        clip_count += total.clipped;
        policy_steps += total.steps;
        ++actor_batches;
      }

      slice(critic_chunks, b, begin, end);
      if (end > begin) {
        critic.zero_grad();
        critic.clear_cache();
        double loss = 0.0;
        int64_t scored = 0;
        for (int c = begin; c < end; ++c) {
          const auto& ch = critic_chunks[c];
          loss += critic_chunk_loss(map, env, critic, buffer.lanes[ch.lane],
                                    ch, step_returns[ch.lane],
                                    old_values[ch.lane], cfg, true);
          for (int t = ch.begin; t < ch.end; ++t)
            if (buffer.lanes[ch.lane].steps[t].online_count > 0) ++scored;
        }
        if (scored > 0) {
          const double mb_loss = loss / static_cast<double>(scored);
          if (!std::isfinite(mb_loss))
            fail(Err::non_finite, "update: non-finite critic loss in epoch " +
                                      std::to_string(epoch) + " minibatch " +
                                      std::to_string(b));
          scale_grads(critic, 1.0 / static_cast<double>(scored));
          critic_opt.step(lr);
          critic_accum += mb_loss;
          ++critic_batches;
        }
      }
    }
  }

  if (actor_batches > 0) {
    stats.actor_loss = surrogate_accum / actor_batches;
    stats.entropy = entropy_accum / actor_batches;
  }
  if (critic_batches > 0) stats.critic_loss = critic_accum / critic_batches;
  if (policy_steps > 0) {
    stats.mean_ratio = ratio_accum / static_cast<double>(policy_steps);
    stats.clip_fraction =
        static_cast<double>(clip_count) / static_cast<double>(policy_steps);
  }
  stats.policy_steps = static_cast<int>(policy_steps);
  return stats;
}

}  // namespace patrol::mappo
