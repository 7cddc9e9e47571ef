#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nn/layers.hpp"
#include "observation.hpp"

namespace patrol::nn {

// Trunk: conv(c,conv1_out,3x3) tanh -> conv(conv1_out,conv2_out,3x3) tanh ->
// flatten+extras -> dense1 tanh -> dense2 tanh -> dense3 tanh -> gru.
// Heads read the recurrent state. Dense widths are construction parameters:
// the defaults are the reference sizes, the input width always derives from
// the map (conv2_out * (H-4) * (W-4) + extras), never a hard-coded constant.
struct PolicyNetConfig {
  int conv_channels = 4;
  int height = 0;
  int width = 0;
  int extras = 0;
  int conv1_out = 4;
  int conv2_out = 8;
  int dense1 = 512;
  int dense2 = 341;
  int dense3 = 227;
  int gru = 227;
  bool move_head = true;     // 5 movement logits
  bool message_head = true;  // 16 message logits
  bool value_head = false;   // scalar value

  int flat_size() const { return conv2_out * (height - 4) * (width - 4); }
  int dense_in() const { return flat_size() + extras; }
};

// Reference shapes for a given map: the actor sees 4 observation channels
// plus battery + mask extras; the critic sees 2 channels plus the padded
// battery and location vectors.
PolicyNetConfig actor_config(int height, int width);
PolicyNetConfig critic_config(int height, int width, int max_agents);

class PolicyNet {
 public:
  // Weight layout is fixed by the config; the seed drives scaled-uniform
  // fan-in initialization in registration order.
  PolicyNet(const PolicyNetConfig& cfg, uint64_t seed);

  const PolicyNetConfig& config() const { return cfg_; }
  int state_size() const { return cfg_.gru; }
  std::vector<double> initial_state() const {
    return std::vector<double>(static_cast<size_t>(cfg_.gru), 0.0);
  }

  // One recurrent step. The returned state is also the head input. With
  // record=true the activations are kept for the mirrored backward pass;
  // callers must unwind forwards in exact reverse order.
  std::vector<double> step(const ObservationView& obs,
                           const std::vector<double>& h_in, bool record);
  std::vector<double> step_raw(const Tensor& image,
                               const std::vector<double>& extras,
                               const std::vector<double>& h_in, bool record);

  std::vector<double> move_logits(const std::vector<double>& features,
                                  bool record);
  std::vector<double> message_logits(const std::vector<double>& features,
                                     bool record);
  double value(const std::vector<double>& features, bool record);

  // Reverse passes; each returns the gradient w.r.t. its input (for
  // step_backward, w.r.t. the incoming recurrent state).
  std::vector<double> move_logits_backward(const std::vector<double>& grad);
  std::vector<double> message_logits_backward(const std::vector<double>& grad);
  std::vector<double> value_backward(double grad);
  std::vector<double> step_backward(const std::vector<double>& grad_h_out);

  std::vector<ParamView> params();
  size_t param_count();
  void zero_grad();
  void clear_cache();

 private:
  PolicyNetConfig cfg_;
  Conv2d conv1_, conv2_;
  Tanh act1_, act2_, act3_, act4_, act5_;
  Dense dense1_, dense2_, dense3_;
  GruCell gru_;
  std::optional<Dense> move_, message_, value_;
};

// Single-pass convenience: advance the state once and read both actor heads,
// the movement head masked by the observation's action mask.
struct ActorOutput {
  std::vector<double> message_probs;  // 16 entries
  std::vector<double> move_probs;     // 5 entries, masked + renormalized
  std::vector<double> state;
};
ActorOutput forward_actor(PolicyNet& net, const ObservationView& obs,
                          const std::vector<double>& h_in);

// Advances the state and reads the value head.
std::pair<double, std::vector<double>> forward_critic(
    PolicyNet& net, const ObservationView& obs,
    const std::vector<double>& h_in);

// Copies every parameter tensor from src into dst; the registries must match
// in length and shape (BadConfig otherwise). Used to freeze per-worker
// weight snapshots.
void copy_params(PolicyNet& dst, PolicyNet& src);

// Checkpoints: a versioned JSON manifest (tensor names, shapes, offsets)
// followed by one little-endian float64 blob. Loading validates every name
// and shape against the registry and throws BadConfig on drift, IO on file
// trouble.
void save_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, PolicyNet*>>& nets);
void load_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, PolicyNet*>>& nets);

}  // namespace patrol::nn
