#pragma once

#include <string>
#include <utility>
#include <vector>

#include "rng.hpp"

namespace patrol::nn {

// Plain dense value holder used at layer boundaries where the shape matters.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> values;

  Tensor() = default;
  Tensor(std::vector<int> s, std::vector<double> v);
  static Tensor zeros(std::vector<int> shape);
  size_t numel() const { return values.size(); }
};

// Throws NonFinite naming the offending layer; every layer calls this on its
// outputs so a NaN is caught where it appears, not three modules later.
void check_finite(const std::vector<double>& values, const std::string& where);

// A named slice of a layer's parameters; the flat registry built from these
// drives the optimizer, checkpoints and finite-difference checks.
struct ParamView {
  std::string name;
  std::vector<int> shape;
  std::vector<double>* value;
  std::vector<double>* grad;
};

// All layers share the convention: forward(..., record=true) pushes the
// activations backward() needs onto an internal stack; backward() pops.
// Callers must unwind in exact reverse order of the recorded forwards.
// backward() with an empty stack throws NoRecordedForward.

class Dense {
 public:
  Dense(std::string name, int in, int out);

  // Scaled-uniform fan-in init: U[-sqrt(3/in), +sqrt(3/in)], biases zero.
  void init(Rng& rng);

  std::vector<double> forward(const std::vector<double>& x, bool record);
  std::vector<double> backward(const std::vector<double>& grad_out);

  void collect(std::vector<ParamView>& out);
  void zero_grad();
  void clear_cache();

  int in() const { return in_; }
  int out() const { return out_; }

 private:
  std::string name_;
  int in_, out_;
  std::vector<double> w_, b_, gw_, gb_;  // w_ row-major out x in
  std::vector<std::vector<double>> stack_;
};

// 3x3 convolution, stride 1, no padding, independent bias per out-channel.
class Conv2d {
 public:
  Conv2d(std::string name, int in_channels, int out_channels);

  void init(Rng& rng);

  Tensor forward(const Tensor& x, bool record);  // (C,H,W) -> (OC,H-2,W-2)
  Tensor backward(const Tensor& grad_out);

  void collect(std::vector<ParamView>& out);
  void zero_grad();
  void clear_cache();

  int in_channels() const { return in_channels_; }
  int out_channels() const { return out_channels_; }

 private:
  std::string name_;
  int in_channels_, out_channels_;
  std::vector<double> w_, b_, gw_, gb_;  // w_ [oc][ic][3][3]
  std::vector<Tensor> stack_;
};

class Tanh {
 public:
  explicit Tanh(std::string name) : name_(std::move(name)) {}

  std::vector<double> forward(const std::vector<double>& x, bool record);
  std::vector<double> backward(const std::vector<double>& grad_out);
  void clear_cache() { stack_.clear(); }

 private:
  std::string name_;
  std::vector<std::vector<double>> stack_;  // cached outputs
};

// Gated recurrent cell:
//   r  = sigmoid(Wr x + br + Ur h + cr)
//   z  = sigmoid(Wz x + bz + Uz h + cz)
//   n  = tanh(Wn x + bn + r * (Un h + cn))
//   h' = (1 - z) * n + z * h
class GruCell {
 public:
  GruCell(std::string name, int input, int hidden);

  void init(Rng& rng);

  std::vector<double> forward(const std::vector<double>& x,
                              const std::vector<double>& h, bool record);
  // Gradient w.r.t. the new state in; gradients w.r.t. (x, previous h) out.
  std::pair<std::vector<double>, std::vector<double>> backward(
      const std::vector<double>& grad_h_new);

  void collect(std::vector<ParamView>& out);
  void zero_grad();
  void clear_cache();

  int input() const { return input_; }
  int hidden() const { return hidden_; }

 private:
  struct StepCache {
    std::vector<double> x, h, r, z, n, hn_lin;
  };

  std::string name_;
  int input_, hidden_;
  std::vector<double> wr_, wz_, wn_;  // hidden x input
  std::vector<double> ur_, uz_, un_;  // hidden x hidden
  std::vector<double> br_, bz_, bn_, cr_, cz_, cn_;
  std::vector<double> gwr_, gwz_, gwn_, gur_, guz_, gun_;
  std::vector<double> gbr_, gbz_, gbn_, gcr_, gcz_, gcn_;
  std::vector<StepCache> stack_;
};

// Probabilities over the logits with masked entries forced to exactly 0 and
// the rest renormalized; throws AllActionsMasked when nothing is valid.
std::vector<double> masked_softmax(const std::vector<double>& logits,
                                   const std::vector<uint8_t>& mask);

// Jacobian-vector product of masked_softmax: gradient w.r.t. the logits
// given the probabilities it produced and a gradient w.r.t. them.
std::vector<double> masked_softmax_backward(const std::vector<double>& probs,
                                            const std::vector<uint8_t>& mask,
                                            const std::vector<double>& grad_probs);

inline std::vector<double> softmax(const std::vector<double>& logits) {
  return masked_softmax(logits, std::vector<uint8_t>(logits.size(), 1));
}

}  // namespace patrol::nn
