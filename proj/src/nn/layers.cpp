#include "nn/layers.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

#include "error.hpp"

namespace patrol::nn {

namespace {

using MatMap = Eigen::Map<
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using GradMatMap =
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using VecMap = Eigen::Map<const Eigen::VectorXd>;
using MutVecMap = Eigen::Map<Eigen::VectorXd>;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void require_length(size_t got, size_t want, const std::string& where) {
  if (got != want)
    fail(Err::length_mismatch,
         where + ": got " + std::to_string(got) + " values, expected " +
             std::to_string(want));
}

[[noreturn]] void no_forward(const std::string& where) {
  fail(Err::no_recorded_forward,
       where + ": backward without a matching recorded forward");
}

void fill_uniform(std::vector<double>& values, double bound, Rng& rng) {
  for (double& v : values) v = rng.range(-bound, bound);
}

}  // namespace

Tensor::Tensor(std::vector<int> s, std::vector<double> v)
    : shape(std::move(s)), values(std::move(v)) {
  size_t n = 1;
  for (int d : shape) n *= static_cast<size_t>(d);
  if (n != values.size())
    fail(Err::shape_mismatch, "tensor value count does not match its shape");
}

Tensor Tensor::zeros(std::vector<int> shape) {
  size_t n = 1;
  for (int d : shape) n *= static_cast<size_t>(d);
  Tensor t;
  t.shape = std::move(shape);
  t.values.assign(n, 0.0);
  return t;
}

void check_finite(const std::vector<double>& values, const std::string& where) {
  for (double v : values)
    if (!std::isfinite(v))
      fail(Err::non_finite, where + ": non-finite activation");
}

// --- Dense --------------------------------------------------------------------

Dense::Dense(std::string name, int in, int out)
    : name_(std::move(name)), in_(in), out_(out),
      w_(static_cast<size_t>(in) * out, 0.0), b_(static_cast<size_t>(out), 0.0),
      gw_(w_.size(), 0.0), gb_(b_.size(), 0.0) {}

void Dense::init(Rng& rng) {
  fill_uniform(w_, std::sqrt(3.0 / in_), rng);
  std::fill(b_.begin(), b_.end(), 0.0);
}

std::vector<double> Dense::forward(const std::vector<double>& x, bool record) {
  require_length(x.size(), static_cast<size_t>(in_), name_);
  std::vector<double> y(static_cast<size_t>(out_));
  MutVecMap(y.data(), out_) =
      MatMap(w_.data(), out_, in_) * VecMap(x.data(), in_) +
      VecMap(b_.data(), out_);
  check_finite(y, name_);
  if (record) stack_.push_back(x);
  return y;
}

std::vector<double> Dense::backward(const std::vector<double>& grad_out) {
  if (stack_.empty()) no_forward(name_);
  require_length(grad_out.size(), static_cast<size_t>(out_), name_);
  const std::vector<double> x = std::move(stack_.back());
  stack_.pop_back();

  GradMatMap(gw_.data(), out_, in_).noalias() +=
      VecMap(grad_out.data(), out_) * VecMap(x.data(), in_).transpose();
  MutVecMap(gb_.data(), out_) += VecMap(grad_out.data(), out_);

  std::vector<double> grad_in(static_cast<size_t>(in_));
  MutVecMap(grad_in.data(), in_) =
      MatMap(w_.data(), out_, in_).transpose() * VecMap(grad_out.data(), out_);
  return grad_in;
}

void Dense::collect(std::vector<ParamView>& out) {
  out.push_back({name_ + ".w", {out_, in_}, &w_, &gw_});
  out.push_back({name_ + ".b", {out_}, &b_, &gb_});
}

void Dense::zero_grad() {
  std::fill(gw_.begin(), gw_.end(), 0.0);
  std::fill(gb_.begin(), gb_.end(), 0.0);
}

void Dense::clear_cache() { stack_.clear(); }

// --- Conv2d -------------------------------------------------------------------

Conv2d::Conv2d(std::string name, int in_channels, int out_channels)
    : name_(std::move(name)), in_channels_(in_channels),
      out_channels_(out_channels),
      w_(static_cast<size_t>(out_channels) * in_channels * 9, 0.0),
      b_(static_cast<size_t>(out_channels), 0.0), gw_(w_.size(), 0.0),
      gb_(b_.size(), 0.0) {}

void Conv2d::init(Rng& rng) {
  fill_uniform(w_, std::sqrt(3.0 / (in_channels_ * 9)), rng);
  std::fill(b_.begin(), b_.end(), 0.0);
}

Tensor Conv2d::forward(const Tensor& x, bool record) {
  if (x.shape.size() != 3 || x.shape[0] != in_channels_)
    fail(Err::shape_mismatch, name_ + ": expected (C,H,W) input");
  const int h = x.shape[1], w = x.shape[2];
  if (h < 3 || w < 3)
    fail(Err::shape_mismatch, name_ + ": input smaller than the 3x3 kernel");
  const int oh = h - 2, ow = w - 2;
  Tensor y = Tensor::zeros({out_channels_, oh, ow});

  auto xat = [&](int c, int r, int cc) {
    return x.values[(static_cast<size_t>(c) * h + r) * w + cc];
  };
  for (int oc = 0; oc < out_channels_; ++oc) {
    for (int r = 0; r < oh; ++r) {
      for (int c = 0; c < ow; ++c) {
        double acc = b_[static_cast<size_t>(oc)];
        for (int ic = 0; ic < in_channels_; ++ic) {
          const double* k =
              &w_[(static_cast<size_t>(oc) * in_channels_ + ic) * 9];
          for (int kr = 0; kr < 3; ++kr)
            for (int kc = 0; kc < 3; ++kc)
              acc += k[kr * 3 + kc] * xat(ic, r + kr, c + kc);
        }
        y.values[(static_cast<size_t>(oc) * oh + r) * ow + c] = acc;
      }
    }
  }
  check_finite(y.values, name_);
  if (record) stack_.push_back(x);
  return y;
}

Tensor Conv2d::backward(const Tensor& grad_out) {
  if (stack_.empty()) no_forward(name_);
  const Tensor x = std::move(stack_.back());
  stack_.pop_back();
  const int h = x.shape[1], w = x.shape[2];
  const int oh = h - 2, ow = w - 2;
  if (grad_out.shape != std::vector<int>{out_channels_, oh, ow})
    fail(Err::shape_mismatch, name_ + ": gradient shape mismatch");

  Tensor grad_in = Tensor::zeros(x.shape);
  auto xat = [&](int c, int r, int cc) {
    return x.values[(static_cast<size_t>(c) * h + r) * w + cc];
  };
  for (int oc = 0; oc < out_channels_; ++oc) {
    for (int r = 0; r < oh; ++r) {
      for (int c = 0; c < ow; ++c) {
        const double g =
            grad_out.values[(static_cast<size_t>(oc) * oh + r) * ow + c];
        gb_[static_cast<size_t>(oc)] += g;
        for (int ic = 0; ic < in_channels_; ++ic) {
          double* gk = &gw_[(static_cast<size_t>(oc) * in_channels_ + ic) * 9];
          const double* k =
              &w_[(static_cast<size_t>(oc) * in_channels_ + ic) * 9];
          for (int kr = 0; kr < 3; ++kr) {
            for (int kc = 0; kc < 3; ++kc) {
              gk[kr * 3 + kc] += g * xat(ic, r + kr, c + kc);
              grad_in.values[(static_cast<size_t>(ic) * h + (r + kr)) * w +
                             (c + kc)] += g * k[kr * 3 + kc];
            }
          }
        }
      }
    }
  }
  return grad_in;
}

void Conv2d::collect(std::vector<ParamView>& out) {
  out.push_back({name_ + ".w", {out_channels_, in_channels_, 3, 3}, &w_, &gw_});
  out.push_back({name_ + ".b", {out_channels_}, &b_, &gb_});
}

void Conv2d::zero_grad() {
  std::fill(gw_.begin(), gw_.end(), 0.0);
  std::fill(gb_.begin(), gb_.end(), 0.0);
}

void Conv2d::clear_cache() { stack_.clear(); }

// --- Tanh ---------------------------------------------------------------------

std::vector<double> Tanh::forward(const std::vector<double>& x, bool record) {
  std::vector<double> y(x.size());
  for (size_t i = 0; i < x.size(); ++i) y[i] = std::tanh(x[i]);
  check_finite(y, name_);
  if (record) stack_.push_back(y);
  return y;
}

std::vector<double> Tanh::backward(const std::vector<double>& grad_out) {
  if (stack_.empty()) no_forward(name_);
  const std::vector<double> y = std::move(stack_.back());
  stack_.pop_back();
  require_length(grad_out.size(), y.size(), name_);
  std::vector<double> grad_in(y.size());
  for (size_t i = 0; i < y.size(); ++i)
    grad_in[i] = grad_out[i] * (1.0 - y[i] * y[i]);
  return grad_in;
}

// --- GruCell ------------------------------------------------------------------

GruCell::GruCell(std::string name, int input, int hidden)
    : name_(std::move(name)), input_(input), hidden_(hidden) {
  const size_t wi = static_cast<size_t>(hidden) * input;
  const size_t wh = static_cast<size_t>(hidden) * hidden;
  const size_t v = static_cast<size_t>(hidden);
  wr_.assign(wi, 0.0); wz_.assign(wi, 0.0); wn_.assign(wi, 0.0);
  ur_.assign(wh, 0.0); uz_.assign(wh, 0.0); un_.assign(wh, 0.0);
  br_.assign(v, 0.0); bz_.assign(v, 0.0); bn_.assign(v, 0.0);
  cr_.assign(v, 0.0); cz_.assign(v, 0.0); cn_.assign(v, 0.0);
  gwr_.assign(wi, 0.0); gwz_.assign(wi, 0.0); gwn_.assign(wi, 0.0);
  gur_.assign(wh, 0.0); guz_.assign(wh, 0.0); gun_.assign(wh, 0.0);
  gbr_.assign(v, 0.0); gbz_.assign(v, 0.0); gbn_.assign(v, 0.0);
  gcr_.assign(v, 0.0); gcz_.assign(v, 0.0); gcn_.assign(v, 0.0);
}

void GruCell::init(Rng& rng) {
  const double wi = std::sqrt(3.0 / input_);
  const double wh = std::sqrt(3.0 / hidden_);
  fill_uniform(wr_, wi, rng);
  fill_uniform(wz_, wi, rng);
  fill_uniform(wn_, wi, rng);
  fill_uniform(ur_, wh, rng);
  fill_uniform(uz_, wh, rng);
  fill_uniform(un_, wh, rng);
  for (auto* b : {&br_, &bz_, &bn_, &cr_, &cz_, &cn_})
    std::fill(b->begin(), b->end(), 0.0);
}

std::vector<double> GruCell::forward(const std::vector<double>& x,
                                     const std::vector<double>& h,
                                     bool record) {
  require_length(x.size(), static_cast<size_t>(input_), name_);
  require_length(h.size(), static_cast<size_t>(hidden_), name_);
  const VecMap xv(x.data(), input_), hv(h.data(), hidden_);

  auto affine = [&](const std::vector<double>& wi, const std::vector<double>& bi,
                    const std::vector<double>& uh, const std::vector<double>& ch) {
    std::vector<double> a(static_cast<size_t>(hidden_));
    MutVecMap(a.data(), hidden_) =
        MatMap(wi.data(), hidden_, input_) * xv + VecMap(bi.data(), hidden_) +
        MatMap(uh.data(), hidden_, hidden_) * hv + VecMap(ch.data(), hidden_);
    return a;
  };

  std::vector<double> r = affine(wr_, br_, ur_, cr_);
  std::vector<double> z = affine(wz_, bz_, uz_, cz_);
  std::vector<double> hn_lin(static_cast<size_t>(hidden_));
  MutVecMap(hn_lin.data(), hidden_) =
      MatMap(un_.data(), hidden_, hidden_) * hv + VecMap(cn_.data(), hidden_);
  std::vector<double> n(static_cast<size_t>(hidden_));
  MutVecMap(n.data(), hidden_) =
      MatMap(wn_.data(), hidden_, input_) * xv + VecMap(bn_.data(), hidden_);

  std::vector<double> h_new(static_cast<size_t>(hidden_));
  for (int i = 0; i < hidden_; ++i) {
    r[static_cast<size_t>(i)] = sigmoid(r[static_cast<size_t>(i)]);
    z[static_cast<size_t>(i)] = sigmoid(z[static_cast<size_t>(i)]);
    n[static_cast<size_t>(i)] = std::tanh(
        n[static_cast<size_t>(i)] +
        r[static_cast<size_t>(i)] * hn_lin[static_cast<size_t>(i)]);
    h_new[static_cast<size_t>(i)] =
        (1.0 - z[static_cast<size_t>(i)]) * n[static_cast<size_t>(i)] +
        z[static_cast<size_t>(i)] * h[static_cast<size_t>(i)];
  }
  check_finite(h_new, name_);
  if (record)
    stack_.push_back({x, h, r, z, n, std::move(hn_lin)});
  return h_new;
}

std::pair<std::vector<double>, std::vector<double>> GruCell::backward(
    const std::vector<double>& grad_h_new) {
  if (stack_.empty()) no_forward(name_);
  const StepCache cache = std::move(stack_.back());
  stack_.pop_back();
  require_length(grad_h_new.size(), static_cast<size_t>(hidden_), name_);

  std::vector<double> gz_pre(static_cast<size_t>(hidden_));
  std::vector<double> gan(static_cast<size_t>(hidden_));
  std::vector<double> gr_pre(static_cast<size_t>(hidden_));
  std::vector<double> ghn_lin(static_cast<size_t>(hidden_));
  std::vector<double> grad_h(static_cast<size_t>(hidden_));
  for (int i = 0; i < hidden_; ++i) {
    const size_t s = static_cast<size_t>(i);
    const double g = grad_h_new[s];
    gz_pre[s] = g * (cache.h[s] - cache.n[s]) * cache.z[s] * (1.0 - cache.z[s]);
    gan[s] = g * (1.0 - cache.z[s]) * (1.0 - cache.n[s] * cache.n[s]);
    gr_pre[s] = gan[s] * cache.hn_lin[s] * cache.r[s] * (1.0 - cache.r[s]);
    ghn_lin[s] = gan[s] * cache.r[s];
    grad_h[s] = g * cache.z[s];
  }

  const VecMap xv(cache.x.data(), input_), hv(cache.h.data(), hidden_);
  auto add_outer = [&](std::vector<double>& gw, const std::vector<double>& gy,
                       const VecMap& in, int cols) {
    GradMatMap(gw.data(), hidden_, cols).noalias() +=
        VecMap(gy.data(), hidden_) * in.transpose();
  };
  auto add_vec = [&](std::vector<double>& gb, const std::vector<double>& gy) {
    MutVecMap(gb.data(), hidden_) += VecMap(gy.data(), hidden_);
  };
  add_outer(gwr_, gr_pre, xv, input_);
  add_outer(gwz_, gz_pre, xv, input_);
  add_outer(gwn_, gan, xv, input_);
  add_outer(gur_, gr_pre, hv, hidden_);
  add_outer(guz_, gz_pre, hv, hidden_);
  add_outer(gun_, ghn_lin, hv, hidden_);
  add_vec(gbr_, gr_pre);
  add_vec(gbz_, gz_pre);
  add_vec(gbn_, gan);
  add_vec(gcr_, gr_pre);
  add_vec(gcz_, gz_pre);
  add_vec(gcn_, ghn_lin);

  std::vector<double> grad_x(static_cast<size_t>(input_));
  MutVecMap gx(grad_x.data(), input_);
  gx = MatMap(wr_.data(), hidden_, input_).transpose() *
       VecMap(gr_pre.data(), hidden_);
  gx += MatMap(wz_.data(), hidden_, input_).transpose() *
        VecMap(gz_pre.data(), hidden_);
  gx += MatMap(wn_.data(), hidden_, input_).transpose() *
        VecMap(gan.data(), hidden_);

  MutVecMap gh(grad_h.data(), hidden_);
  gh += MatMap(ur_.data(), hidden_, hidden_).transpose() *
        VecMap(gr_pre.data(), hidden_);
  gh += MatMap(uz_.data(), hidden_, hidden_).transpose() *
        VecMap(gz_pre.data(), hidden_);
  gh += MatMap(un_.data(), hidden_, hidden_).transpose() *
        VecMap(ghn_lin.data(), hidden_);

  return {std::move(grad_x), std::move(grad_h)};
}

void GruCell::collect(std::vector<ParamView>& out) {
  out.push_back({name_ + ".wr", {hidden_, input_}, &wr_, &gwr_});
  out.push_back({name_ + ".wz", {hidden_, input_}, &wz_, &gwz_});
  out.push_back({name_ + ".wn", {hidden_, input_}, &wn_, &gwn_});
  out.push_back({name_ + ".ur", {hidden_, hidden_}, &ur_, &gur_});
  out.push_back({name_ + ".uz", {hidden_, hidden_}, &uz_, &guz_});
  out.push_back({name_ + ".un", {hidden_, hidden_}, &un_, &gun_});
  out.push_back({name_ + ".br", {hidden_}, &br_, &gbr_});
  out.push_back({name_ + ".bz", {hidden_}, &bz_, &gbz_});
  out.push_back({name_ + ".bn", {hidden_}, &bn_, &gbn_});
  out.push_back({name_ + ".cr", {hidden_}, &cr_, &gcr_});
  out.push_back({name_ + ".cz", {hidden_}, &cz_, &gcz_});
  out.push_back({name_ + ".cn", {hidden_}, &cn_, &gcn_});
}

void GruCell::zero_grad() {
  for (auto* g : {&gwr_, &gwz_, &gwn_, &gur_, &guz_, &gun_, &gbr_, &gbz_,
                  &gbn_, &gcr_, &gcz_, &gcn_})
    std::fill(g->begin(), g->end(), 0.0);
}

void GruCell::clear_cache() { stack_.clear(); }

// --- Masked softmax -------------------------------------------------------------

std::vector<double> masked_softmax(const std::vector<double>& logits,
                                   const std::vector<uint8_t>& mask) {
  if (logits.size() != mask.size())
    fail(Err::length_mismatch, "masked_softmax: logits/mask length mismatch");
  double max_valid = -std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < logits.size(); ++i)
    if (mask[i] && logits[i] > max_valid) max_valid = logits[i];
  if (!std::isfinite(max_valid))
    fail(Err::all_actions_masked, "masked_softmax: no valid entry");

  std::vector<double> probs(logits.size(), 0.0);
  double z = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) {
    if (!mask[i]) continue;
    probs[i] = std::exp(logits[i] - max_valid);
    z += probs[i];
  }
  for (size_t i = 0; i < probs.size(); ++i) probs[i] /= z;
  check_finite(probs, "masked_softmax");
  return probs;
}

std::vector<double> masked_softmax_backward(
    const std::vector<double>& probs, const std::vector<uint8_t>& mask,
    const std::vector<double>& grad_probs) {
  if (probs.size() != mask.size() || probs.size() != grad_probs.size())
    fail(Err::length_mismatch, "masked_softmax_backward: length mismatch");
  double dot = 0.0;
  for (size_t i = 0; i < probs.size(); ++i)
    if (mask[i]) dot += probs[i] * grad_probs[i];
  std::vector<double> grad(probs.size(), 0.0);
  for (size_t i = 0; i < probs.size(); ++i)
    if (mask[i]) grad[i] = probs[i] * (grad_probs[i] - dot);
  return grad;
}

}  // namespace patrol::nn
