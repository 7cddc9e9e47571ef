#include "nn/policy.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "error.hpp"
#include "json.hpp"

namespace patrol::nn {

static_assert(std::endian::native == std::endian::little,
              "checkpoint blobs are written in host order and pinned LE");

namespace {

void validate_config(const PolicyNetConfig& cfg) {
  if (cfg.height < 5 || cfg.width < 5)
    fail(Err::bad_config,
         "map too small for two 3x3 convolutions (need at least 5x5)");
  if (cfg.conv_channels <= 0 || cfg.conv1_out <= 0 || cfg.conv2_out <= 0 ||
      cfg.dense1 <= 0 || cfg.dense2 <= 0 || cfg.dense3 <= 0 || cfg.gru <= 0 ||
      cfg.extras < 0)
    fail(Err::bad_config, "non-positive layer width");
  if (!cfg.move_head && !cfg.message_head && !cfg.value_head)
    fail(Err::bad_config, "network needs at least one head");
}

std::vector<uint8_t> to_mask_vector(const ActionMask& mask) {
  std::vector<uint8_t> out(mask.size());
  for (size_t i = 0; i < mask.size(); ++i) out[i] = mask[i] ? 1 : 0;
  return out;
}

}  // namespace

PolicyNetConfig actor_config(int height, int width) {
  PolicyNetConfig cfg;
  cfg.conv_channels = 4;  // structure, idleness, locations, messages
  cfg.height = height;
  cfg.width = width;
  cfg.extras = 1 + kNumActions;  // battery scalar + action mask
  return cfg;
}

PolicyNetConfig critic_config(int height, int width, int max_agents) {
  PolicyNetConfig cfg;
  cfg.conv_channels = 2;  // structure, idleness
  cfg.height = height;
  cfg.width = width;
  cfg.extras = 3 * max_agents;  // batteries + (row, col) per slot
  cfg.move_head = false;
  cfg.message_head = false;
  cfg.value_head = true;
  return cfg;
}

PolicyNet::PolicyNet(const PolicyNetConfig& cfg, uint64_t seed)
    : cfg_((validate_config(cfg), cfg)),
      conv1_("conv1", cfg.conv_channels, cfg.conv1_out),
      conv2_("conv2", cfg.conv1_out, cfg.conv2_out),
      act1_("conv1.tanh"), act2_("conv2.tanh"), act3_("dense1.tanh"),
      act4_("dense2.tanh"), act5_("dense3.tanh"),
      dense1_("dense1", cfg.dense_in(), cfg.dense1),
      dense2_("dense2", cfg.dense1, cfg.dense2),
      dense3_("dense3", cfg.dense2, cfg.dense3),
      gru_("gru", cfg.dense3, cfg.gru) {
  if (cfg_.move_head) move_.emplace("move_head", cfg_.gru, kNumActions);
  if (cfg_.message_head)
    message_.emplace("message_head", cfg_.gru, kNumMessages);
  if (cfg_.value_head) value_.emplace("value_head", cfg_.gru, 1);

  Rng rng(seed);
  conv1_.init(rng);
  conv2_.init(rng);
  dense1_.init(rng);
  dense2_.init(rng);
  dense3_.init(rng);
  gru_.init(rng);
  if (move_) move_->init(rng);
  if (message_) message_->init(rng);
  if (value_) value_->init(rng);
}

std::vector<double> PolicyNet::step(const ObservationView& obs,
                                    const std::vector<double>& h_in,
                                    bool record) {
  if (static_cast<int>(obs.channels.size()) != cfg_.conv_channels)
    fail(Err::shape_mismatch, "observation channel count does not match net");
  for (const auto& channel : obs.channels)
    if (channel.height() != cfg_.height || channel.width() != cfg_.width)
      fail(Err::shape_mismatch, "observation grid does not match net size");

  Tensor image = Tensor::zeros({cfg_.conv_channels, cfg_.height, cfg_.width});
  size_t at = 0;
  for (const auto& channel : obs.channels)
    for (double v : channel.data()) image.values[at++] = v;
  return step_raw(image, obs.extras(), h_in, record);
}

std::vector<double> PolicyNet::step_raw(const Tensor& image,
                                        const std::vector<double>& extras,
                                        const std::vector<double>& h_in,
                                        bool record) {
  if (static_cast<int>(extras.size()) != cfg_.extras)
    fail(Err::length_mismatch, "extras vector does not match net config");

  Tensor t1 = conv1_.forward(image, record);
  t1.values = act1_.forward(t1.values, record);
  Tensor t2 = conv2_.forward(t1, record);
  std::vector<double> x = act2_.forward(t2.values, record);
  x.insert(x.end(), extras.begin(), extras.end());

  std::vector<double> v = dense1_.forward(x, record);
  v = act3_.forward(v, record);
  v = dense2_.forward(v, record);
  v = act4_.forward(v, record);
  v = dense3_.forward(v, record);
  v = act5_.forward(v, record);
  return gru_.forward(v, h_in, record);
}

std::vector<double> PolicyNet::move_logits(const std::vector<double>& features,
                                           bool record) {
  if (!move_) fail(Err::bad_config, "network has no movement head");
  return move_->forward(features, record);
}

std::vector<double> PolicyNet::message_logits(
    const std::vector<double>& features, bool record) {
  if (!message_) fail(Err::bad_config, "network has no message head");
  return message_->forward(features, record);
}

double PolicyNet::value(const std::vector<double>& features, bool record) {
  if (!value_) fail(Err::bad_config, "network has no value head");
  return value_->forward(features, record)[0];
}

std::vector<double> PolicyNet::move_logits_backward(
    const std::vector<double>& grad) {
  if (!move_) fail(Err::bad_config, "network has no movement head");
  return move_->backward(grad);
}

std::vector<double> PolicyNet::message_logits_backward(
    const std::vector<double>& grad) {
  if (!message_) fail(Err::bad_config, "network has no message head");
  return message_->backward(grad);
}

std::vector<double> PolicyNet::value_backward(double grad) {
  if (!value_) fail(Err::bad_config, "network has no value head");
  return value_->backward({grad});
}

std::vector<double> PolicyNet::step_backward(
    const std::vector<double>& grad_h_out) {
  auto [g_gru_in, g_h_in] = gru_.backward(grad_h_out);
  std::vector<double> v = act5_.backward(g_gru_in);
  v = dense3_.backward(v);
  v = act4_.backward(v);
  v = dense2_.backward(v);
  v = act3_.backward(v);
  v = dense1_.backward(v);

  const size_t flat = static_cast<size_t>(cfg_.flat_size());
  std::vector<double> g_flat(v.begin(), v.begin() + static_cast<long>(flat));
  g_flat = act2_.backward(g_flat);
  Tensor g_t2({cfg_.conv2_out, cfg_.height - 4, cfg_.width - 4},
              std::move(g_flat));
  Tensor g_t1 = conv2_.backward(g_t2);
  g_t1.values = act1_.backward(g_t1.values);
  conv1_.backward(g_t1);  // image gradient discarded: observations are data
  return g_h_in;
}

std::vector<ParamView> PolicyNet::params() {
  std::vector<ParamView> out;
  conv1_.collect(out);
  conv2_.collect(out);
  dense1_.collect(out);
  dense2_.collect(out);
  dense3_.collect(out);
  gru_.collect(out);
  if (move_) move_->collect(out);
  if (message_) message_->collect(out);
  if (value_) value_->collect(out);
  return out;
}

size_t PolicyNet::param_count() {
  size_t n = 0;
  for (const ParamView& pv : params()) n += pv.value->size();
  return n;
}

void PolicyNet::zero_grad() {
  conv1_.zero_grad();
  conv2_.zero_grad();
  dense1_.zero_grad();
  dense2_.zero_grad();
  dense3_.zero_grad();
  gru_.zero_grad();
  if (move_) move_->zero_grad();
  if (message_) message_->zero_grad();
  if (value_) value_->zero_grad();
}

void PolicyNet::clear_cache() {
  conv1_.clear_cache();
  conv2_.clear_cache();
  dense1_.clear_cache();
  dense2_.clear_cache();
  dense3_.clear_cache();
  gru_.clear_cache();
  act1_.clear_cache();
  act2_.clear_cache();
  act3_.clear_cache();
  act4_.clear_cache();
  act5_.clear_cache();
  if (move_) move_->clear_cache();
  if (message_) message_->clear_cache();
  if (value_) value_->clear_cache();
}

ActorOutput forward_actor(PolicyNet& net, const ObservationView& obs,
                          const std::vector<double>& h_in) {
  ActorOutput out;
  out.state = net.step(obs, h_in, false);
  out.message_probs = softmax(net.message_logits(out.state, false));
  out.move_probs = masked_softmax(net.move_logits(out.state, false),
                                  to_mask_vector(obs.action_mask));
  return out;
}

std::pair<double, std::vector<double>> forward_critic(
    PolicyNet& net, const ObservationView& obs,
    const std::vector<double>& h_in) {
  std::vector<double> state = net.step(obs, h_in, false);
  return {net.value(state, false), std::move(state)};
}

// --- Checkpoints ----------------------------------------------------------------

void copy_params(PolicyNet& dst, PolicyNet& src) {
  auto d = dst.params();
  auto s = src.params();
  if (d.size() != s.size())
    fail(Err::bad_config, "copy_params: parameter registries differ");
  for (size_t i = 0; i < d.size(); ++i) {
    if (d[i].shape != s[i].shape)
      fail(Err::bad_config, "copy_params: tensor shape drift");
    *d[i].value = *s[i].value;
  }
}

namespace {

constexpr char kMagic[] = "PATROLNN1\n";
constexpr size_t kMagicLen = 10;

}  // namespace

void save_checkpoint(
    const std::string& path,
    const std::vector<std::pair<std::string, PolicyNet*>>& nets) {
  nlohmann::json manifest;
  manifest["format"] = "patrol-nn";
  manifest["version"] = 1;
  manifest["tensors"] = nlohmann::json::array();
  std::vector<double> blob;
  for (const auto& [prefix, net] : nets) {
    for (const ParamView& pv : net->params()) {
      manifest["tensors"].push_back({{"name", prefix + "/" + pv.name},
                                     {"shape", pv.shape},
                                     {"offset", blob.size()},
                                     {"count", pv.value->size()}});
      blob.insert(blob.end(), pv.value->begin(), pv.value->end());
    }
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Err::io, "cannot open checkpoint for writing: " + path);
  const std::string text = manifest.dump();
  uint64_t len = text.size();
  char lenbuf[8];
  for (int i = 0; i < 8; ++i)
    lenbuf[i] = static_cast<char>((len >> (8 * i)) & 0xff);
  out.write(kMagic, kMagicLen);
  out.write(lenbuf, 8);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.write(reinterpret_cast<const char*>(blob.data()),
            static_cast<std::streamsize>(blob.size() * sizeof(double)));
  if (!out) fail(Err::io, "short write while saving checkpoint: " + path);
}

void load_checkpoint(
    const std::string& path,
    const std::vector<std::pair<std::string, PolicyNet*>>& nets) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Err::io, "cannot open checkpoint: " + path);

  char magic[kMagicLen];
  in.read(magic, kMagicLen);
  if (!in || std::memcmp(magic, kMagic, kMagicLen) != 0)
    fail(Err::bad_config, "not a checkpoint file: " + path);
  char lenbuf[8];
  in.read(lenbuf, 8);
  if (!in) fail(Err::io, "truncated checkpoint header: " + path);
  uint64_t len = 0;
  for (int i = 0; i < 8; ++i)
    len |= static_cast<uint64_t>(static_cast<unsigned char>(lenbuf[i]))
           << (8 * i);

  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  if (!in) fail(Err::io, "truncated checkpoint manifest: " + path);
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(Err::bad_config, std::string("bad checkpoint manifest: ") + e.what());
  }
  if (manifest.value("version", 0) != 1 ||
      manifest.value("format", "") != "patrol-nn")
    fail(Err::bad_config, "unsupported checkpoint version: " + path);

  std::vector<double> blob;
  {
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                            std::istreambuf_iterator<char>());
    if (bytes.size() % sizeof(double) != 0)
      fail(Err::bad_config, "checkpoint blob is not a float64 array");
    blob.resize(bytes.size() / sizeof(double));
    std::memcpy(blob.data(), bytes.data(), bytes.size());
  }

  for (const auto& [prefix, net] : nets) {
    for (ParamView pv : net->params()) {
      const std::string want = prefix + "/" + pv.name;
      const nlohmann::json* found = nullptr;
      for (const auto& tensor : manifest["tensors"])
        if (tensor["name"] == want) {
          found = &tensor;
          break;
        }
      if (!found) fail(Err::bad_config, "checkpoint misses tensor: " + want);
      if ((*found)["shape"].get<std::vector<int>>() != pv.shape)
        fail(Err::bad_config, "checkpoint shape mismatch for: " + want);
      const size_t offset = (*found)["offset"].get<size_t>();
      const size_t count = (*found)["count"].get<size_t>();
      if (count != pv.value->size() || offset + count > blob.size())
        fail(Err::bad_config, "checkpoint extent mismatch for: " + want);
      std::copy(blob.begin() + static_cast<long>(offset),
                blob.begin() + static_cast<long>(offset + count),
                pv.value->begin());
    }
  }
}

}  // namespace patrol::nn
