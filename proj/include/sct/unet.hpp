// Copyright (c) 2026 the sctgen authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sct/checkpoint.hpp"
#include "sct/common.hpp"
#include "sct/nn3d.hpp"
#include "sct/rng.hpp"
#include "sct/tensor.hpp"
#include "sct/volume.hpp"

namespace sct {

/// Architecture hyperparameters of the fusion U-Net. Kernels are fixed at
/// 3x3x3 and the head always emits one channel of raw logits.
struct ModelConfig {
  int in_channels = 2;
  std::array<int, 4> feature_maps{32, 64, 128, 256};
  bool batch_norm = true;

  void validate() const {
    if (in_channels != 1 && in_channels != 2)
      throw parameter_error("ModelConfig: in_channels must be 1 or 2");
    for (int f : feature_maps) {
      if (f < 1) throw parameter_error("ModelConfig: feature maps must be positive");
    }
    for (int i = 1; i < 4; ++i) {
      if (feature_maps[i] <= feature_maps[i - 1])
        throw parameter_error("ModelConfig: feature maps must be strictly increasing");
    }
  }

  nlohmann::json fingerprint() const {
    return nlohmann::json{{"kind", "fusion_unet"},
                          {"in_channels", in_channels},
                          {"feature_maps", feature_maps},
                          {"batch_norm", batch_norm}};
  }

  bool operator==(const ModelConfig&) const = default;
};

inline ModelConfig model_config_from_fingerprint(const nlohmann::json& j) {
  if (j.value("kind", "") != "fusion_unet")
    throw config_error("checkpoint is not a fusion_unet model");
  ModelConfig cfg;
  cfg.in_channels = j.at("in_channels").get<int>();
  j.at("feature_maps").get_to(cfg.feature_maps);
  cfg.batch_norm = j.at("batch_norm").get<bool>();
  cfg.validate();
  return cfg;
}

/// Early fusion: channel order (CT, CBCT) for the 2-channel variant; CBCT
/// alone when the CT is absent.
inline Tensor fuse_inputs(const Volume& cbct, const Volume* ct) {
  if (cbct.domain() != Domain::NORMALIZED)
    throw domain_error("fuse_inputs: cbct must be NORMALIZED");
  const int d = cbct.depth(), h = cbct.height(), w = cbct.width();
  if (ct == nullptr) {
    Tensor t(1, d, h, w);
    std::copy(cbct.data().begin(), cbct.data().end(), t.v.begin());
    return t;
  }
  if (ct->domain() != Domain::NORMALIZED)
    throw domain_error("fuse_inputs: ct must be NORMALIZED");
  if (ct->dims() != cbct.dims())
    throw shape_error("fuse_inputs: dims differ: " + dims_to_string(ct->dims()) + " vs " +
                      dims_to_string(cbct.dims()));
  Tensor t(2, d, h, w);
  std::copy(ct->data().begin(), ct->data().end(), t.v.begin());
  std::copy(cbct.data().begin(), cbct.data().end(), t.v.begin() + cbct.size());
  return t;
}

namespace nn {

/// conv -> (bn) -> relu, twice.
struct DoubleConv {
  Conv3d conv1, conv2;
  BatchNorm3d bn1, bn2;
  Relu relu1, relu2;
  bool use_bn = true;

  void configure(int in_ch, int out_ch, bool batch_norm, Rng& rng) {
    use_bn = batch_norm;
    conv1.configure(in_ch, out_ch, 3, rng);
    conv2.configure(out_ch, out_ch, 3, rng);
    if (use_bn) {
      bn1.configure(out_ch);
      bn2.configure(out_ch);
    }
  }

  Tensor forward(const Tensor& x, bool train) {
    Tensor t = conv1.forward(x, train);
    if (use_bn) t = bn1.forward(t, train);
    t = relu1.forward(t, train);
    t = conv2.forward(t, train);
    if (use_bn) t = bn2.forward(t, train);
    return relu2.forward(t, train);
  }

  Tensor backward(const Tensor& gout) {
    Tensor g = relu2.backward(gout);
    if (use_bn) g = bn2.backward(g);
    g = conv2.backward(g);
    g = relu1.backward(g);
    if (use_bn) g = bn1.backward(g);
    return conv1.backward(g);
  }

  void collect(const std::string& prefix, std::vector<NamedParam>& params,
               std::vector<NamedBuffer>& buffers) {
    params.push_back({prefix + ".conv1.weight", &conv1.weight});
    params.push_back({prefix + ".conv1.bias", &conv1.bias});
    params.push_back({prefix + ".conv2.weight", &conv2.weight});
    params.push_back({prefix + ".conv2.bias", &conv2.bias});
    if (use_bn) {
      params.push_back({prefix + ".bn1.gamma", &bn1.gamma});
      params.push_back({prefix + ".bn1.beta", &bn1.beta});
      params.push_back({prefix + ".bn2.gamma", &bn2.gamma});
      params.push_back({prefix + ".bn2.beta", &bn2.beta});
      buffers.push_back({prefix + ".bn1.running_mean", &bn1.running_mean});
      buffers.push_back({prefix + ".bn1.running_var", &bn1.running_var});
      buffers.push_back({prefix + ".bn2.running_mean", &bn2.running_mean});
      buffers.push_back({prefix + ".bn2.running_var", &bn2.running_var});
    }
  }
};

/// Trilinear x2 upsample followed by a 3x3x3 convolution halving channels.
struct UpBlock {
  Upsample3d up;
  Conv3d conv;

  void configure(int in_ch, int out_ch, Rng& rng) { conv.configure(in_ch, out_ch, 3, rng); }

  Tensor forward(const Tensor& x, bool train) { return conv.forward(up.forward(x), train); }

  Tensor backward(const Tensor& gout) { return up.backward(conv.backward(gout)); }

  void collect(const std::string& prefix, std::vector<NamedParam>& params) {
    params.push_back({prefix + ".conv.weight", &conv.weight});
    params.push_back({prefix + ".conv.bias", &conv.bias});
  }
};

}  // namespace nn

/// 3D U-Net generator: three double-conv encoder stages joined by 2x2x2 max
/// pooling, a double-conv bottleneck, a mirrored decoder with skip
/// concatenation, and a 1x1x1 linear head (no output nonlinearity).
class FusionUNet {
 public:
  FusionUNet() = default;

  FusionUNet(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
    cfg.validate();
    Rng rng(mix64(seed, 0x554eu /*"UN"*/));
    const auto& f = cfg.feature_maps;
    enc1_.configure(cfg.in_channels, f[0], cfg.batch_norm, rng);
    enc2_.configure(f[0], f[1], cfg.batch_norm, rng);
    enc3_.configure(f[1], f[2], cfg.batch_norm, rng);
    bottleneck_.configure(f[2], f[3], cfg.batch_norm, rng);
    up3_.configure(f[3], f[2], rng);
    dec3_.configure(2 * f[2], f[2], cfg.batch_norm, rng);
    up2_.configure(f[2], f[1], rng);
    dec2_.configure(2 * f[1], f[1], cfg.batch_norm, rng);
    up1_.configure(f[1], f[0], rng);
    dec1_.configure(2 * f[0], f[0], cfg.batch_norm, rng);
    head_.configure(f[0], 1, 1, rng);
  }

  const ModelConfig& config() const { return cfg_; }

  /// Spatial dims must be divisible by 8 (three pooling stages). Output has
  /// one channel and the input's spatial dims.
  Tensor forward(const Tensor& x, bool train = false) {
    if (x.c != cfg_.in_channels)
      throw shape_error("forward: expected " + std::to_string(cfg_.in_channels) +
                        " input channels, got " + std::to_string(x.c));
    if (x.d % 8 || x.h % 8 || x.w % 8)
      throw shape_error("forward: spatial dims must be divisible by 8, got " +
                        x.shape_string());
    e1_ = enc1_.forward(x, train);
    Tensor t = pool1_.forward(e1_, train);
    e2_ = enc2_.forward(t, train);
    t = pool2_.forward(e2_, train);
    e3_ = enc3_.forward(t, train);
    t = pool3_.forward(e3_, train);
    t = bottleneck_.forward(t, train);
    t = up3_.forward(t, train);
    t = dec3_.forward(nn::concat_channels(t, e3_), train);
    t = up2_.forward(t, train);
    t = dec2_.forward(nn::concat_channels(t, e2_), train);
    t = up1_.forward(t, train);
    t = dec1_.forward(nn::concat_channels(t, e1_), train);
    return head_.forward(t, train);
  }

  /// Backpropagates through the caches left by a training-mode forward;
  /// accumulates parameter gradients and returns the input gradient.
  Tensor backward(const Tensor& grad_output) {
    const auto& f = cfg_.feature_maps;
    Tensor g = head_.backward(grad_output);
    Tensor gu, gskip;
    g = dec1_.backward(g);
    nn::split_channels(g, f[0], gu, gskip);
    g = up1_.backward(gu);
    g = dec2_.backward(g);
    Tensor gu2, gskip2;
    nn::split_channels(g, f[1], gu2, gskip2);
    g = up2_.backward(gu2);
    g = dec3_.backward(g);
    Tensor gu3, gskip3;
    nn::split_channels(g, f[2], gu3, gskip3);
    g = up3_.backward(gu3);
    g = bottleneck_.backward(g);
    g = pool3_.backward(g);
    add_inplace(g, gskip3);
    g = enc3_.backward(g);
    g = pool2_.backward(g);
    add_inplace(g, gskip2);
    g = enc2_.backward(g);
    g = pool1_.backward(g);
    add_inplace(g, gskip);
    return enc1_.backward(g);
  }

  std::vector<NamedParam> named_parameters() {
    std::vector<NamedParam> params;
    std::vector<NamedBuffer> buffers;
    collect(params, buffers);
    return params;
  }

  std::vector<NamedBuffer> named_buffers() {
    std::vector<NamedParam> params;
    std::vector<NamedBuffer> buffers;
    collect(params, buffers);
    return buffers;
  }

  std::size_t parameter_count() {
    std::size_t n = 0;
    for (const auto& p : named_parameters()) n += p.param->size();
    return n;
  }

  void zero_grad() {
    for (auto& p : named_parameters()) p.param->zero_grad();
  }

 private:
  void collect(std::vector<NamedParam>& params, std::vector<NamedBuffer>& buffers) {
    enc1_.collect("enc1", params, buffers);
    enc2_.collect("enc2", params, buffers);
    enc3_.collect("enc3", params, buffers);
    bottleneck_.collect("bottleneck", params, buffers);
    up3_.collect("up3", params);
    dec3_.collect("dec3", params, buffers);
    up2_.collect("up2", params);
    dec2_.collect("dec2", params, buffers);
    up1_.collect("up1", params);
    dec1_.collect("dec1", params, buffers);
    params.push_back({"head.weight", &head_.weight});
    params.push_back({"head.bias", &head_.bias});
  }

  static void add_inplace(Tensor& a, const Tensor& b) {
    for (std::size_t i = 0; i < a.size(); ++i) a.v[i] += b.v[i];
  }

  ModelConfig cfg_;
  nn::DoubleConv enc1_, enc2_, enc3_, bottleneck_, dec3_, dec2_, dec1_;
  nn::MaxPool3d pool1_, pool2_, pool3_;
  nn::UpBlock up3_, up2_, up1_;
  nn::Conv3d head_;
  Tensor e1_, e2_, e3_;
};

inline FusionUNet build_model(const ModelConfig& cfg, std::uint64_t seed) {
  return FusionUNet(cfg, seed);
}

inline void save_model(FusionUNet& model, const std::string& path) {
  TensorFile tf;
  tf.meta = model.config().fingerprint();
  for (const auto& p : model.named_parameters())
    tf.tensors.push_back({p.name, p.param->shape, p.param->value});
  for (const auto& b : model.named_buffers())
    tf.tensors.push_back({b.name, {static_cast<int>(b.data->size())}, *b.data});
  save_tensor_file(tf, path);
}

/// Loads a model checkpoint. When `required` is given, the stored config
/// fingerprint must match it exactly.
inline FusionUNet load_model(const std::string& path, const ModelConfig* required = nullptr) {
  const TensorFile tf = load_tensor_file(path);
  ModelConfig cfg;
  try {
    cfg = model_config_from_fingerprint(tf.meta);
  } catch (const nlohmann::json::exception& e) {
    throw format_error(path + ": bad checkpoint metadata: " + std::string(e.what()));
  }
  if (required && !(cfg == *required))
    throw config_error(path + ": checkpoint config fingerprint does not match: stored " +
                       cfg.fingerprint().dump() + " vs required " +
                       required->fingerprint().dump());
  FusionUNet model(cfg, 0);
  for (const auto& p : model.named_parameters()) {
    const auto* entry = tf.find(p.name);
    if (!entry) throw format_error(path + ": missing tensor " + p.name);
    if (entry->data.size() != p.param->size())
      throw format_error(path + ": tensor " + p.name + " has wrong size");
    p.param->value = entry->data;
  }
  for (const auto& b : model.named_buffers()) {
    const auto* entry = tf.find(b.name);
    if (!entry) throw format_error(path + ": missing tensor " + b.name);
    if (entry->data.size() != b.data->size())
      throw format_error(path + ": tensor " + b.name + " has wrong size");
    *b.data = entry->data;
  }
  return model;
}

}  // namespace sct
