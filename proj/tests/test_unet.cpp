// Copyright (c) 2026 the sctgen authors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <chrono>
#include <cstdio>
#include <set>
#include <filesystem>

#include "sct/rng.hpp"
#include "sct/unet.hpp"

namespace {

sct::Tensor random_tensor(int c, int d, int h, int w, std::uint64_t seed, float lo = 0.0f,
                          float hi = 1.0f) {
  sct::Tensor t(c, d, h, w);
  sct::Rng rng(seed);
  for (auto& v : t.v) v = static_cast<float>(rng.uniform(lo, hi));
  return t;
}

sct::ModelConfig tiny_config(int in_channels, bool bn = true) {
  sct::ModelConfig cfg;
  cfg.in_channels = in_channels;
  cfg.feature_maps = {4, 8, 16, 32};
  cfg.batch_norm = bn;
  return cfg;
}

std::string temp_path(const char* name) {
  auto dir = std::filesystem::temp_directory_path() / "sctgen_test_unet";
  std::filesystem::create_directories(dir);
  return (dir / name).string();
}

}  // namespace

TEST_CASE("fuse_inputs builds (ct, cbct) channel order") {
  const auto ct = sct::Volume::filled({8, 8, 8}, 0.25f);
  const auto cbct = sct::Volume::filled({8, 8, 8}, 0.75f);
  const auto fused = sct::fuse_inputs(cbct, &ct);
  REQUIRE(fused.c == 2);
  REQUIRE(fused.at(0, 0, 0, 0) == 0.25f);
  REQUIRE(fused.at(1, 0, 0, 0) == 0.75f);

  const auto solo = sct::fuse_inputs(cbct, nullptr);
  REQUIRE(solo.c == 1);
  REQUIRE(solo.at(0, 3, 3, 3) == 0.75f);

  const auto small = sct::Volume::filled({4, 4, 4}, 0.5f);
  REQUIRE_THROWS_AS(sct::fuse_inputs(cbct, &small), sct::shape_error);

  const sct::Volume hu({8, 8, 8}, {1, 1, 1}, {0, 0, 0}, sct::Domain::HU,
                       std::vector<float>(512, 40.0f));
  REQUIRE_THROWS_AS(sct::fuse_inputs(hu, nullptr), sct::domain_error);
}

TEST_CASE("forward preserves spatial dims and validates divisibility") {
  auto model = sct::build_model(tiny_config(2), 1);
  const auto y = model.forward(random_tensor(2, 32, 32, 32, 5));
  REQUIRE(y.c == 1);
  REQUIRE(y.d == 32);
  REQUIRE(y.h == 32);
  REQUIRE(y.w == 32);
  for (float v : y.v) REQUIRE(std::isfinite(v));

  auto uni = sct::build_model(tiny_config(1), 1);
  const auto y2 = uni.forward(random_tensor(1, 24, 40, 32, 6));
  REQUIRE((y2.d == 24 && y2.h == 40 && y2.w == 32));

  REQUIRE_THROWS_AS(uni.forward(random_tensor(1, 30, 30, 30, 7)), sct::shape_error);
  REQUIRE_THROWS_AS(uni.forward(random_tensor(2, 32, 32, 32, 7)), sct::shape_error);
}

TEST_CASE("parameter count differs only by the first conv input term") {
  auto two = sct::build_model(sct::ModelConfig{}, 3);
  sct::ModelConfig uni_cfg;
  uni_cfg.in_channels = 1;
  auto one = sct::build_model(uni_cfg, 3);
  // delta = f0 * 3^3 * (2 - 1)
  REQUIRE(two.parameter_count() - one.parameter_count() == 32 * 27);

  // all four configured widths appear in the parameter shapes
  std::set<int> widths;
  for (const auto& p : two.named_parameters()) {
    if (p.name.ends_with("weight") && p.param->shape.size() == 5)
      widths.insert(p.param->shape[0]);
  }
  for (int f : {32, 64, 128, 256}) REQUIRE(widths.count(f) == 1);
}

TEST_CASE("same seed gives bit-identical weights and outputs") {
  auto a = sct::build_model(tiny_config(2), 77);
  auto b = sct::build_model(tiny_config(2), 77);
  auto pa = a.named_parameters();
  auto pb = b.named_parameters();
  REQUIRE(pa.size() == pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) {
    REQUIRE(pa[i].name == pb[i].name);
    REQUIRE(pa[i].param->value == pb[i].param->value);
  }
  const auto x = random_tensor(2, 16, 16, 16, 8);
  REQUIRE(a.forward(x).v == b.forward(x).v);

  auto c = sct::build_model(tiny_config(2), 78);
  REQUIRE(c.named_parameters()[0].param->value != pa[0].param->value);
}

TEST_CASE("model config validation") {
  sct::ModelConfig cfg;
  cfg.in_channels = 3;
  REQUIRE_THROWS_AS(cfg.validate(), sct::parameter_error);
  cfg = sct::ModelConfig{};
  cfg.feature_maps = {32, 32, 64, 128};
  REQUIRE_THROWS_AS(cfg.validate(), sct::parameter_error);
}

TEST_CASE("checkpoint round trip preserves behavior") {
  auto model = sct::build_model(tiny_config(2), 21);
  const auto x = random_tensor(2, 16, 16, 16, 9);
  const auto y_before = model.forward(x);

  const auto path = temp_path("model.ckpt");
  sct::save_model(model, path);
  auto loaded = sct::load_model(path);
  REQUIRE(loaded.config() == model.config());
  REQUIRE(loaded.forward(x).v == y_before.v);

  // mismatched config is rejected
  const auto other = tiny_config(1);
  REQUIRE_THROWS_AS(sct::load_model(path, &other), sct::config_error);

  // corrupt container is rejected
  const auto bad = temp_path("corrupt.ckpt");
  std::ofstream(bad) << "not a checkpoint";
  REQUIRE_THROWS_AS(sct::load_model(bad), sct::format_error);
}

TEST_CASE("perturbing the ct channel changes the output") {
  auto model = sct::build_model(tiny_config(2), 33);
  const auto x = random_tensor(2, 16, 16, 16, 10);
  const auto y = model.forward(x);

  auto x2 = x;
  sct::Rng rng(11);
  std::vector<float> noise(x.spatial());
  double norm = 0.0;
  for (auto& n : noise) {
    n = static_cast<float>(rng.normal());
    norm += static_cast<double>(n) * n;
  }
  const double scale = 0.1 / std::sqrt(norm);
  for (std::size_t i = 0; i < noise.size(); ++i)
    x2.v[i] += static_cast<float>(noise[i] * scale);  // ct is channel 0

  const auto y2 = model.forward(x2);
  float max_diff = 0.0f;
  for (std::size_t i = 0; i < y.size(); ++i)
    max_diff = std::max(max_diff, std::abs(y.v[i] - y2.v[i]));
  REQUIRE(max_diff > 0.0f);
}

namespace {

/// Scalar reduction used by the gradient checks: a fixed random projection
/// of the output, computed in double.
double projected_loss(const sct::Tensor& y, const std::vector<float>& proj) {
  double acc = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) acc += static_cast<double>(y.v[i]) * proj[i];
  return acc;
}

/// Central-difference check along a random direction of one parameter
/// tensor; directional probes keep the float32 evaluation noise well below
/// the derivative magnitude.
void check_weight_gradients(bool batch_norm) {
  auto cfg = tiny_config(1, batch_norm);
  auto model = sct::build_model(cfg, 55);
  const auto x = random_tensor(1, 8, 8, 8, 12);

  sct::Rng prng(13);
  std::vector<float> proj(512);
  for (auto& p : proj) p = static_cast<float>(prng.uniform(-1.0, 1.0));

  model.zero_grad();
  model.forward(x, true);
  sct::Tensor gout(1, 8, 8, 8);
  std::copy(proj.begin(), proj.end(), gout.v.begin());
  model.backward(gout);

  sct::Rng dir_rng(14);
  int checked = 0;
  for (const auto& np : model.named_parameters()) {
    std::vector<float> direction(np.param->size());
    for (auto& u : direction) u = static_cast<float>(dir_rng.uniform(-1.0, 1.0));

    double analytic = 0.0;
    for (std::size_t i = 0; i < direction.size(); ++i)
      analytic += static_cast<double>(np.param->grad[i]) * direction[i];

    const std::vector<float> saved = np.param->value;
    const double h = 1e-3;
    for (std::size_t i = 0; i < direction.size(); ++i)
      np.param->value[i] = static_cast<float>(saved[i] + h * direction[i]);
    const double fp = projected_loss(model.forward(x, true), proj);
    for (std::size_t i = 0; i < direction.size(); ++i)
      np.param->value[i] = static_cast<float>(saved[i] - h * direction[i]);
    const double fm = projected_loss(model.forward(x, true), proj);
    np.param->value = saved;

    const double numeric = (fp - fm) / (2.0 * h);
    const double tol = 1e-2 * std::max({std::abs(analytic), std::abs(numeric), 1.0e-3});
    INFO(np.name << " analytic=" << analytic << " numeric=" << numeric);
    REQUIRE(std::abs(analytic - numeric) <= tol);
    ++checked;
  }
  REQUIRE(checked > 20);
}

}  // namespace

TEST_CASE("weight gradients match finite differences (batch norm on)") {
  check_weight_gradients(true);
}

TEST_CASE("weight gradients match finite differences (batch norm off)") {
  check_weight_gradients(false);
}

TEST_CASE("input gradients match finite differences") {
  auto model = sct::build_model(tiny_config(2, true), 91);
  const auto x = random_tensor(2, 8, 8, 8, 15);
  sct::Rng prng(16);
  std::vector<float> proj(512);
  for (auto& p : proj) p = static_cast<float>(prng.uniform(-1.0, 1.0));

  model.zero_grad();
  model.forward(x, true);
  sct::Tensor gout(1, 8, 8, 8);
  std::copy(proj.begin(), proj.end(), gout.v.begin());
  const auto gin = model.backward(gout);

  sct::Rng dir_rng(17);
  std::vector<float> direction(x.size());
  for (auto& u : direction) u = static_cast<float>(dir_rng.uniform(-1.0, 1.0));
  double analytic = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    analytic += static_cast<double>(gin.v[i]) * direction[i];

  const double h = 1e-3;
  auto xp = x;
  auto xm = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    xp.v[i] = static_cast<float>(x.v[i] + h * direction[i]);
    xm.v[i] = static_cast<float>(x.v[i] - h * direction[i]);
  }
  const double fp = projected_loss(model.forward(xp, true), proj);
  const double fm = projected_loss(model.forward(xm, true), proj);
  const double numeric = (fp - fm) / (2.0 * h);
  const double tol = 1e-2 * std::max({std::abs(analytic), std::abs(numeric), 1.0e-3});
  REQUIRE(std::abs(analytic - numeric) <= tol);
}

TEST_CASE("forward/backward timing", "[.bench]") {
  auto model = sct::build_model(tiny_config(2, true), 1);
  const auto x = random_tensor(2, 32, 32, 32, 2);
  const auto t0 = std::chrono::steady_clock::now();
  int iters = 10;
  for (int i = 0; i < iters; ++i) {
    auto y = model.forward(x, true);
    model.backward(y);
  }
  const auto t1 = std::chrono::steady_clock::now();
  std::printf("fwd+bwd tiny@32^3: %.1f ms\n",
              std::chrono::duration<double, std::milli>(t1 - t0).count() / iters);
  SUCCEED();
}
