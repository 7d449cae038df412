// Copyright (c) 2026 the sctgen authors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include "sct/misalign.hpp"
#include "sct/phantom.hpp"
#include "sct/rng.hpp"

namespace {

sct::Volume random_volume(sct::Dims3 dims, std::uint64_t seed) {
  sct::Rng rng(seed);
  std::vector<float> data(static_cast<std::size_t>(sct::voxel_count(dims)));
  for (auto& v : data) v = static_cast<float>(rng.uniform01());
  return sct::Volume(dims, {1, 1, 1}, {0, 0, 0}, sct::Domain::NORMALIZED, std::move(data));
}

}  // namespace

TEST_CASE("sample_affine at alpha 0 is the exact identity") {
  const auto p = sct::sample_affine({0.0, 1234});
  REQUIRE(p.scale == std::array<double, 3>{1, 1, 1});
  REQUIRE(p.rotation_deg == std::array<double, 3>{0, 0, 0});
  REQUIRE(p.translation_frac == std::array<double, 3>{0, 0, 0});
  REQUIRE(p.is_identity());
}

TEST_CASE("sample_affine draws stay inside the documented ranges") {
  for (double alpha : {0.5, 1.0}) {
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
      const auto p = sct::sample_affine({alpha, seed});
      for (int i = 0; i < 3; ++i) {
        REQUIRE(p.scale[i] >= 1.0 - 0.5 * alpha);
        REQUIRE(p.scale[i] <= 1.0 + 0.5 * alpha);
        REQUIRE(std::abs(p.rotation_deg[i]) <= 22.5 * alpha);
        REQUIRE(std::abs(p.translation_frac[i]) <= 0.05 * alpha);
      }
    }
  }
  REQUIRE_THROWS_AS(sct::sample_affine({1.5, 0}), sct::parameter_error);
  REQUIRE_THROWS_AS(sct::sample_affine({-0.1, 0}), sct::parameter_error);
}

TEST_CASE("apply_affine with identity params reproduces the input") {
  const auto v = random_volume({16, 12, 10}, 5);
  const auto out = sct::apply_affine(v, sct::AffineParams{});
  REQUIRE(out.dims() == v.dims());
  float max_diff = 0.0f;
  for (std::size_t i = 0; i < v.size(); ++i)
    max_diff = std::max(max_diff, std::abs(out.data()[i] - v.data()[i]));
  REQUIRE(max_diff < 1e-6f);
}

TEST_CASE("integer translation shifts the grid exactly") {
  const int n = 16;
  const auto v = random_volume({n, n, n}, 6);
  sct::AffineParams p;
  p.translation_frac = {0, 0, 1.0 / n};  // exactly one voxel along width
  const auto out = sct::apply_affine(v, p);
  for (int z = 0; z < n; ++z) {
    for (int y = 0; y < n; ++y) {
      for (int x = 1; x < n; ++x) {
        REQUIRE(out.at(z, y, x) == Catch::Approx(v.at(z, y, x - 1)).margin(1e-6));
      }
      REQUIRE(out.at(z, y, 0) == 0.0f);  // out-of-field fill
    }
  }
}

TEST_CASE("90 degree rotation about the depth axis permutes the grid") {
  // with equal height/width and center (n-1)/2, a 90-degree rotation maps
  // voxel centers onto voxel centers: inverse-mapped (y, x) = (x, n-1-y)
  const int n = 12;
  const auto v = random_volume({4, n, n}, 8);
  sct::AffineParams p;
  p.rotation_deg = {90, 0, 0};
  const auto out = sct::apply_affine(v, p);
  for (int z = 0; z < 4; ++z) {
    for (int y = 0; y < n; ++y) {
      for (int x = 0; x < n; ++x) {
        REQUIRE(out.at(z, y, x) == Catch::Approx(v.at(z, x, n - 1 - y)).margin(1e-5));
      }
    }
  }
}

TEST_CASE("misalign determinism and alpha-0 passthrough") {
  sct::PhantomConfig cfg;
  cfg.dims = {16, 16, 16};
  cfg.seed = 10;
  sct::PairedSample s;
  s.id = "s0";
  s.ct = sct::generate_phantom(cfg);
  s.cbct = s.ct;
  s.quality = 256;

  const auto [u0, p0] = sct::misalign_ct(s, {0.0, 42});
  REQUIRE(p0.is_identity());
  float max_diff = 0.0f;
  for (std::size_t i = 0; i < u0.size(); ++i)
    max_diff = std::max(max_diff, std::abs(u0.data()[i] - s.ct.data()[i]));
  REQUIRE(max_diff < 1e-6f);

  const auto [u1, p1] = sct::misalign_ct(s, {0.7, 42});
  const auto [u2, p2] = sct::misalign_ct(s, {0.7, 42});
  REQUIRE(u1.data() == u2.data());
  REQUIRE(p1.scale == p2.scale);

  // persisted params replay to the identical volume
  const auto replay = sct::apply_affine(s.ct, p1);
  REQUIRE(replay.data() == u1.data());
}

TEST_CASE("affine params serialize to json and back") {
  auto p = sct::sample_affine({0.6, 17});
  p.center = std::array<double, 3>{7.5, 7.5, 7.5};
  nlohmann::json j = p;
  const auto q = j.get<sct::AffineParams>();
  REQUIRE(q.scale == p.scale);
  REQUIRE(q.rotation_deg == p.rotation_deg);
  REQUIRE(q.translation_frac == p.translation_frac);
  REQUIRE(q.center == p.center);
}

TEST_CASE("displacement of the identity is zero and of a pure shift is exact") {
  const sct::Dims3 dims{32, 32, 32};
  const std::array<double, 3> spacing{1.6, 1.6, 1.6};
  const auto zero = sct::mean_voxel_displacement(sct::AffineParams{}, dims, spacing);
  REQUIRE(zero.mean_voxels == 0.0);
  REQUIRE(zero.mean_mm == 0.0);

  sct::AffineParams shift;
  shift.translation_frac = {0, 0, 3.0 / 32.0};  // exactly 3 voxels
  const auto s = sct::mean_voxel_displacement(shift, dims, spacing);
  REQUIRE(s.mean_voxels == Catch::Approx(3.0).margin(1e-12));
  REQUIRE(s.mean_mm == Catch::Approx(3.0 * 1.6).margin(1e-9));
}

TEST_CASE("mm displacement scales by per-axis spacing") {
  sct::AffineParams shift;
  shift.translation_frac = {2.0 / 16.0, 0, 0};  // 2 voxels along depth
  const auto s = sct::mean_voxel_displacement(shift, {16, 16, 16}, {2.5, 1.0, 1.0});
  REQUIRE(s.mean_voxels == Catch::Approx(2.0).margin(1e-12));
  REQUIRE(s.mean_mm == Catch::Approx(5.0).margin(1e-9));
}

TEST_CASE("expected displacement increases strictly with alpha") {
  const sct::Dims3 dims{64, 64, 64};
  const std::array<double, 3> spacing{1.6, 1.6, 1.6};
  const std::vector<double> alphas{0.0, 0.125, 0.25, 0.5, 1.0};
  std::vector<double> means;
  for (double a : alphas) {
    double acc = 0.0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      const auto p = sct::sample_affine({a, sct::mix64(900, seed)});
      acc += sct::mean_voxel_displacement(p, dims, spacing).mean_voxels;
    }
    means.push_back(acc / 100.0);
  }
  REQUIRE(means[0] == 0.0);
  for (std::size_t i = 1; i < means.size(); ++i) REQUIRE(means[i] > means[i - 1]);
}

TEST_CASE("small-angle displacement is approximately linear in the angle") {
  const sct::Dims3 dims{48, 48, 48};
  const std::array<double, 3> spacing{1, 1, 1};
  sct::AffineParams p1, p2;
  p1.rotation_deg = {2.0, 0, 0};
  p2.rotation_deg = {4.0, 0, 0};
  const double d1 = sct::mean_voxel_displacement(p1, dims, spacing).mean_voxels;
  const double d2 = sct::mean_voxel_displacement(p2, dims, spacing).mean_voxels;
  REQUIRE(d2 / d1 == Catch::Approx(2.0).epsilon(0.10));
}

TEST_CASE("subsampled displacement agrees with dense evaluation") {
  // force the subsampling path with a > 256^3 grid and compare against the
  // dense path on the same transform at a dense-friendly size
  sct::AffineParams p;
  p.rotation_deg = {5.0, -3.0, 2.0};
  p.scale = {1.05, 0.97, 1.02};
  p.translation_frac = {0.01, -0.02, 0.005};
  p.center = std::array<double, 3>{127.5, 127.5, 127.5};

  const auto dense = sct::mean_voxel_displacement(p, {256, 256, 256}, {1, 1, 1});
  const auto sampled = sct::mean_voxel_displacement(p, {257, 256, 256}, {1, 1, 1});
  REQUIRE(sampled.mean_voxels == Catch::Approx(dense.mean_voxels).epsilon(0.02));
}
