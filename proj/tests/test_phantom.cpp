// Copyright (c) 2026 the sctgen authors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "sct/phantom.hpp"

namespace {

double mae(const sct::Volume& a, const sct::Volume& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    s += std::abs(static_cast<double>(a.data()[i]) - b.data()[i]);
  return s / static_cast<double>(a.size());
}

}  // namespace

TEST_CASE("generate_phantom is deterministic and bounded") {
  sct::PhantomConfig cfg;
  cfg.dims = {24, 24, 24};
  cfg.seed = 99;
  const auto a = sct::generate_phantom(cfg);
  const auto b = sct::generate_phantom(cfg);
  REQUIRE(a.data() == b.data());
  REQUIRE(a.domain() == sct::Domain::NORMALIZED);
  for (float v : a.data()) {
    REQUIRE(v >= 0.0f);
    REQUIRE(v <= 1.0f);
  }
}

TEST_CASE("phantom with one unit ellipsoid and no background is a binary mask") {
  sct::PhantomConfig cfg;
  cfg.dims = {20, 20, 20};
  cfg.n_ellipsoids = 1;
  cfg.intensity_lo = 1.0;
  cfg.intensity_hi = 1.0;
  cfg.background_smoothness = 0.0;
  cfg.seed = 4;
  const auto v = sct::generate_phantom(cfg);
  std::size_t ones = 0;
  for (float x : v.data()) {
    REQUIRE((x == 0.0f || x == 1.0f));
    ones += x == 1.0f;
  }
  REQUIRE(ones > 0);
  REQUIRE(ones < v.size());
}

TEST_CASE("generate_phantom validates its config") {
  sct::PhantomConfig cfg;
  cfg.dims = {8, 32, 32};
  REQUIRE_THROWS_AS(sct::generate_phantom(cfg), sct::parameter_error);
  cfg.dims = {32, 32, 32};
  cfg.n_ellipsoids = 0;
  REQUIRE_THROWS_AS(sct::generate_phantom(cfg), sct::parameter_error);
}

TEST_CASE("identity tier leaves the volume untouched") {
  sct::PhantomConfig cfg;
  cfg.dims = {16, 16, 16};
  cfg.seed = 12;
  const auto v = sct::generate_phantom(cfg);
  sct::QualityTier identity{1, 0.0, 0, 0.0, 1.0};
  const auto d = sct::degrade_to_cbct(v, identity, 5);
  REQUIRE(d.data() == v.data());
}

TEST_CASE("degrade_to_cbct is deterministic and stays in range") {
  sct::PhantomConfig cfg;
  cfg.dims = {16, 16, 16};
  cfg.seed = 1;
  const auto v = sct::generate_phantom(cfg);
  const auto tiers = sct::default_quality_tiers();
  const auto a = sct::degrade_to_cbct(v, tiers[0], 7);
  const auto b = sct::degrade_to_cbct(v, tiers[0], 7);
  REQUIRE(a.data() == b.data());
  REQUIRE(a.dims() == v.dims());
  REQUIRE(a.spacing() == v.spacing());
  for (float x : a.data()) {
    REQUIRE(x >= 0.0f);
    REQUIRE(x <= 1.0f);
  }
}

TEST_CASE("degrade_to_cbct rejects HU input") {
  const sct::Volume hu({16, 16, 16}, {1, 1, 1}, {0, 0, 0}, sct::Domain::HU,
                       std::vector<float>(16 * 16 * 16, 100.0f));
  REQUIRE_THROWS_AS(sct::degrade_to_cbct(hu, sct::default_quality_tiers()[0], 0),
                    sct::domain_error);
}

TEST_CASE("degradation error is monotone in the quality label") {
  sct::PhantomConfig cfg;
  cfg.dims = {24, 24, 24};
  const auto tiers = sct::default_quality_tiers();
  // averaged over a few phantoms to keep the check robust
  std::vector<double> err(tiers.size(), 0.0);
  for (int i = 0; i < 3; ++i) {
    cfg.seed = 100 + i;
    const auto v = sct::generate_phantom(cfg);
    for (std::size_t t = 0; t < tiers.size(); ++t)
      err[t] += mae(sct::degrade_to_cbct(v, tiers[t], 50 + i), v);
  }
  for (std::size_t t = 1; t < err.size(); ++t) REQUIRE(err[t] < err[t - 1]);
}

TEST_CASE("tier monotonic contract is enforced") {
  auto tiers = sct::default_quality_tiers();
  tiers[0].noise_sigma = 0.0;  // 32 would be cleaner than 256
  REQUIRE_THROWS_AS(sct::validate_tiers(tiers), sct::parameter_error);
}

TEST_CASE("build_dataset emits one pair per phantom per tier") {
  sct::PhantomConfig cfg;
  cfg.dims = {16, 16, 16};
  cfg.seed = 3;
  const auto tiers = std::vector<sct::QualityTier>{sct::default_quality_tiers()[0],
                                                   sct::default_quality_tiers()[3]};
  const auto ds = sct::build_dataset(3, cfg, tiers);
  REQUIRE(ds.size() == 6);

  std::set<std::string> ids;
  for (const auto& s : ds) {
    ids.insert(s.id);
    REQUIRE(s.ct.dims() == s.cbct.dims());
  }
  REQUIRE(ids.size() == 3);

  // per-tier samples of one phantom share the ct bit-identically
  REQUIRE(ds[0].id == ds[1].id);
  REQUIRE(ds[0].quality != ds[1].quality);
  REQUIRE(ds[0].ct.data() == ds[1].ct.data());
  REQUIRE(ds[0].cbct.data() != ds[1].cbct.data());

  REQUIRE_THROWS_AS(sct::build_dataset(0, cfg, tiers), sct::parameter_error);
}
