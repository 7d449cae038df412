// Copyright (c) 2026 the sctgen authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "sct/common.hpp"
#include "sct/rng.hpp"
#include "sct/volume.hpp"

namespace sct {

struct PhantomConfig {
  Dims3 dims{32, 32, 32};
  int n_ellipsoids = 6;
  double intensity_lo = 0.4;
  double intensity_hi = 0.9;
  double background_smoothness = 3.0;  // blur radius in voxels; 0 disables background
  std::uint64_t seed = 0;

  void validate() const {
    for (int d : dims) {
      if (d < 16) throw parameter_error("PhantomConfig: dims must each be >= 16");
    }
    if (n_ellipsoids < 1) throw parameter_error("PhantomConfig: n_ellipsoids must be >= 1");
    if (intensity_lo > intensity_hi)
      throw parameter_error("PhantomConfig: intensity range requires lo <= hi");
    if (intensity_lo < 0.0 || intensity_hi > 1.0)
      throw parameter_error("PhantomConfig: intensity range must lie in [0, 1]");
    if (background_smoothness < 0.0)
      throw parameter_error("PhantomConfig: background_smoothness must be >= 0");
  }
};

/// One CBCT degradation setting. `label` mirrors an ordinal quality axis:
/// lower label means stronger artifacts.
struct QualityTier {
  int label = 256;
  double noise_sigma = 0.0;
  int n_streaks = 0;
  double blur_sigma = 0.0;
  double contrast_scale = 1.0;

  void validate() const {
    if (label < 1) throw parameter_error("QualityTier: label must be positive");
    if (noise_sigma < 0.0) throw parameter_error("QualityTier: noise_sigma must be >= 0");
    if (n_streaks < 0) throw parameter_error("QualityTier: n_streaks must be >= 0");
    if (blur_sigma < 0.0) throw parameter_error("QualityTier: blur_sigma must be >= 0");
    if (!(contrast_scale > 0.0) || contrast_scale > 1.0)
      throw parameter_error("QualityTier: contrast_scale must be in (0, 1]");
  }
};

/// Default tier set. Settings are chosen so that reconstruction difficulty
/// decreases monotonically with the label.
inline std::vector<QualityTier> default_quality_tiers() {
  return {
      {32, 0.100, 48, 1.5, 0.85},
      {64, 0.070, 32, 1.2, 0.90},
      {128, 0.045, 20, 0.9, 0.95},
      {256, 0.025, 10, 0.6, 1.00},
  };
}

/// Checks the monotonic contract: lower label implies noise_sigma and
/// n_streaks at least as large as any higher label's.
inline void validate_tiers(const std::vector<QualityTier>& tiers) {
  for (const auto& t : tiers) t.validate();
  for (const auto& a : tiers) {
    for (const auto& b : tiers) {
      if (a.label < b.label && (a.noise_sigma < b.noise_sigma || a.n_streaks < b.n_streaks))
        throw parameter_error("quality tiers violate the monotonic contract");
    }
  }
}

namespace detail {

inline std::vector<double> gaussian_kernel(double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double w = std::exp(-0.5 * (i / sigma) * (i / sigma));
    k[i + radius] = w;
    sum += w;
  }
  for (auto& w : k) w /= sum;
  return k;
}

/// Separable Gaussian blur with edge replication. sigma == 0 is the identity.
inline std::vector<float> gaussian_blur3(const std::vector<float>& in, const Dims3& dims,
                                         double sigma) {
  if (sigma <= 0.0) return in;
  const auto k = gaussian_kernel(sigma);
  const int radius = static_cast<int>(k.size() / 2);
  const int d = dims[0], h = dims[1], w = dims[2];
  std::vector<float> a = in, b(in.size());
  const auto idx = [&](int z, int y, int x) {
    return (static_cast<std::size_t>(z) * h + y) * w + x;
  };
  for (int axis = 0; axis < 3; ++axis) {
    const int extent = dims[axis];
    for (int z = 0; z < d; ++z) {
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          const int pos = axis == 0 ? z : axis == 1 ? y : x;
          double acc = 0.0;
          for (int t = -radius; t <= radius; ++t) {
            const int p = std::clamp(pos + t, 0, extent - 1);
            acc += k[t + radius] *
                   a[axis == 0 ? idx(p, y, x) : axis == 1 ? idx(z, p, x) : idx(z, y, p)];
          }
          b[idx(z, y, x)] = static_cast<float>(acc);
        }
      }
    }
    std::swap(a, b);
  }
  return a;
}

}  // namespace detail

/// Deterministic phantom: a smooth background plus axis-aligned random
/// ellipsoids with constant interiors, all in [0, 1].
inline Volume generate_phantom(const PhantomConfig& cfg) {
  cfg.validate();
  Rng rng(mix64(cfg.seed, 0x5048u /*"PH"*/));
  const int d = cfg.dims[0], h = cfg.dims[1], w = cfg.dims[2];
  std::vector<float> data(static_cast<std::size_t>(voxel_count(cfg.dims)), 0.0f);

  if (cfg.background_smoothness > 0.0) {
    for (auto& v : data) v = static_cast<float>(rng.uniform01());
    data = detail::gaussian_blur3(data, cfg.dims, cfg.background_smoothness);
    const auto [lo, hi] = std::minmax_element(data.begin(), data.end());
    const float range = std::max(*hi - *lo, 1e-12f);
    for (auto& v : data) v = 0.05f + 0.25f * (v - *lo) / range;
  }

  for (int e = 0; e < cfg.n_ellipsoids; ++e) {
    double c[3], r[3];
    for (int a = 0; a < 3; ++a) {
      const double extent = cfg.dims[a];
      c[a] = rng.uniform(0.2 * extent, 0.8 * extent);
      r[a] = rng.uniform(0.08 * extent, 0.22 * extent);
    }
    const float value = static_cast<float>(rng.uniform(cfg.intensity_lo, cfg.intensity_hi));
    const int z0 = std::max(0, static_cast<int>(std::floor(c[0] - r[0])));
    const int z1 = std::min(d - 1, static_cast<int>(std::ceil(c[0] + r[0])));
    const int y0 = std::max(0, static_cast<int>(std::floor(c[1] - r[1])));
    const int y1 = std::min(h - 1, static_cast<int>(std::ceil(c[1] + r[1])));
    const int x0 = std::max(0, static_cast<int>(std::floor(c[2] - r[2])));
    const int x1 = std::min(w - 1, static_cast<int>(std::ceil(c[2] + r[2])));
    for (int z = z0; z <= z1; ++z) {
      for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
          const double dz = (z - c[0]) / r[0], dy = (y - c[1]) / r[1], dx = (x - c[2]) / r[2];
          if (dz * dz + dy * dy + dx * dx <= 1.0)
            data[(static_cast<std::size_t>(z) * h + y) * w + x] = value;
        }
      }
    }
  }
  for (auto& v : data) v = std::clamp(v, 0.0f, 1.0f);
  return Volume(cfg.dims, {1, 1, 1}, {0, 0, 0}, Domain::NORMALIZED, std::move(data));
}

/// Heuristic CBCT degradation:
///   out = clamp(contrast_scale * blur(v) + streaks + gaussian_noise, 0, 1).
/// Streaks are additive oriented line patterns through the axial slice
/// center, replicated along depth.
inline Volume degrade_to_cbct(const Volume& v, const QualityTier& tier, std::uint64_t seed) {
  tier.validate();
  if (v.domain() != Domain::NORMALIZED)
    throw domain_error("degrade_to_cbct expects a NORMALIZED volume");
  const int d = v.depth(), h = v.height(), w = v.width();
  std::vector<float> data = detail::gaussian_blur3(v.data(), v.dims(), tier.blur_sigma);
  if (tier.contrast_scale != 1.0) {
    for (auto& x : data) x = static_cast<float>(x * tier.contrast_scale);
  }

  Rng rng(mix64(seed, 0x4342u /*"CB"*/, static_cast<std::uint64_t>(tier.label)));

  if (tier.n_streaks > 0) {
    std::vector<float> pattern(static_cast<std::size_t>(h) * w, 0.0f);
    const double cy = (h - 1) / 2.0, cx = (w - 1) / 2.0;
    const double r0 = 0.25 * std::min(h, w);
    constexpr double kAngularWidth = 0.035;  // radians
    std::vector<double> angles(tier.n_streaks), amps(tier.n_streaks);
    for (int s = 0; s < tier.n_streaks; ++s) {
      angles[s] = rng.uniform(0.0, 3.14159265358979323846);
      amps[s] = (rng.coin_flip() ? 1.0 : -1.0) * rng.uniform(0.04, 0.09);
    }
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double ry = y - cy, rx = x - cx;
        const double rad = std::sqrt(ry * ry + rx * rx);
        if (rad < 1e-9) continue;
        const double theta = std::atan2(ry, rx);
        double acc = 0.0;
        for (int s = 0; s < tier.n_streaks; ++s) {
          double delta = std::fmod(theta - angles[s], 3.14159265358979323846);
          if (delta > 3.14159265358979323846 / 2) delta -= 3.14159265358979323846;
          if (delta < -3.14159265358979323846 / 2) delta += 3.14159265358979323846;
          acc += amps[s] * std::exp(-0.5 * (delta / kAngularWidth) * (delta / kAngularWidth));
        }
        pattern[static_cast<std::size_t>(y) * w + x] =
            static_cast<float>(acc * std::min(rad / r0, 1.0));
      }
    }
    for (int z = 0; z < d; ++z) {
      float* slice = data.data() + static_cast<std::size_t>(z) * h * w;
      for (std::size_t i = 0; i < pattern.size(); ++i) slice[i] += pattern[i];
    }
  }

  if (tier.noise_sigma > 0.0) {
    for (auto& x : data) x += static_cast<float>(tier.noise_sigma * rng.normal());
  }
  for (auto& x : data) x = std::clamp(x, 0.0f, 1.0f);
  return Volume(v.dims(), v.spacing(), v.origin(), Domain::NORMALIZED, std::move(data));
}

/// Seed for the phantom underlying sample index i of a dataset.
inline std::uint64_t phantom_seed(std::uint64_t dataset_seed, int index) {
  return mix64(dataset_seed, 0x4354u /*"CT"*/, static_cast<std::uint64_t>(index));
}

/// Seed for the CBCT degradation of sample index i (tier mixed in by
/// degrade_to_cbct itself).
inline std::uint64_t degrade_seed(std::uint64_t dataset_seed, int index) {
  return mix64(dataset_seed, 0x4447u /*"DG"*/, static_cast<std::uint64_t>(index));
}

inline std::string phantom_id(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "ph%03d", index);
  return buf;
}

/// n phantoms, each emitted once per tier with the same underlying CT.
inline std::vector<PairedSample> build_dataset(int n, const PhantomConfig& cfg,
                                               const std::vector<QualityTier>& tiers) {
  if (n < 1) throw parameter_error("build_dataset: n must be >= 1");
  if (tiers.empty()) throw parameter_error("build_dataset: no quality tiers");
  validate_tiers(tiers);
  std::vector<PairedSample> out;
  out.reserve(static_cast<std::size_t>(n) * tiers.size());
  for (int i = 0; i < n; ++i) {
    PhantomConfig c = cfg;
    c.seed = phantom_seed(cfg.seed, i);
    const Volume ct = generate_phantom(c);
    for (const auto& tier : tiers) {
      PairedSample s;
      s.id = phantom_id(i);
      s.ct = ct;
      s.cbct = degrade_to_cbct(ct, tier, degrade_seed(cfg.seed, i));
      s.quality = tier.label;
      s.validate();
      out.push_back(std::move(s));
    }
  }
  return out;
}

}  // namespace sct
