// Copyright (c) 2026 the sctgen authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "sct/common.hpp"
#include "sct/rng.hpp"
#include "sct/volume.hpp"

namespace sct {

/// Strength of one synthetic misalignment draw. alpha_a in [0, 1] scales all
/// three affine component distributions; 0 is the identity.
struct MisalignmentSpec {
  double alpha_a = 0.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(alpha_a >= 0.0 && alpha_a <= 1.0))
      throw parameter_error("MisalignmentSpec: alpha_a must be in [0, 1]");
  }
};

/// One sampled affine misalignment. All arrays are in (depth, height, width)
/// axis order, matching Volume dims. translation is a signed fraction of the
/// per-axis extent (the source distribution gives no unit; using extent
/// fractions keeps displacements visible at any resolution). `center` is the
/// rotation/scaling center in voxel coordinates; when unset, the volume
/// center is used at apply time.
struct AffineParams {
  std::array<double, 3> scale{1, 1, 1};
  std::array<double, 3> rotation_deg{0, 0, 0};
  std::array<double, 3> translation_frac{0, 0, 0};
  std::optional<std::array<double, 3>> center;

  bool is_identity() const {
    return scale == std::array<double, 3>{1, 1, 1} &&
           rotation_deg == std::array<double, 3>{0, 0, 0} &&
           translation_frac == std::array<double, 3>{0, 0, 0};
  }
};

struct DisplacementStats {
  double mean_voxels = 0.0;
  double mean_mm = 0.0;
};

namespace detail {

struct Mat3 {
  double m[3][3];

  static Mat3 identity() { return {{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}}; }

  Mat3 operator*(const Mat3& o) const {
    Mat3 r{};
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        double s = 0.0;
        for (int k = 0; k < 3; ++k) s += m[i][k] * o.m[k][j];
        r.m[i][j] = s;
      }
    }
    return r;
  }

  std::array<double, 3> apply(const std::array<double, 3>& v) const {
    return {m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
            m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
            m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2]};
  }

  Mat3 transposed() const {
    Mat3 r{};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) r.m[i][j] = m[j][i];
    return r;
  }
};

/// Right-handed rotation about one of the (z, y, x) axes. Vectors are in
/// (z, y, x) component order. axis 0 rotates the (y, x) plane, axis 1 the
/// (z, x) plane, axis 2 the (z, y) plane.
inline Mat3 rotation_about_axis(int axis, double radians) {
  const double c = std::cos(radians), s = std::sin(radians);
  Mat3 r = Mat3::identity();
  const int a = (axis + 1) % 3, b = (axis + 2) % 3;
  r.m[a][a] = c;
  r.m[a][b] = -s;
  r.m[b][a] = s;
  r.m[b][b] = c;
  return r;
}

/// Composed rotation, axis-2 rotation applied first: R = R0 * R1 * R2.
inline Mat3 rotation_matrix(const std::array<double, 3>& degrees) {
  constexpr double kDegToRad = 3.14159265358979323846 / 180.0;
  return rotation_about_axis(0, degrees[0] * kDegToRad) *
         rotation_about_axis(1, degrees[1] * kDegToRad) *
         rotation_about_axis(2, degrees[2] * kDegToRad);
}

inline std::array<double, 3> volume_center(const Dims3& dims) {
  return {(dims[0] - 1) / 2.0, (dims[1] - 1) / 2.0, (dims[2] - 1) / 2.0};
}

/// Forward map T(p) = R * S * (p - c) + c + t decomposed as T(p) = A*p + b.
struct AffineMap {
  Mat3 a;
  std::array<double, 3> b;

  std::array<double, 3> apply(const std::array<double, 3>& p) const {
    auto r = a.apply(p);
    for (int i = 0; i < 3; ++i) r[i] += b[i];
    return r;
  }
};

inline AffineMap forward_map(const AffineParams& p, const Dims3& dims) {
  const auto c = p.center ? *p.center : volume_center(dims);
  const Mat3 r = rotation_matrix(p.rotation_deg);
  Mat3 rs = r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) rs.m[i][j] *= p.scale[j];
  std::array<double, 3> t{};
  for (int i = 0; i < 3; ++i) t[i] = p.translation_frac[i] * dims[i];
  const auto rc = rs.apply(c);
  return {rs, {c[0] + t[0] - rc[0], c[1] + t[1] - rc[1], c[2] + t[2] - rc[2]}};
}

inline AffineMap inverse_map(const AffineParams& p, const Dims3& dims) {
  for (double s : p.scale) {
    if (!(s > 0.0)) throw parameter_error("AffineParams: scale components must be > 0");
  }
  const auto c = p.center ? *p.center : volume_center(dims);
  const Mat3 rt = rotation_matrix(p.rotation_deg).transposed();
  Mat3 srt = rt;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) srt.m[i][j] /= p.scale[i];
  std::array<double, 3> t{};
  for (int i = 0; i < 3; ++i) t[i] = p.translation_frac[i] * dims[i];
  const auto v = srt.apply({c[0] + t[0], c[1] + t[1], c[2] + t[2]});
  return {srt, {c[0] - v[0], c[1] - v[1], c[2] - v[2]}};
}

}  // namespace detail

/// Draws affine parameters at strength alpha_a: per-axis scale from
/// U(1 - 0.5a, 1 + 0.5a), per-axis rotation from U(-22.5a, 22.5a) degrees,
/// per-axis translation magnitude from U(0, 0.05a) of the axis extent with a
/// uniform random sign. Deterministic given the seed.
inline AffineParams sample_affine(const MisalignmentSpec& spec) {
  spec.validate();
  Rng rng(mix64(spec.seed, 0x4146u /*"AF"*/));
  const double a = spec.alpha_a;
  AffineParams p;
  for (int i = 0; i < 3; ++i) p.scale[i] = rng.uniform(1.0 - 0.5 * a, 1.0 + 0.5 * a);
  for (int i = 0; i < 3; ++i) p.rotation_deg[i] = rng.uniform(-22.5 * a, 22.5 * a);
  for (int i = 0; i < 3; ++i) {
    const double mag = rng.uniform(0.0, 0.05 * a);
    p.translation_frac[i] = rng.coin_flip() ? mag : -mag;
  }
  return p;
}

/// Resamples v through the inverse map with trilinear interpolation;
/// out-of-field voxels are filled with 0. Dims and spacing are unchanged.
inline Volume apply_affine(const Volume& v, const AffineParams& p) {
  for (int d : v.dims()) {
    if (d < 2) throw parameter_error("apply_affine requires all dims >= 2");
  }
  const auto inv = detail::inverse_map(p, v.dims());
  const int d = v.depth(), h = v.height(), w = v.width();
  std::vector<float> out(v.size());
  std::size_t i = 0;
  for (int z = 0; z < d; ++z) {
    for (int y = 0; y < h; ++y) {
      // walk the row incrementally: inv(p + e_x) = inv(p) + column_x
      std::array<double, 3> s = inv.apply({static_cast<double>(z), static_cast<double>(y), 0.0});
      for (int x = 0; x < w; ++x, ++i) {
        out[i] = v.sample_trilinear(s[0], s[1], s[2], 0.0f);
        s[0] += inv.a.m[0][2];
        s[1] += inv.a.m[1][2];
        s[2] += inv.a.m[2][2];
      }
    }
  }
  return Volume(v.dims(), v.spacing(), v.origin(), v.domain(), std::move(out));
}

/// Mean voxel-wise displacement of the forward map over all voxel centers:
/// dense evaluation up to 256^3 voxels, seeded uniform subsampling above.
inline DisplacementStats mean_voxel_displacement(const AffineParams& p, const Dims3& dims,
                                                 const std::array<double, 3>& spacing) {
  for (int i = 0; i < 3; ++i) {
    if (dims[i] < 1) throw parameter_error("mean_voxel_displacement: dims must be >= 1");
    if (!(spacing[i] > 0.0))
      throw parameter_error("mean_voxel_displacement: spacing must be > 0");
  }
  const auto fwd = detail::forward_map(p, dims);
  // displacement field D(p) = (A - I) p + b
  detail::Mat3 a = fwd.a;
  for (int i = 0; i < 3; ++i) a.m[i][i] -= 1.0;

  const std::int64_t n = voxel_count(dims);
  double sum_vox = 0.0, sum_mm = 0.0;
  const auto accumulate = [&](const std::array<double, 3>& delta) {
    sum_vox += std::sqrt(delta[0] * delta[0] + delta[1] * delta[1] + delta[2] * delta[2]);
    const double mz = delta[0] * spacing[0], my = delta[1] * spacing[1],
                 mx = delta[2] * spacing[2];
    sum_mm += std::sqrt(mz * mz + my * my + mx * mx);
  };

  constexpr std::int64_t kDenseLimit = 256LL * 256LL * 256LL;
  std::int64_t count = 0;
  if (n <= kDenseLimit) {
    count = n;
    for (int z = 0; z < dims[0]; ++z) {
      for (int y = 0; y < dims[1]; ++y) {
        std::array<double, 3> delta = {
            a.m[0][0] * z + a.m[0][1] * y + fwd.b[0],
            a.m[1][0] * z + a.m[1][1] * y + fwd.b[1],
            a.m[2][0] * z + a.m[2][1] * y + fwd.b[2],
        };
        for (int x = 0; x < dims[2]; ++x) {
          accumulate(delta);
          delta[0] += a.m[0][2];
          delta[1] += a.m[1][2];
          delta[2] += a.m[2][2];
        }
      }
    }
  } else {
    constexpr std::int64_t kSamples = 200000;
    count = kSamples;
    Rng rng(mix64(0x4d564453u /*"MVDS"*/, static_cast<std::uint64_t>(n)));
    for (std::int64_t s = 0; s < kSamples; ++s) {
      const double z = static_cast<double>(rng.uniform_index(static_cast<std::uint64_t>(dims[0])));
      const double y = static_cast<double>(rng.uniform_index(static_cast<std::uint64_t>(dims[1])));
      const double x = static_cast<double>(rng.uniform_index(static_cast<std::uint64_t>(dims[2])));
      accumulate({a.m[0][0] * z + a.m[0][1] * y + a.m[0][2] * x + fwd.b[0],
                  a.m[1][0] * z + a.m[1][1] * y + a.m[1][2] * x + fwd.b[1],
                  a.m[2][0] * z + a.m[2][1] * y + a.m[2][2] * x + fwd.b[2]});
    }
  }
  return {sum_vox / static_cast<double>(count), sum_mm / static_cast<double>(count)};
}

/// Draws a misalignment and applies it to the sample's CT. The returned
/// params carry the resolved center so callers can persist and replay the
/// exact transform.
inline std::pair<Volume, AffineParams> misalign_ct(const PairedSample& sample,
                                                   const MisalignmentSpec& spec) {
  sample.validate();
  AffineParams p = sample_affine(spec);
  p.center = detail::volume_center(sample.ct.dims());
  Volume unaligned = apply_affine(sample.ct, p);
  return {std::move(unaligned), p};
}

inline void to_json(nlohmann::json& j, const AffineParams& p) {
  j = nlohmann::json{{"scale", p.scale},
                     {"rotation_deg", p.rotation_deg},
                     {"translation_frac", p.translation_frac}};
  if (p.center) j["center"] = *p.center;
}

inline void from_json(const nlohmann::json& j, AffineParams& p) {
  j.at("scale").get_to(p.scale);
  j.at("rotation_deg").get_to(p.rotation_deg);
  j.at("translation_frac").get_to(p.translation_frac);
  if (j.contains("center")) {
    std::array<double, 3> c{};
    j.at("center").get_to(c);
    p.center = c;
  } else {
    p.center.reset();
  }
}

}  // namespace sct
