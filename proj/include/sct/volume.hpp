// Copyright (c) 2026 the sctgen authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "sct/common.hpp"

namespace sct {

enum class Domain { HU, NORMALIZED };

inline const char* domain_name(Domain d) { return d == Domain::HU ? "HU" : "NORMALIZED"; }

inline Domain domain_from_name(const std::string& s) {
  if (s == "HU") return Domain::HU;
  if (s == "NORMALIZED") return Domain::NORMALIZED;
  throw format_error("unknown intensity domain tag: " + s);
}

/// 3D scalar grid with physical metadata. Index order is depth x height x
/// width with width fastest in memory; axial slices are fixed-depth planes.
/// Immutable by convention after construction: operations return new volumes.
class Volume {
 public:
  Volume() = default;

  Volume(Dims3 dims, std::array<double, 3> spacing, std::array<double, 3> origin, Domain domain,
         std::vector<float> data)
      : dims_(dims),
        spacing_(spacing),
        origin_(origin),
        domain_(domain),
        data_(std::move(data)) {
    validate();
  }

  static Volume filled(Dims3 dims, float value, std::array<double, 3> spacing = {1, 1, 1},
                       Domain domain = Domain::NORMALIZED) {
    return Volume(dims, spacing, {0, 0, 0}, domain,
                  std::vector<float>(static_cast<std::size_t>(voxel_count(dims)), value));
  }

  const Dims3& dims() const { return dims_; }
  int depth() const { return dims_[0]; }
  int height() const { return dims_[1]; }
  int width() const { return dims_[2]; }
  const std::array<double, 3>& spacing() const { return spacing_; }
  const std::array<double, 3>& origin() const { return origin_; }
  Domain domain() const { return domain_; }
  std::size_t size() const { return data_.size(); }

  const std::vector<float>& data() const { return data_; }
  std::vector<float>& data() { return data_; }

  float at(int z, int y, int x) const {
    return data_[(static_cast<std::size_t>(z) * dims_[1] + y) * dims_[2] + x];
  }
  float& at(int z, int y, int x) {
    return data_[(static_cast<std::size_t>(z) * dims_[1] + y) * dims_[2] + x];
  }

  /// Samples at a fractional (z, y, x) voxel coordinate with trilinear
  /// interpolation; coordinates outside the grid contribute `fill`.
  float sample_trilinear(double z, double y, double x, float fill = 0.0f) const {
    const int z0 = static_cast<int>(std::floor(z));
    const int y0 = static_cast<int>(std::floor(y));
    const int x0 = static_cast<int>(std::floor(x));
    const double fz = z - z0, fy = y - y0, fx = x - x0;
    double acc = 0.0;
    for (int dz = 0; dz <= 1; ++dz) {
      const double wz = dz ? fz : 1.0 - fz;
      if (wz == 0.0) continue;
      for (int dy = 0; dy <= 1; ++dy) {
        const double wy = dy ? fy : 1.0 - fy;
        if (wy == 0.0) continue;
        for (int dx = 0; dx <= 1; ++dx) {
          const double wx = dx ? fx : 1.0 - fx;
          if (wx == 0.0) continue;
          const int zi = z0 + dz, yi = y0 + dy, xi = x0 + dx;
          const bool inside = zi >= 0 && zi < dims_[0] && yi >= 0 && yi < dims_[1] && xi >= 0 &&
                              xi < dims_[2];
          acc += wz * wy * wx * (inside ? at(zi, yi, xi) : fill);
        }
      }
    }
    return static_cast<float>(acc);
  }

  std::pair<float, float> min_max() const {
    auto [lo, hi] = std::minmax_element(data_.begin(), data_.end());
    return {*lo, *hi};
  }

  void validate() const {
    for (int i = 0; i < 3; ++i) {
      if (dims_[i] < 1) throw parameter_error("volume dims must each be >= 1");
      if (!(spacing_[i] > 0.0)) throw parameter_error("volume spacing must be > 0");
    }
    if (data_.size() != static_cast<std::size_t>(voxel_count(dims_)))
      throw parameter_error("volume payload size does not match dims");
    for (float v : data_) {
      if (!std::isfinite(v)) throw format_error("volume contains NaN/Inf");
    }
    if (domain_ == Domain::NORMALIZED) {
      for (float v : data_) {
        if (v < 0.0f || v > 1.0f)
          throw parameter_error("NORMALIZED volume has intensities outside [0, 1]");
      }
    }
  }

 private:
  Dims3 dims_{1, 1, 1};
  std::array<double, 3> spacing_{1, 1, 1};
  std::array<double, 3> origin_{0, 0, 0};
  Domain domain_ = Domain::HU;
  std::vector<float> data_{0.0f};
};

/// Windowed HU -> [0, 1] normalization: clamp((v - lo) / (hi - lo), 0, 1).
/// The window is fixed (not per-volume min-max) so intensities stay
/// comparable across volumes.
inline Volume normalize(const Volume& v, double lo, double hi) {
  if (v.domain() != Domain::HU) throw domain_error("normalize expects an HU-domain volume");
  if (!(lo < hi)) throw parameter_error("normalization window requires lo < hi");
  std::vector<float> out(v.size());
  const double inv = 1.0 / (hi - lo);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double t = (static_cast<double>(v.data()[i]) - lo) * inv;
    out[i] = static_cast<float>(std::clamp(t, 0.0, 1.0));
  }
  return Volume(v.dims(), v.spacing(), v.origin(), Domain::NORMALIZED, std::move(out));
}

namespace detail {

/// 1D factor-2 linear downscale along one axis, align-corners false:
/// output sample i maps to input coordinate (i + 0.5) * 2 - 0.5, which for
/// factor 2 reduces to the mean of input samples 2i and 2i+1.
inline void downscale2_axis(const std::vector<float>& in, Dims3 in_dims, int axis,
                            std::vector<float>& out, Dims3& out_dims) {
  out_dims = in_dims;
  out_dims[axis] = in_dims[axis] / 2;
  out.assign(static_cast<std::size_t>(voxel_count(out_dims)), 0.0f);
  const int od = out_dims[0], oh = out_dims[1], ow = out_dims[2];
  const std::int64_t in_stride[3] = {static_cast<std::int64_t>(in_dims[1]) * in_dims[2],
                                     in_dims[2], 1};
  for (int z = 0; z < od; ++z) {
    for (int y = 0; y < oh; ++y) {
      for (int x = 0; x < ow; ++x) {
        std::int64_t base = (axis == 0 ? 2 * z : z) * in_stride[0] +
                            (axis == 1 ? 2 * y : y) * in_stride[1] +
                            (axis == 2 ? 2 * x : x) * in_stride[2];
        const float a = in[base];
        const float b = in[base + in_stride[axis]];
        out[(static_cast<std::size_t>(z) * oh + y) * ow + x] = 0.5f * (a + b);
      }
    }
  }
}

}  // namespace detail

/// A perfectly aligned (CT, CBCT) pair. `quality` is an ordinal tag; lower
/// means stronger CBCT degradation.
struct PairedSample {
  std::string id;
  Volume ct;
  Volume cbct;
  int quality = 0;

  void validate() const {
    if (id.empty()) throw parameter_error("PairedSample: empty id");
    if (quality < 1) throw parameter_error("PairedSample: quality tag must be positive");
    if (ct.dims() != cbct.dims())
      throw parameter_error("PairedSample " + id + ": ct/cbct dims differ");
    if (ct.spacing() != cbct.spacing())
      throw parameter_error("PairedSample " + id + ": ct/cbct spacing differs");
  }
};

/// Isotropic factor-2 downscale with trilinear resampling (align-corners
/// false); each dim is halved (floor) and spacing doubles per axis.
inline Volume downscale2(const Volume& v) {
  for (int i = 0; i < 3; ++i) {
    if (v.dims()[i] < 2) throw parameter_error("downscale2 requires all dims >= 2");
  }
  std::vector<float> cur = v.data();
  Dims3 cur_dims = v.dims();
  for (int axis = 0; axis < 3; ++axis) {
    std::vector<float> next;
    Dims3 next_dims;
    detail::downscale2_axis(cur, cur_dims, axis, next, next_dims);
    cur = std::move(next);
    cur_dims = next_dims;
  }
  std::array<double, 3> spacing = v.spacing();
  for (auto& s : spacing) s *= 2.0;
  return Volume(cur_dims, spacing, v.origin(), v.domain(), std::move(cur));
}

}  // namespace sct
