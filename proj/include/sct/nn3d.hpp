// Copyright (c) 2026 the sctgen authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "sct/common.hpp"
#include "sct/rng.hpp"
#include "sct/tensor.hpp"

namespace sct {
namespace nn {

/// Fan-in scaled uniform initialization, U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
inline void init_uniform(Param& p, int fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (auto& v : p.value) v = static_cast<float>(rng.uniform(-bound, bound));
}

/// 3D convolution, cubic kernel (1 or 3), stride 1, zero padding k/2 so
/// spatial dims are preserved. Training-mode forward caches the input for
/// the weight-gradient pass.
struct Conv3d {
  int in_ch = 0, out_ch = 0, k = 3;
  Param weight;  // [out_ch][in_ch][k][k][k]
  Param bias;    // [out_ch]
  Tensor cached_input;

  void configure(int in, int out, int ksize, Rng& rng) {
    in_ch = in;
    out_ch = out;
    k = ksize;
    weight.resize({out, in, k, k, k});
    bias.resize({out});
    init_uniform(weight, in * k * k * k, rng);
    init_uniform(bias, in * k * k * k, rng);
  }

  Tensor forward(const Tensor& x, bool train) {
    if (x.c != in_ch)
      throw shape_error("conv3d: expected " + std::to_string(in_ch) + " channels, got " +
                        std::to_string(x.c));
    if (train) cached_input = x;
    const int d = x.d, h = x.h, w = x.w, pad = k / 2;
    Tensor out(out_ch, d, h, w);
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    for (int oc = 0; oc < out_ch; ++oc) {
      float* ochan = out.channel(oc);
      const float b = bias.value[oc];
      std::fill(ochan, ochan + out.spatial(), b);
      for (int ic = 0; ic < in_ch; ++ic) {
        const float* ichan = x.channel(ic);
        const float* wbase =
            weight.value.data() + (static_cast<std::size_t>(oc) * in_ch + ic) * k * k * k;
        for (int kz = 0; kz < k; ++kz) {
          const int dz = kz - pad;
          const int z0 = std::max(0, -dz), z1 = std::min(d, d - dz);
          for (int ky = 0; ky < k; ++ky) {
            const int dy = ky - pad;
            const int y0 = std::max(0, -dy), y1 = std::min(h, h - dy);
            for (int kx = 0; kx < k; ++kx) {
              const int dx = kx - pad;
              const int x0 = std::max(0, -dx), x1 = std::min(w, w - dx);
              const float wv = wbase[(kz * k + ky) * k + kx];
              if (wv == 0.0f) continue;
              for (int z = z0; z < z1; ++z) {
                for (int y = y0; y < y1; ++y) {
                  float* orow = ochan + z * plane + static_cast<std::size_t>(y) * w;
                  const float* irow = ichan + (z + dz) * plane +
                                      static_cast<std::size_t>(y + dy) * w + dx;
                  for (int xx = x0; xx < x1; ++xx) orow[xx] += wv * irow[xx];
                }
              }
            }
          }
        }
      }
    }
    return out;
  }

  /// Accumulates weight/bias gradients from the cached input and returns the
  /// gradient with respect to the input.
  Tensor backward(const Tensor& gout) {
    const Tensor& x = cached_input;
    if (x.size() == 0) throw error("conv3d: backward without training-mode forward");
    const int d = x.d, h = x.h, w = x.w, pad = k / 2;
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    Tensor gin(in_ch, d, h, w);
    for (int oc = 0; oc < out_ch; ++oc) {
      const float* gchan = gout.channel(oc);
      double gb = 0.0;
      for (std::size_t i = 0; i < gout.spatial(); ++i) gb += gchan[i];
      bias.grad[oc] += static_cast<float>(gb);
      for (int ic = 0; ic < in_ch; ++ic) {
        const float* ichan = x.channel(ic);
        float* gichan = gin.channel(ic);
        const std::size_t wofs = (static_cast<std::size_t>(oc) * in_ch + ic) * k * k * k;
        for (int kz = 0; kz < k; ++kz) {
          const int dz = kz - pad;
          const int z0 = std::max(0, -dz), z1 = std::min(d, d - dz);
          for (int ky = 0; ky < k; ++ky) {
            const int dy = ky - pad;
            const int y0 = std::max(0, -dy), y1 = std::min(h, h - dy);
            for (int kx = 0; kx < k; ++kx) {
              const int dx = kx - pad;
              const int x0 = std::max(0, -dx), x1 = std::min(w, w - dx);
              const float wv = weight.value[wofs + (kz * k + ky) * k + kx];
              double gw = 0.0;
              for (int z = z0; z < z1; ++z) {
                for (int y = y0; y < y1; ++y) {
                  const float* grow = gchan + z * plane + static_cast<std::size_t>(y) * w;
                  const float* irow = ichan + (z + dz) * plane +
                                      static_cast<std::size_t>(y + dy) * w + dx;
                  float* girow = gichan + (z + dz) * plane +
                                 static_cast<std::size_t>(y + dy) * w + dx;
                  for (int xx = x0; xx < x1; ++xx) {
                    gw += static_cast<double>(grow[xx]) * irow[xx];
                    girow[xx] += wv * grow[xx];
                  }
                }
              }
              weight.grad[wofs + (kz * k + ky) * k + kx] += static_cast<float>(gw);
            }
          }
        }
      }
    }
    return gin;
  }
};

/// Per-channel batch normalization over the spatial extent (per-step batch
/// size is 1 throughout, so training statistics are per-volume). Running
/// averages use the unbiased variance and are consumed in evaluation mode.
struct BatchNorm3d {
  int ch = 0;
  float eps = 1e-5f;
  float momentum = 0.1f;
  Param gamma, beta;
  std::vector<float> running_mean, running_var;

  std::vector<float> cached_xhat;
  std::vector<float> cached_inv_std;

  void configure(int channels) {
    ch = channels;
    gamma.resize({channels});
    beta.resize({channels});
    std::fill(gamma.value.begin(), gamma.value.end(), 1.0f);
    running_mean.assign(channels, 0.0f);
    running_var.assign(channels, 1.0f);
  }

  Tensor forward(const Tensor& x, bool train) {
    if (x.c != ch) throw shape_error("batchnorm: channel mismatch");
    Tensor out(x.c, x.d, x.h, x.w);
    const std::size_t n = x.spatial();
    if (train) {
      cached_xhat.resize(x.size());
      cached_inv_std.assign(ch, 0.0f);
    }
    for (int ci = 0; ci < ch; ++ci) {
      const float* in = x.channel(ci);
      float* o = out.channel(ci);
      if (train) {
        double sum = 0.0, sq = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          sum += in[i];
          sq += static_cast<double>(in[i]) * in[i];
        }
        const double mean = sum / static_cast<double>(n);
        const double var = std::max(0.0, sq / static_cast<double>(n) - mean * mean);
        const float inv_std = static_cast<float>(1.0 / std::sqrt(var + eps));
        cached_inv_std[ci] = inv_std;
        float* xhat = cached_xhat.data() + static_cast<std::size_t>(ci) * n;
        const float g = gamma.value[ci], b = beta.value[ci], m = static_cast<float>(mean);
        for (std::size_t i = 0; i < n; ++i) {
          xhat[i] = (in[i] - m) * inv_std;
          o[i] = g * xhat[i] + b;
        }
        const double unbiased =
            n > 1 ? var * static_cast<double>(n) / static_cast<double>(n - 1) : var;
        running_mean[ci] = (1.0f - momentum) * running_mean[ci] +
                           momentum * static_cast<float>(mean);
        running_var[ci] =
            (1.0f - momentum) * running_var[ci] + momentum * static_cast<float>(unbiased);
      } else {
        const float m = running_mean[ci];
        const float inv_std = 1.0f / std::sqrt(running_var[ci] + eps);
        const float g = gamma.value[ci], b = beta.value[ci];
        for (std::size_t i = 0; i < n; ++i) o[i] = g * (in[i] - m) * inv_std + b;
      }
    }
    return out;
  }

  Tensor backward(const Tensor& gout) {
    Tensor gin(gout.c, gout.d, gout.h, gout.w);
    const std::size_t n = gout.spatial();
    for (int ci = 0; ci < ch; ++ci) {
      const float* g = gout.channel(ci);
      const float* xhat = cached_xhat.data() + static_cast<std::size_t>(ci) * n;
      float* gi = gin.channel(ci);
      double sum_g = 0.0, sum_gx = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        sum_g += g[i];
        sum_gx += static_cast<double>(g[i]) * xhat[i];
      }
      gamma.grad[ci] += static_cast<float>(sum_gx);
      beta.grad[ci] += static_cast<float>(sum_g);
      const float mean_g = static_cast<float>(sum_g / static_cast<double>(n));
      const float mean_gx = static_cast<float>(sum_gx / static_cast<double>(n));
      const float scale = gamma.value[ci] * cached_inv_std[ci];
      for (std::size_t i = 0; i < n; ++i)
        gi[i] = scale * (g[i] - mean_g - xhat[i] * mean_gx);
    }
    return gin;
  }
};

struct Relu {
  Tensor cached_output;

  Tensor forward(const Tensor& x, bool train) {
    Tensor out(x.c, x.d, x.h, x.w);
    for (std::size_t i = 0; i < x.size(); ++i) out.v[i] = x.v[i] > 0.0f ? x.v[i] : 0.0f;
    if (train) cached_output = out;
    return out;
  }

  Tensor backward(const Tensor& gout) {
    Tensor gin(gout.c, gout.d, gout.h, gout.w);
    for (std::size_t i = 0; i < gout.size(); ++i)
      gin.v[i] = cached_output.v[i] > 0.0f ? gout.v[i] : 0.0f;
    return gin;
  }
};

/// 2x2x2 max pooling, stride 2. Input dims must be even.
struct MaxPool3d {
  Dims3 in_dims{};
  std::vector<std::int32_t> argmax;  // per output element, input offset within channel

  Tensor forward(const Tensor& x, bool train) {
    if (x.d % 2 || x.h % 2 || x.w % 2)
      throw shape_error("maxpool3d: dims must be even, got " + x.shape_string());
    in_dims = {x.d, x.h, x.w};
    const int od = x.d / 2, oh = x.h / 2, ow = x.w / 2;
    Tensor out(x.c, od, oh, ow);
    if (train) argmax.assign(out.size(), 0);
    const std::size_t plane = static_cast<std::size_t>(x.h) * x.w;
    std::size_t oi = 0;
    for (int ci = 0; ci < x.c; ++ci) {
      const float* in = x.channel(ci);
      for (int z = 0; z < od; ++z) {
        for (int y = 0; y < oh; ++y) {
          for (int xx = 0; xx < ow; ++xx, ++oi) {
            float best = -std::numeric_limits<float>::infinity();
            std::int32_t best_ofs = 0;
            for (int dz = 0; dz < 2; ++dz) {
              for (int dy = 0; dy < 2; ++dy) {
                for (int dx = 0; dx < 2; ++dx) {
                  const std::size_t ofs = (2 * z + dz) * plane +
                                          static_cast<std::size_t>(2 * y + dy) * x.w +
                                          (2 * xx + dx);
                  if (in[ofs] > best) {
                    best = in[ofs];
                    best_ofs = static_cast<std::int32_t>(ofs);
                  }
                }
              }
            }
            out.v[oi] = best;
            if (train) argmax[oi] = best_ofs;
          }
        }
      }
    }
    return out;
  }

  Tensor backward(const Tensor& gout) {
    Tensor gin(gout.c, in_dims[0], in_dims[1], in_dims[2]);
    const std::size_t out_spatial = gout.spatial();
    for (int ci = 0; ci < gout.c; ++ci) {
      const float* g = gout.channel(ci);
      float* gi = gin.channel(ci);
      const std::int32_t* am = argmax.data() + static_cast<std::size_t>(ci) * out_spatial;
      for (std::size_t i = 0; i < out_spatial; ++i) gi[am[i]] += g[i];
    }
    return gin;
  }
};

namespace detail {

/// Doubles one axis with linear interpolation (align-corners false):
/// output i samples input at (i + 0.5) / 2 - 0.5, edges clamped.
inline Tensor upsample2_axis(const Tensor& x, int axis) {
  const int dims_in[3] = {x.d, x.h, x.w};
  int dims_out[3] = {x.d, x.h, x.w};
  dims_out[axis] *= 2;
  Tensor out(x.c, dims_out[0], dims_out[1], dims_out[2]);
  const int L = dims_in[axis];
  for (int ci = 0; ci < x.c; ++ci) {
    for (int z = 0; z < dims_out[0]; ++z) {
      for (int y = 0; y < dims_out[1]; ++y) {
        for (int xx = 0; xx < dims_out[2]; ++xx) {
          const int pos = axis == 0 ? z : axis == 1 ? y : xx;
          const int t = pos / 2;
          int j0, j1;
          float w0, w1;
          if (pos % 2 == 0) {
            j0 = std::max(0, t - 1);
            j1 = t;
            w0 = 0.25f;
            w1 = 0.75f;
          } else {
            j0 = t;
            j1 = std::min(L - 1, t + 1);
            w0 = 0.75f;
            w1 = 0.25f;
          }
          const int sz = axis == 0 ? j0 : z, sy = axis == 1 ? j0 : y, sx = axis == 2 ? j0 : xx;
          const int tz = axis == 0 ? j1 : z, ty = axis == 1 ? j1 : y, tx = axis == 2 ? j1 : xx;
          out.at(ci, z, y, xx) = w0 * x.at(ci, sz, sy, sx) + w1 * x.at(ci, tz, ty, tx);
        }
      }
    }
  }
  return out;
}

inline Tensor upsample2_axis_backward(const Tensor& gout, int axis) {
  const int dims_out[3] = {gout.d, gout.h, gout.w};
  int dims_in[3] = {gout.d, gout.h, gout.w};
  dims_in[axis] /= 2;
  Tensor gin(gout.c, dims_in[0], dims_in[1], dims_in[2]);
  const int L = dims_in[axis];
  for (int ci = 0; ci < gout.c; ++ci) {
    for (int z = 0; z < dims_out[0]; ++z) {
      for (int y = 0; y < dims_out[1]; ++y) {
        for (int xx = 0; xx < dims_out[2]; ++xx) {
          const int pos = axis == 0 ? z : axis == 1 ? y : xx;
          const int t = pos / 2;
          int j0, j1;
          float w0, w1;
          if (pos % 2 == 0) {
            j0 = std::max(0, t - 1);
            j1 = t;
            w0 = 0.25f;
            w1 = 0.75f;
          } else {
            j0 = t;
            j1 = std::min(L - 1, t + 1);
            w0 = 0.75f;
            w1 = 0.25f;
          }
          const float g = gout.at(ci, z, y, xx);
          const int sz = axis == 0 ? j0 : z, sy = axis == 1 ? j0 : y, sx = axis == 2 ? j0 : xx;
          const int tz = axis == 0 ? j1 : z, ty = axis == 1 ? j1 : y, tx = axis == 2 ? j1 : xx;
          gin.at(ci, sz, sy, sx) += w0 * g;
          gin.at(ci, tz, ty, tx) += w1 * g;
        }
      }
    }
  }
  return gin;
}

}  // namespace detail

/// Trilinear x2 upsampling (align-corners false), separable per axis.
struct Upsample3d {
  Tensor forward(const Tensor& x) {
    Tensor t = detail::upsample2_axis(x, 0);
    t = detail::upsample2_axis(t, 1);
    return detail::upsample2_axis(t, 2);
  }

  Tensor backward(const Tensor& gout) {
    Tensor t = detail::upsample2_axis_backward(gout, 2);
    t = detail::upsample2_axis_backward(t, 1);
    return detail::upsample2_axis_backward(t, 0);
  }
};

inline Tensor concat_channels(const Tensor& a, const Tensor& b) {
  if (a.d != b.d || a.h != b.h || a.w != b.w)
    throw shape_error("concat: spatial dims differ: " + a.shape_string() + " vs " +
                      b.shape_string());
  Tensor out(a.c + b.c, a.d, a.h, a.w);
  std::copy(a.v.begin(), a.v.end(), out.v.begin());
  std::copy(b.v.begin(), b.v.end(), out.v.begin() + a.v.size());
  return out;
}

inline void split_channels(const Tensor& g, int c_first, Tensor& ga, Tensor& gb) {
  ga = Tensor(c_first, g.d, g.h, g.w);
  gb = Tensor(g.c - c_first, g.d, g.h, g.w);
  std::copy(g.v.begin(), g.v.begin() + ga.v.size(), ga.v.begin());
  std::copy(g.v.begin() + ga.v.size(), g.v.end(), gb.v.begin());
}

}  // namespace nn
}  // namespace sct
