// Copyright (c) 2026 the sctgen authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "sct/common.hpp"

namespace sct {

/// Dense tensor in channels x depth x height x width layout, width fastest.
/// A 2D image is represented with d == 1. The scalar type is float in the
/// production pipeline; gradient-check tests instantiate double.
template <typename T>
struct TensorT {
  int c = 0, d = 0, h = 0, w = 0;
  std::vector<T> v;

  TensorT() = default;
  TensorT(int c_, int d_, int h_, int w_)
      : c(c_), d(d_), h(h_), w(w_),
        v(static_cast<std::size_t>(c_) * d_ * h_ * w_, T(0)) {}

  std::size_t size() const { return v.size(); }
  std::size_t spatial() const { return static_cast<std::size_t>(d) * h * w; }

  T* channel(int ci) { return v.data() + static_cast<std::size_t>(ci) * spatial(); }
  const T* channel(int ci) const {
    return v.data() + static_cast<std::size_t>(ci) * spatial();
  }

  T& at(int ci, int zi, int yi, int xi) {
    return v[((static_cast<std::size_t>(ci) * d + zi) * h + yi) * w + xi];
  }
  T at(int ci, int zi, int yi, int xi) const {
    return v[((static_cast<std::size_t>(ci) * d + zi) * h + yi) * w + xi];
  }

  bool same_shape(const TensorT& o) const {
    return c == o.c && d == o.d && h == o.h && w == o.w;
  }

  void fill(T x) { std::fill(v.begin(), v.end(), x); }

  template <typename U>
  TensorT<U> cast() const {
    TensorT<U> out(c, d, h, w);
    for (std::size_t i = 0; i < v.size(); ++i) out.v[i] = static_cast<U>(v[i]);
    return out;
  }

  std::string shape_string() const {
    return std::to_string(c) + "x" + std::to_string(d) + "x" + std::to_string(h) + "x" +
           std::to_string(w);
  }
};

using Tensor = TensorT<float>;

/// A learnable tensor with its gradient accumulator.
template <typename T>
struct ParamT {
  std::vector<T> value;
  std::vector<T> grad;
  std::vector<int> shape;

  void resize(std::vector<int> s) {
    shape = std::move(s);
    std::size_t n = 1;
    for (int d : shape) n *= static_cast<std::size_t>(d);
    value.assign(n, T(0));
    grad.assign(n, T(0));
  }

  std::size_t size() const { return value.size(); }
  void zero_grad() { std::fill(grad.begin(), grad.end(), T(0)); }
};

using Param = ParamT<float>;

template <typename T>
struct NamedParamT {
  std::string name;
  ParamT<T>* param;
};

using NamedParam = NamedParamT<float>;

/// Non-learnable state that still belongs in a checkpoint (e.g. batch-norm
/// running statistics).
template <typename T>
struct NamedBufferT {
  std::string name;
  std::vector<T>* data;
};

using NamedBuffer = NamedBufferT<float>;

}  // namespace sct
