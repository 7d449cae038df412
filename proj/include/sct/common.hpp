// Copyright (c) 2026 the sctgen authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace sct {

/// Base class for all library errors.
struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// File could not be read or written.
struct io_error : error {
  using error::error;
};

/// File exists but its payload is not a supported volume.
struct format_error : error {
  using error::error;
};

/// An argument violates a documented precondition.
struct parameter_error : error {
  using error::error;
};

/// Tensor/volume dimensions incompatible with the requested operation.
struct shape_error : error {
  using error::error;
};

/// Intensity-domain misuse (HU where NORMALIZED is required, or vice versa).
struct domain_error : error {
  using error::error;
};

/// Configuration document or checkpoint fingerprint mismatch.
struct config_error : error {
  using error::error;
};

/// A required external resource (e.g. pretrained weights) is unavailable.
struct resource_error : error {
  using error::error;
};

using Dims3 = std::array<int, 3>;  // depth, height, width

inline std::int64_t voxel_count(const Dims3& d) {
  return static_cast<std::int64_t>(d[0]) * d[1] * d[2];
}

inline std::string dims_to_string(const Dims3& d) {
  return std::to_string(d[0]) + "x" + std::to_string(d[1]) + "x" + std::to_string(d[2]);
}

}  // namespace sct
