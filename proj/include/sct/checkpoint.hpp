// Copyright (c) 2026 the sctgen authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "sct/common.hpp"

namespace sct {

/// Single-file container of named float32 tensors plus a JSON metadata
/// blob (used as a config fingerprint). Layout, little-endian:
///   magic "SCTC", u32 version,
///   u32 meta_len, meta bytes (JSON),
///   u32 tensor count, then per tensor:
///     u16 name_len, name bytes, u8 ndim, u32 dims[ndim], f32 data[]
struct TensorFileEntry {
  std::string name;
  std::vector<int> shape;
  std::vector<float> data;
};

struct TensorFile {
  nlohmann::json meta;
  std::vector<TensorFileEntry> tensors;

  const TensorFileEntry* find(const std::string& name) const {
    for (const auto& t : tensors) {
      if (t.name == name) return &t;
    }
    return nullptr;
  }
};

namespace detail {

template <typename T>
void write_pod(std::ofstream& f, T v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& f, const std::string& path) {
  T v;
  f.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!f) throw format_error(path + ": truncated tensor file");
  return v;
}

}  // namespace detail

inline void save_tensor_file(const TensorFile& tf, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw io_error("cannot write " + path);
  f.write("SCTC", 4);
  detail::write_pod<std::uint32_t>(f, 1);
  const std::string meta = tf.meta.dump();
  detail::write_pod<std::uint32_t>(f, static_cast<std::uint32_t>(meta.size()));
  f.write(meta.data(), static_cast<std::streamsize>(meta.size()));
  detail::write_pod<std::uint32_t>(f, static_cast<std::uint32_t>(tf.tensors.size()));
  for (const auto& t : tf.tensors) {
    detail::write_pod<std::uint16_t>(f, static_cast<std::uint16_t>(t.name.size()));
    f.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    detail::write_pod<std::uint8_t>(f, static_cast<std::uint8_t>(t.shape.size()));
    std::size_t n = 1;
    for (int d : t.shape) {
      detail::write_pod<std::uint32_t>(f, static_cast<std::uint32_t>(d));
      n *= static_cast<std::size_t>(d);
    }
    if (n != t.data.size()) throw parameter_error("tensor " + t.name + ": shape/data mismatch");
    f.write(reinterpret_cast<const char*>(t.data.data()),
            static_cast<std::streamsize>(t.data.size() * sizeof(float)));
  }
  if (!f) throw io_error("write failed for " + path);
}

inline TensorFile load_tensor_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw io_error("cannot open " + path);
  char magic[4];
  f.read(magic, 4);
  if (!f || std::memcmp(magic, "SCTC", 4) != 0)
    throw format_error(path + ": not a tensor container");
  const auto version = detail::read_pod<std::uint32_t>(f, path);
  if (version != 1) throw format_error(path + ": unsupported container version");
  const auto meta_len = detail::read_pod<std::uint32_t>(f, path);
  std::string meta(meta_len, '\0');
  f.read(meta.data(), meta_len);
  if (!f) throw format_error(path + ": truncated tensor file");
  TensorFile tf;
  try {
    tf.meta = nlohmann::json::parse(meta);
  } catch (const nlohmann::json::exception& e) {
    throw format_error(path + ": bad metadata: " + e.what());
  }
  const auto count = detail::read_pod<std::uint32_t>(f, path);
  tf.tensors.resize(count);
  for (auto& t : tf.tensors) {
    const auto name_len = detail::read_pod<std::uint16_t>(f, path);
    t.name.resize(name_len);
    f.read(t.name.data(), name_len);
    const auto ndim = detail::read_pod<std::uint8_t>(f, path);
    std::size_t n = 1;
    t.shape.resize(ndim);
    for (auto& d : t.shape) {
      d = static_cast<int>(detail::read_pod<std::uint32_t>(f, path));
      n *= static_cast<std::size_t>(d);
    }
    t.data.resize(n);
    f.read(reinterpret_cast<char*>(t.data.data()),
           static_cast<std::streamsize>(n * sizeof(float)));
    if (!f) throw format_error(path + ": truncated tensor file");
  }
  return tf;
}

}  // namespace sct
