// Copyright (c) 2026 the sctgen authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <zlib.h>

#include <array>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sct/common.hpp"
#include "sct/volume.hpp"

namespace sct {

namespace nifti {

// NIfTI-1 header, 348 bytes, little-endian on disk.
struct Header {
  std::int32_t sizeof_hdr;
  char data_type[10];
  char db_name[18];
  std::int32_t extents;
  std::int16_t session_error;
  char regular;
  char dim_info;
  std::int16_t dim[8];
  float intent_p1, intent_p2, intent_p3;
  std::int16_t intent_code;
  std::int16_t datatype;
  std::int16_t bitpix;
  std::int16_t slice_start;
  float pixdim[8];
  float vox_offset;
  float scl_slope;
  float scl_inter;
  std::int16_t slice_end;
  char slice_code;
  char xyzt_units;
  float cal_max, cal_min;
  float slice_duration;
  float toffset;
  std::int32_t glmax, glmin;
  char descrip[80];
  char aux_file[24];
  std::int16_t qform_code;
  std::int16_t sform_code;
  float quatern_b, quatern_c, quatern_d;
  float qoffset_x, qoffset_y, qoffset_z;
  float srow_x[4];
  float srow_y[4];
  float srow_z[4];
  char intent_name[16];
  char magic[4];
};
static_assert(sizeof(Header) == 348, "nifti header must pack to 348 bytes");

enum Datatype : std::int16_t {
  DT_UINT8 = 2,
  DT_INT16 = 4,
  DT_INT32 = 8,
  DT_FLOAT32 = 16,
  DT_FLOAT64 = 64,
  DT_UINT16 = 512,
};

template <typename T>
void swap_bytes(T& v) {
  auto* p = reinterpret_cast<unsigned char*>(&v);
  for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(p[i], p[sizeof(T) - 1 - i]);
}

inline void swap_header(Header& h) {
  swap_bytes(h.sizeof_hdr);
  swap_bytes(h.extents);
  swap_bytes(h.session_error);
  for (auto& d : h.dim) swap_bytes(d);
  swap_bytes(h.intent_p1);
  swap_bytes(h.intent_p2);
  swap_bytes(h.intent_p3);
  swap_bytes(h.intent_code);
  swap_bytes(h.datatype);
  swap_bytes(h.bitpix);
  swap_bytes(h.slice_start);
  for (auto& p : h.pixdim) swap_bytes(p);
  swap_bytes(h.vox_offset);
  swap_bytes(h.scl_slope);
  swap_bytes(h.scl_inter);
  swap_bytes(h.slice_end);
  swap_bytes(h.cal_max);
  swap_bytes(h.cal_min);
  swap_bytes(h.slice_duration);
  swap_bytes(h.toffset);
  swap_bytes(h.glmax);
  swap_bytes(h.glmin);
  swap_bytes(h.qform_code);
  swap_bytes(h.sform_code);
  swap_bytes(h.quatern_b);
  swap_bytes(h.quatern_c);
  swap_bytes(h.quatern_d);
  swap_bytes(h.qoffset_x);
  swap_bytes(h.qoffset_y);
  swap_bytes(h.qoffset_z);
  for (auto& v : h.srow_x) swap_bytes(v);
  for (auto& v : h.srow_y) swap_bytes(v);
  for (auto& v : h.srow_z) swap_bytes(v);
}

class GzFile {
 public:
  GzFile(const std::string& path, const char* mode) : f_(gzopen(path.c_str(), mode)) {
    if (!f_) throw io_error("cannot open " + path);
  }
  ~GzFile() {
    if (f_) gzclose(f_);
  }
  GzFile(const GzFile&) = delete;
  GzFile& operator=(const GzFile&) = delete;

  void read_exact(void* dst, std::size_t n, const std::string& what) {
    auto* p = static_cast<unsigned char*>(dst);
    while (n > 0) {
      const unsigned chunk = n > (1u << 30) ? (1u << 30) : static_cast<unsigned>(n);
      const int got = gzread(f_, p, chunk);
      if (got <= 0) throw format_error("truncated read while loading " + what);
      p += got;
      n -= static_cast<std::size_t>(got);
    }
  }

  void write_exact(const void* src, std::size_t n, const std::string& what) {
    auto* p = static_cast<const unsigned char*>(src);
    while (n > 0) {
      const unsigned chunk = n > (1u << 30) ? (1u << 30) : static_cast<unsigned>(n);
      const int put = gzwrite(f_, p, chunk);
      if (put <= 0) throw io_error("write failed for " + what);
      p += put;
      n -= static_cast<std::size_t>(put);
    }
  }

 private:
  gzFile f_;
};

template <typename T>
std::vector<float> convert_payload(GzFile& f, std::size_t n, bool swapped,
                                   const std::string& path) {
  std::vector<T> raw(n);
  f.read_exact(raw.data(), n * sizeof(T), path);
  if (swapped && sizeof(T) > 1) {
    for (auto& v : raw) swap_bytes(v);
  }
  std::vector<float> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<float>(raw[i]);
  return out;
}

inline Volume read(const std::string& path) {
  GzFile f(path, "rb");
  Header h{};
  f.read_exact(&h, sizeof(h), path);
  bool swapped = false;
  if (h.sizeof_hdr != 348) {
    swap_header(h);
    swapped = true;
    if (h.sizeof_hdr != 348) throw format_error(path + ": not a NIfTI-1 file");
  }
  if (std::memcmp(h.magic, "n+1", 3) != 0 && std::memcmp(h.magic, "ni1", 3) != 0)
    throw format_error(path + ": bad NIfTI magic");

  int ndim = h.dim[0];
  // trailing singleton dims are tolerated
  while (ndim > 3 && h.dim[ndim] == 1) --ndim;
  if (ndim != 3) throw format_error(path + ": expected a 3D payload, got " +
                                    std::to_string(h.dim[0]) + "D");
  const Dims3 dims = {h.dim[3], h.dim[2], h.dim[1]};
  if (dims[0] < 1 || dims[1] < 1 || dims[2] < 1)
    throw format_error(path + ": non-positive dims");
  const std::size_t n = static_cast<std::size_t>(voxel_count(dims));

  // skip any extension bytes between header end and vox_offset
  const long offset = static_cast<long>(h.vox_offset);
  if (offset > 348) {
    std::vector<char> skip(static_cast<std::size_t>(offset - 348));
    f.read_exact(skip.data(), skip.size(), path);
  }

  std::vector<float> data;
  switch (h.datatype) {
    case DT_UINT8: data = convert_payload<std::uint8_t>(f, n, swapped, path); break;
    case DT_INT16: data = convert_payload<std::int16_t>(f, n, swapped, path); break;
    case DT_UINT16: data = convert_payload<std::uint16_t>(f, n, swapped, path); break;
    case DT_INT32: data = convert_payload<std::int32_t>(f, n, swapped, path); break;
    case DT_FLOAT32: data = convert_payload<float>(f, n, swapped, path); break;
    case DT_FLOAT64: data = convert_payload<double>(f, n, swapped, path); break;
    default:
      throw format_error(path + ": unsupported NIfTI datatype " + std::to_string(h.datatype));
  }
  if (h.scl_slope != 0.0f && (h.scl_slope != 1.0f || h.scl_inter != 0.0f)) {
    for (auto& v : data) v = v * h.scl_slope + h.scl_inter;
  }

  std::array<double, 3> spacing = {h.pixdim[3], h.pixdim[2], h.pixdim[1]};
  for (auto& s : spacing) {
    if (!(s > 0.0)) s = 1.0;
  }
  std::array<double, 3> origin = {0, 0, 0};
  if (h.sform_code > 0) {
    origin = {h.srow_z[3], h.srow_y[3], h.srow_x[3]};
  } else if (h.qform_code > 0) {
    origin = {h.qoffset_z, h.qoffset_y, h.qoffset_x};
  }

  char intent[17] = {};
  std::memcpy(intent, h.intent_name, 16);
  const Domain domain =
      std::string(intent) == "NORMALIZED" ? Domain::NORMALIZED : Domain::HU;

  try {
    return Volume(dims, spacing, origin, domain, std::move(data));
  } catch (const error& e) {
    throw format_error(path + ": " + e.what());
  }
}

inline void write(const Volume& v, const std::string& path, bool compress) {
  Header h{};
  h.sizeof_hdr = 348;
  h.regular = 'r';
  h.dim[0] = 3;
  h.dim[1] = static_cast<std::int16_t>(v.width());
  h.dim[2] = static_cast<std::int16_t>(v.height());
  h.dim[3] = static_cast<std::int16_t>(v.depth());
  for (int i = 4; i < 8; ++i) h.dim[i] = 1;
  h.datatype = DT_FLOAT32;
  h.bitpix = 32;
  h.pixdim[0] = 1.0f;
  h.pixdim[1] = static_cast<float>(v.spacing()[2]);
  h.pixdim[2] = static_cast<float>(v.spacing()[1]);
  h.pixdim[3] = static_cast<float>(v.spacing()[0]);
  h.vox_offset = 352.0f;
  h.scl_slope = 1.0f;
  h.scl_inter = 0.0f;
  h.xyzt_units = 2;  // millimetres
  std::snprintf(h.descrip, sizeof(h.descrip), "sctgen volume");
  h.sform_code = 1;
  h.qform_code = 0;
  h.srow_x[0] = static_cast<float>(v.spacing()[2]);
  h.srow_x[3] = static_cast<float>(v.origin()[2]);
  h.srow_y[1] = static_cast<float>(v.spacing()[1]);
  h.srow_y[3] = static_cast<float>(v.origin()[1]);
  h.srow_z[2] = static_cast<float>(v.spacing()[0]);
  h.srow_z[3] = static_cast<float>(v.origin()[0]);
  std::snprintf(h.intent_name, sizeof(h.intent_name), "%s", domain_name(v.domain()));
  std::memcpy(h.magic, "n+1\0", 4);

  GzFile f(path, compress ? "wb6" : "wbT");
  f.write_exact(&h, sizeof(h), path);
  const char pad[4] = {0, 0, 0, 0};  // no extensions
  f.write_exact(pad, 4, path);
  f.write_exact(v.data().data(), v.data().size() * sizeof(float), path);
}

}  // namespace nifti

namespace rawvol {

inline std::string sidecar_path(const std::string& raw_path) {
  return raw_path.substr(0, raw_path.size() - 4) + ".json";
}

inline Volume read(const std::string& path) {
  std::ifstream side(sidecar_path(path));
  if (!side) throw io_error("cannot open sidecar " + sidecar_path(path));
  nlohmann::json j;
  try {
    side >> j;
  } catch (const nlohmann::json::exception& e) {
    throw format_error(sidecar_path(path) + ": " + e.what());
  }
  try {
    const Dims3 dims = {j.at("dims").at(0), j.at("dims").at(1), j.at("dims").at(2)};
    const std::array<double, 3> spacing = {j.at("spacing").at(0), j.at("spacing").at(1),
                                           j.at("spacing").at(2)};
    const std::array<double, 3> origin = {j.at("origin").at(0), j.at("origin").at(1),
                                          j.at("origin").at(2)};
    const Domain domain = domain_from_name(j.at("domain").get<std::string>());
    std::ifstream f(path, std::ios::binary);
    if (!f) throw io_error("cannot open " + path);
    std::vector<float> data(static_cast<std::size_t>(voxel_count(dims)));
    f.read(reinterpret_cast<char*>(data.data()),
           static_cast<std::streamsize>(data.size() * sizeof(float)));
    if (!f || f.gcount() != static_cast<std::streamsize>(data.size() * sizeof(float)))
      throw format_error(path + ": payload shorter than dims require");
    return Volume(dims, spacing, origin, domain, std::move(data));
  } catch (const nlohmann::json::exception& e) {
    throw format_error(sidecar_path(path) + ": " + e.what());
  }
}

inline void write(const Volume& v, const std::string& path) {
  nlohmann::json j;
  j["dims"] = {v.dims()[0], v.dims()[1], v.dims()[2]};
  j["spacing"] = {v.spacing()[0], v.spacing()[1], v.spacing()[2]};
  j["origin"] = {v.origin()[0], v.origin()[1], v.origin()[2]};
  j["domain"] = domain_name(v.domain());
  std::ofstream side(sidecar_path(path));
  if (!side) throw io_error("cannot write sidecar " + sidecar_path(path));
  side << j.dump(2) << "\n";
  std::ofstream f(path, std::ios::binary);
  if (!f) throw io_error("cannot write " + path);
  f.write(reinterpret_cast<const char*>(v.data().data()),
          static_cast<std::streamsize>(v.data().size() * sizeof(float)));
  if (!f) throw io_error("write failed for " + path);
}

}  // namespace rawvol

namespace detail {
inline bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}
}  // namespace detail

/// Loads a volume from .nii / .nii.gz / .raw (+ JSON sidecar).
inline Volume load_volume(const std::string& path) {
  if (!std::filesystem::exists(path)) throw io_error("no such file: " + path);
  if (detail::ends_with(path, ".nii.gz") || detail::ends_with(path, ".nii"))
    return nifti::read(path);
  if (detail::ends_with(path, ".raw")) return rawvol::read(path);
  throw format_error("unsupported volume format: " + path);
}

/// Saves a volume; format chosen by extension as in load_volume.
inline void save_volume(const Volume& v, const std::string& path) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty() && !std::filesystem::exists(parent))
    throw io_error("parent directory does not exist: " + parent.string());
  if (detail::ends_with(path, ".nii.gz")) return nifti::write(v, path, true);
  if (detail::ends_with(path, ".nii")) return nifti::write(v, path, false);
  if (detail::ends_with(path, ".raw")) return rawvol::write(v, path);
  throw format_error("unsupported volume format: " + path);
}

}  // namespace sct
