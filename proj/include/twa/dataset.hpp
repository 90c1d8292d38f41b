#pragma once

// TWAF dataset container.
//
// Layout (little-endian):
//   "TWAF" | u32 version | u32 N | u32 H | u32 W | u8 flags |
//   u32 manifest length | manifest JSON (UTF-8) |
//   N x { u8 label | u32 P | P x f64 params | f64 boundary distance |
//         H*W f32 angles | [flags&1] H*W f32 u, H*W f32 v } |
//   u32 CRC32
// The CRC covers every byte between the magic and the CRC itself.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "twa/bytes.hpp"
#include "twa/error.hpp"
#include "twa/raster.hpp"

namespace twa {

inline constexpr std::uint32_t kDatasetVersion = 1;
inline constexpr std::uint8_t kFlagRawVectors = 0x1;
inline constexpr std::uint8_t kUnlabeled = 0xff;

struct Manifest {
  std::uint64_t seed = 0;
  std::string system;
  std::vector<std::string> param_names;
  nlohmann::json augmentation = nullptr;  // null when unaugmented
  double noise_sigma = 0.0;
  std::string split;
  Interval x_extent{-1, 1};
  Interval y_extent{-1, 1};
  nlohmann::json extra = nlohmann::json::object();

  bool operator==(const Manifest&) const = default;
};

inline nlohmann::json to_json(const Manifest& m) {
  return {{"seed", m.seed},
          {"system", m.system},
          {"param_names", m.param_names},
          {"augmentation", m.augmentation},
          {"noise_sigma", m.noise_sigma},
          {"noise_scale", "relative_rms"},
          {"split", m.split},
          {"extent", {{m.x_extent.lo, m.x_extent.hi}, {m.y_extent.lo, m.y_extent.hi}}},
          {"extra", m.extra}};
}

inline Manifest manifest_from_json(const nlohmann::json& j) {
  Manifest m;
  m.seed = j.at("seed").get<std::uint64_t>();
  m.system = j.at("system").get<std::string>();
  m.param_names = j.at("param_names").get<std::vector<std::string>>();
  m.augmentation = j.at("augmentation");
  m.noise_sigma = j.at("noise_sigma").get<double>();
  m.split = j.at("split").get<std::string>();
  const auto& e = j.at("extent");
  m.x_extent = {e.at(0).at(0).get<double>(), e.at(0).at(1).get<double>()};
  m.y_extent = {e.at(1).at(0).get<double>(), e.at(1).at(1).get<double>()};
  m.extra = j.value("extra", nlohmann::json::object());
  return m;
}

struct LabeledSample {
  std::vector<float> angles;           // H*W row-major
  std::optional<DynClass> label;       // nullopt for unlabeled inputs
  std::vector<double> params;
  double boundary_distance = 0.0;
  std::vector<float> raw;              // empty, or u then v (2*H*W)

  bool operator==(const LabeledSample&) const = default;
};

struct Dataset {
  Manifest manifest;
  int height = kDefaultGridSize;
  int width = kDefaultGridSize;
  std::vector<LabeledSample> samples;

  GridSpec grid() const { return GridSpec{width, height, manifest.x_extent, manifest.y_extent}; }
  bool has_raw() const {
    return !samples.empty() &&
           std::all_of(samples.begin(), samples.end(), [](const auto& s) { return !s.raw.empty(); });
  }
  std::size_t size() const { return samples.size(); }

  AngleField angle_field(std::size_t k) const { return {grid(), samples.at(k).angles}; }

  VectorField vector_field(std::size_t k) const {
    const auto& s = samples.at(k);
    if (s.raw.empty()) throw Error(ErrorCode::CorruptPayload, "sample has no raw vector section");
    VectorField f(grid());
    const std::size_t n = f.u.size();
    for (std::size_t i = 0; i < n; ++i) {
      f.u[i] = s.raw[i];
      f.v[i] = s.raw[n + i];
    }
    return f;
  }

  bool operator==(const Dataset&) const = default;
};

inline std::vector<float> pack_raw(const VectorField& f) {
  std::vector<float> r(2 * f.u.size());
  for (std::size_t i = 0; i < f.u.size(); ++i) {
    r[i] = static_cast<float>(f.u[i]);
    r[f.u.size() + i] = static_cast<float>(f.v[i]);
  }
  return r;
}

inline std::vector<std::uint8_t> encode_dataset(const Dataset& ds) {
  const bool raw = ds.has_raw();
  const std::size_t hw = static_cast<std::size_t>(ds.height) * ds.width;
  ByteWriter w;
  w.raw("TWAF", 4);
  w.u32(kDatasetVersion);
  w.u32(static_cast<std::uint32_t>(ds.samples.size()));
  w.u32(static_cast<std::uint32_t>(ds.height));
  w.u32(static_cast<std::uint32_t>(ds.width));
  w.u8(raw ? kFlagRawVectors : 0);
  w.str(to_json(ds.manifest).dump());
  for (const auto& s : ds.samples) {
    if (s.angles.size() != hw || (raw && s.raw.size() != 2 * hw)) {
      throw Error(ErrorCode::ShapeMismatch, "sample raster size does not match dataset shape");
    }
    w.u8(s.label ? static_cast<std::uint8_t>(*s.label) : kUnlabeled);
    w.u32(static_cast<std::uint32_t>(s.params.size()));
    for (double p : s.params) w.f64(p);
    w.f64(s.boundary_distance);
    for (float a : s.angles) w.f32(a);
    if (raw) {
      for (float x : s.raw) w.f32(x);
    }
  }
  auto& bytes = w.bytes();
  const std::uint32_t crc = crc32_of(bytes.data() + 4, bytes.size() - 4);
  w.u32(crc);
  return bytes;
}

inline Dataset decode_dataset(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), "TWAF", 4) != 0) {
    throw Error(ErrorCode::BadMagic, "not a TWAF dataset");
  }
  if (bytes.size() < 8 + 4) throw Error(ErrorCode::CorruptPayload, "truncated header");
  ByteReader head(bytes.data() + 4, bytes.size() - 4);
  if (const auto v = head.u32(); v != kDatasetVersion) {
    throw Error(ErrorCode::VersionMismatch, "dataset version " + std::to_string(v));
  }
  const std::size_t body = bytes.size() - 4;
  const std::uint32_t stored = ByteReader(bytes.data() + body, 4).u32();
  if (crc32_of(bytes.data() + 4, body - 4) != stored) {
    throw Error(ErrorCode::CorruptPayload, "checksum mismatch");
  }

  ByteReader r(bytes.data() + 8, body - 8);
  Dataset ds;
  const std::uint32_t n = r.u32();
  ds.height = static_cast<int>(r.u32());
  ds.width = static_cast<int>(r.u32());
  const bool raw = (r.u8() & kFlagRawVectors) != 0;
  try {
    ds.manifest = manifest_from_json(nlohmann::json::parse(r.str()));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::CorruptPayload, std::string("manifest: ") + e.what());
  }
  const std::size_t hw = static_cast<std::size_t>(ds.height) * ds.width;
  ds.samples.resize(n);
  for (auto& s : ds.samples) {
    const std::uint8_t label = r.u8();
    if (label == kUnlabeled) {
      s.label.reset();
    } else if (label <= 1) {
      s.label = static_cast<DynClass>(label);
    } else {
      throw Error(ErrorCode::CorruptPayload, "bad label byte");
    }
    s.params.resize(r.u32());
    for (auto& p : s.params) p = r.f64();
    s.boundary_distance = r.f64();
    s.angles.resize(hw);
    for (auto& a : s.angles) a = r.f32();
    if (raw) {
      s.raw.resize(2 * hw);
      for (auto& x : s.raw) x = r.f32();
    }
  }
  if (r.remaining() != 0) throw Error(ErrorCode::CorruptPayload, "trailing bytes");
  return ds;
}

inline void write_dataset(const Dataset& ds, const std::string& path) {
  write_file(path, encode_dataset(ds));
}

inline Dataset read_dataset(const std::string& path) { return decode_dataset(read_file(path)); }

}  // namespace twa
