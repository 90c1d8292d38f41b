#pragma once

// Lattice sampling of planar systems, the relative noise protocol and the
// angular representation consumed by the classifier.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "twa/error.hpp"
#include "twa/rng.hpp"
#include "twa/systemzoo.hpp"

namespace twa {

inline constexpr int kDefaultGridSize = 64;
inline constexpr float kPiF = static_cast<float>(std::numbers::pi);

struct GridSpec {
  int width = kDefaultGridSize;
  int height = kDefaultGridSize;
  Interval x_extent{-1, 1};
  Interval y_extent{-1, 1};

  static GridSpec for_system(const SystemSpec& s, int w = kDefaultGridSize,
                             int h = kDefaultGridSize) {
    return GridSpec{w, h, s.extent.at(0), s.extent.at(1)};
  }

  std::size_t size() const { return static_cast<std::size_t>(width) * height; }
  // Endpoint-inclusive lattice.
  double x_at(int j) const { return x_extent.lo + x_extent.width() * j / (width - 1); }
  double y_at(int i) const { return y_extent.lo + y_extent.width() * i / (height - 1); }
  double dx() const { return x_extent.width() / (width - 1); }
  double dy() const { return y_extent.width() / (height - 1); }
  bool operator==(const GridSpec&) const = default;
};

struct Provenance {
  std::string system;
  std::vector<double> params;
  std::uint64_t diffeo_id = 0;  // 0: not warped
  double noise_sigma = 0.0;
};

// Rasters are row-major: row i is y_at(i), column j is x_at(j).
struct VectorField {
  GridSpec grid;
  std::vector<double> u;
  std::vector<double> v;
  std::optional<Provenance> provenance;

  VectorField() = default;
  explicit VectorField(const GridSpec& g) : grid(g), u(g.size(), 0.0), v(g.size(), 0.0) {}

  std::size_t index(int i, int j) const { return static_cast<std::size_t>(i) * grid.width + j; }

  double rms_magnitude() const {
    double acc = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) acc += u[k] * u[k] + v[k] * v[k];
    return u.empty() ? 0.0 : std::sqrt(acc / static_cast<double>(u.size()));
  }

  VectorField scaled(double c) const {
    VectorField out = *this;
    for (auto& x : out.u) x *= c;
    for (auto& x : out.v) x *= c;
    return out;
  }

  // Bilinear interpolation at a physical point, clamped to the extent.
  Vec2 sample(double x, double y) const {
    const double fx = std::clamp((x - grid.x_extent.lo) / grid.dx(), 0.0, grid.width - 1.0);
    const double fy = std::clamp((y - grid.y_extent.lo) / grid.dy(), 0.0, grid.height - 1.0);
    const int j = std::min(static_cast<int>(fx), grid.width - 2);
    const int i = std::min(static_cast<int>(fy), grid.height - 2);
    const double tx = fx - j, ty = fy - i;
    auto lerp2 = [&](const std::vector<double>& f) {
      const double a = f[index(i, j)], b = f[index(i, j + 1)];
      const double c = f[index(i + 1, j)], d = f[index(i + 1, j + 1)];
      return (1 - ty) * ((1 - tx) * a + tx * b) + ty * ((1 - tx) * c + tx * d);
    };
    return {lerp2(u), lerp2(v)};
  }
};

struct AngleField {
  GridSpec grid;
  std::vector<float> phi;  // (-pi, pi]
};

inline bool same_extent(const GridSpec& g, const SystemSpec& s) {
  return s.extent.size() >= 2 && g.x_extent == s.extent[0] && g.y_extent == s.extent[1];
}

// Samples any planar map onto the grid lattice.
template <typename Fn>
VectorField rasterize_fn(const GridSpec& grid, Fn&& f) {
  VectorField out(grid);
  for (int i = 0; i < grid.height; ++i) {
    const double y = grid.y_at(i);
    for (int j = 0; j < grid.width; ++j) {
      const Vec2 w = f(grid.x_at(j), y);
      out.u[out.index(i, j)] = w[0];
      out.v[out.index(i, j)] = w[1];
    }
  }
  return out;
}

inline VectorField rasterize(const SystemSpec& s, const GridSpec& grid) {
  if (s.dim != 2 || !same_extent(grid, s)) {
    throw Error(ErrorCode::ExtentMismatch,
                "grid extent differs from " + std::string(system_id(s.name)) + " phase space");
  }
  VectorField out = rasterize_fn(grid, [&](double x, double y) { return eval_rhs2(s, x, y); });
  out.provenance = Provenance{std::string(system_id(s.name)), s.params, 0, 0.0};
  return out;
}

// Adds i.i.d. N(0, (sigma * rms)^2) to every component, rms being the RMS
// vector magnitude of the clean field.
inline VectorField add_noise(const VectorField& field, double sigma, Rng& rng) {
  if (sigma < 0) throw Error(ErrorCode::Config, "noise sigma must be >= 0");
  if (sigma == 0.0) return field;
  VectorField out = field;
  const double scale = sigma * field.rms_magnitude();
  std::normal_distribution<double> n01(0.0, 1.0);
  for (auto& x : out.u) x += scale * n01(rng);
  for (auto& x : out.v) x += scale * n01(rng);
  if (out.provenance) out.provenance->noise_sigma = sigma;
  return out;
}

// Quadrant-correct angle in (-pi, pi]; the zero vector maps to 0.
inline float vector_angle(double u, double v) {
  if (u == 0.0 && v == 0.0) return 0.0f;
  float a = static_cast<float>(std::atan2(v, u));
  if (a <= -kPiF) a = kPiF;
  return a;
}

inline AngleField to_angles(const VectorField& field) {
  AngleField out{field.grid, std::vector<float>(field.u.size())};
  for (std::size_t k = 0; k < field.u.size(); ++k) out.phi[k] = vector_angle(field.u[k], field.v[k]);
  return out;
}

}  // namespace twa
