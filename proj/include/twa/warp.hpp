#pragma once

// Random bounded monotone rational-quadratic spline diffeomorphisms and the
// warped fields g(Y) = f(h^-1(Y)) they induce.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include <json.hpp>

#include "twa/error.hpp"
#include "twa/raster.hpp"
#include "twa/rng.hpp"
#include "twa/systemzoo.hpp"

namespace twa {

struct AugmentConfig {
  double bound = 4.0;  // active interval [-B, B]
  int bins = 5;
  double min_bin_fraction = 1e-3;
  double min_derivative = 1e-3;
  // Pushed-forward fixed point must stay this fraction of the half-width
  // away from the frame edge.
  double frame_margin = 0.05;

  bool operator==(const AugmentConfig&) const = default;
};

inline nlohmann::json to_json(const AugmentConfig& c) {
  return {{"family", "rational_quadratic_spline"},
          {"bound", c.bound},
          {"bins", c.bins},
          {"min_bin_fraction", c.min_bin_fraction},
          {"min_derivative", c.min_derivative},
          {"frame_margin", c.frame_margin},
          {"normalization", "extent_to_active_box"},
          {"raw_distribution", "standard_normal"}};
}

inline AugmentConfig augment_config_from_json(const nlohmann::json& j) {
  AugmentConfig c;
  c.bound = j.value("bound", c.bound);
  c.bins = j.value("bins", c.bins);
  c.min_bin_fraction = j.value("min_bin_fraction", c.min_bin_fraction);
  c.min_derivative = j.value("min_derivative", c.min_derivative);
  c.frame_margin = j.value("frame_margin", c.frame_margin);
  return c;
}

// One monotone rational-quadratic spline on [-B, B], identity outside.
class RQSpline {
 public:
  RQSpline() = default;

  // Raw parameters: K widths, K heights, K-1 interior derivatives. Zero raws
  // give uniform bins with unit derivatives, i.e. the identity.
  RQSpline(std::span<const double> raw_widths, std::span<const double> raw_heights,
           std::span<const double> raw_derivs, double bound, double min_bin_fraction,
           double min_derivative)
      : bound_(bound) {
    const std::size_t k = raw_widths.size();
    if (k == 0 || raw_heights.size() != k || raw_derivs.size() + 1 != k) {
      throw Error(ErrorCode::ShapeMismatch, "spline raw parameter sizes");
    }
    if (!(bound > 0)) throw Error(ErrorCode::Config, "spline bound must be > 0");
    xs_ = knots(raw_widths, min_bin_fraction);
    ys_ = knots(raw_heights, min_bin_fraction);
    ds_.assign(k + 1, 1.0);
    const double ln2 = std::log1p(1.0);
    for (std::size_t i = 0; i + 1 < k; ++i) {
      ds_[i + 1] = 1.0 + (1.0 - min_derivative) * (softplus(raw_derivs[i]) / ln2 - 1.0);
    }
    identity_ = xs_ == ys_ && std::all_of(ds_.begin(), ds_.end(), [](double d) { return d == 1.0; });
  }

  double bound() const { return bound_; }
  bool is_identity() const { return identity_; }
  const std::vector<double>& x_knots() const { return xs_; }
  const std::vector<double>& y_knots() const { return ys_; }
  const std::vector<double>& derivatives() const { return ds_; }

  double forward(double x) const {
    if (identity_ || !(x > -bound_ && x < bound_)) return x;
    const std::size_t k = bin_of(xs_, x);
    const double w = xs_[k + 1] - xs_[k], h = ys_[k + 1] - ys_[k];
    const double s = h / w;
    const double xi = (x - xs_[k]) / w;
    const double t = xi * (1.0 - xi);
    const double num = h * (s * xi * xi + ds_[k] * t);
    const double den = s + (ds_[k + 1] + ds_[k] - 2.0 * s) * t;
    return ys_[k] + num / den;
  }

  double inverse(double y) const {
    if (identity_ || !(y > -bound_ && y < bound_)) return y;
    const std::size_t k = bin_of(ys_, y);
    const double w = xs_[k + 1] - xs_[k], h = ys_[k + 1] - ys_[k];
    const double s = h / w;
    const double dy = y - ys_[k];
    const double c2 = ds_[k + 1] + ds_[k] - 2.0 * s;
    const double a = h * (s - ds_[k]) + dy * c2;
    const double b = h * ds_[k] - dy * c2;
    const double c = -s * dy;
    const double disc = std::max(0.0, b * b - 4.0 * a * c);
    const double xi = (2.0 * c) / (-b - std::sqrt(disc));
    return xs_[k] + std::clamp(xi, 0.0, 1.0) * w;
  }

  // dy/dx inside the active box (1 outside).
  double derivative(double x) const {
    if (identity_ || !(x > -bound_ && x < bound_)) return 1.0;
    const std::size_t k = bin_of(xs_, x);
    const double w = xs_[k + 1] - xs_[k], h = ys_[k + 1] - ys_[k];
    const double s = h / w;
    const double xi = (x - xs_[k]) / w;
    const double t = xi * (1.0 - xi);
    const double den = s + (ds_[k + 1] + ds_[k] - 2.0 * s) * t;
    const double num = s * s * (ds_[k + 1] * xi * xi + 2.0 * s * t + ds_[k] * (1 - xi) * (1 - xi));
    return num / (den * den);
  }

 private:
  static double softplus(double z) { return z > 30 ? z : std::log1p(std::exp(z)); }

  std::vector<double> knots(std::span<const double> raw, double floor) const {
    const std::size_t k = raw.size();
    const double mx = *std::max_element(raw.begin(), raw.end());
    std::vector<double> e(k);
    double sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) sum += (e[i] = std::exp(raw[i] - mx));
    std::vector<double> out(k + 1);
    out[0] = -bound_;
    double acc = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      acc += floor + (1.0 - floor * static_cast<double>(k)) * (e[i] / sum);
      out[i + 1] = -bound_ + 2.0 * bound_ * acc;
    }
    out[k] = bound_;
    return out;
  }

  static std::size_t bin_of(const std::vector<double>& knots, double x) {
    const auto it = std::upper_bound(knots.begin() + 1, knots.end() - 1, x);
    return static_cast<std::size_t>(it - knots.begin()) - 1;
  }

  double bound_ = 4.0;
  std::vector<double> xs_{-4.0, 4.0};
  std::vector<double> ys_{-4.0, 4.0};
  std::vector<double> ds_{1.0, 1.0};
  bool identity_ = true;
};

// Per-dimension spline map h: R^2 -> R^2.
struct Diffeo {
  std::array<RQSpline, 2> dims;
  std::uint64_t id = 0;

  double bound() const { return dims[0].bound(); }
  bool is_identity() const { return dims[0].is_identity() && dims[1].is_identity(); }
  Vec2 forward(Vec2 p) const { return {dims[0].forward(p[0]), dims[1].forward(p[1])}; }
  Vec2 inverse(Vec2 p) const { return {dims[0].inverse(p[0]), dims[1].inverse(p[1])}; }

  static Diffeo identity(double bound = 4.0, int bins = 5) {
    std::vector<double> z(static_cast<std::size_t>(bins), 0.0);
    RQSpline s(z, z, std::span<const double>(z).first(bins - 1), bound, 1e-3, 1e-3);
    return Diffeo{{s, s}, 0};
  }
};

inline Diffeo sample_diffeo(Rng& rng, const AugmentConfig& cfg = {}) {
  if (!(cfg.bound > 0) || cfg.bins < 1) throw Error(ErrorCode::Config, "diffeo needs B > 0, K >= 1");
  std::normal_distribution<double> n01(0.0, 1.0);
  const auto k = static_cast<std::size_t>(cfg.bins);
  Diffeo d;
  for (auto& dim : d.dims) {
    std::vector<double> w(k), h(k), dv(k - 1);
    for (auto& x : w) x = n01(rng);
    for (auto& x : h) x = n01(rng);
    for (auto& x : dv) x = n01(rng);
    dim = RQSpline(w, h, dv, cfg.bound, cfg.min_bin_fraction, cfg.min_derivative);
  }
  return d;
}

inline Diffeo sample_diffeo_seeded(std::uint64_t seed, const AugmentConfig& cfg = {}) {
  Rng rng(seed);
  Diffeo d = sample_diffeo(rng, cfg);
  d.id = seed;
  return d;
}

// Affine map between a phase-space interval and the spline's active box.
struct BoxFrame {
  Interval extent;
  double bound;

  double to_box(double x) const { return -bound + 2.0 * bound * (x - extent.lo) / extent.width(); }
  double from_box(double z) const { return extent.lo + (z + bound) * extent.width() / (2.0 * bound); }
};

// Phase-space coordinates X = h^-1(Y) for lattice coordinates Y.
inline Vec2 pull_back(const Diffeo& d, const std::array<BoxFrame, 2>& frames, Vec2 y) {
  Vec2 x = y;
  for (int k = 0; k < 2; ++k) {
    if (d.dims[k].is_identity()) continue;
    x[k] = frames[k].from_box(d.dims[k].inverse(frames[k].to_box(y[k])));
  }
  return x;
}

inline Vec2 push_forward(const Diffeo& d, const std::array<BoxFrame, 2>& frames, Vec2 x) {
  Vec2 y = x;
  for (int k = 0; k < 2; ++k) {
    if (d.dims[k].is_identity()) continue;
    y[k] = frames[k].from_box(d.dims[k].forward(frames[k].to_box(x[k])));
  }
  return y;
}

inline std::array<BoxFrame, 2> frames_for(const SystemSpec& s, const Diffeo& d) {
  return {BoxFrame{s.extent.at(0), d.bound()}, BoxFrame{s.extent.at(1), d.bound()}};
}

inline VectorField warp_field(const SystemSpec& s, const Diffeo& d, const GridSpec& grid) {
  if (s.dim != 2 || !same_extent(grid, s)) {
    throw Error(ErrorCode::ExtentMismatch, "warp grid must match the system extent");
  }
  const auto frames = frames_for(s, d);
  VectorField out = rasterize_fn(grid, [&](double x, double y) {
    const Vec2 src = pull_back(d, frames, {x, y});
    return eval_rhs2(s, src[0], src[1]);
  });
  out.provenance = Provenance{std::string(system_id(s.name)), s.params, d.id, 0.0};
  return out;
}

inline bool fixed_point_in_frame(const SystemSpec& s, const Diffeo& d, double margin = 0.05) {
  const auto fp = analytic_fixed_point(s);
  if (!fp || s.dim != 2) {
    throw Error(ErrorCode::UnsupportedSystem,
                "no analytic fixed point for " + std::string(system_id(s.name)));
  }
  const auto frames = frames_for(s, d);
  const double limit = d.bound() * (1.0 - margin);
  for (int k = 0; k < 2; ++k) {
    const double z = d.dims[k].forward(frames[k].to_box((*fp)[k]));
    if (!(std::abs(z) <= limit)) return false;
  }
  return true;
}

}  // namespace twa
