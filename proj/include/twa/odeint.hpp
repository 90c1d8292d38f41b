#pragma once

// Fixed-step integration, finite-difference velocities and scattered-to-grid
// interpolation: the route from time series and point clouds to rasters.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "twa/error.hpp"
#include "twa/raster.hpp"
#include "twa/rng.hpp"
#include "twa/systemzoo.hpp"

namespace twa {

inline constexpr double kDivergenceBound = 1e9;

using Rhs = std::function<void(std::span<const double>, std::span<double>)>;

struct Trajectory {
  double dt = 0.1;
  std::vector<double> times;
  std::vector<std::vector<double>> states;

  std::size_t size() const { return states.size(); }
  std::vector<double> coordinate(std::size_t d) const {
    std::vector<double> out(states.size());
    for (std::size_t k = 0; k < states.size(); ++k) out[k] = states[k][d];
    return out;
  }
};

// Thrown on divergence; carries the finite prefix.
class IntegrationError : public Error {
 public:
  IntegrationError(Trajectory prefix, const std::string& what)
      : Error(ErrorCode::NonFiniteState, what), prefix_(std::move(prefix)) {}
  const Trajectory& prefix() const { return prefix_; }

 private:
  Trajectory prefix_;
};

inline std::size_t step_count(double dt, double horizon) {
  return static_cast<std::size_t>(std::floor(horizon / dt + 1e-9));
}

// Classic RK4 with floor(T/dt)+1 states.
inline Trajectory integrate(const Rhs& rhs, std::vector<double> x0, double dt, double horizon) {
  if (!(dt > 0) || !(horizon >= dt)) throw Error(ErrorCode::Config, "integrate needs dt > 0 and T >= dt");
  const std::size_t n = x0.size();
  const std::size_t steps = step_count(dt, horizon);
  Trajectory tr;
  tr.dt = dt;
  tr.times.reserve(steps + 1);
  tr.states.reserve(steps + 1);
  tr.times.push_back(0.0);
  tr.states.push_back(x0);
  std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n), x = std::move(x0);
  for (std::size_t s = 1; s <= steps; ++s) {
    rhs(x, k1);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * dt * k1[i];
    rhs(tmp, k2);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * dt * k2[i];
    rhs(tmp, k3);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + dt * k3[i];
    rhs(tmp, k4);
    for (std::size_t i = 0; i < n; ++i) x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    for (double v : x) {
      if (!std::isfinite(v) || std::abs(v) > kDivergenceBound) {
        throw IntegrationError(std::move(tr), "state diverged at step " + std::to_string(s));
      }
    }
    tr.times.push_back(static_cast<double>(s) * dt);
    tr.states.push_back(x);
  }
  return tr;
}

inline Rhs system_rhs(const SystemSpec& s) {
  if (s.name == SystemName::Repressilator) {
    const double alpha = s.params[0], beta = s.params[1];
    return [alpha, beta](std::span<const double> x, std::span<double> out) {
      repressilator_rhs(alpha, beta, x, out);
    };
  }
  return [s](std::span<const double> x, std::span<double> out) {
    const Vec2 v = eval_rhs2(s, x[0], x[1]);
    out[0] = v[0];
    out[1] = v[1];
  };
}

// Dynamics read off a raster by clamped bilinear interpolation.
inline Rhs raster_rhs(const VectorField& field) {
  return [&field](std::span<const double> x, std::span<double> out) {
    const Vec2 v = field.sample(x[0], x[1]);
    out[0] = v[0];
    out[1] = v[1];
  };
}

struct ScatteredVelocities {
  std::vector<Vec2> points;
  std::vector<Vec2> velocities;

  std::size_t size() const { return points.size(); }
};

inline ScatteredVelocities estimate_velocities(const Trajectory& tr, std::array<int, 2> dims) {
  if (tr.size() < 2) throw Error(ErrorCode::TooShort, "velocity estimate needs >= 2 states");
  ScatteredVelocities out;
  for (std::size_t k = 0; k + 1 < tr.size(); ++k) {
    const auto& a = tr.states[k];
    const auto& b = tr.states[k + 1];
    out.points.push_back({a[dims[0]], a[dims[1]]});
    out.velocities.push_back({(b[dims[0]] - a[dims[0]]) / tr.dt, (b[dims[1]] - a[dims[1]]) / tr.dt});
  }
  return out;
}

// Bounding box of the samples padded by `pad` of its size on every side.
inline GridSpec grid_for_scattered(const ScatteredVelocities& s, int size = kDefaultGridSize,
                                   double pad = 0.05) {
  if (s.size() == 0) throw Error(ErrorCode::TooShort, "no scattered samples");
  double x0 = s.points[0][0], x1 = x0, y0 = s.points[0][1], y1 = y0;
  for (const auto& p : s.points) {
    x0 = std::min(x0, p[0]);
    x1 = std::max(x1, p[0]);
    y0 = std::min(y0, p[1]);
    y1 = std::max(y1, p[1]);
  }
  const double wx = std::max(x1 - x0, 1e-6), wy = std::max(y1 - y0, 1e-6);
  return GridSpec{size, size, {x0 - pad * wx, x1 + pad * wx}, {y0 - pad * wy, y1 + pad * wy}};
}

// k-nearest inverse-distance weighting. Neighbors are ordered by distance,
// then by sample contents, so the result does not depend on sample order.
inline VectorField interpolate_scattered(const ScatteredVelocities& s, const GridSpec& grid,
                                         int k = 8, double power = 2.0) {
  if (s.size() == 0) throw Error(ErrorCode::TooShort, "interpolate_scattered needs >= 1 sample");
  if (s.points.size() != s.velocities.size()) throw Error(ErrorCode::ShapeMismatch, "points/velocities");
  const std::size_t n = s.size();
  const std::size_t kk = std::min<std::size_t>(static_cast<std::size_t>(std::max(k, 1)), n);
  std::vector<std::size_t> order(n);
  std::vector<double> dist(n);
  auto key = [&](std::size_t i) {
    return std::make_tuple(dist[i], s.points[i][0], s.points[i][1], s.velocities[i][0],
                           s.velocities[i][1], i);
  };
  return rasterize_fn(grid, [&](double x, double y) -> Vec2 {
    for (std::size_t i = 0; i < n; ++i) dist[i] = std::hypot(s.points[i][0] - x, s.points[i][1] - y);
    std::iota(order.begin(), order.end(), 0);
    std::partial_sort(order.begin(), order.begin() + kk, order.end(),
                      [&](std::size_t a, std::size_t b) { return key(a) < key(b); });
    if (dist[order[0]] == 0.0) return s.velocities[order[0]];
    double wsum = 0.0, ux = 0.0, uy = 0.0;
    for (std::size_t r = 0; r < kk; ++r) {
      const std::size_t i = order[r];
      const double w = 1.0 / std::pow(dist[i], power);
      wsum += w;
      ux += w * s.velocities[i][0];
      uy += w * s.velocities[i][1];
    }
    return {ux / wsum, uy / wsum};
  });
}

struct RepressilatorSampling {
  int n_cells = 100;
  double noise_sigma = 0.5;
  double dt = 0.1;
  double horizon = 50.0;
};

inline const std::vector<double>& repressilator_initial_state() {
  static const std::vector<double> x0{2.11, 2.28, 1.57, 1.71, 1.07, 1.14};
  return x0;
}

// Protein plane (p_TetR, p_LacI).
inline constexpr std::array<int, 2> kTetRLacIPlane{3, 1};

// Simulates one population: trajectory from the fixed initial state, cells
// sampled along it, state noise, model velocities at the noisy states.
inline ScatteredVelocities simulate_repressilator_sample(double alpha, double beta, std::uint64_t seed,
                                                         const RepressilatorSampling& o = {}) {
  const SystemSpec sys = make_system(SystemName::Repressilator, {alpha, beta});
  const Trajectory tr = integrate(system_rhs(sys), repressilator_initial_state(), o.dt, o.horizon);
  Rng rng(seed);
  std::vector<std::size_t> all(tr.size());
  std::iota(all.begin(), all.end(), 0);
  std::vector<std::size_t> picked;
  const std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(o.n_cells), tr.size());
  std::sample(all.begin(), all.end(), std::back_inserter(picked), n, rng);
  std::normal_distribution<double> noise(0.0, 1.0);
  ScatteredVelocities out;
  std::vector<double> state(6), vel(6);
  for (std::size_t idx : picked) {
    for (int d = 0; d < 6; ++d) state[d] = tr.states[idx][d] + o.noise_sigma * noise(rng);
    repressilator_rhs(alpha, beta, state, vel);
    out.points.push_back({state[kTetRLacIPlane[0]], state[kTetRLacIPlane[1]]});
    out.velocities.push_back({vel[kTetRLacIPlane[0]], vel[kTetRLacIPlane[1]]});
  }
  return out;
}

// CSV with header x,y,vx,vy.
inline ScatteredVelocities parse_scattered_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::Io, "empty CSV");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
  if (line != "x,y,vx,vy") throw Error(ErrorCode::Io, "CSV header must be x,y,vx,vy, got '" + line + "'");
  ScatteredVelocities out;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    double v[4];
    for (int c = 0; c < 4; ++c) {
      if (!std::getline(ss, cell, ',')) throw Error(ErrorCode::Io, "CSV row " + std::to_string(row) + ": too few fields");
      try {
        std::size_t used = 0;
        v[c] = std::stod(cell, &used);
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw Error(ErrorCode::Io, "CSV row " + std::to_string(row) + ": bad number '" + cell + "'");
      }
      if (!std::isfinite(v[c])) throw Error(ErrorCode::NonFiniteInput, "CSV row " + std::to_string(row));
    }
    if (std::getline(ss, cell, ',')) throw Error(ErrorCode::Io, "CSV row " + std::to_string(row) + ": too many fields");
    out.points.push_back({v[0], v[1]});
    out.velocities.push_back({v[2], v[3]});
  }
  if (out.size() == 0) throw Error(ErrorCode::TooShort, "CSV has no rows");
  return out;
}

inline ScatteredVelocities read_scattered_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  return parse_scattered_csv(in);
}

}  // namespace twa
