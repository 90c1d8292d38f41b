#pragma once

// Parametric planar systems with a supercritical (or subcritical) Hopf
// bifurcation, their ground-truth regime labels and boundary geometry.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "twa/error.hpp"
#include "twa/rng.hpp"

namespace twa {

enum class SystemName {
  SO,
  SupercriticalHopf,
  LienardPoly,
  LienardSigmoid,
  VanDerPol,
  BZReaction,
  Selkov,
  SubcriticalHopf,
  Repressilator,
};

enum class DynClass : std::uint8_t { PointAttractor = 0, PeriodicAttractor = 1 };

using Vec2 = std::array<double, 2>;

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double width() const { return hi - lo; }
  bool contains(double x) const { return x >= lo && x <= hi; }
  bool operator==(const Interval&) const = default;
};

struct ParamRange {
  double lo;
  double hi;
  bool open = false;  // (lo, hi) instead of [lo, hi]

  bool contains(double x) const { return open ? (x > lo && x < hi) : (x >= lo && x <= hi); }
};

struct SystemSpec {
  SystemName name = SystemName::SO;
  std::vector<double> params;
  std::vector<Interval> extent;
  int dim = 2;
};

using Polyline = std::vector<Vec2>;

namespace zoo {

// Fixed leak rate and Hill coefficient of the repressilator.
inline constexpr double kRepressilatorLeak = 0.2;
inline constexpr double kRepressilatorHill = 2.0;
inline constexpr int kSelkovBranchPoints = 512;
inline constexpr int kBZCurvePoints = 512;

inline constexpr std::array<SystemName, 7> kLabeledSystems = {
    SystemName::SO,         SystemName::SupercriticalHopf, SystemName::LienardPoly,
    SystemName::LienardSigmoid, SystemName::VanDerPol,     SystemName::BZReaction,
    SystemName::Selkov};

}  // namespace zoo

inline std::string_view system_id(SystemName n) {
  switch (n) {
    case SystemName::SO: return "simple_oscillator";
    case SystemName::SupercriticalHopf: return "suphopf";
    case SystemName::LienardPoly: return "lienard_poly";
    case SystemName::LienardSigmoid: return "lienard_sigmoid";
    case SystemName::VanDerPol: return "vanderpol";
    case SystemName::BZReaction: return "bzreaction";
    case SystemName::Selkov: return "selkov";
    case SystemName::SubcriticalHopf: return "subhopf";
    case SystemName::Repressilator: return "repressilator";
  }
  return "";
}

inline SystemName parse_system(std::string_view id) {
  for (auto n : {SystemName::SO, SystemName::SupercriticalHopf, SystemName::LienardPoly,
                 SystemName::LienardSigmoid, SystemName::VanDerPol, SystemName::BZReaction,
                 SystemName::Selkov, SystemName::SubcriticalHopf, SystemName::Repressilator}) {
    if (system_id(n) == id) return n;
  }
  throw Error(ErrorCode::UnknownSystem, std::string(id));
}

inline std::vector<std::string> param_names(SystemName n) {
  switch (n) {
    case SystemName::SO: return {"a", "omega"};
    case SystemName::SupercriticalHopf: return {"mu", "omega", "b"};
    case SystemName::LienardPoly: return {"a", "c"};
    case SystemName::LienardSigmoid: return {"a", "b"};
    case SystemName::VanDerPol: return {"mu"};
    case SystemName::BZReaction: return {"a", "b"};
    case SystemName::Selkov: return {"a", "b"};
    case SystemName::SubcriticalHopf: return {"mu", "omega", "b"};
    case SystemName::Repressilator: return {"alpha", "beta"};
  }
  return {};
}

inline std::vector<ParamRange> param_ranges(SystemName n) {
  switch (n) {
    case SystemName::SO: return {{-0.5, 0.5}, {-1.0, 1.0}};
    case SystemName::SupercriticalHopf: return {{-1.0, 1.0}, {-1.0, 1.0}, {-1.0, 1.0}};
    case SystemName::LienardPoly: return {{0.0, 1.0}, {-1.0, 1.0}};
    case SystemName::LienardSigmoid: return {{0.0, 1.0}, {-1.0, 1.0}};
    case SystemName::VanDerPol: return {{-1.0, 1.0}};
    case SystemName::BZReaction: return {{2.0, 19.0}, {2.0, 6.0}};
    case SystemName::Selkov: return {{0.01, 0.11}, {0.02, 1.2}};
    case SystemName::SubcriticalHopf: return {{-0.5, 0.5}, {-1.0, 1.0}, {-1.0, 1.0}};
    case SystemName::Repressilator: return {{0.0, 30.0, true}, {0.0, 10.0, true}};
  }
  return {};
}

inline std::vector<Interval> phase_extent(SystemName n) {
  switch (n) {
    case SystemName::SO:
    case SystemName::SupercriticalHopf: return {{-1, 1}, {-1, 1}};
    case SystemName::LienardPoly: return {{-4.2, 4.2}, {-4.2, 4.2}};
    case SystemName::LienardSigmoid: return {{-1.5, 1.5}, {-1.5, 1.5}};
    case SystemName::VanDerPol: return {{-3, 3}, {-3, 3}};
    case SystemName::BZReaction: return {{0, 10}, {0, 20}};
    case SystemName::Selkov: return {{0, 3}, {0, 3}};
    // The stable cycle of the subcritical probe reaches r~1.1 at mu=0.3.
    case SystemName::SubcriticalHopf: return {{-1.5, 1.5}, {-1.5, 1.5}};
    case SystemName::Repressilator: return std::vector<Interval>(6, Interval{0.0, 31.0});
  }
  return {};
}

inline int system_dim(SystemName n) { return n == SystemName::Repressilator ? 6 : 2; }

inline SystemSpec make_system(SystemName name, std::vector<double> params) {
  const auto ranges = param_ranges(name);
  const auto names = param_names(name);
  if (params.size() != ranges.size()) {
    throw Error(ErrorCode::ParamOutOfRange,
                std::string(system_id(name)) + " expects " + std::to_string(ranges.size()) +
                    " parameters, got " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!std::isfinite(params[i]) || !ranges[i].contains(params[i])) {
      throw Error(ErrorCode::ParamOutOfRange, std::string(system_id(name)) + " parameter " +
                                                  names[i] + "=" + std::to_string(params[i]));
    }
  }
  return SystemSpec{name, std::move(params), phase_extent(name), system_dim(name)};
}

namespace detail {

// Cartesian form of r' = r*radial(r^2), theta' = angular(r^2).
inline Vec2 polar_rhs(double x, double y, double radial, double angular) {
  return {x * radial - angular * y, y * radial + angular * x};
}

}  // namespace detail

// Planar right-hand side. Pure; no range check on the point.
inline Vec2 eval_rhs2(const SystemSpec& s, double x, double y) {
  const auto& p = s.params;
  switch (s.name) {
    case SystemName::SO: {
      const double r2 = x * x + y * y;
      return detail::polar_rhs(x, y, p[0] - r2, p[1]);
    }
    case SystemName::SupercriticalHopf: {
      const double r2 = x * x + y * y;
      return detail::polar_rhs(x, y, p[0] - r2, p[1] + p[2] * r2);
    }
    case SystemName::SubcriticalHopf: {
      const double r2 = x * x + y * y;
      return detail::polar_rhs(x, y, p[0] + r2 - r2 * r2, p[1] + p[2] * r2);
    }
    case SystemName::LienardPoly:
      return {y, -(p[0] * x + x * x * x) - (p[1] + x * x) * y};
    case SystemName::LienardSigmoid:
      return {y, -(1.0 / (1.0 + std::exp(-p[0] * x)) - 0.5) - (p[1] + x * x) * y};
    case SystemName::VanDerPol:
      return {y, p[0] * y - x - x * x * y};
    case SystemName::BZReaction: {
      const double q = 1.0 + x * x;
      return {p[0] - x - 4.0 * x * y / q, p[1] * x * (1.0 - y / q)};
    }
    case SystemName::Selkov:
      return {-x + p[0] * y + x * x * y, p[1] - p[0] * y - x * x * y};
    case SystemName::Repressilator:
      break;
  }
  throw Error(ErrorCode::UnsupportedSystem, "eval_rhs2 needs a planar system");
}

// State order for the repressilator: (m_LacI, p_LacI, m_TetR, p_TetR, m_cI, p_cI).
// LacI is repressed by cI, TetR by LacI, cI by TetR.
inline void repressilator_rhs(double alpha, double beta, std::span<const double> s,
                              std::span<double> out) {
  constexpr double n = zoo::kRepressilatorHill;
  constexpr double a0 = zoo::kRepressilatorLeak;
  constexpr int repressor[3] = {2, 0, 1};  // gene index of the repressing protein
  for (int g = 0; g < 3; ++g) {
    const double m = s[2 * g];
    const double pr = s[2 * g + 1];
    const double pj = s[2 * repressor[g] + 1];
    out[2 * g] = -m + alpha / (1.0 + std::pow(pj, n)) + a0;
    out[2 * g + 1] = -beta * (pr - m);
  }
}

inline std::vector<double> eval_rhs(const SystemSpec& s, std::span<const double> point) {
  if (point.size() != static_cast<std::size_t>(s.dim)) {
    throw Error(ErrorCode::ShapeMismatch, "point has " + std::to_string(point.size()) +
                                              " components, system dim is " +
                                              std::to_string(s.dim));
  }
  for (double v : point) {
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteInput, "eval_rhs");
  }
  if (s.name == SystemName::Repressilator) {
    std::vector<double> out(6);
    repressilator_rhs(s.params[0], s.params[1], point, out);
    return out;
  }
  const Vec2 v = eval_rhs2(s, point[0], point[1]);
  return {v[0], v[1]};
}

// Fixed point known in closed form (all planar zoo systems have one).
inline std::optional<Vec2> analytic_fixed_point(const SystemSpec& s) {
  switch (s.name) {
    case SystemName::SO:
    case SystemName::SupercriticalHopf:
    case SystemName::SubcriticalHopf:
    case SystemName::LienardPoly:
    case SystemName::LienardSigmoid:
    case SystemName::VanDerPol: return Vec2{0.0, 0.0};
    case SystemName::BZReaction: {
      const double x = s.params[0] / 5.0;
      return Vec2{x, 1.0 + x * x};
    }
    case SystemName::Selkov: {
      const double b = s.params[1];
      return Vec2{b, b / (s.params[0] + b * b)};
    }
    case SystemName::Repressilator: return std::nullopt;
  }
  return std::nullopt;
}

namespace detail {

inline void require_labeled(SystemName n, const char* op) {
  if (n == SystemName::SubcriticalHopf || n == SystemName::Repressilator) {
    throw Error(ErrorCode::UnsupportedSystem, std::string(op) + " for " + std::string(system_id(n)));
  }
}

inline double bz_boundary_b(double a) { return 3.0 * a / 5.0 - 25.0 / a; }

// Selkov Hopf branches: b = sqrt((1 - 2a -+ sqrt(1 - 8a)) / 2), defined for a <= 1/8.
inline std::pair<double, double> selkov_branches(double a) {
  const double s = std::sqrt(std::max(0.0, 1.0 - 8.0 * a));
  return {std::sqrt(std::max(0.0, 0.5 * (1.0 - 2.0 * a - s))),
          std::sqrt(std::max(0.0, 0.5 * (1.0 - 2.0 * a + s)))};
}

inline double point_segment_distance(Vec2 p, Vec2 a, Vec2 b) {
  const double dx = b[0] - a[0], dy = b[1] - a[1];
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0 ? ((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double ex = a[0] + t * dx - p[0], ey = a[1] + t * dy - p[1];
  return std::sqrt(ex * ex + ey * ey);
}

inline double polyline_distance(Vec2 p, const std::vector<Polyline>& curves) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& c : curves) {
    if (c.size() == 1) {
      best = std::min(best, std::hypot(p[0] - c[0][0], p[1] - c[0][1]));
    }
    for (std::size_t i = 0; i + 1 < c.size(); ++i) {
      best = std::min(best, point_segment_distance(p, c[i], c[i + 1]));
    }
  }
  return best;
}

}  // namespace detail

inline DynClass true_label(const SystemSpec& s) {
  detail::require_labeled(s.name, "true_label");
  const auto& p = s.params;
  bool cycle = false;
  switch (s.name) {
    case SystemName::SO: cycle = p[0] > 0; break;
    case SystemName::SupercriticalHopf: cycle = p[0] > 0; break;
    case SystemName::LienardPoly: cycle = p[1] < 0; break;
    case SystemName::LienardSigmoid: cycle = p[1] < 0; break;
    case SystemName::VanDerPol: cycle = p[0] > 0; break;
    case SystemName::BZReaction: cycle = p[1] < detail::bz_boundary_b(p[0]); break;
    case SystemName::Selkov: {
      const auto [lo, hi] = detail::selkov_branches(p[0]);
      cycle = (1.0 - 8.0 * p[0]) > 0 && lo < p[1] && p[1] < hi;
      break;
    }
    default: break;
  }
  return cycle ? DynClass::PeriodicAttractor : DynClass::PointAttractor;
}

// Residual of the equality form of the periodic-attractor condition.
inline double boundary_residual(SystemName n, Vec2 p) {
  detail::require_labeled(n, "boundary_residual");
  switch (n) {
    case SystemName::SO:
    case SystemName::SupercriticalHopf:
    case SystemName::VanDerPol: return std::abs(p[0]);
    case SystemName::LienardPoly:
    case SystemName::LienardSigmoid: return std::abs(p[1]);
    case SystemName::BZReaction: return std::abs(p[1] - detail::bz_boundary_b(p[0]));
    case SystemName::Selkov: {
      const auto [lo, hi] = detail::selkov_branches(p[0]);
      return std::min(std::abs(p[1] - lo), std::abs(p[1] - hi));
    }
    default: break;
  }
  return 0.0;
}

// Boundary in the plane of the first two parameters (a single point for the
// one-parameter Van der Pol system). Linear boundaries are closed segments over
// the sampling range.
inline std::vector<Polyline> boundary_curve(SystemName n, int resolution) {
  detail::require_labeled(n, "boundary_curve");
  if (resolution < 2) throw Error(ErrorCode::Config, "boundary_curve resolution must be >= 2");
  const auto r = param_ranges(n);
  auto linspace = [resolution](double lo, double hi, int i) {
    return lo + (hi - lo) * static_cast<double>(i) / (resolution - 1);
  };
  Polyline line;
  switch (n) {
    case SystemName::SO:
    case SystemName::SupercriticalHopf:
      for (int i = 0; i < resolution; ++i) line.push_back({0.0, linspace(r[1].lo, r[1].hi, i)});
      return {line};
    case SystemName::LienardPoly:
    case SystemName::LienardSigmoid:
      for (int i = 0; i < resolution; ++i) line.push_back({linspace(r[0].lo, r[0].hi, i), 0.0});
      return {line};
    case SystemName::VanDerPol: return {Polyline{{0.0, 0.0}}};
    case SystemName::BZReaction:
      for (int i = 0; i < resolution; ++i) {
        const double a = linspace(r[0].lo, r[0].hi, i);
        line.push_back({a, detail::bz_boundary_b(a)});
      }
      return {line};
    case SystemName::Selkov: {
      // Uniform in s = sqrt(1 - 8a) so the nose at a = 1/8 is resolved.
      Polyline lower, upper;
      for (int i = 0; i < resolution; ++i) {
        const double s = 1.0 - static_cast<double>(i) / (resolution - 1);
        const double a = (1.0 - s * s) / 8.0;
        lower.push_back({a, std::sqrt(0.5 * (1.0 - 2.0 * a - s))});
        upper.push_back({a, std::sqrt(0.5 * (1.0 - 2.0 * a + s))});
      }
      return {lower, upper};
    }
    default: break;
  }
  return {};
}

// Signed L2 distance in (unnormalized) parameter space to the bifurcation
// boundary; positive for periodic attractors.
inline double boundary_distance(const SystemSpec& s) {
  detail::require_labeled(s.name, "boundary_distance");
  const auto& p = s.params;
  double d = 0.0;
  switch (s.name) {
    case SystemName::SO:
    case SystemName::SupercriticalHopf:
    case SystemName::VanDerPol: d = std::abs(p[0]); break;
    case SystemName::LienardPoly:
    case SystemName::LienardSigmoid: d = std::abs(p[1]); break;
    case SystemName::BZReaction:
      d = detail::polyline_distance({p[0], p[1]},
                                    boundary_curve(s.name, zoo::kBZCurvePoints));
      break;
    case SystemName::Selkov:
      d = detail::polyline_distance({p[0], p[1]},
                                    boundary_curve(s.name, zoo::kSelkovBranchPoints));
      break;
    default: break;
  }
  return true_label(s) == DynClass::PeriodicAttractor ? d : -d;
}

inline std::vector<std::vector<double>> sample_params(SystemName n, std::size_t count, Rng& rng) {
  const auto ranges = param_ranges(n);
  std::vector<std::vector<double>> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    std::vector<double> p;
    for (const auto& r : ranges) {
      std::uniform_real_distribution<double> u(r.lo, r.hi);
      double v = u(rng);
      while (!r.contains(v)) v = u(rng);
      p.push_back(v);
    }
    out.push_back(std::move(p));
  }
  return out;
}

// ---- repressilator Hopf window --------------------------------------------

struct RepressilatorWindow {
  double p_hat;  // symmetric fixed-point protein level
  double A;      // linearized repression gain
  double beta1;  // lower Hopf boundary
  double beta2;  // upper Hopf boundary
};

// Solves (p - a0)(1 + p^n) = alpha by bisection.
inline double repressilator_fixed_point(double alpha) {
  constexpr double a0 = zoo::kRepressilatorLeak;
  constexpr double n = zoo::kRepressilatorHill;
  auto g = [&](double p) { return p - alpha / (1.0 + std::pow(p, n)) - a0; };
  double lo = a0, hi = alpha + a0;
  for (int it = 0; it < 200 && hi - lo > 1e-14; ++it) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) > 0 ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

inline RepressilatorWindow repressilator_boundary(double alpha) {
  if (!(alpha > 0)) throw Error(ErrorCode::ParamOutOfRange, "repressilator alpha must be > 0");
  constexpr double n = zoo::kRepressilatorHill;
  const double p = repressilator_fixed_point(alpha);
  const double q = 1.0 + std::pow(p, n);
  const double A = -alpha * n * std::pow(p, n - 1.0) / (q * q);
  const double disc = 9.0 * A * A - 24.0 * A - 48.0;
  if (disc < 0) {
    throw Error(ErrorCode::NoOscillationWindow, "alpha=" + std::to_string(alpha));
  }
  const double base = (3.0 * A * A - 4.0 * A - 8.0) / (4.0 * A + 8.0);
  const double half = A * std::sqrt(disc) / (4.0 * A + 8.0);
  // A < 0, so base + half is the smaller root.
  return {p, A, base + half, base - half};
}

inline DynClass repressilator_label(double alpha, double beta) {
  try {
    const auto w = repressilator_boundary(alpha);
    return (beta > w.beta1 && beta < w.beta2) ? DynClass::PeriodicAttractor
                                              : DynClass::PointAttractor;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::NoOscillationWindow) return DynClass::PointAttractor;
    throw;
  }
}

// Subcritical probe regimes: point below -1/4, bistable in (-1/4, 0), cycle above 0.
enum class SubcriticalRegime { Point, Bistable, Periodic };

inline SubcriticalRegime subcritical_regime(double mu) {
  if (mu < -0.25) return SubcriticalRegime::Point;
  if (mu < 0) return SubcriticalRegime::Bistable;
  return SubcriticalRegime::Periodic;
}

}  // namespace twa
