#pragma once

// Classical point/cycle detectors: critical-point topology on the raster,
// maximal Lyapunov exponent of an integrated trajectory, and a linear
// classifier over cubic-polynomial fit coefficients.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "twa/error.hpp"
#include "twa/odeint.hpp"
#include "twa/raster.hpp"
#include "twa/rng.hpp"
#include "twa/systemzoo.hpp"

namespace twa {

// ---- critical points ---------------------------------------------------------

enum class CriticalKind { AttractingNode, AttractingFocus, RepellingNode, RepellingFocus, Saddle, Center, Degenerate };

inline const char* to_string(CriticalKind k) {
  switch (k) {
    case CriticalKind::AttractingNode: return "attracting_node";
    case CriticalKind::AttractingFocus: return "attracting_focus";
    case CriticalKind::RepellingNode: return "repelling_node";
    case CriticalKind::RepellingFocus: return "repelling_focus";
    case CriticalKind::Saddle: return "saddle";
    case CriticalKind::Center: return "center";
    case CriticalKind::Degenerate: return "degenerate";
  }
  return "?";
}

using Mat2 = std::array<std::array<double, 2>, 2>;

struct CriticalPoint {
  Vec2 position{};
  Mat2 jacobian{};
  CriticalKind kind = CriticalKind::Degenerate;
};

inline constexpr double kDegenerateDet = 1e-10;
inline constexpr double kCenterTrace = 1e-12;

inline CriticalKind classify_jacobian(const Mat2& J) {
  const double tr = J[0][0] + J[1][1];
  const double det = J[0][0] * J[1][1] - J[0][1] * J[1][0];
  double scale = 0.0;
  for (const auto& row : J) {
    for (double x : row) scale = std::max(scale, std::abs(x));
  }
  if (scale == 0.0 || std::abs(det) < kDegenerateDet * scale * scale) return CriticalKind::Degenerate;
  if (det < 0) return CriticalKind::Saddle;
  if (std::abs(tr) <= kCenterTrace * scale) return CriticalKind::Center;
  const bool node = tr * tr - 4.0 * det >= 0.0;
  if (tr < 0) return node ? CriticalKind::AttractingNode : CriticalKind::AttractingFocus;
  return node ? CriticalKind::RepellingNode : CriticalKind::RepellingFocus;
}

inline bool is_repelling(CriticalKind k) { return k == CriticalKind::RepellingNode || k == CriticalKind::RepellingFocus; }

// Central differences of the bilinear interpolant, one lattice spacing each way.
inline Mat2 raster_jacobian(const VectorField& f, const Vec2& p) {
  const double hx = f.grid.dx(), hy = f.grid.dy();
  const Vec2 xp = f.sample(p[0] + hx, p[1]), xm = f.sample(p[0] - hx, p[1]);
  const Vec2 yp = f.sample(p[0], p[1] + hy), ym = f.sample(p[0], p[1] - hy);
  return {{{(xp[0] - xm[0]) / (2 * hx), (yp[0] - ym[0]) / (2 * hy)},
           {(xp[1] - xm[1]) / (2 * hx), (yp[1] - ym[1]) / (2 * hy)}}};
}

namespace detail {

inline bool changes_sign(double a, double b, double c, double d) {
  const double lo = std::min({a, b, c, d}), hi = std::max({a, b, c, d});
  return lo <= 0.0 && hi >= 0.0 && !(lo == 0.0 && hi == 0.0);
}

// Newton on the bilinear patch of cell (i, j) in local coordinates s, t in [0,1].
inline std::optional<Vec2> refine_in_cell(const VectorField& f, int i, int j) {
  const std::size_t a = f.index(i, j), b = f.index(i, j + 1), c = f.index(i + 1, j), d = f.index(i + 1, j + 1);
  auto interp = [&](const std::vector<double>& w, double s, double t) {
    return (1 - s) * (1 - t) * w[a] + s * (1 - t) * w[b] + (1 - s) * t * w[c] + s * t * w[d];
  };
  auto ds = [&](const std::vector<double>& w, double t) { return (1 - t) * (w[b] - w[a]) + t * (w[d] - w[c]); };
  auto dt = [&](const std::vector<double>& w, double s) { return (1 - s) * (w[c] - w[a]) + s * (w[d] - w[b]); };
  double s = 0.5, t = 0.5;
  for (int it = 0; it < 20; ++it) {
    const double fu = interp(f.u, s, t), fv = interp(f.v, s, t);
    const double j00 = ds(f.u, t), j01 = dt(f.u, s), j10 = ds(f.v, t), j11 = dt(f.v, s);
    const double det = j00 * j11 - j01 * j10;
    if (det == 0.0 || !std::isfinite(det)) return std::nullopt;
    const double step_s = (j11 * fu - j01 * fv) / det, step_t = (-j10 * fu + j00 * fv) / det;
    s -= step_s;
    t -= step_t;
    if (!std::isfinite(s) || !std::isfinite(t)) return std::nullopt;
    if (std::abs(step_s) < 1e-6 && std::abs(step_t) < 1e-6) break;
  }
  constexpr double slack = 1e-6;
  if (s < -slack || s > 1 + slack || t < -slack || t > 1 + slack) return std::nullopt;
  const double fu = interp(f.u, s, t), fv = interp(f.v, s, t);
  double mag = 0.0;
  for (std::size_t k : {a, b, c, d}) mag = std::max({mag, std::abs(f.u[k]), std::abs(f.v[k])});
  if (std::hypot(fu, fv) > 1e-6 * std::max(mag, 1e-300)) return std::nullopt;
  return Vec2{f.grid.x_at(j) + s * f.grid.dx(), f.grid.y_at(i) + t * f.grid.dy()};
}

}  // namespace detail

inline std::vector<CriticalPoint> find_critical_points(const VectorField& f) {
  std::vector<CriticalPoint> out;
  const int H = f.grid.height, W = f.grid.width;
  const double hx = f.grid.dx(), hy = f.grid.dy();
  for (int i = 0; i + 1 < H; ++i) {
    for (int j = 0; j + 1 < W; ++j) {
      const std::size_t a = f.index(i, j), b = f.index(i, j + 1), c = f.index(i + 1, j), d = f.index(i + 1, j + 1);
      if (!detail::changes_sign(f.u[a], f.u[b], f.u[c], f.u[d])) continue;
      if (!detail::changes_sign(f.v[a], f.v[b], f.v[c], f.v[d])) continue;
      const auto p = detail::refine_in_cell(f, i, j);
      if (!p) continue;
      const bool dup = std::any_of(out.begin(), out.end(), [&](const CriticalPoint& q) {
        return std::abs(q.position[0] - (*p)[0]) < 0.5 * hx && std::abs(q.position[1] - (*p)[1]) < 0.5 * hy;
      });
      if (dup) continue;
      CriticalPoint cp;
      cp.position = *p;
      cp.jacobian = raster_jacobian(f, *p);
      cp.kind = classify_jacobian(cp.jacobian);
      out.push_back(cp);
    }
  }
  return out;
}

inline DynClass classify_critical(const VectorField& f) {
  for (const auto& cp : find_critical_points(f)) {
    if (is_repelling(cp.kind)) return DynClass::PeriodicAttractor;
  }
  return DynClass::PointAttractor;
}

// ---- Lyapunov ----------------------------------------------------------------

struct LyapunovOpts {
  int emb_dim = 4;
  int lag = 0;                // 0: first zero crossing of the autocorrelation, else fallback
  int fallback_lag = 10;
  int min_tsep = 0;           // 0: ceil(1 / mean frequency)
  int trajectory_len = 30;    // divergence-curve length in steps
  double fit_fraction = 1.0 / 3.0;
  double dt = 0.1;
};

inline nlohmann::json to_json(const LyapunovOpts& o) {
  return {{"emb_dim", o.emb_dim},       {"lag", o.lag == 0 ? nlohmann::json("auto") : nlohmann::json(o.lag)},
          {"fallback_lag", o.fallback_lag}, {"min_tsep", o.min_tsep == 0 ? nlohmann::json("auto") : nlohmann::json(o.min_tsep)},
          {"trajectory_len", o.trajectory_len}, {"fit_fraction", o.fit_fraction}, {"dt", o.dt}};
}

inline int autocorr_lag(std::span<const double> x, int fallback) {
  const std::size_t n = x.size();
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  double c0 = 0.0;
  for (double v : x) c0 += (v - mean) * (v - mean);
  if (c0 <= 0.0) return fallback;
  for (std::size_t k = 1; k < n / 2; ++k) {
    double ck = 0.0;
    for (std::size_t i = 0; i + k < n; ++i) ck += (x[i] - mean) * (x[i + k] - mean);
    if (ck <= 0.0) return static_cast<int>(k);
  }
  return fallback;
}

// Power-weighted mean frequency in cycles per sample.
inline double mean_frequency(std::span<const double> x) {
  const std::size_t n = x.size();
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  double num = 0.0, den = 0.0;
  for (std::size_t k = 1; k <= n / 2; ++k) {
    std::complex<double> acc = 0.0;
    const double w = -2.0 * M_PI * static_cast<double>(k) / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) acc += (x[i] - mean) * std::polar(1.0, w * static_cast<double>(i));
    const double p = std::norm(acc);
    num += p * static_cast<double>(k) / static_cast<double>(n);
    den += p;
  }
  return den > 0.0 ? num / den : 0.0;
}

inline double least_squares_slope(std::span<const double> xs, std::span<const double> ys) {
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  return sxx > 0.0 ? sxy / sxx : 0.0;
}

// Rosenstein's estimate of the maximal Lyapunov exponent, per unit time.
inline double lyapunov_max(std::span<const double> series, const LyapunovOpts& o = {}) {
  if (series.size() < 200) throw Error(ErrorCode::TooShort, "lyapunov_max needs >= 200 samples");
  for (double v : series) {
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteInput, "lyapunov_max: non-finite series");
  }
  int lag = o.lag > 0 ? o.lag : autocorr_lag(series, o.fallback_lag);
  // An automatic lag larger than a quarter of the series falls back.
  if (o.lag <= 0 && (o.emb_dim - 1) * lag > static_cast<int>(series.size()) / 4) lag = o.fallback_lag;
  int tsep = o.min_tsep;
  if (tsep <= 0) {
    const double f = mean_frequency(series);
    tsep = f > 0.0 ? static_cast<int>(std::ceil(1.0 / f)) : 0;
  }
  const int n = static_cast<int>(series.size());
  const int m = n - (o.emb_dim - 1) * lag;
  const int L = o.trajectory_len;
  const int usable = m - L;
  if (usable < 2) throw Error(ErrorCode::TooShort, "series too short for the embedding");
  tsep = std::min(tsep, usable / 2);

  auto dist = [&](int a, int b) {
    double s = 0.0;
    for (int d = 0; d < o.emb_dim; ++d) {
      const double t = series[a + d * lag] - series[b + d * lag];
      s += t * t;
    }
    return std::sqrt(s);
  };
  std::vector<int> nb(usable, -1);
  for (int i = 0; i < usable; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (int j = 0; j < usable; ++j) {
      if (std::abs(i - j) <= tsep) continue;
      const double d = dist(i, j);
      if (d < best) {
        best = d;
        nb[i] = j;
      }
    }
  }
  std::vector<double> curve, steps;
  for (int k = 0; k < L; ++k) {
    double sum = 0.0;
    int cnt = 0;
    for (int i = 0; i < usable; ++i) {
      if (nb[i] < 0) continue;
      const double d = dist(i + k, nb[i] + k);
      if (d > 0.0) {
        sum += std::log(d);
        ++cnt;
      }
    }
    if (cnt > 0) {
      curve.push_back(sum / cnt);
      steps.push_back(static_cast<double>(k));
    }
  }
  const auto n_fit = static_cast<std::size_t>(std::max(2.0, std::floor(o.fit_fraction * L)));
  if (curve.size() < n_fit) throw Error(ErrorCode::NoValidNeighbors, "no neighbors at nonzero distance");
  const double slope = least_squares_slope(std::span(steps).first(n_fit), std::span(curve).first(n_fit));
  return slope / o.dt;
}

struct LyapunovProtocol {
  double dt = 0.1;
  double horizon = 100.0;
  int coordinate = 0;          // scalar projection fed to the estimator
  double start_fraction = 0.8; // start drawn uniformly from the middle 80% of the extent
  LyapunovOpts estimator{};
};

inline std::vector<double> random_interior_start(const std::array<Interval, 2>& ext, double fraction, Rng& rng) {
  std::vector<double> x0(2);
  for (int d = 0; d < 2; ++d) {
    const double mid = 0.5 * (ext[d].lo + ext[d].hi), half = 0.5 * fraction * (ext[d].hi - ext[d].lo);
    x0[d] = std::uniform_real_distribution<double>(mid - half, mid + half)(rng);
  }
  return x0;
}

// lambda_1 of the x-coordinate series integrated through the raster.
inline double lyapunov_of_field(const VectorField& f, std::uint64_t seed, const LyapunovProtocol& p = {}) {
  Rng rng(seed);
  const auto x0 = random_interior_start({f.grid.x_extent, f.grid.y_extent}, p.start_fraction, rng);
  Trajectory tr;
  try {
    tr = integrate(raster_rhs(f), x0, p.dt, p.horizon);
  } catch (const IntegrationError& e) {
    tr = e.prefix();
  }
  LyapunovOpts o = p.estimator;
  o.dt = p.dt;
  return lyapunov_max(tr.coordinate(static_cast<std::size_t>(p.coordinate)), o);
}

inline DynClass classify_lyapunov_score(double lambda, double threshold) {
  return lambda > threshold ? DynClass::PeriodicAttractor : DynClass::PointAttractor;
}

inline DynClass classify_lyapunov(const VectorField& f, double threshold, std::uint64_t seed,
                                  const LyapunovProtocol& p = {}) {
  return classify_lyapunov_score(lyapunov_of_field(f, seed, p), threshold);
}

// ---- ROC threshold -----------------------------------------------------------

struct RocFit {
  double threshold = 0.0;
  double youden_j = 0.0;
};

// Scores above the threshold predict the positive (cycle) class.
inline RocFit fit_threshold_roc(std::span<const double> scores, std::span<const DynClass> labels) {
  if (scores.size() != labels.size()) throw Error(ErrorCode::ShapeMismatch, "scores/labels length");
  std::size_t pos = 0;
  for (auto l : labels) pos += l == DynClass::PeriodicAttractor;
  const std::size_t neg = labels.size() - pos;
  if (pos == 0 || neg == 0) throw Error(ErrorCode::DegenerateLabels, "ROC fit needs both classes");
  std::vector<double> u(scores.begin(), scores.end());
  std::sort(u.begin(), u.end());
  u.erase(std::unique(u.begin(), u.end()), u.end());
  RocFit best{u.front() - 1.0, -2.0};
  auto consider = [&](double thr) {
    std::size_t tp = 0, tn = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      const bool cyc = scores[i] > thr;
      if (cyc && labels[i] == DynClass::PeriodicAttractor) ++tp;
      if (!cyc && labels[i] == DynClass::PointAttractor) ++tn;
    }
    const double j = static_cast<double>(tp) / pos + static_cast<double>(tn) / neg - 1.0;
    if (j > best.youden_j) best = {thr, j};
  };
  if (u.size() == 1) consider(u.front());
  for (std::size_t k = 0; k + 1 < u.size(); ++k) consider(0.5 * (u[k] + u[k + 1]));
  return best;
}

// ---- polynomial parameters ---------------------------------------------------

inline constexpr int kPolyTerms = 10;

// Monomials 1, x, y, x^2, y^2, xy, x^3, y^3, x^2 y, x y^2.
inline std::array<double, kPolyTerms> cubic_basis(double x, double y) {
  return {1.0, x, y, x * x, y * y, x * y, x * x * x, y * y * y, x * x * y, x * y * y};
}

struct PolyFit {
  std::array<double, 2 * kPolyTerms> coeffs{};  // c_0..c_9 for u, d_0..d_9 for v
  double residual_rms = 0.0;
};

inline PolyFit polyfit(const VectorField& f) {
  const int H = f.grid.height, W = f.grid.width;
  Eigen::MatrixXd A(H * W, kPolyTerms);
  Eigen::MatrixXd rhs(H * W, 2);
  for (int i = 0; i < H; ++i) {
    for (int j = 0; j < W; ++j) {
      const auto row = static_cast<Eigen::Index>(f.index(i, j));
      const auto b = cubic_basis(f.grid.x_at(j), f.grid.y_at(i));
      for (int k = 0; k < kPolyTerms; ++k) A(row, k) = b[k];
      rhs(row, 0) = f.u[f.index(i, j)];
      rhs(row, 1) = f.v[f.index(i, j)];
    }
  }
  const Eigen::MatrixXd sol = A.colPivHouseholderQr().solve(rhs);
  PolyFit out;
  for (int k = 0; k < kPolyTerms; ++k) {
    out.coeffs[k] = sol(k, 0);
    out.coeffs[kPolyTerms + k] = sol(k, 1);
  }
  out.residual_rms = std::sqrt((A * sol - rhs).squaredNorm() / static_cast<double>(H * W));
  return out;
}

inline std::vector<double> polyfit_coeffs(const VectorField& f) {
  const auto p = polyfit(f);
  return {p.coeffs.begin(), p.coeffs.end()};
}

// ---- logistic regression -----------------------------------------------------

struct LinearFitOpts {
  double lr = 1e-4;
  int epochs = 20;
  int batch_size = 64;
  std::uint64_t seed = 0;
};

struct LinearClassifier {
  std::vector<double> weights;
  double bias = 0.0;
  std::vector<double> mean, stddev;

  double logit(std::span<const double> x) const {
    if (x.size() != weights.size()) throw Error(ErrorCode::ShapeMismatch, "feature dimension");
    double z = bias;
    for (std::size_t k = 0; k < x.size(); ++k) z += weights[k] * (x[k] - mean[k]) / stddev[k];
    return z;
  }
};

inline LinearClassifier linear_fit(const std::vector<std::vector<double>>& X, std::span<const DynClass> y,
                                   const LinearFitOpts& o = {}) {
  if (X.empty() || X.size() != y.size()) throw Error(ErrorCode::ShapeMismatch, "features/labels");
  const std::size_t n = X.size(), d = X[0].size();
  std::size_t pos = 0;
  for (auto l : y) pos += l == DynClass::PeriodicAttractor;
  if (pos == 0 || pos == n) throw Error(ErrorCode::DegenerateLabels, "linear_fit needs both classes");
  LinearClassifier m;
  m.weights.assign(d, 0.0);
  m.mean.assign(d, 0.0);
  m.stddev.assign(d, 0.0);
  for (const auto& x : X) {
    if (x.size() != d) throw Error(ErrorCode::ShapeMismatch, "ragged features");
    for (std::size_t k = 0; k < d; ++k) m.mean[k] += x[k];
  }
  for (auto& v : m.mean) v /= static_cast<double>(n);
  for (const auto& x : X) {
    for (std::size_t k = 0; k < d; ++k) m.stddev[k] += (x[k] - m.mean[k]) * (x[k] - m.mean[k]);
  }
  for (auto& v : m.stddev) {
    v = std::sqrt(v / static_cast<double>(n));
    if (!(v > 1e-12)) v = 1.0;
  }
  // Adam on minibatches of the mean logistic loss.
  std::vector<double> mw(d + 1, 0.0), vw(d + 1, 0.0), g(d + 1);
  const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  int t = 0;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng = make_rng(o.seed, 0x11ea);
  const auto bs = static_cast<std::size_t>(std::max(1, o.batch_size));
  for (int e = 0; e < o.epochs; ++e) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t s = 0; s < n; s += bs) {
      const std::size_t end = std::min(n, s + bs);
      std::fill(g.begin(), g.end(), 0.0);
      for (std::size_t r = s; r < end; ++r) {
        const auto& x = X[order[r]];
        const double target = y[order[r]] == DynClass::PeriodicAttractor ? 1.0 : 0.0;
        const double err = 1.0 / (1.0 + std::exp(-m.logit(x))) - target;
        for (std::size_t k = 0; k < d; ++k) g[k] += err * (x[k] - m.mean[k]) / m.stddev[k];
        g[d] += err;
      }
      ++t;
      const double c1 = 1.0 - std::pow(b1, t), c2 = 1.0 - std::pow(b2, t);
      for (std::size_t k = 0; k <= d; ++k) {
        const double gk = g[k] / static_cast<double>(end - s);
        mw[k] = b1 * mw[k] + (1 - b1) * gk;
        vw[k] = b2 * vw[k] + (1 - b2) * gk * gk;
        const double upd = o.lr * (mw[k] / c1) / (std::sqrt(vw[k] / c2) + eps);
        if (k < d) m.weights[k] -= upd; else m.bias -= upd;
      }
    }
  }
  return m;
}

inline DynClass linear_predict(const LinearClassifier& m, std::span<const double> x) {
  return m.logit(x) > 0.0 ? DynClass::PeriodicAttractor : DynClass::PointAttractor;
}

}  // namespace twa
