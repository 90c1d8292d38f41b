#include <gtest/gtest.h>

#include <cmath>

#include "twa/baselines.hpp"
#include "twa/datagen.hpp"
#include "twa/stats.hpp"

using namespace twa;

namespace {

VectorField so_field(double a, double w = 1.0) {
  const auto s = make_system(SystemName::SO, {a, w});
  return rasterize(s, GridSpec::for_system(s));
}

}  // namespace

TEST(CriticalPoints, StableFocusAtOrigin) {
  const auto cps = find_critical_points(so_field(-0.3));
  ASSERT_EQ(cps.size(), 1u);
  EXPECT_EQ(cps[0].kind, CriticalKind::AttractingFocus);
  EXPECT_NEAR(cps[0].position[0], 0.0, 1e-9);
  EXPECT_NEAR(cps[0].position[1], 0.0, 1e-9);
  // Jacobian at the origin is [[a, -w], [w, a]]; the cubic term adds O(h^2) through
  // bilinear sampling and the central difference.
  const double h = 2.0 / 63.0;
  EXPECT_NEAR(cps[0].jacobian[0][0], -0.3, 3 * h * h);
  EXPECT_NEAR(cps[0].jacobian[1][0], 1.0, 3 * h * h);
  EXPECT_EQ(classify_critical(so_field(-0.3)), DynClass::PointAttractor);
}

TEST(CriticalPoints, UnstableFocusMeansCycle) {
  const auto cps = find_critical_points(so_field(0.3));
  ASSERT_EQ(cps.size(), 1u);
  EXPECT_EQ(cps[0].kind, CriticalKind::RepellingFocus);
  EXPECT_EQ(classify_critical(so_field(0.3)), DynClass::PeriodicAttractor);
}

TEST(CriticalPoints, SaddleAndJacobianClasses) {
  const GridSpec g{33, 33, {-1, 1}, {-1, 1}};
  const auto saddle = rasterize_fn(g, [](double x, double y) { return Vec2{x, -y}; });
  const auto cps = find_critical_points(saddle);
  ASSERT_EQ(cps.size(), 1u);
  EXPECT_EQ(cps[0].kind, CriticalKind::Saddle);
  EXPECT_EQ(classify_jacobian({{{-1, 0}, {0, -2}}}), CriticalKind::AttractingNode);
  EXPECT_EQ(classify_jacobian({{{1, 0}, {0, 2}}}), CriticalKind::RepellingNode);
  EXPECT_EQ(classify_jacobian({{{0, -1}, {1, 0}}}), CriticalKind::Center);
  EXPECT_EQ(classify_jacobian({{{0, 0}, {0, 0}}}), CriticalKind::Degenerate);
  // No sign change anywhere: no critical points, point-attractor vote.
  const auto flow = rasterize_fn(g, [](double, double) { return Vec2{1, 0.5}; });
  EXPECT_TRUE(find_critical_points(flow).empty());
  EXPECT_EQ(classify_critical(flow), DynClass::PointAttractor);
}

TEST(CriticalPoints, NoiseDegradesAccuracy) {
  std::vector<DynClass> pred, truth;
  for (std::uint64_t i = 0; i < 200; ++i) {
    const auto sseed = derive_seed(99, i);
    const auto s = draw_system(SystemName::SO, sseed);
    const auto clean = rasterize(s, GridSpec::for_system(s));
    pred.push_back(classify_critical(noisy_copy(clean, 0.5, derive_seed(sseed, kNoiseStream))));
    truth.push_back(true_label(s));
  }
  EXPECT_LT(accuracy(pred, truth), 0.7);
}

TEST(Lyapunov, SignSeparatesRegimes) {
  const double stable = lyapunov_of_field(so_field(-0.3), 5);
  const double cycle = lyapunov_of_field(so_field(0.3), 5);
  EXPECT_LT(stable, 0.0);
  EXPECT_LT(std::abs(cycle), 0.05);
  EXPECT_GT(cycle, stable);
}

TEST(Lyapunov, PeriodicSeriesHasZeroExponent) {
  std::vector<double> s(2000);
  for (std::size_t k = 0; k < s.size(); ++k) s[k] = std::sin(0.1 * static_cast<double>(k));
  EXPECT_LT(std::abs(lyapunov_max(s)), 0.02);
}

TEST(Lyapunov, DegenerateSeries) {
  const std::vector<double> flat(500, 1.25);
  try {
    lyapunov_max(flat);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoValidNeighbors);
  }
  try {
    lyapunov_max(std::vector<double>(100, 0.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TooShort);
  }
}

TEST(Lyapunov, AutocorrelationLag) {
  // First zero crossing of cos-like autocorrelation of sin(0.1 k) is near a quarter period (~15.7 steps).
  std::vector<double> s(2000);
  for (std::size_t k = 0; k < s.size(); ++k) s[k] = std::sin(0.1 * static_cast<double>(k));
  EXPECT_NEAR(autocorr_lag(s, 10), 16, 1);
  EXPECT_EQ(autocorr_lag(std::vector<double>(300, 2.0), 10), 10);
}

TEST(Roc, ThresholdFixture) {
  const std::vector<double> scores{-0.5, -0.1, 0.01, 0.05};
  const std::vector<DynClass> labels{DynClass::PointAttractor, DynClass::PointAttractor, DynClass::PeriodicAttractor,
                                     DynClass::PeriodicAttractor};
  const auto fit = fit_threshold_roc(scores, labels);
  EXPECT_DOUBLE_EQ(fit.threshold, -0.045);
  EXPECT_DOUBLE_EQ(fit.youden_j, 1.0);
  std::vector<DynClass> pred;
  for (double s : scores) pred.push_back(classify_lyapunov_score(s, fit.threshold));
  EXPECT_EQ(accuracy(pred, labels), 1.0);
}

TEST(Roc, UninformativeScores) {
  // Alternating labels over increasing scores: best Youden J stays small.
  std::vector<double> scores;
  std::vector<DynClass> labels;
  Rng rng(3);
  std::bernoulli_distribution coin(0.5);
  for (int i = 0; i < 400; ++i) {
    scores.push_back(i);
    labels.push_back(coin(rng) ? DynClass::PeriodicAttractor : DynClass::PointAttractor);
  }
  EXPECT_LT(fit_threshold_roc(scores, labels).youden_j, 0.15);
  EXPECT_THROW(fit_threshold_roc(scores, std::vector<DynClass>(400, DynClass::PointAttractor)), Error);
}

TEST(Polyfit, RecoversCubicMonomial) {
  const GridSpec g{16, 16, {-1, 1}, {-1, 1}};
  const auto f = rasterize_fn(g, [](double x, double) { return Vec2{x * x * x, 0.0}; });
  const auto fit = polyfit(f);
  for (int k = 0; k < 2 * kPolyTerms; ++k) {
    if (k == 6) {
      EXPECT_NEAR(fit.coeffs[k], 1.0, 1e-9);
    } else {
      EXPECT_LT(std::abs(fit.coeffs[k]), 1e-9) << k;
    }
  }
  EXPECT_LT(fit.residual_rms, 1e-9);
}

TEST(Polyfit, CubicSystemsAreExact) {
  const auto so = polyfit(so_field(0.2, 0.7));
  EXPECT_LT(so.residual_rms, 1e-8);
  // u = x(a - x^2 - y^2) - w y: c1 = a, c2 = -w, c6 = -1, c9 = -1.
  EXPECT_NEAR(so.coeffs[1], 0.2, 1e-8);
  EXPECT_NEAR(so.coeffs[2], -0.7, 1e-8);
  EXPECT_NEAR(so.coeffs[6], -1.0, 1e-8);
  EXPECT_NEAR(so.coeffs[9], -1.0, 1e-8);
  const auto bz = make_system(SystemName::BZReaction, {10.0, 4.0});
  EXPECT_GT(polyfit(rasterize(bz, GridSpec::for_system(bz))).residual_rms, 0.0);
}

TEST(LinearClassifier, SeparableToySet) {
  Rng rng(8);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<std::vector<double>> X;
  std::vector<DynClass> y;
  while (X.size() < 200) {
    const double a = u(rng), b = u(rng);
    if (std::abs(a + b) < 0.2) continue;  // margin
    X.push_back({a, b, u(rng)});
    y.push_back(a + b > 0 ? DynClass::PeriodicAttractor : DynClass::PointAttractor);
  }
  LinearFitOpts o;
  o.lr = 0.05;
  o.epochs = 200;
  o.batch_size = 16;
  o.seed = 4;
  const auto m = linear_fit(X, y, o);
  std::vector<DynClass> pred;
  for (const auto& x : X) pred.push_back(linear_predict(m, x));
  EXPECT_EQ(accuracy(pred, y), 1.0);
  const auto again = linear_fit(X, y, o);
  EXPECT_EQ(again.weights, m.weights);
  EXPECT_EQ(again.bias, m.bias);
}
