#include <gtest/gtest.h>

#include <cmath>

#include "twa/systemzoo.hpp"

using namespace twa;

TEST(SystemZoo, ExtentsFromParameterTable) {
  const auto so = make_system(SystemName::SO, {0.25, 1.0});
  EXPECT_EQ(so.extent[0], (Interval{-1, 1}));
  EXPECT_EQ(so.extent[1], (Interval{-1, 1}));
  const auto sk = make_system(SystemName::Selkov, {0.05, 0.5});
  EXPECT_EQ(sk.extent[0], (Interval{0, 3}));
  EXPECT_EQ(sk.extent[1], (Interval{0, 3}));
}

TEST(SystemZoo, OutOfRangeParameters) {
  try {
    make_system(SystemName::SO, {2.0, 1.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ParamOutOfRange);
  }
  EXPECT_THROW(parse_system("lorenz"), Error);
}

TEST(SystemZoo, IdentifiersRoundTrip) {
  for (auto n : {SystemName::SO, SystemName::SupercriticalHopf, SystemName::LienardPoly, SystemName::LienardSigmoid,
                 SystemName::VanDerPol, SystemName::BZReaction, SystemName::Selkov, SystemName::SubcriticalHopf,
                 SystemName::Repressilator}) {
    EXPECT_EQ(parse_system(system_id(n)), n);
  }
  EXPECT_EQ(system_id(SystemName::SO), "simple_oscillator");
}

TEST(SystemZoo, RightHandSidesByHand) {
  // x(a - r^2) - w y, y(a - r^2) + w x at (1, 0), a = -0.5, w = 1
  const Vec2 so = eval_rhs2(make_system(SystemName::SO, {-0.5, 1.0}), 1.0, 0.0);
  EXPECT_DOUBLE_EQ(so[0], -1.5);
  EXPECT_DOUBLE_EQ(so[1], 1.0);
  // x2, mu x2 - x1 - x1^2 x2 at (1, 1), mu = 0.5
  const Vec2 vdp = eval_rhs2(make_system(SystemName::VanDerPol, {0.5}), 1.0, 1.0);
  EXPECT_DOUBLE_EQ(vdp[0], 1.0);
  EXPECT_DOUBLE_EQ(vdp[1], -1.5);
  const auto rep = make_system(SystemName::Repressilator, {10.0, 1.0});
  const std::vector<double> zero(6, 0.0);
  const auto d = eval_rhs(rep, zero);
  ASSERT_EQ(d.size(), 6u);
  for (int g = 0; g < 3; ++g) {
    EXPECT_NEAR(d[2 * g], 10.2, 1e-12) << "mRNA " << g;
    EXPECT_NEAR(d[2 * g + 1], 0.0, 1e-12) << "protein " << g;
  }
}

TEST(SystemZoo, LabelsFromAnalyticConditions) {
  EXPECT_EQ(true_label(make_system(SystemName::SO, {0.3, 1.0})), DynClass::PeriodicAttractor);
  EXPECT_EQ(true_label(make_system(SystemName::SO, {-0.3, 1.0})), DynClass::PointAttractor);
  // Selkov window: sqrt((1 - 2a -+ sqrt(1 - 8a)) / 2) at a = 0.05 is (0.2504, 0.9150)
  const double a = 0.05, s = std::sqrt(1 - 8 * a);
  const double lo = std::sqrt(0.5 * (1 - 2 * a - s)), hi = std::sqrt(0.5 * (1 - 2 * a + s));
  EXPECT_NEAR(lo, 0.2504, 1e-4);
  EXPECT_NEAR(hi, 0.9150, 1e-4);
  EXPECT_EQ(true_label(make_system(SystemName::Selkov, {0.05, 0.5})), DynClass::PeriodicAttractor);
  EXPECT_EQ(true_label(make_system(SystemName::Selkov, {0.05, 1.1})), DynClass::PointAttractor);
}

TEST(SystemZoo, SamplingIsSeededAndBalanced) {
  Rng r1(7), r2(7);
  EXPECT_EQ(sample_params(SystemName::SO, 3, r1), sample_params(SystemName::SO, 3, r2));
  Rng rng(11);
  const auto ps = sample_params(SystemName::SO, 10000, rng);
  int cycles = 0;
  for (const auto& p : ps) cycles += true_label(make_system(SystemName::SO, p)) == DynClass::PeriodicAttractor;
  EXPECT_NEAR(cycles / 10000.0, 0.5, 0.03);
  Rng rb(3);
  const auto bz = sample_params(SystemName::BZReaction, 1, rb).front();
  EXPECT_GE(bz[0], 2.0);
  EXPECT_LE(bz[0], 19.0);
  EXPECT_GE(bz[1], 2.0);
  EXPECT_LE(bz[1], 6.0);
}

TEST(SystemZoo, SignedBoundaryDistance) {
  EXPECT_NEAR(boundary_distance(make_system(SystemName::SO, {0.3, 0.5})), 0.3, 1e-12);
  EXPECT_NEAR(boundary_distance(make_system(SystemName::SO, {-0.2, -0.9})), -0.2, 1e-12);
  // Points on each curve are at distance ~0.
  for (auto n : zoo::kLabeledSystems) {
    const auto curves = boundary_curve(n, 64);
    const auto ranges = param_ranges(n);
    for (const auto& c : curves) {
      const Vec2 p = c[c.size() / 2];
      std::vector<double> params{p[0]};
      if (ranges.size() >= 2) params.push_back(p[1]);
      for (std::size_t k = 2; k < ranges.size(); ++k) params.push_back(0.5 * (ranges[k].lo + ranges[k].hi));
      bool in_range = true;
      for (std::size_t k = 0; k < params.size(); ++k) in_range = in_range && ranges[k].contains(params[k]);
      if (!in_range) continue;
      EXPECT_NEAR(boundary_distance(make_system(n, params)), 0.0, 1e-3) << system_id(n);
    }
  }
}

TEST(SystemZoo, BoundaryCurvesSatisfyTheirConditions) {
  const auto so = boundary_curve(SystemName::SO, 32);
  ASSERT_EQ(so.size(), 1u);
  EXPECT_EQ(so[0].front(), (Vec2{0.0, -1.0}));
  EXPECT_EQ(so[0].back(), (Vec2{0.0, 1.0}));
  const auto sk = boundary_curve(SystemName::Selkov, 128);
  ASSERT_EQ(sk.size(), 2u);
  for (const auto& c : sk) {
    for (const auto& p : c) {
      const double a = p[0], s = std::sqrt(1 - 8 * a);
      const double lo = std::sqrt(0.5 * (1 - 2 * a - s)), hi = std::sqrt(0.5 * (1 - 2 * a + s));
      EXPECT_LT(std::min(std::abs(p[1] - lo), std::abs(p[1] - hi)), 1e-6);
    }
  }
  for (auto n : zoo::kLabeledSystems) {
    for (const auto& c : boundary_curve(n, 64)) {
      for (const auto& p : c) EXPECT_LT(std::abs(boundary_residual(n, p)), 1e-6) << system_id(n);
    }
  }
}

TEST(SystemZoo, RepressilatorWindow) {
  const auto w = repressilator_boundary(10.0);
  // Independent check of the fixed point: (p - 0.2)(1 + p^2) = 10.
  EXPECT_NEAR((w.p_hat - 0.2) * (1 + w.p_hat * w.p_hat), 10.0, 1e-9);
  EXPECT_NEAR(w.p_hat, 2.08, 0.01);
  EXPECT_NEAR(w.A, -2.0 * 10.0 * w.p_hat / std::pow(1 + w.p_hat * w.p_hat, 2), 1e-12);
  EXPECT_NEAR(w.A, -1.466, 2e-3);
  EXPECT_LT(w.beta1, w.beta2);
  // Both roots satisfy (beta + 1)^2 / beta = 3 A^2 / (4 + 2 A).
  const double rhs = 3 * w.A * w.A / (4 + 2 * w.A);
  EXPECT_NEAR((w.beta1 + 1) * (w.beta1 + 1) / w.beta1, rhs, 1e-9);
  EXPECT_NEAR((w.beta2 + 1) * (w.beta2 + 1) / w.beta2, rhs, 1e-9);
  try {
    repressilator_boundary(0.01);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoOscillationWindow);
  }
  EXPECT_EQ(repressilator_label(0.01, 1.0), DynClass::PointAttractor);
  EXPECT_EQ(repressilator_label(10.0, 0.5 * (w.beta1 + w.beta2)), DynClass::PeriodicAttractor);
}

TEST(SystemZoo, SubcriticalRegimes) {
  EXPECT_EQ(subcritical_regime(-0.4), SubcriticalRegime::Point);
  EXPECT_EQ(subcritical_regime(-0.1), SubcriticalRegime::Bistable);
  EXPECT_EQ(subcritical_regime(0.3), SubcriticalRegime::Periodic);
}
