#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "twa/odeint.hpp"

using namespace twa;

namespace {

Rhs decay() {
  return [](std::span<const double> x, std::span<double> out) { out[0] = -x[0]; };
}

double decay_error(double dt) {
  const auto tr = integrate(decay(), {1.0}, dt, 1.0);
  return std::abs(tr.states.back()[0] - std::exp(-1.0));
}

}  // namespace

TEST(Odeint, SingleStepByHand) {
  // RK4 on x' = -x: 1 - h + h^2/2 - h^3/6 + h^4/24 at h = 0.1.
  const auto tr = integrate(decay(), {1.0}, 0.1, 0.1);
  ASSERT_EQ(tr.size(), 2u);
  const double h = 0.1;
  EXPECT_NEAR(tr.states[1][0], 1 - h + h * h / 2 - h * h * h / 6 + h * h * h * h / 24, 1e-15);
  EXPECT_NEAR(tr.states[1][0], 0.90483750, 5e-9);
}

TEST(Odeint, FourthOrderConvergence) {
  const double e1 = decay_error(0.1), e2 = decay_error(0.05);
  const double order = std::log2(e1 / e2);
  EXPECT_GE(order, 3.7);
  EXPECT_LE(order, 4.3);
  EXPECT_NEAR(e1 / e2, 16.0, 1.5);
}

TEST(Odeint, LimitCycleRadius) {
  const auto s = make_system(SystemName::SO, {0.25, 1.0});
  const auto tr = integrate(system_rhs(s), {0.9, 0.0}, 0.1, 100.0);
  EXPECT_EQ(tr.size(), 1001u);
  const auto& x = tr.states.back();
  EXPECT_NEAR(std::hypot(x[0], x[1]), 0.5, 1e-3);
}

TEST(Odeint, DivergenceCarriesPrefix) {
  const Rhs blowup = [](std::span<const double> x, std::span<double> out) { out[0] = x[0] * x[0]; };
  try {
    integrate(blowup, {1.0}, 0.1, 5.0);
    FAIL();
  } catch (const IntegrationError& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonFiniteState);
    EXPECT_GT(e.prefix().size(), 1u);
    for (const auto& s : e.prefix().states) EXPECT_TRUE(std::isfinite(s[0]));
  }
}

TEST(Odeint, VelocityEstimates) {
  Trajectory lin;
  lin.dt = 0.5;
  for (int k = 0; k < 5; ++k) lin.states.push_back({0.5 * k, 1.0 * k, 7.0});
  for (const auto& v : estimate_velocities(lin, {0, 1}).velocities) {
    EXPECT_NEAR(v[0], 1.0, 1e-15);
    EXPECT_NEAR(v[1], 2.0, 1e-15);
  }
  Trajectory flat;
  flat.dt = 0.1;
  flat.states.assign(4, {3.0, -1.0});
  for (const auto& v : estimate_velocities(flat, {0, 1}).velocities) EXPECT_EQ(v, (Vec2{0, 0}));
}

TEST(Odeint, VelocityEstimateIsFirstOrder) {
  const auto s = make_system(SystemName::SO, {0.25, 1.0});
  auto max_dev = [&](double dt) {
    const auto tr = integrate(system_rhs(s), {0.5, 0.0}, dt, 5.0);
    const auto sv = estimate_velocities(tr, {0, 1});
    double m = 0.0;
    for (std::size_t k = 0; k < sv.size(); ++k) {
      const Vec2 f = eval_rhs2(s, sv.points[k][0], sv.points[k][1]);
      m = std::max(m, std::hypot(f[0] - sv.velocities[k][0], f[1] - sv.velocities[k][1]));
    }
    return m;
  };
  const double ratio = max_dev(0.02) / max_dev(0.01);
  EXPECT_NEAR(ratio, 2.0, 0.2);
}

TEST(Odeint, InverseDistanceWeighting) {
  const GridSpec g{5, 5, {-1, 1}, {-1, 1}};
  ScatteredVelocities one{{{0.3, 0.2}}, {{1.5, -2.0}}};
  const auto f1 = interpolate_scattered(one, g);
  for (std::size_t k = 0; k < f1.u.size(); ++k) {
    EXPECT_DOUBLE_EQ(f1.u[k], 1.5);
    EXPECT_DOUBLE_EQ(f1.v[k], -2.0);
  }
  // Two samples equidistant from the lattice node (0, 0).
  ScatteredVelocities two{{{-0.25, 0.0}, {0.25, 0.0}}, {{1.0, 4.0}, {3.0, -2.0}}};
  const auto f2 = interpolate_scattered(two, g, 2);
  EXPECT_DOUBLE_EQ(f2.u[f2.index(2, 2)], 2.0);
  EXPECT_DOUBLE_EQ(f2.v[f2.index(2, 2)], 1.0);
  // Samples placed on lattice nodes are reproduced exactly.
  ScatteredVelocities on;
  for (int i = 0; i < 5; ++i) {
    on.points.push_back({g.x_at(i), g.y_at(4 - i)});
    on.velocities.push_back({static_cast<double>(i), -static_cast<double>(i)});
  }
  const auto f3 = interpolate_scattered(on, g, 1);
  for (int i = 0; i < 5; ++i) {
    EXPECT_EQ(f3.u[f3.index(4 - i, i)], i);
    EXPECT_EQ(f3.v[f3.index(4 - i, i)], -i);
  }
  // Sample order does not matter.
  ScatteredVelocities rev = on;
  std::reverse(rev.points.begin(), rev.points.end());
  std::reverse(rev.velocities.begin(), rev.velocities.end());
  EXPECT_EQ(interpolate_scattered(rev, g).u, interpolate_scattered(on, g).u);
}

TEST(Odeint, ScatteredCsv) {
  std::istringstream ok("x,y,vx,vy\n0,1,0.5,-0.5\r\n2.5,3,1e-3,4\n");
  const auto s = parse_scattered_csv(ok);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s.points[1], (Vec2{2.5, 3}));
  EXPECT_EQ(s.velocities[1], (Vec2{1e-3, 4}));
  std::istringstream bad_header("a,b,c,d\n1,2,3,4\n");
  EXPECT_THROW(parse_scattered_csv(bad_header), Error);
  std::istringstream bad_row("x,y,vx,vy\n1,2,3\n");
  EXPECT_THROW(parse_scattered_csv(bad_row), Error);
}

TEST(Odeint, RepressilatorSimulation) {
  RepressilatorSampling o;
  const auto a = simulate_repressilator_sample(10, 2, 99, o);
  const auto b = simulate_repressilator_sample(10, 2, 99, o);
  EXPECT_EQ(a.points, b.points);
  EXPECT_EQ(a.velocities, b.velocities);
  EXPECT_EQ(a.size(), 100u);

  // Deep post-Hopf, no noise: the sampled protein-plane points trace a closed loop.
  o.noise_sigma = 0.0;
  const auto sys = make_system(SystemName::Repressilator, {10, 2});
  const auto tr = integrate(system_rhs(sys), repressilator_initial_state(), o.dt, o.horizon);
  std::vector<Vec2> loop;
  for (std::size_t k = tr.size() / 2; k < tr.size(); ++k) loop.push_back({tr.states[k][3], tr.states[k][1]});
  double diam = 0.0, gap = 0.0;
  for (const auto& p : loop) {
    for (const auto& q : loop) diam = std::max(diam, std::hypot(p[0] - q[0], p[1] - q[1]));
  }
  for (std::size_t k = 1; k < loop.size(); ++k) gap = std::max(gap, std::hypot(loop[k][0] - loop[k - 1][0], loop[k][1] - loop[k - 1][1]));
  EXPECT_GT(diam, 0.5);
  EXPECT_LT(gap, diam / 4);
  // Velocities are tangent to the loop: positive dot product with the finite-difference tangent.
  std::vector<double> state(6), vel(6);
  int positive = 0, total = 0;
  for (std::size_t k = tr.size() / 2; k + 1 < tr.size(); ++k) {
    repressilator_rhs(10, 2, tr.states[k], vel);
    const double tx = tr.states[k + 1][3] - tr.states[k][3], ty = tr.states[k + 1][1] - tr.states[k][1];
    positive += vel[3] * tx + vel[1] * ty > 0;
    ++total;
  }
  EXPECT_EQ(positive, total);

  // Pre-Hopf: velocities point toward the terminal state on average.
  const auto pre = simulate_repressilator_sample(2, 8, 5, RepressilatorSampling{100, 0.5, 0.1, 50});
  const auto tr2 = integrate(system_rhs(make_system(SystemName::Repressilator, {2, 8})), repressilator_initial_state(), 0.1, 50);
  const Vec2 c{tr2.states.back()[3], tr2.states.back()[1]};
  double radial = 0.0;
  for (std::size_t k = 0; k < pre.size(); ++k) {
    const Vec2 r{pre.points[k][0] - c[0], pre.points[k][1] - c[1]};
    const double n = std::hypot(r[0], r[1]);
    if (n > 0) radial += (r[0] * pre.velocities[k][0] + r[1] * pre.velocities[k][1]) / n;
  }
  EXPECT_LT(radial / pre.size(), 0.0);
}
