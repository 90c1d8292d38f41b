#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <numeric>

#include "gradcheck.hpp"
#include "twa/nn.hpp"

using namespace twa;
using namespace twa::nn;
using twa::test::max_rel_err;
using twa::test::numeric_grad;

namespace {

Tensor<double> random_tensor(std::vector<int> shape, Rng& rng, double scale = 1.0) {
  Tensor<double> t(std::move(shape));
  std::normal_distribution<double> n01(0.0, scale);
  for (auto& x : t.data) x = n01(rng);
  return t;
}

double weighted_sum(const Tensor<double>& y, const Tensor<double>& w) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * w[i];
  return s;
}

double top_singular_value(const std::vector<double>& w, int rows, int cols) {
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = w[static_cast<std::size_t>(i) * cols + j];
  }
  return Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues()(0);
}

}  // namespace

// ---- convolution -------------------------------------------------------------

TEST(Conv2d, IdentityKernelStrideOne) {
  Conv2d<double> c("c", 1, 1, 3, 1, 1, false);
  std::fill(c.weight().value.begin(), c.weight().value.end(), 0.0);
  c.weight().value[4] = 1.0;
  c.bias().value[0] = 0.0;
  Rng rng(1);
  const auto x = random_tensor({1, 1, 5, 5}, rng);
  EXPECT_EQ(c.forward(x, kEvalMode).data, x.data);
}

TEST(Conv2d, HandComputedStrideTwo) {
  // 2x2 ones, 3x3 ones kernel, pad 1, stride 2: a single output whose receptive
  // field covers the whole padded corner, i.e. all four inputs.
  Conv2d<double> c("c", 1, 1, 3, 2, 1, false);
  std::fill(c.weight().value.begin(), c.weight().value.end(), 1.0);
  c.bias().value[0] = 0.5;
  const Tensor<double> x({1, 1, 2, 2}, 1.0);
  const auto y = c.forward(x, kEvalMode);
  ASSERT_EQ(y.shape, (std::vector<int>{1, 1, 1, 1}));
  EXPECT_EQ(y[0], 4.5);
  // 3x3 ones: output rows see input rows {0,1} and {1,2}, same for columns, so every output sums 4 ones.
  const Tensor<double> x3({1, 1, 3, 3}, 1.0);
  const auto y3 = c.forward(x3, kEvalMode);
  ASSERT_EQ(y3.shape, (std::vector<int>{1, 1, 2, 2}));
  for (double v : y3.data) EXPECT_EQ(v, 4.5);
}

TEST(Conv2d, GradcheckSpectral) {
  Rng rng(2);
  Conv2d<double> c("c", 2, 3);
  c.init(rng);
  auto x = random_tensor({1, 2, 4, 4}, rng);
  c.forward(x, kEvalMode);
  const auto w = random_tensor({1, 3, 2, 2}, rng);
  auto loss = [&] { return weighted_sum(c.forward(x, kEvalMode), w); };
  c.weight().zero_grad();
  c.bias().zero_grad();
  c.forward(x, kEvalMode);
  const auto dx = c.backward(w);
  EXPECT_LT(max_rel_err(dx.data, numeric_grad(x.data, loss)), 1e-4);
  EXPECT_LT(max_rel_err(c.weight().grad, numeric_grad(c.weight().value, loss)), 1e-4);
  EXPECT_LT(max_rel_err(c.bias().grad, numeric_grad(c.bias().value, loss)), 1e-4);
}

// ---- spectral normalization --------------------------------------------------

TEST(Spectral, DiagonalMatrix) {
  Rng rng(3);
  SpectralState<double> s;
  s.init(2, 2, rng);
  const std::vector<double> w{3, 0, 0, 1};
  double sigma = 0.0;
  const auto wn = spectral_normalize(w, s, 200, &sigma);
  EXPECT_NEAR(sigma, 3.0, 1e-9);
  EXPECT_NEAR(top_singular_value(wn, 2, 2), 1.0, 1e-6);
}

TEST(Spectral, OrthogonalMatrix) {
  Rng rng(4);
  SpectralState<double> s;
  s.init(2, 2, rng);
  const double c = std::cos(0.3), sn = std::sin(0.3);
  const std::vector<double> w{c, -sn, sn, c};
  double sigma = 0.0;
  const auto wn = spectral_normalize(w, s, 50, &sigma);
  EXPECT_NEAR(sigma, 1.0, 1e-6);
  for (std::size_t i = 0; i < w.size(); ++i) EXPECT_NEAR(wn[i], w[i], 1e-6);
}

TEST(Spectral, ApproachesTopSingularValue) {
  Rng rng(5);
  std::vector<double> w(64);
  std::normal_distribution<double> n01;
  for (auto& x : w) x = n01(rng);
  const double truth = top_singular_value(w, 8, 8);
  SpectralState<double> s;
  s.init(8, 8, rng);
  // Independent power iteration on W^T W (the oracle) from the same start vector.
  Eigen::MatrixXd m(8, 8);
  for (int i = 0; i < 8; ++i) {
    for (int j = 0; j < 8; ++j) m(i, j) = w[i * 8 + j];
  }
  Eigen::VectorXd v(8);
  for (int j = 0; j < 8; ++j) v(j) = n01(rng);
  double prev_gap = std::numeric_limits<double>::infinity();
  for (int it = 0; it < 60; ++it) {
    s.iterate(w, 1);
    const double est = s.sigma(w);
    EXPECT_LE(est, truth + 1e-9);
    const double gap = truth - est;
    EXPECT_LE(gap, prev_gap + 1e-12) << "iteration " << it;
    prev_gap = gap;
    v = (m.transpose() * m * v).normalized();
  }
  EXPECT_NEAR(s.sigma(w), truth, 1e-6);
  EXPECT_NEAR((m * v).norm(), truth, 1e-6);
}

TEST(Spectral, ConvWeightNormBounded) {
  // One power iteration per training-mode forward; after a few hundred steps every
  // block's effective weight has norm <= 1 + 1e-3.
  Rng rng(6);
  for (auto [in, out] : {std::pair{1, 16}, {16, 32}, {32, 64}, {64, 128}}) {
    Conv2d<double> c("c", in, out);
    c.init(rng);
    const auto x = random_tensor({1, in, 4, 4}, rng);
    for (int it = 0; it < 300; ++it) c.forward(x, kTrainMode);
    EXPECT_LE(top_singular_value(c.effective_weight(), out, in * 9), 1.0 + 1e-3);
  }
}

// ---- attention ---------------------------------------------------------------

TEST(Attention, ClosedGateIsIdentity) {
  Rng rng(7);
  SelfAttention<double> a("a", 16, 8);
  a.init(rng);
  const auto x = random_tensor({2, 16, 4, 4}, rng);
  EXPECT_EQ(a.forward(x).data, x.data);
}

TEST(Attention, RowsAreDistributions) {
  Rng rng(8);
  SelfAttention<double> a("a", 16, 8);
  a.init(rng);
  a.gamma().value[0] = 0.5;
  const auto x = random_tensor({2, 16, 4, 4}, rng, 2.0);
  a.forward(x);
  for (int b = 0; b < 2; ++b) {
    const auto m = a.attention_map(b);
    for (int i = 0; i < 16; ++i) {
      double s = 0.0;
      for (int j = 0; j < 16; ++j) {
        EXPECT_GE(m[i * 16 + j], 0.0);
        s += m[i * 16 + j];
      }
      EXPECT_NEAR(s, 1.0, 1e-12);
    }
  }
  // Constant scores give uniform weights.
  auto params = a.params();
  for (int k = 0; k < 4; ++k) std::fill(params[k]->value.begin(), params[k]->value.end(), 0.0);
  a.forward(x);
  for (double w : a.attention_map(1)) EXPECT_NEAR(w, 1.0 / 16, 1e-15);
}

TEST(Attention, Gradcheck) {
  Rng rng(9);
  SelfAttention<double> a("a", 8, 4);
  a.init(rng);
  a.gamma().value[0] = 0.7;
  auto x = random_tensor({2, 8, 4, 4}, rng);
  const auto w = random_tensor({2, 8, 4, 4}, rng);
  auto loss = [&] { return weighted_sum(a.forward(x), w); };
  for (auto* p : a.params()) p->zero_grad();
  a.forward(x);
  const auto dx = a.backward(w);
  EXPECT_LT(max_rel_err(dx.data, numeric_grad(x.data, loss)), 1e-4);
  for (auto* p : a.params()) EXPECT_LT(max_rel_err(p->grad, numeric_grad(p->value, loss)), 1e-4) << p->name;
}

// ---- dense, activations, dropout --------------------------------------------

TEST(Linear, Gradcheck) {
  Rng rng(10);
  Linear<double> l("l", 6, 4);
  l.init(rng);
  auto x = random_tensor({3, 6}, rng);
  const auto w = random_tensor({3, 4}, rng);
  auto loss = [&] { return weighted_sum(l.forward(x), w); };
  l.forward(x);
  const auto dx = l.backward(w);
  EXPECT_LT(max_rel_err(dx.data, numeric_grad(x.data, loss)), 1e-4);
  EXPECT_LT(max_rel_err(l.weight().grad, numeric_grad(l.weight().value, loss)), 1e-4);
  EXPECT_LT(max_rel_err(l.bias().grad, numeric_grad(l.bias().value, loss)), 1e-4);
}

TEST(Activations, Gradcheck) {
  Rng rng(11);
  auto x = random_tensor({40}, rng);
  for (auto& v : x.data) v = v > 0 ? v + 0.1 : v - 0.1;  // keep away from the kink
  const auto w = random_tensor({40}, rng);
  LeakyReLU<double> lr(0.01);
  auto l1 = [&] { return weighted_sum(lr.forward(x), w); };
  lr.forward(x);
  EXPECT_LT(max_rel_err(lr.backward(w).data, numeric_grad(x.data, l1)), 1e-4);
  ReLU<double> r;
  auto l2 = [&] { return weighted_sum(r.forward(x), w); };
  r.forward(x);
  EXPECT_LT(max_rel_err(r.backward(w).data, numeric_grad(x.data, l2), 1e-6), 1e-4);
}

TEST(Dropout, Behaviour) {
  Rng rng(12);
  Dropout<double> off(0.0);
  const auto x = random_tensor({1000}, rng);
  EXPECT_EQ(off.forward(x, true, rng).data, x.data);
  Dropout<double> d(0.9);
  EXPECT_EQ(d.forward(x, false, rng).data, x.data);
  Rng a(3), b(3);
  EXPECT_EQ(d.forward(x, true, a).data, d.forward(x, true, b).data);
  // Expectation: mean over 1e5 masked copies of a constant input.
  const Tensor<double> ones({10}, 1.0);
  double total = 0.0;
  for (int k = 0; k < 10000; ++k) {
    for (double v : d.forward(ones, true, rng).data) total += v;
  }
  EXPECT_NEAR(total / 1e5, 1.0, 0.02);
}

// ---- loss and optimizer ------------------------------------------------------

TEST(Bce, ValuesAndStability) {
  const std::vector<double> z0{0.0}, t1{1.0};
  EXPECT_NEAR(bce_with_logits<double>(z0, t1).loss, std::log(2.0), 1e-15);
  const std::vector<double> big{40.0};
  const auto r = bce_with_logits<double>(big, t1);
  EXPECT_LT(r.loss, 1e-15);
  EXPECT_TRUE(std::isfinite(r.loss));
  const std::vector<double> neg{-800.0};
  EXPECT_NEAR(bce_with_logits<double>(neg, t1).loss, 800.0, 1e-9);
}

TEST(Bce, Gradcheck) {
  Rng rng(13);
  std::vector<double> z(16), t(16);
  std::normal_distribution<double> n01(0, 3);
  for (std::size_t i = 0; i < z.size(); ++i) {
    z[i] = n01(rng);
    t[i] = i % 2;
  }
  const auto analytic = bce_with_logits<double>(z, t).grad;
  const auto numeric = numeric_grad(z, [&] { return bce_with_logits<double>(z, t).loss; }, {}, 1e-5);
  for (std::size_t i = 0; i < z.size(); ++i) EXPECT_NEAR(analytic[i], numeric[i], 1e-6);
}

TEST(Adam, FirstStepClosedForm) {
  Param<double> p("p", {1});
  p.value[0] = 0.0;
  p.grad[0] = 1.0;
  Adam<double> opt({&p}, AdamOptions{1e-4});
  opt.step();
  // m_hat = v_hat = 1, so the step is lr / (1 + eps).
  EXPECT_NEAR(p.value[0], -1e-4 / (1.0 + 1e-8), 1e-18);
  EXPECT_NEAR(p.value[0], -9.99999e-5, 1e-10);

  Param<double> q("q", {3});
  q.value = {1.0, -2.0, 3.0};
  Adam<double> o2({&q});
  o2.step();
  EXPECT_EQ(q.value, (std::vector<double>{1.0, -2.0, 3.0}));
}

TEST(Adam, MinimizesQuadratic) {
  // Minimizing theta^2 from 1 at lr 0.1, checked against an independent scalar recursion.
  Param<double> p("p", {1});
  p.value[0] = 1.0;
  Adam<double> opt({&p}, AdamOptions{0.1});
  double theta = 1.0, m = 0.0, v = 0.0;
  bool crossed = false;
  double prev = 1.0;
  for (int k = 1; k <= 100; ++k) {
    opt.zero_grad();
    p.grad[0] = 2 * p.value[0];
    opt.step();
    const double g = 2 * theta;
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    theta -= 0.1 * (m / (1 - std::pow(0.9, k))) / (std::sqrt(v / (1 - std::pow(0.999, k))) + 1e-8);
    EXPECT_NEAR(p.value[0], theta, 1e-12) << "step " << k;
    // Momentum carries theta past zero after about ten steps; until then |theta| strictly decreases.
    crossed = crossed || p.value[0] < 0;
    if (!crossed) {
      EXPECT_LT(std::abs(p.value[0]), prev) << "step " << k;
    }
    prev = std::abs(p.value[0]);
  }
  EXPECT_TRUE(crossed);
  EXPECT_LT(std::abs(p.value[0]), 0.01);
}
