#pragma once

// Layers with explicit forward/backward passes. Each layer caches what its
// backward pass needs from the most recent forward call.

#include <algorithm>
#include <cmath>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "twa/error.hpp"
#include "twa/rng.hpp"
#include "twa/tensor.hpp"

namespace twa::nn {

template <typename T>
struct Param {
  std::string name;
  std::vector<int> shape;
  std::vector<T> value;
  std::vector<T> grad;

  Param() = default;
  Param(std::string n, std::vector<int> s)
      : name(std::move(n)), shape(std::move(s)), value(Tensor<T>::numel(shape)), grad(value.size()) {}

  std::size_t size() const { return value.size(); }
  void zero_grad() { std::fill(grad.begin(), grad.end(), T(0)); }
};

// Named non-trainable state that is checkpointed (spectral-norm vectors).
template <typename T>
struct Buffer {
  std::string name;
  std::vector<T>* data;
};

struct Mode {
  bool dropout = false;          // stochastic dropout masks
  bool update_spectral = false;  // one power iteration per forward
};

inline constexpr Mode kTrainMode{true, true};
inline constexpr Mode kEvalMode{false, false};

template <typename T>
void kaiming_uniform(Param<T>& p, int fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> u(-bound, bound);
  for (auto& x : p.value) x = static_cast<T>(u(rng));
}

// ---- spectral normalization ------------------------------------------------

// Power-iteration estimate of the top singular value of a rows x cols matrix.
template <typename T>
struct SpectralState {
  std::vector<T> u;  // left singular vector estimate, unit norm
  std::vector<T> v;  // right singular vector estimate, unit norm

  void init(int rows, int cols, Rng& rng) {
    std::normal_distribution<double> n01(0.0, 1.0);
    u.resize(rows);
    v.resize(cols);
    for (auto& x : u) x = static_cast<T>(n01(rng));
    for (auto& x : v) x = static_cast<T>(n01(rng));
    normalize(u);
    normalize(v);
  }

  static void normalize(std::vector<T>& x) {
    double n = 0.0;
    for (T e : x) n += static_cast<double>(e) * e;
    n = std::sqrt(n) + 1e-12;
    for (auto& e : x) e = static_cast<T>(e / n);
  }

  void iterate(const std::vector<T>& W, int n_iter = 1) {
    const int rows = static_cast<int>(u.size()), cols = static_cast<int>(v.size());
    for (int it = 0; it < n_iter; ++it) {
      for (int j = 0; j < cols; ++j) {
        double acc = 0.0;
        for (int i = 0; i < rows; ++i) acc += static_cast<double>(W[static_cast<std::size_t>(i) * cols + j]) * u[i];
        v[j] = static_cast<T>(acc);
      }
      normalize(v);
      for (int i = 0; i < rows; ++i) {
        double acc = 0.0;
        const T* w = W.data() + static_cast<std::size_t>(i) * cols;
        for (int j = 0; j < cols; ++j) acc += static_cast<double>(w[j]) * v[j];
        u[i] = static_cast<T>(acc);
      }
      normalize(u);
    }
  }

  double sigma(const std::vector<T>& W) const {
    const int rows = static_cast<int>(u.size()), cols = static_cast<int>(v.size());
    double s = 0.0;
    for (int i = 0; i < rows; ++i) {
      double acc = 0.0;
      const T* w = W.data() + static_cast<std::size_t>(i) * cols;
      for (int j = 0; j < cols; ++j) acc += static_cast<double>(w[j]) * v[j];
      s += acc * u[i];
    }
    return s;
  }
};

template <typename T>
std::vector<T> spectral_normalize(const std::vector<T>& W, SpectralState<T>& state, int n_iter, double* sigma_out = nullptr) {
  if (n_iter > 0) state.iterate(W, n_iter);
  const double s = state.sigma(W);
  std::vector<T> out(W.size());
  for (std::size_t i = 0; i < W.size(); ++i) out[i] = static_cast<T>(W[i] / s);
  if (sigma_out) *sigma_out = s;
  return out;
}

// ---- convolution -------------------------------------------------------------

template <typename T>
class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(const std::string& name, int in_c, int out_c, int kernel = 3, int stride = 2, int pad = 1,
         bool spectral = true)
      : in_c_(in_c), out_c_(out_c), k_(kernel), stride_(stride), pad_(pad), spectral_(spectral),
        weight_(name + ".weight", {out_c, in_c, kernel, kernel}), bias_(name + ".bias", {out_c}),
        name_(name) {}

  void init(Rng& rng, int warm_iters = 5) {
    const int fan_in = in_c_ * k_ * k_;
    kaiming_uniform(weight_, fan_in, rng);
    kaiming_uniform(bias_, fan_in, rng);
    if (spectral_) {
      sn_.init(out_c_, fan_in, rng);
      sn_.iterate(weight_.value, warm_iters);
    }
  }

  int out_size(int n) const { return (n + 2 * pad_ - k_) / stride_ + 1; }

  Tensor<T> forward(const Tensor<T>& x, const Mode& mode) {
    if (x.shape.size() != 4 || x.dim(1) != in_c_) {
      throw Error(ErrorCode::ShapeMismatch, name_ + " input " + shape_str(x.shape));
    }
    B_ = x.dim(0);
    H_ = x.dim(2);
    W_ = x.dim(3);
    Ho_ = out_size(H_);
    Wo_ = out_size(W_);
    const int kdim = in_c_ * k_ * k_;
    const int no = Ho_ * Wo_;
    const int cols = B_ * no;
    col_.assign(static_cast<std::size_t>(kdim) * cols, T(0));
    for (int b = 0; b < B_; ++b) {
      for (int c = 0; c < in_c_; ++c) {
        const T* xin = x.ptr() + (static_cast<std::size_t>(b) * in_c_ + c) * H_ * W_;
        for (int ki = 0; ki < k_; ++ki) {
          for (int kj = 0; kj < k_; ++kj) {
            T* crow = col_.data() + static_cast<std::size_t>((c * k_ + ki) * k_ + kj) * cols + b * no;
            for (int oh = 0; oh < Ho_; ++oh) {
              const int ih = oh * stride_ - pad_ + ki;
              if (ih < 0 || ih >= H_) continue;
              for (int ow = 0; ow < Wo_; ++ow) {
                const int iw = ow * stride_ - pad_ + kj;
                if (iw >= 0 && iw < W_) crow[oh * Wo_ + ow] = xin[ih * W_ + iw];
              }
            }
          }
        }
      }
    }
    if (spectral_) {
      w_eff_ = spectral_normalize(weight_.value, sn_, mode.update_spectral ? 1 : 0, &sigma_);
    } else {
      w_eff_ = weight_.value;
    }
    ym_.resize(static_cast<std::size_t>(out_c_) * cols);
    gemm_nn(out_c_, cols, kdim, w_eff_.data(), col_.data(), ym_.data(), false);
    Tensor<T> y({B_, out_c_, Ho_, Wo_});
    for (int b = 0; b < B_; ++b) {
      for (int co = 0; co < out_c_; ++co) {
        const T* src = ym_.data() + static_cast<std::size_t>(co) * cols + b * no;
        T* dst = y.ptr() + (static_cast<std::size_t>(b) * out_c_ + co) * no;
        const T bias = bias_.value[co];
        for (int n = 0; n < no; ++n) dst[n] = src[n] + bias;
      }
    }
    return y;
  }

  // Accumulates parameter gradients; returns dL/dx when need_dx.
  Tensor<T> backward(const Tensor<T>& dy, bool need_dx = true) {
    require_shape(dy.shape, {B_, out_c_, Ho_, Wo_}, name_.c_str());
    const int kdim = in_c_ * k_ * k_;
    const int no = Ho_ * Wo_;
    const int cols = B_ * no;
    for (int b = 0; b < B_; ++b) {
      for (int co = 0; co < out_c_; ++co) {
        const T* src = dy.ptr() + (static_cast<std::size_t>(b) * out_c_ + co) * no;
        T* dst = ym_.data() + static_cast<std::size_t>(co) * cols + b * no;
        double acc = 0.0;
        for (int n = 0; n < no; ++n) {
          dst[n] = src[n];
          acc += src[n];
        }
        bias_.grad[co] += static_cast<T>(acc);
      }
    }
    std::vector<T> dw_eff(static_cast<std::size_t>(out_c_) * kdim);
    gemm_nt(out_c_, kdim, cols, ym_.data(), col_.data(), dw_eff.data(), false, scratch_);
    if (spectral_) {
      // d(W/sigma) with sigma = u^T W v and (u, v) held fixed.
      double inner = 0.0;
      for (std::size_t i = 0; i < dw_eff.size(); ++i) inner += static_cast<double>(dw_eff[i]) * w_eff_[i];
      for (int i = 0; i < out_c_; ++i) {
        for (int j = 0; j < kdim; ++j) {
          const std::size_t idx = static_cast<std::size_t>(i) * kdim + j;
          weight_.grad[idx] += static_cast<T>((dw_eff[idx] - inner * sn_.u[i] * sn_.v[j]) / sigma_);
        }
      }
    } else {
      for (std::size_t i = 0; i < dw_eff.size(); ++i) weight_.grad[i] += dw_eff[i];
    }
    Tensor<T> dx;
    if (!need_dx) return dx;
    std::vector<T> dcol(static_cast<std::size_t>(kdim) * cols);
    gemm_tn(kdim, cols, out_c_, w_eff_.data(), ym_.data(), dcol.data(), false);
    dx = Tensor<T>({B_, in_c_, H_, W_});
    for (int b = 0; b < B_; ++b) {
      for (int c = 0; c < in_c_; ++c) {
        T* dxin = dx.ptr() + (static_cast<std::size_t>(b) * in_c_ + c) * H_ * W_;
        for (int ki = 0; ki < k_; ++ki) {
          for (int kj = 0; kj < k_; ++kj) {
            const T* crow = dcol.data() + static_cast<std::size_t>((c * k_ + ki) * k_ + kj) * cols + b * no;
            for (int oh = 0; oh < Ho_; ++oh) {
              const int ih = oh * stride_ - pad_ + ki;
              if (ih < 0 || ih >= H_) continue;
              for (int ow = 0; ow < Wo_; ++ow) {
                const int iw = ow * stride_ - pad_ + kj;
                if (iw >= 0 && iw < W_) dxin[ih * W_ + iw] += crow[oh * Wo_ + ow];
              }
            }
          }
        }
      }
    }
    return dx;
  }

  std::vector<Param<T>*> params() { return {&weight_, &bias_}; }
  std::vector<Buffer<T>> buffers() {
    if (!spectral_) return {};
    return {{name_ + ".sn_u", &sn_.u}, {name_ + ".sn_v", &sn_.v}};
  }

  Param<T>& weight() { return weight_; }
  Param<T>& bias() { return bias_; }
  SpectralState<T>& spectral_state() { return sn_; }
  const std::vector<T>& effective_weight() const { return w_eff_; }
  double last_sigma() const { return sigma_; }
  bool spectral() const { return spectral_; }

 private:
  int in_c_ = 1, out_c_ = 1, k_ = 3, stride_ = 2, pad_ = 1;
  bool spectral_ = true;
  Param<T> weight_, bias_;
  SpectralState<T> sn_;
  std::string name_;
  int B_ = 0, H_ = 0, W_ = 0, Ho_ = 0, Wo_ = 0;
  double sigma_ = 1.0;
  std::vector<T> col_, ym_, w_eff_, scratch_;
};

// ---- pointwise activations ---------------------------------------------------

template <typename T>
class LeakyReLU {
 public:
  explicit LeakyReLU(double slope = 0.01) : slope_(static_cast<T>(slope)) {}

  Tensor<T> forward(const Tensor<T>& x) {
    x_ = x.data;
    Tensor<T> y = x;
    for (auto& e : y.data) e = e > T(0) ? e : slope_ * e;
    return y;
  }
  Tensor<T> backward(const Tensor<T>& dy) const {
    Tensor<T> dx = dy;
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] = x_[i] > T(0) ? dx[i] : slope_ * dx[i];
    return dx;
  }

 private:
  T slope_;
  std::vector<T> x_;
};

template <typename T>
class ReLU {
 public:
  Tensor<T> forward(const Tensor<T>& x) {
    x_ = x.data;
    Tensor<T> y = x;
    for (auto& e : y.data) e = e > T(0) ? e : T(0);
    return y;
  }
  Tensor<T> backward(const Tensor<T>& dy) const {
    Tensor<T> dx = dy;
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] = x_[i] > T(0) ? dx[i] : T(0);
    return dx;
  }

 private:
  std::vector<T> x_;
};

// Inverted dropout: survivors are scaled by 1/(1 - rate).
template <typename T>
class Dropout {
 public:
  explicit Dropout(double rate = 0.9) : rate_(rate) {
    if (!(rate >= 0.0 && rate < 1.0)) throw Error(ErrorCode::Config, "dropout rate must be in [0, 1)");
  }

  Tensor<T> forward(const Tensor<T>& x, bool active, Rng& rng) {
    active_ = active && rate_ > 0.0;
    if (!active_) return x;
    const T scale = static_cast<T>(1.0 / (1.0 - rate_));
    std::bernoulli_distribution keep(1.0 - rate_);
    mask_.resize(x.size());
    Tensor<T> y = x;
    for (std::size_t i = 0; i < y.size(); ++i) {
      mask_[i] = keep(rng) ? scale : T(0);
      y[i] *= mask_[i];
    }
    return y;
  }
  Tensor<T> backward(const Tensor<T>& dy) const {
    if (!active_) return dy;
    Tensor<T> dx = dy;
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] *= mask_[i];
    return dx;
  }
  double rate() const { return rate_; }

 private:
  double rate_;
  bool active_ = false;
  std::vector<T> mask_;
};

// ---- fully connected ---------------------------------------------------------

template <typename T>
class Linear {
 public:
  Linear() = default;
  Linear(const std::string& name, int in, int out)
      : in_(in), out_(out), weight_(name + ".weight", {out, in}), bias_(name + ".bias", {out}), name_(name) {}

  void init(Rng& rng) {
    kaiming_uniform(weight_, in_, rng);
    kaiming_uniform(bias_, in_, rng);
  }

  // x: [B, in] (any trailing shape flattening to in)
  Tensor<T> forward(const Tensor<T>& x) {
    const int b = x.dim(0);
    if (static_cast<int>(x.size()) != b * in_) throw Error(ErrorCode::ShapeMismatch, name_ + " input " + shape_str(x.shape));
    x_ = x;
    Tensor<T> y({b, out_});
    gemm_nt(b, out_, in_, x.ptr(), weight_.value.data(), y.ptr(), false, scratch_);
    for (int i = 0; i < b; ++i) {
      for (int o = 0; o < out_; ++o) y[static_cast<std::size_t>(i) * out_ + o] += bias_.value[o];
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy, bool need_dx = true) {
    const int b = x_.dim(0);
    require_shape(dy.shape, {b, out_}, name_.c_str());
    gemm_tn(out_, in_, b, dy.ptr(), x_.ptr(), weight_.grad.data(), true);
    for (int i = 0; i < b; ++i) {
      for (int o = 0; o < out_; ++o) bias_.grad[o] += dy[static_cast<std::size_t>(i) * out_ + o];
    }
    Tensor<T> dx;
    if (!need_dx) return dx;
    dx = Tensor<T>(x_.shape);
    gemm_nn(b, in_, out_, dy.ptr(), weight_.value.data(), dx.ptr(), false);
    return dx;
  }

  std::vector<Param<T>*> params() { return {&weight_, &bias_}; }
  Param<T>& weight() { return weight_; }
  Param<T>& bias() { return bias_; }

 private:
  int in_ = 1, out_ = 1;
  Param<T> weight_, bias_;
  std::string name_;
  Tensor<T> x_;
  std::vector<T> scratch_;
};

// ---- self-attention ----------------------------------------------------------

// y = x + gamma * V softmax(Q^T K)^T with 1x1 projections; query/key use
// C/reduction channels. Softmax runs over key positions, so each row of the
// attention map (one query position) sums to 1.
template <typename T>
class SelfAttention {
 public:
  SelfAttention() = default;
  SelfAttention(const std::string& name, int channels, int reduction = 8)
      : c_(channels), ck_(std::max(1, channels / reduction)),
        wq_(name + ".query.weight", {ck_, c_}), bq_(name + ".query.bias", {ck_}),
        wk_(name + ".key.weight", {ck_, c_}), bk_(name + ".key.bias", {ck_}),
        wv_(name + ".value.weight", {c_, c_}), bv_(name + ".value.bias", {c_}),
        gamma_(name + ".gamma", {1}), name_(name) {}

  void init(Rng& rng) {
    for (auto* p : {&wq_, &bq_, &wk_, &bk_}) kaiming_uniform(*p, c_, rng);
    kaiming_uniform(wv_, c_, rng);
    kaiming_uniform(bv_, c_, rng);
    gamma_.value[0] = T(0);
  }

  Tensor<T> forward(const Tensor<T>& x) {
    if (x.shape.size() != 4 || x.dim(1) != c_) throw Error(ErrorCode::ShapeMismatch, name_ + " input " + shape_str(x.shape));
    B_ = x.dim(0);
    n_ = x.dim(2) * x.dim(3);
    x_ = x;
    const std::size_t n = static_cast<std::size_t>(n_);
    q_.assign(B_ * ck_ * n, T(0));
    k_.assign(B_ * ck_ * n, T(0));
    v_.assign(B_ * c_ * n, T(0));
    a_.assign(B_ * n * n, T(0));
    o_.assign(B_ * c_ * n, T(0));
    Tensor<T> y = x;
    const T g = gamma_.value[0];
    for (int b = 0; b < B_; ++b) {
      const T* xb = x.ptr() + b * c_ * n;
      T* q = q_.data() + b * ck_ * n;
      T* k = k_.data() + b * ck_ * n;
      T* v = v_.data() + b * c_ * n;
      T* a = a_.data() + b * n * n;
      T* o = o_.data() + b * c_ * n;
      project(wq_, bq_, ck_, xb, q);
      project(wk_, bk_, ck_, xb, k);
      project(wv_, bv_, c_, xb, v);
      gemm_tn(n_, n_, ck_, q, k, a, false);
      for (int i = 0; i < n_; ++i) softmax_row(a + i * n, n_);
      gemm_nt(c_, n_, n_, v, a, o, false, scratch_);
      T* yb = y.ptr() + b * c_ * n;
      for (std::size_t e = 0; e < c_ * n; ++e) yb[e] += g * o[e];
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) {
    require_shape(dy.shape, x_.shape, name_.c_str());
    const std::size_t n = static_cast<std::size_t>(n_);
    const T g = gamma_.value[0];
    Tensor<T> dx = dy;
    std::vector<T> dO(c_ * n), dV(c_ * n), dA(n * n), dQ(ck_ * n), dK(ck_ * n);
    double dgamma = 0.0;
    for (int b = 0; b < B_; ++b) {
      const T* xb = x_.ptr() + b * c_ * n;
      const T* dyb = dy.ptr() + b * c_ * n;
      const T* q = q_.data() + b * ck_ * n;
      const T* k = k_.data() + b * ck_ * n;
      const T* v = v_.data() + b * c_ * n;
      const T* a = a_.data() + b * n * n;
      const T* o = o_.data() + b * c_ * n;
      T* dxb = dx.ptr() + b * c_ * n;
      for (std::size_t e = 0; e < c_ * n; ++e) {
        dgamma += static_cast<double>(dyb[e]) * o[e];
        dO[e] = g * dyb[e];
      }
      gemm_nn(c_, n_, n_, dO.data(), a, dV.data(), false);
      gemm_tn(n_, n_, c_, dO.data(), v, dA.data(), false);
      for (int i = 0; i < n_; ++i) {
        const T* ar = a + i * n;
        T* dr = dA.data() + i * n;
        double dot = 0.0;
        for (int j = 0; j < n_; ++j) dot += static_cast<double>(ar[j]) * dr[j];
        for (int j = 0; j < n_; ++j) dr[j] = static_cast<T>(ar[j] * (dr[j] - dot));
      }
      gemm_nt(ck_, n_, n_, k, dA.data(), dQ.data(), false, scratch_);
      gemm_nn(ck_, n_, n_, q, dA.data(), dK.data(), false);
      project_backward(wq_, bq_, ck_, xb, dQ.data(), dxb);
      project_backward(wk_, bk_, ck_, xb, dK.data(), dxb);
      project_backward(wv_, bv_, c_, xb, dV.data(), dxb);
    }
    gamma_.grad[0] += static_cast<T>(dgamma);
    return dx;
  }

  std::vector<Param<T>*> params() { return {&wq_, &bq_, &wk_, &bk_, &wv_, &bv_, &gamma_}; }
  Param<T>& gamma() { return gamma_; }
  int key_channels() const { return ck_; }

  // Attention map of sample b from the last forward, [N x N], row = query.
  std::vector<T> attention_map(int b = 0) const {
    const std::size_t n = static_cast<std::size_t>(n_);
    return std::vector<T>(a_.begin() + b * n * n, a_.begin() + (b + 1) * n * n);
  }

 private:
  void project(const Param<T>& w, const Param<T>& bias, int rows, const T* x, T* out) {
    gemm_nn(rows, n_, c_, w.value.data(), x, out, false);
    for (int r = 0; r < rows; ++r) {
      for (int i = 0; i < n_; ++i) out[r * n_ + i] += bias.value[r];
    }
  }

  void project_backward(Param<T>& w, Param<T>& bias, int rows, const T* x, const T* dout, T* dx) {
    gemm_nt(rows, c_, n_, dout, x, w.grad.data(), true, scratch_);
    for (int r = 0; r < rows; ++r) {
      double acc = 0.0;
      for (int i = 0; i < n_; ++i) acc += dout[r * n_ + i];
      bias.grad[r] += static_cast<T>(acc);
    }
    gemm_tn(c_, n_, rows, w.value.data(), dout, dx, true);
  }

  static void softmax_row(T* r, int n) {
    const T mx = *std::max_element(r, r + n);
    double sum = 0.0;
    for (int j = 0; j < n; ++j) {
      const double e = std::exp(static_cast<double>(r[j] - mx));
      r[j] = static_cast<T>(e);
      sum += e;
    }
    for (int j = 0; j < n; ++j) r[j] = static_cast<T>(r[j] / sum);
  }

  int c_ = 8, ck_ = 1;
  Param<T> wq_, bq_, wk_, bk_, wv_, bv_, gamma_;
  std::string name_;
  int B_ = 0, n_ = 0;
  Tensor<T> x_;
  std::vector<T> q_, k_, v_, a_, o_, scratch_;
};

// ---- loss and optimizer ------------------------------------------------------

struct BceResult {
  double loss;                // mean over elements
  std::vector<double> grad;   // d loss / d logit
};

inline double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }
inline double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

template <typename T>
BceResult bce_with_logits(std::span<const T> logits, std::span<const T> targets) {
  if (logits.size() != targets.size() || logits.empty()) {
    throw Error(ErrorCode::ShapeMismatch, "bce_with_logits sizes");
  }
  const double n = static_cast<double>(logits.size());
  BceResult r{0.0, std::vector<double>(logits.size())};
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double z = logits[i], t = targets[i];
    r.loss += softplus(z) - t * z;
    r.grad[i] = (sigmoid(z) - t) / n;
  }
  r.loss /= n;
  return r;
}

struct AdamOptions {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <typename T>
class Adam {
 public:
  explicit Adam(std::vector<Param<T>*> params, AdamOptions o = {}) : params_(std::move(params)), o_(o) {
    for (auto* p : params_) {
      m_.emplace_back(p->size(), 0.0);
      v_.emplace_back(p->size(), 0.0);
    }
  }

  void step() {
    ++t_;
    const double c1 = 1.0 - std::pow(o_.beta1, t_);
    const double c2 = 1.0 - std::pow(o_.beta2, t_);
    for (std::size_t k = 0; k < params_.size(); ++k) {
      auto& p = *params_[k];
      auto& m = m_[k];
      auto& v = v_[k];
      for (std::size_t i = 0; i < p.size(); ++i) {
        const double g = p.grad[i];
        m[i] = o_.beta1 * m[i] + (1.0 - o_.beta1) * g;
        v[i] = o_.beta2 * v[i] + (1.0 - o_.beta2) * g * g;
        const double mh = m[i] / c1, vh = v[i] / c2;
        p.value[i] = static_cast<T>(p.value[i] - o_.lr * mh / (std::sqrt(vh) + o_.eps));
      }
    }
  }

  void zero_grad() {
    for (auto* p : params_) p->zero_grad();
  }
  int steps() const { return t_; }

 private:
  std::vector<Param<T>*> params_;
  AdamOptions o_;
  std::vector<std::vector<double>> m_, v_;
  int t_ = 0;
};

}  // namespace twa::nn
