#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "twa/error.hpp"

namespace twa::nn {

template <typename T>
struct Tensor {
  std::vector<int> shape;
  std::vector<T> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> s, T fill = T(0)) : shape(std::move(s)), data(numel(shape), fill) {}

  static std::size_t numel(const std::vector<int>& s) {
    return std::accumulate(s.begin(), s.end(), std::size_t{1},
                           [](std::size_t a, int b) { return a * static_cast<std::size_t>(b); });
  }

  std::size_t size() const { return data.size(); }
  int dim(std::size_t i) const { return shape.at(i); }
  T* ptr() { return data.data(); }
  const T* ptr() const { return data.data(); }
  T& operator[](std::size_t i) { return data[i]; }
  const T& operator[](std::size_t i) const { return data[i]; }

  bool all_finite() const {
    for (const T& x : data) {
      if (!std::isfinite(x)) return false;
    }
    return true;
  }
};

inline std::string shape_str(const std::vector<int>& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + std::to_string(s[i]);
  return out + "]";
}

inline void require_shape(const std::vector<int>& got, const std::vector<int>& want, const char* what) {
  if (got != want) {
    throw Error(ErrorCode::ShapeMismatch, std::string(what) + ": got " + shape_str(got) + ", want " + shape_str(want));
  }
}

// C[MxN] (+)= A[MxK] * B[KxN], all row-major.
template <typename T>
void gemm_nn(int M, int N, int K, const T* A, const T* B, T* C, bool accumulate) {
  if (!accumulate) std::fill(C, C + static_cast<std::size_t>(M) * N, T(0));
  for (int i = 0; i < M; ++i) {
    T* c = C + static_cast<std::size_t>(i) * N;
    const T* a = A + static_cast<std::size_t>(i) * K;
    for (int k = 0; k < K; ++k) {
      const T av = a[k];
      if (av == T(0)) continue;
      const T* b = B + static_cast<std::size_t>(k) * N;
      for (int j = 0; j < N; ++j) c[j] += av * b[j];
    }
  }
}

// C[MxN] (+)= A^T * B with A stored [KxM].
template <typename T>
void gemm_tn(int M, int N, int K, const T* A, const T* B, T* C, bool accumulate) {
  if (!accumulate) std::fill(C, C + static_cast<std::size_t>(M) * N, T(0));
  for (int k = 0; k < K; ++k) {
    const T* a = A + static_cast<std::size_t>(k) * M;
    const T* b = B + static_cast<std::size_t>(k) * N;
    for (int i = 0; i < M; ++i) {
      const T av = a[i];
      if (av == T(0)) continue;
      T* c = C + static_cast<std::size_t>(i) * N;
      for (int j = 0; j < N; ++j) c[j] += av * b[j];
    }
  }
}

template <typename T>
void transpose(int rows, int cols, const T* src, T* dst) {
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) dst[static_cast<std::size_t>(j) * rows + i] = src[static_cast<std::size_t>(i) * cols + j];
  }
}

// C[MxN] (+)= A * B^T with B stored [NxK].
template <typename T>
void gemm_nt(int M, int N, int K, const T* A, const T* B, T* C, bool accumulate, std::vector<T>& scratch) {
  scratch.resize(static_cast<std::size_t>(K) * N);
  transpose(N, K, B, scratch.data());
  gemm_nn(M, N, K, A, scratch.data(), C, accumulate);
}

}  // namespace twa::nn
