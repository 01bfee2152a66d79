#pragma once

// Data-parallel inner loops used by the network and attack code.
//
// Every kernel has a scalar reference implementation and, on x86-64, an
// AVX2 variant. The active table is chosen once per process from CPU
// features; setting A3T_SIMD=scalar in the environment forces the
// reference path. Elementwise kernels produce equal values across variants (signed zeros
// aside).
// Reductions (dot) may differ in the last bits because lane-wise partial
// sums are combined in a different order.

#include <cstddef>
#include <span>
#include <string_view>

namespace a3t::kernels {

struct KernelTable {
  std::string_view name;

  // sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // out[i] = a[i] + b[i]
  void (*add)(const double* a, const double* b, double* out, std::size_t n);
  // d = grad[i] + wd * p[i]; v[i] = momentum * v[i] + d; p[i] -= lr * v[i]
  void (*sgd_momentum)(double* p, double* v, const double* grad, double lr,
                       double momentum, double weight_decay, std::size_t n);
  // delta[i] = clamp(delta[i] + alpha * sgn(grad[i]), -eps, eps), sgn(0) = 0
  void (*signed_step_project)(double* delta, const double* grad, double alpha,
                              double eps, std::size_t n);
  // delta[i] = clamp(delta[i], -eps, eps)
  void (*clamp)(double* delta, double eps, std::size_t n);
};

const KernelTable& scalar_table();

// Null when the build or the CPU lacks AVX2+FMA.
const KernelTable* avx2_table();

// The table selected for this process.
const KernelTable& active();

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), x.size());
}

inline void add(std::span<const double> a, std::span<const double> b,
                std::span<double> out) {
  active().add(a.data(), b.data(), out.data(), a.size());
}

}  // namespace a3t::kernels
