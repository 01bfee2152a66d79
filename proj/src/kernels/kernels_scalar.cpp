#include <algorithm>

#include "a3t/kernels.hpp"

namespace a3t::kernels {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void add_scalar(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

void sgd_momentum_scalar(double* p, double* v, const double* grad, double lr,
                         double momentum, double weight_decay, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double d = grad[i] + weight_decay * p[i];
    v[i] = momentum * v[i] + d;
    p[i] -= lr * v[i];
  }
}

void signed_step_project_scalar(double* delta, const double* grad, double alpha,
                                double eps, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double g = grad[i];
    const double s = g > 0.0 ? alpha : (g < 0.0 ? -alpha : 0.0);
    delta[i] = std::clamp(delta[i] + s, -eps, eps);
  }
}

void clamp_scalar(double* delta, double eps, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) delta[i] = std::clamp(delta[i], -eps, eps);
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{
      "scalar",          dot_scalar,
      axpy_scalar,       add_scalar,
      sgd_momentum_scalar, signed_step_project_scalar,
      clamp_scalar,
  };
  return table;
}

}  // namespace a3t::kernels
