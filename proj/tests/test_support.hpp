#pragma once

// Test-only oracles and helpers. Nothing here calls into the kernel
// layer, so it stays independent of the code under test.

#include <algorithm>
#include <cmath>
#include <vector>

#include "a3t/numcore.hpp"

namespace a3t::test {

// Straight-line evaluator: nested loops over the raw parameter arrays.
inline std::vector<double> reference_forward(const ModelParams& m,
                                             const std::vector<double>& x) {
  std::vector<double> h = x;
  for (std::size_t l = 0; l < m.weights.size(); ++l) {
    const Matrix& w = m.weights[l];
    std::vector<double> z(w.rows());
    for (std::size_t r = 0; r < w.rows(); ++r) {
      double acc = m.biases[l][r];
      for (std::size_t c = 0; c < w.cols(); ++c) acc += w(r, c) * h[c];
      z[r] = acc;
    }
    if (l + 1 < m.weights.size()) {
      for (double& v : z) {
        v = m.spec.hidden_activation == Activation::ReLU ? std::max(0.0, v) : std::tanh(v);
      }
    }
    h = std::move(z);
  }
  return h;
}

// Smallest |pre-activation| over all hidden units, for kink rejection.
inline double min_hidden_abs(const ModelParams& m, const std::vector<double>& x) {
  std::vector<double> h = x;
  double best = INFINITY;
  for (std::size_t l = 0; l + 1 < m.weights.size(); ++l) {
    const Matrix& w = m.weights[l];
    std::vector<double> z(w.rows());
    for (std::size_t r = 0; r < w.rows(); ++r) {
      double acc = m.biases[l][r];
      for (std::size_t c = 0; c < w.cols(); ++c) acc += w(r, c) * h[c];
      best = std::min(best, std::abs(acc));
      z[r] = std::max(0.0, acc);
    }
    h = std::move(z);
  }
  return best;
}

inline std::vector<double> random_vector(std::size_t n, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  std::vector<double> v(n);
  for (double& x : v) x = g(rng);
  return v;
}

inline LabelDist random_target(std::size_t k, Rng& rng, bool one_hot) {
  if (one_hot) {
    std::uniform_int_distribution<std::size_t> pick(0, k - 1);
    return LabelDist::one_hot(pick(rng), k);
  }
  std::uniform_real_distribution<double> u(0.05, 1.0);
  LabelDist d;
  double s = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    d.probs.push_back(u(rng));
    s += d.probs.back();
  }
  for (double& p : d.probs) p /= s;
  return d;
}

// |a - b| / max(|a|, |b|, floor): relative error with a floor so that
// components that are zero up to round-off compare absolutely.
inline double rel_error(double a, double b, double floor = 1e-6) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

template <typename Fn>
void for_each_component(const GradBundle& a, const GradBundle& b, Fn&& fn) {
  for (std::size_t l = 0; l < a.weights.size(); ++l) {
    const auto wa = a.weights[l].values();
    const auto wb = b.weights[l].values();
    for (std::size_t i = 0; i < wa.size(); ++i) fn(wa[i], wb[i]);
    for (std::size_t i = 0; i < a.biases[l].size(); ++i) fn(a.biases[l][i], b.biases[l][i]);
  }
  for (std::size_t i = 0; i < a.input.size(); ++i) fn(a.input[i], b.input[i]);
}

inline double max_rel_error(const GradBundle& a, const GradBundle& b) {
  double worst = 0.0;
  for_each_component(a, b, [&](double x, double y) { worst = std::max(worst, rel_error(x, y)); });
  return worst;
}

inline double max_abs_error(const GradBundle& a, const GradBundle& b) {
  double worst = 0.0;
  for_each_component(a, b, [&](double x, double y) { worst = std::max(worst, std::abs(x - y)); });
  return worst;
}

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace a3t::test
