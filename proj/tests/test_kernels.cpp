#include <cmath>
#include <random>
#include <vector>

#include "a3t/kernels.hpp"
#include "doctest.h"

using a3t::kernels::KernelTable;

namespace {

std::vector<double> noise(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = g(rng);
  return v;
}

// Every SIMD table compiled in and supported here.
std::vector<const KernelTable*> simd_tables() {
  std::vector<const KernelTable*> out;
  if (const auto* t = a3t::kernels::avx2_table()) out.push_back(t);
  return out;
}

}  // namespace

TEST_CASE("active table is one of the known variants") {
  const auto& active = a3t::kernels::active();
  const bool known = &active == &a3t::kernels::scalar_table() ||
                     &active == a3t::kernels::avx2_table();
  CHECK(known);
  MESSAGE("active kernels: " << active.name);
}

TEST_CASE("scalar reference kernels") {
  const auto& k = a3t::kernels::scalar_table();
  const std::vector<double> a{1, 2, 3};
  const std::vector<double> b{4, -5, 6};
  CHECK(k.dot(a.data(), b.data(), 3) == 12.0);
  CHECK(k.dot(a.data(), b.data(), 0) == 0.0);

  std::vector<double> y{1, 1, 1};
  k.axpy(2.0, a.data(), y.data(), 3);
  CHECK(y == std::vector<double>{3, 5, 7});

  std::vector<double> d{0.3, -0.3, 0.0, 0.1};
  const std::vector<double> g{1.0, -2.0, 0.0, -1.0};
  k.signed_step_project(d.data(), g.data(), 0.2, 0.4, 4);
  CHECK(d[0] == doctest::Approx(0.4));
  CHECK(d[1] == doctest::Approx(-0.4));
  CHECK(d[2] == 0.0);
  CHECK(d[3] == doctest::Approx(-0.1));

  std::vector<double> p{1.0};
  std::vector<double> v{0.0};
  const std::vector<double> grad{0.5};
  k.sgd_momentum(p.data(), v.data(), grad.data(), 0.1, 0.9, 0.0, 1);
  CHECK(p[0] == doctest::Approx(0.95));
  CHECK(v[0] == doctest::Approx(0.5));
}

TEST_CASE("SIMD variants agree with the scalar reference") {
  const auto tables = simd_tables();
  if (tables.empty()) {
    MESSAGE("no SIMD variant available on this machine");
    return;
  }
  const auto& ref = a3t::kernels::scalar_table();
  std::mt19937_64 rng(42);
  for (const KernelTable* simd : tables) {
    CAPTURE(simd->name);
    for (std::size_t n = 0; n <= 67; ++n) {
      CAPTURE(n);
      const auto a = noise(n, rng);
      const auto b = noise(n, rng);

      // Reductions: lane-wise partial sums reorder the additions.
      double mag = 0.0;
      for (std::size_t i = 0; i < n; ++i) mag += std::abs(a[i] * b[i]);
      CHECK(std::abs(simd->dot(a.data(), b.data(), n) - ref.dot(a.data(), b.data(), n)) <=
            1e-14 * mag + 1e-300);

      auto y1 = b;
      auto y2 = b;
      ref.axpy(0.37, a.data(), y1.data(), n);
      simd->axpy(0.37, a.data(), y2.data(), n);
      CHECK(y1 == y2);

      std::vector<double> s1(n), s2(n);
      ref.add(a.data(), b.data(), s1.data(), n);
      simd->add(a.data(), b.data(), s2.data(), n);
      CHECK(s1 == s2);

      auto p1 = a, p2 = a, v1 = b, v2 = b;
      const auto g = noise(n, rng);
      ref.sgd_momentum(p1.data(), v1.data(), g.data(), 0.01, 0.9, 5e-4, n);
      simd->sgd_momentum(p2.data(), v2.data(), g.data(), 0.01, 0.9, 5e-4, n);
      CHECK(p1 == p2);
      CHECK(v1 == v2);

      // Include exact zeros in the gradient to exercise sgn(0) = 0.
      auto grad = g;
      for (std::size_t i = 0; i < n; i += 3) grad[i] = 0.0;
      auto d1 = a, d2 = a;
      ref.signed_step_project(d1.data(), grad.data(), 0.1, 0.4, n);
      simd->signed_step_project(d2.data(), grad.data(), 0.1, 0.4, n);
      CHECK(d1 == d2);

      auto c1 = a, c2 = a;
      ref.clamp(c1.data(), 0.25, n);
      simd->clamp(c2.data(), 0.25, n);
      CHECK(c1 == c2);
    }
  }
}
