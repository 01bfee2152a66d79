#include <cmath>

#include "a3t/analysis.hpp"
#include "doctest.h"

using namespace a3t;

namespace {

Dataset make_dataset(std::vector<double> xs, std::vector<std::size_t> labels, std::size_t dim) {
  Dataset ds;
  ds.features = Matrix(labels.size(), dim, std::move(xs));
  ds.labels = std::move(labels);
  ds.class_count = 2;
  return ds;
}

PerturbConfig exact_linear_attack(double eps) {
  // Enough signed steps to reach the far corner from any start point.
  PerturbConfig c;
  c.budget_eps = eps;
  c.step_alpha = 0.1;
  c.steps = 10;
  c.init_sigma = 0.05;
  c.seed = 77;
  return c;
}

}  // namespace

TEST_CASE("natural_accuracy") {
  SUBCASE("constant predictor on balanced data") {
    const auto toy = gen_linear_toy(40, 0.5, 0.0, 3);
    REQUIRE(toy.data.class_counts() == std::vector<std::size_t>{20, 20});
    const std::vector<double> zero{0.0, 0.0};
    CHECK(natural_accuracy(linear_binary_model(zero, 1.0), toy.data) == 0.5);
  }
  SUBCASE("generating boundary fits the noiseless toy") {
    const auto toy = gen_linear_toy(50, 0.2, 0.0, 4);
    CHECK(natural_accuracy(linear_binary_model(toy.theta, toy.b), toy.data) == 1.0);
  }
  SUBCASE("hand count on 20 rows") {
    // Predicts class 1 when x0 > 0.
    const std::vector<double> theta{1.0, 0.0};
    const auto model = linear_binary_model(theta, 0.0);
    std::vector<double> xs;
    std::vector<std::size_t> labels;
    // 7 true positives, 3 false negatives, 6 true negatives, 4 false positives.
    for (int i = 0; i < 7; ++i) xs.insert(xs.end(), {1.0 + i, 0.0}), labels.push_back(1);
    for (int i = 0; i < 3; ++i) xs.insert(xs.end(), {-1.0 - i, 0.0}), labels.push_back(1);
    for (int i = 0; i < 6; ++i) xs.insert(xs.end(), {-0.5 - i, 2.0}), labels.push_back(0);
    for (int i = 0; i < 4; ++i) xs.insert(xs.end(), {0.5 + i, -2.0}), labels.push_back(0);
    CHECK(natural_accuracy(model, make_dataset(xs, labels, 2)) == doctest::Approx(13.0 / 20.0));
  }
  CHECK_THROWS(natural_accuracy(linear_binary_model(std::vector<double>{1.0, 1.0}, 0.0),
                                make_dataset({}, {}, 2)));
}

TEST_CASE("robust_accuracy") {
  const auto toy = gen_linear_toy(200, 0.05, 0.0, 9);
  const auto model = linear_binary_model(toy.theta, toy.b);
  SUBCASE("zero budget equals natural accuracy") {
    const std::vector<double> theta{0.7, -0.4};
    const auto noisy = gen_linear_toy(100, 0.0, 0.2, 1);
    const auto m = linear_binary_model(theta, 0.1);
    PerturbConfig c = exact_linear_attack(0.0);
    c.init_sigma = 0.3;
    CHECK(robust_accuracy(m, noisy.data, c) == natural_accuracy(m, noisy.data));
  }
  SUBCASE("matches the closed-form margin count and is monotone in eps") {
    double previous = 1.0;
    for (double eps : {0.1, 0.2, 0.4}) {
      std::size_t expected = 0;
      double l1 = 0.0;
      for (double t : toy.theta) l1 += std::abs(t);
      for (std::size_t i = 0; i < toy.data.size(); ++i) {
        const auto x = toy.data.row(i);
        const double f = toy.theta[0] * x[0] + toy.theta[1] * x[1] + toy.b;
        const double y = toy.data.labels[i] == 1 ? 1.0 : -1.0;
        if (y * f - eps * l1 > 0.0) ++expected;
      }
      const double acc = robust_accuracy(model, toy.data, exact_linear_attack(eps));
      CHECK(acc == doctest::Approx(static_cast<double>(expected) / toy.data.size()));
      CHECK(acc <= previous);
      previous = acc;
    }
  }
  SUBCASE("large budget collapses") {
    CHECK(natural_accuracy(model, toy.data) == 1.0);
    PerturbConfig big = exact_linear_attack(2.0);
    big.step_alpha = 0.5;
    CHECK(robust_accuracy(model, toy.data, big) < 0.2);
  }
  SUBCASE("deterministic given the seed") {
    const auto noisy = gen_linear_toy(60, 0.0, 0.1, 2);
    Rng init(5);
    const auto net = ModelParams::random({{2, 6, 2}, Activation::Tanh}, init);
    const auto c = exact_linear_attack(0.3);
    CHECK(robust_accuracy(net, noisy.data, c) == robust_accuracy(net, noisy.data, c));
    const auto report = evaluate(net, noisy.data, {c, exact_linear_attack(0.0)});
    CHECK(report.robust_acc[0] == robust_accuracy(net, noisy.data, c));
    CHECK(report.robust_acc[1] == report.natural_acc);
    CHECK(report.correct.size() == noisy.data.size());
  }
}

TEST_CASE("boundary_band") {
  const std::vector<double> theta{1.0, 1.0};
  const auto model = linear_binary_model(theta, -1.0);
  const Box2 box;
  SUBCASE("linear band hugs the line") {
    const auto band = boundary_band(model, box, 201, 0.49, 0.51);
    REQUIRE_FALSE(band.points.empty());
    const double limit = std::log(0.51 / 0.49) / std::sqrt(2.0);
    for (const auto& p : band.points) {
      CHECK(std::abs(p.x + p.y - 1.0) / std::sqrt(2.0) <= limit + 1e-12);
      const auto probs = predict(model, std::vector<double>{p.x, p.y}).probs;
      const double top = std::max(probs[0], probs[1]);
      CHECK(top == p.top_prob);
      CHECK(top >= 0.49);
      CHECK(top <= 0.51);
    }
  }
  SUBCASE("full band returns the lattice") {
    CHECK(boundary_band(model, box, 17, 0.0, 1.0).points.size() == 17 * 17);
  }
  SUBCASE("saturated model returns nothing") {
    const std::vector<double> steep{50.0, 50.0};
    CHECK(boundary_band(linear_binary_model(steep, -1000.0), box, 50, 0.49, 0.51).points.empty());
  }
  SUBCASE("through a projection") {
    const auto map = ProjectionMap::random(2, 6, 3, 1.0);
    Rng init(2);
    const auto net = ModelParams::random({{6, 5, 2}, Activation::ReLU}, init);
    const auto band = boundary_band(net, box, 60, 0.45, 0.55, &map);
    for (const auto& p : band.points) {
      const auto probs = predict(net, map.lift(std::vector<double>{p.x, p.y})).probs;
      const double top = std::max(probs[0], probs[1]);
      CHECK(top >= 0.45);
      CHECK(top <= 0.55);
    }
  }
  CHECK_THROWS(boundary_band(model, box, 1, 0.4, 0.6));
  CHECK_THROWS(boundary_band(model, box, 10, 0.6, 0.6));
}

TEST_CASE("verify_linear_worst_case") {
  for (std::size_t dim : {2, 10, 100}) {
    for (double eps : {0.1, 0.4}) {
      const auto r = verify_linear_worst_case(dim == 100 ? 200 : 1000, dim, eps, 42 + dim);
      CHECK(r.violations == 0);
      CHECK(r.max_ratio <= 1.0);
      CHECK(r.max_oracle_gap <= 1e-12);
      CHECK(r.rejected_draws > 0);
    }
  }
  const auto flat = verify_linear_worst_case(300, 3, 0.0, 1);
  CHECK(flat.violations == 0);
  CHECK(flat.max_ratio == doctest::Approx(1.0));
  CHECK(verify_linear_worst_case(300, 2, 0.4, 1, true).violations > 0);
  CHECK_THROWS(verify_linear_worst_case(0, 2, 0.4, 1));
  CHECK_THROWS(verify_linear_worst_case(10, 0, 0.4, 1));
}

TEST_CASE("grid search") {
  const auto grid = standard_attack_grid(1);
  CHECK(grid.size() == 12);
  for (const auto& c : grid) {
    CHECK(c.steps == 5);
    CHECK_NOTHROW(c.validate());
  }

  const auto toy = gen_linear_toy(60, 0.2, 0.05, 3);
  const auto split = split_per_class(toy.data, 20, 4);
  const NetworkSpec spec{{2, 6, 2}, Activation::ReLU};
  TrainConfig cfg;
  cfg.epochs = 6;
  cfg.warmup_epochs = 2;
  cfg.mode = TrainMode::A3T;
  cfg.track_robust = false;
  TrainConfig base = cfg;
  base.mode = TrainMode::Standard;

  const auto one = grid_search(split.train, split.test, spec, {{cfg, std::nullopt, "a3t"}},
                               {grid[0]}, {7});
  REQUIRE(one.cells.size() == 1);
  const auto again = grid_search(split.train, split.test, spec, {{cfg, std::nullopt, "a3t"}},
                                 {grid[0]}, {7});
  CHECK(one.cells[0].natural_acc == again.cells[0].natural_acc);
  CHECK(one.cells[0].under_attack_acc == again.cells[0].under_attack_acc);

  const std::vector<TrainSetup> setups{{base, std::nullopt, "standard"}, {cfg, std::nullopt, "a3t"}};
  const auto serial = grid_search(split.train, split.test, spec, setups, grid, {1, 2}, 1);
  const auto threaded = grid_search(split.train, split.test, spec, setups, grid, {1, 2}, 3);
  CHECK(serial.cells.size() == 24);
  for (std::size_t i = 0; i < serial.cells.size(); ++i) {
    CHECK(serial.cells[i].train_id == i / 12);
    CHECK(serial.cells[i].attack_id == i % 12);
    CHECK(serial.cells[i].under_attack_acc == threaded.cells[i].under_attack_acc);
  }
  CHECK(serial.natural_mean == threaded.natural_mean);
  CHECK(serial.under_attack_mean == threaded.under_attack_mean);
  CHECK_THROWS(grid_search(split.train, split.test, spec, setups, grid, {}));
}

TEST_CASE("rate_mse and summaries") {
  const std::vector<double> a{0.1, 0.2, 0.3};
  CHECK(rate_mse(a, a) == 0.0);
  std::vector<double> p(10), q(10);
  for (int i = 0; i < 10; ++i) {
    p[i] = 0.05 * i;
    q[i] = p[i] + 0.01;
  }
  CHECK(rate_mse(p, q) == doctest::Approx(1e-4));
  // (0.1^2 + 0^2 + 0.2^2) / 3
  CHECK(rate_mse(a, std::vector<double>{0.2, 0.2, 0.1}) == doctest::Approx(0.05 / 3.0));
  CHECK_THROWS(rate_mse(a, std::vector<double>{0.1}));

  const std::vector<double> one{0.7};
  CHECK(summarize(one).mean == 0.7);
  CHECK(summarize(one).stddev == 0.0);
  const std::vector<double> same(5, 0.25);
  CHECK(summarize(same).mean == doctest::Approx(0.25));
  CHECK(summarize(same).stddev == doctest::Approx(0.0));
  const std::vector<double> spread{1.0, 2.0, 3.0, 4.0};
  CHECK(summarize(spread).stddev == doctest::Approx(std::sqrt(5.0 / 3.0)));

  const auto toy = gen_linear_toy(40, 0.3, 0.0, 6);
  RunResult r;
  r.model = linear_binary_model(toy.theta, toy.b);
  const auto s1 = aggregate_runs({r}, toy.data, exact_linear_attack(0.1));
  CHECK(s1.natural.mean == 1.0);
  CHECK(s1.natural.stddev == 0.0);
  CHECK(s1.robust.stddev == 0.0);
  const auto s3 = aggregate_runs({r, r, r}, toy.data, exact_linear_attack(0.1));
  CHECK(s3.robust.mean == doctest::Approx(s1.robust.mean));
  CHECK(s3.robust.stddev == doctest::Approx(0.0));
  CHECK_THROWS(aggregate_runs({}, toy.data, exact_linear_attack(0.1)));
}

TEST_CASE("gradient_check") {
  const auto rep = gradient_check(100, 3);
  CHECK(rep.rows.size() == 100);
  CHECK(rep.worst < 1e-4);
  CHECK(gradient_check(5, 9).worst == gradient_check(5, 9).worst);
  CHECK_THROWS(gradient_check(0, 1));

  Rng rng(1);
  const auto m = ModelParams::random({{2, 3, 2}, Activation::Tanh}, rng);
  const std::vector<double> x{0.2, -0.1};
  const auto g = grads(m, x, LabelDist::one_hot(0, 2));
  CHECK(max_relative_error(g, g) == 0.0);
  auto off = g;
  off.input[0] += 1.0;
  CHECK(max_relative_error(g, off) > 0.1);
}
