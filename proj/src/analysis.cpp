#include "a3t/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "a3t/kernels.hpp"
#include "a3t/parallel.hpp"

namespace a3t {
namespace {

void require_rows(const ModelParams& model, const Dataset& ds) {
  if (ds.size() == 0) throw std::invalid_argument("cannot evaluate on an empty dataset");
  if (ds.dim() != model.spec.input_dim()) {
    throw DimensionError("dataset dimension does not match model input");
  }
}

double plain_dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

}  // namespace

double natural_accuracy(const ModelParams& model, const Dataset& ds) {
  require_rows(model, ds);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (argmax(forward(model, ds.row(i))) == ds.labels[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(ds.size());
}

double robust_accuracy(const ModelParams& model, const Dataset& ds,
                       const PerturbConfig& cfg) {
  require_rows(model, ds);
  Rng rng(cfg.seed);
  std::vector<double> shifted(ds.dim());
  std::size_t hits = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto x = ds.row(i);
    const auto p = pgd(model, x, ds.labels[i], cfg, rng);
    kernels::add(x, p.delta, shifted);
    if (argmax(forward(model, shifted)) == ds.labels[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(ds.size());
}

EvalReport evaluate(const ModelParams& model, const Dataset& ds,
                    const std::vector<PerturbConfig>& attacks) {
  require_rows(model, ds);
  EvalReport r;
  r.correct.resize(ds.size());
  std::size_t hits = 0;
  double total = 0.0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto logits = forward(model, ds.row(i));
    r.correct[i] = argmax(logits) == ds.labels[i];
    hits += r.correct[i] ? 1 : 0;
    total += cross_entropy(logits, LabelDist::one_hot(ds.labels[i], logits.size()));
  }
  r.natural_acc = static_cast<double>(hits) / static_cast<double>(ds.size());
  r.mean_loss = total / static_cast<double>(ds.size());
  for (const auto& a : attacks) r.robust_acc.push_back(robust_accuracy(model, ds, a));
  return r;
}

BoundaryBand boundary_band(const ModelParams& model, const Box2& region,
                           std::size_t grid_res, double lo, double hi,
                           const ProjectionMap* projection) {
  if (!(lo < hi)) throw std::invalid_argument("band needs lo < hi");
  if (grid_res < 2) throw std::invalid_argument("grid resolution must be >= 2");
  BoundaryBand band;
  const double step_x = (region.x_max - region.x_min) / static_cast<double>(grid_res - 1);
  const double step_y = (region.y_max - region.y_min) / static_cast<double>(grid_res - 1);
  std::vector<double> point(2);
  for (std::size_t j = 0; j < grid_res; ++j) {
    for (std::size_t i = 0; i < grid_res; ++i) {
      point[0] = region.x_min + step_x * static_cast<double>(i);
      point[1] = region.y_min + step_y * static_cast<double>(j);
      const auto probs = projection ? predict(model, projection->lift(point)).probs
                                    : predict(model, point).probs;
      const double top = *std::max_element(probs.begin(), probs.end());
      if (top >= lo && top <= hi) band.points.push_back({point[0], point[1], top});
    }
  }
  return band;
}

double corner_oracle_max_loss(std::span<const double> theta, double b,
                              std::span<const double> x, int y_pm, double eps,
                              Rng& rng) {
  const std::size_t d = theta.size();
  const double y = static_cast<double>(y_pm);
  const double f = plain_dot(theta, x) + b;
  auto loss_for = [&](const std::vector<double>& corner) {
    return logistic_loss(y * (f + plain_dot(theta, corner)));
  };
  std::vector<double> corner(d);
  double best = -1.0;
  if (d <= 12) {
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << d); ++mask) {
      for (std::size_t i = 0; i < d; ++i) corner[i] = (mask >> i) & 1 ? eps : -eps;
      best = std::max(best, loss_for(corner));
    }
    return best;
  }
  // One generator output supplies 64 signs.
  auto random_corner = [&] {
    std::uint64_t bits = 0;
    for (std::size_t i = 0; i < d; ++i) {
      if (i % 64 == 0) bits = rng();
      corner[i] = (bits >> (i % 64)) & 1 ? eps : -eps;
    }
  };
  for (int k = 0; k < 2048; ++k) {
    random_corner();
    best = std::max(best, loss_for(corner));
  }
  // Local search: flip coordinates while any single flip improves. The
  // shift theta.corner is updated incrementally per flip.
  random_corner();
  double shift = plain_dot(theta, corner);
  double current = logistic_loss(y * (f + shift));
  for (bool improved = true; improved;) {
    improved = false;
    for (std::size_t i = 0; i < d; ++i) {
      const double moved = shift - 2.0 * theta[i] * corner[i];
      const double trial = logistic_loss(y * (f + moved));
      if (trial > current) {
        corner[i] = -corner[i];
        shift = moved;
        current = trial;
        improved = true;
      }
    }
  }
  return std::max(best, current);
}

LinearWorstCaseReport verify_linear_worst_case(std::size_t trials, std::size_t dim, double eps,
                               std::uint64_t seed, bool swap_roles) {
  if (trials == 0) throw std::invalid_argument("need at least one trial");
  if (dim == 0) throw std::invalid_argument("dimension must be >= 1");
  if (!(eps >= 0.0)) throw std::invalid_argument("eps must be >= 0");
  Rng rng(seed);
  Rng oracle_rng(derive_seed(seed, 1));
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  LinearWorstCaseReport rep;
  rep.dim = dim;
  rep.eps = eps;
  std::vector<double> theta(dim);
  std::vector<double> x(dim);
  const std::size_t max_draws = 1000 * trials + 1000;
  std::size_t draws = 0;
  while (rep.trials < trials) {
    if (++draws > max_draws) {
      throw std::runtime_error("rejection sampling failed to find misclassified instances");
    }
    for (double& t : theta) t = gauss(rng);
    for (double& v : x) v = gauss(rng);
    const double b = gauss(rng);
    const int y = coin(rng) ? 1 : -1;
    double l1 = 0.0;
    for (double t : theta) l1 += std::abs(t);
    const double f = plain_dot(theta, x) + b;
    if (l1 < 1e-9 || static_cast<double>(y) * f >= 0.0) {
      ++rep.rejected_draws;
      continue;
    }
    ++rep.trials;
    const auto d_true = linear_inner_max(theta, b, x, y, eps).delta;
    const auto d_pred = linear_inner_max(theta, b, x, -y, eps).delta;
    const double dist_true = std::abs(f + plain_dot(theta, d_true));
    const double dist_pred = std::abs(f + plain_dot(theta, d_pred));
    const bool holds = swap_roles ? dist_true <= dist_pred : dist_pred <= dist_true;
    if (!holds) ++rep.violations;
    const double ratio = swap_roles ? dist_true / dist_pred : dist_pred / dist_true;
    if (std::isfinite(ratio)) rep.max_ratio = std::max(rep.max_ratio, ratio);

    // Closed form vs corner enumeration, for both labels.
    for (int label : {y, -y}) {
      const auto& d = label == y ? d_true : d_pred;
      const double closed = logistic_loss(static_cast<double>(label) *
                                          (f + plain_dot(theta, d)));
      const double oracle = corner_oracle_max_loss(theta, b, x, label, eps, oracle_rng);
      rep.max_oracle_gap = std::max(rep.max_oracle_gap, oracle - closed);
    }
  }
  return rep;
}

std::vector<PerturbConfig> standard_attack_grid(std::uint64_t seed) {
  std::vector<PerturbConfig> grid;
  std::uint64_t k = 0;
  for (double sigma : {0.05, 0.1}) {
    for (double alpha : {0.2, 0.1, 0.05}) {
      for (double eps : {0.2, 0.4}) {
        PerturbConfig c;
        c.init_sigma = sigma;
        c.step_alpha = alpha;
        c.budget_eps = eps;
        c.steps = 5;
        c.seed = derive_seed(seed, k++);
        grid.push_back(c);
      }
    }
  }
  return grid;
}

GridResult grid_search(const Dataset& train_ds, const Dataset& test_ds,
                       const NetworkSpec& spec, const std::vector<TrainSetup>& train_cfgs,
                       const std::vector<PerturbConfig>& attack_cfgs,
                       const std::vector<std::uint64_t>& seeds, std::size_t jobs,
                       const ModelHook& on_model) {
  if (train_cfgs.empty() || attack_cfgs.empty() || seeds.empty()) {
    throw std::invalid_argument("grid search needs configs, attacks and seeds");
  }
  const std::size_t n_train = train_cfgs.size();
  const std::size_t n_attack = attack_cfgs.size();
  const std::size_t n_seed = seeds.size();
  // natural[t][s], robust[t][s][a]
  std::vector<double> natural(n_train * n_seed);
  std::vector<double> robust(n_train * n_seed * n_attack);
  parallel_for(n_train * n_seed, jobs, [&](std::size_t task) {
    const std::size_t t = task / n_seed;
    const std::size_t s = task % n_seed;
    TrainConfig cfg = train_cfgs[t].train;
    cfg.seed = seeds[s];
    const RunResult run = train(train_ds, spec, cfg, train_cfgs[t].plus);
    if (on_model) on_model(t, s, run.model);
    natural[task] = natural_accuracy(run.model, test_ds);
    for (std::size_t a = 0; a < n_attack; ++a) {
      robust[task * n_attack + a] = robust_accuracy(run.model, test_ds, attack_cfgs[a]);
    }
  });

  GridResult out;
  for (std::size_t t = 0; t < n_train; ++t) {
    double nat = 0.0;
    for (std::size_t s = 0; s < n_seed; ++s) nat += natural[t * n_seed + s];
    nat /= static_cast<double>(n_seed);
    double rob_total = 0.0;
    for (std::size_t a = 0; a < n_attack; ++a) {
      double rob = 0.0;
      for (std::size_t s = 0; s < n_seed; ++s) rob += robust[(t * n_seed + s) * n_attack + a];
      rob /= static_cast<double>(n_seed);
      rob_total += rob;
      out.cells.push_back({t, a, nat, rob});
    }
    out.natural_mean.push_back(nat);
    out.under_attack_mean.push_back(rob_total / static_cast<double>(n_attack));
  }
  return out;
}

double max_relative_error(const GradBundle& a, const GradBundle& b, double floor) {
  double worst = 0.0;
  auto visit = [&](std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw DimensionError("gradient bundles differ in shape");
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double scale = std::max({std::abs(x[i]), std::abs(y[i]), floor});
      worst = std::max(worst, std::abs(x[i] - y[i]) / scale);
    }
  };
  if (a.weights.size() != b.weights.size()) throw DimensionError("gradient bundles differ in depth");
  for (std::size_t l = 0; l < a.weights.size(); ++l) {
    visit(a.weights[l].values(), b.weights[l].values());
    visit(a.biases[l], b.biases[l]);
  }
  visit(a.input, b.input);
  return worst;
}

namespace {

// Smallest |pre-activation| over the hidden layers at x.
double distance_to_kink(const ModelParams& m, std::span<const double> x) {
  std::vector<double> h(x.begin(), x.end());
  double best = INFINITY;
  for (std::size_t l = 0; l + 1 < m.weights.size(); ++l) {
    const Matrix& w = m.weights[l];
    std::vector<double> z(w.rows());
    for (std::size_t r = 0; r < w.rows(); ++r) {
      const double pre = plain_dot(w.row(r), h) + m.biases[l][r];
      best = std::min(best, std::abs(pre));
      z[r] = std::max(0.0, pre);
    }
    h = std::move(z);
  }
  return best;
}

}  // namespace

GradCheckReport gradient_check(std::size_t nets, std::uint64_t seed, double h) {
  if (nets == 0) throw std::invalid_argument("need at least one network");
  if (!(h > 0.0)) throw std::invalid_argument("step must be > 0");
  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> width(1, 6);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> mass(0.05, 1.0);
  GradCheckReport rep;
  for (std::size_t i = 0; i < nets; ++i) {
    const std::size_t k = 2 + i % 3;
    const NetworkSpec spec{{width(rng), width(rng) + 1, k},
                           i % 2 ? Activation::Tanh : Activation::ReLU};
    const ModelParams m = ModelParams::random(spec, rng);
    std::vector<double> x(spec.input_dim());
    do {
      for (double& v : x) v = gauss(rng);
    } while (spec.hidden_activation == Activation::ReLU && distance_to_kink(m, x) < 1e-3);
    LabelDist t;
    if (i % 3 == 0) {
      t.probs.resize(k);
      double s = 0.0;
      for (double& p : t.probs) s += (p = mass(rng));
      for (double& p : t.probs) p /= s;
    } else {
      t = LabelDist::one_hot(std::uniform_int_distribution<std::size_t>(0, k - 1)(rng), k);
    }
    const double err = max_relative_error(grads(m, x, t), fd_grads(m, x, t, h));
    rep.rows.push_back({spec, err});
    rep.worst = std::max(rep.worst, err);
  }
  return rep;
}

double rate_mse(std::span<const double> predicted, std::span<const double> actual) {
  if (predicted.size() != actual.size()) {
    throw std::invalid_argument("rate vectors differ in length");
  }
  if (predicted.empty()) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double d = predicted[i] - actual[i];
    acc += d * d;
  }
  return acc / static_cast<double>(predicted.size());
}

MetricSummary summarize(std::span<const double> values) {
  MetricSummary m;
  if (values.empty()) return m;
  const double n = static_cast<double>(values.size());
  m.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - m.mean) * (v - m.mean);
    m.stddev = std::sqrt(ss / (n - 1.0));
  }
  return m;
}

RunSummary aggregate_runs(const std::vector<RunResult>& results, const Dataset& test,
                          const PerturbConfig& attack) {
  if (results.empty()) throw std::invalid_argument("no runs to aggregate");
  std::vector<double> nat;
  std::vector<double> rob;
  for (const auto& r : results) {
    nat.push_back(natural_accuracy(r.model, test));
    rob.push_back(robust_accuracy(r.model, test, attack));
  }
  return {summarize(nat), summarize(rob)};
}

}  // namespace a3t
