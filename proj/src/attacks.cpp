#include "a3t/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "a3t/kernels.hpp"

namespace a3t {

void PerturbConfig::validate() const {
  if (!(budget_eps >= 0.0) || !std::isfinite(budget_eps)) {
    throw std::invalid_argument("perturbation budget must be finite and >= 0");
  }
  if (steps > 0 && !(step_alpha > 0.0)) {
    throw std::invalid_argument("PGD step size must be > 0 when steps > 0");
  }
  if (!(init_sigma >= 0.0) || !std::isfinite(init_sigma)) {
    throw std::invalid_argument("init sigma must be finite and >= 0");
  }
}

double Perturbation::linf_norm() const {
  double m = 0.0;
  for (double d : delta) m = std::max(m, std::abs(d));
  return m;
}

std::vector<double> project_linf(std::span<const double> delta, double eps) {
  if (!(eps >= 0.0)) throw std::invalid_argument("projection radius must be >= 0");
  std::vector<double> out(delta.begin(), delta.end());
  kernels::active().clamp(out.data(), eps, out.size());
  return out;
}

Perturbation fgsm(const ModelParams& model, std::span<const double> x,
                  std::size_t label, double alpha) {
  if (!(alpha >= 0.0)) throw std::invalid_argument("FGSM step must be >= 0");
  const auto g =
      input_gradient(model, x, LabelDist::one_hot(label, model.spec.class_count()));
  Perturbation p;
  p.delta.resize(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    p.delta[i] = g[i] > 0.0 ? alpha : (g[i] < 0.0 ? -alpha : 0.0);
  }
  return p;
}

Perturbation pgd_toward(const ModelParams& model, std::span<const double> x,
                        const LabelDist& target, double eps,
                        const PerturbConfig& cfg, Rng& rng) {
  cfg.validate();
  if (!(eps >= 0.0)) throw std::invalid_argument("perturbation budget must be >= 0");
  if (x.size() != model.spec.input_dim()) {
    throw DimensionError("input dimension does not match model");
  }
  const auto& k = kernels::active();
  const std::size_t n = x.size();
  Perturbation p;
  p.delta.assign(n, 0.0);
  if (cfg.init_sigma > 0.0) {
    std::normal_distribution<double> noise(0.0, cfg.init_sigma);
    for (double& d : p.delta) d = noise(rng);
    k.clamp(p.delta.data(), eps, n);
  }
  std::vector<double> shifted(n);
  for (std::size_t s = 0; s < cfg.steps; ++s) {
    k.add(x.data(), p.delta.data(), shifted.data(), n);
    const auto g = input_gradient(model, shifted, target);
    if (cfg.signed_step) {
      k.signed_step_project(p.delta.data(), g.data(), cfg.step_alpha, eps, n);
    } else {
      k.axpy(cfg.step_alpha, g.data(), p.delta.data(), n);
      k.clamp(p.delta.data(), eps, n);
    }
  }
  return p;
}

Perturbation pgd(const ModelParams& model, std::span<const double> x,
                 std::size_t attack_label, const PerturbConfig& cfg, Rng& rng) {
  const std::size_t classes = model.spec.class_count();
  if (attack_label >= classes) {
    throw std::invalid_argument("attack label out of range");
  }
  return pgd_toward(model, x, LabelDist::one_hot(attack_label, classes),
                    cfg.budget_eps, cfg, rng);
}

Perturbation a3t_perturb(const ModelParams& model, std::span<const double> x,
                         const PerturbConfig& cfg, Rng& rng) {
  const std::size_t predicted = predict(model, x).label;
  return pgd(model, x, predicted, cfg, rng);
}

Perturbation linear_inner_max(std::span<const double> theta, double /*b*/,
                              std::span<const double> x, int y_pm, double eps) {
  if (!(eps >= 0.0)) throw std::invalid_argument("perturbation budget must be >= 0");
  if (y_pm != 1 && y_pm != -1) throw std::invalid_argument("label must be +1 or -1");
  if (theta.size() != x.size()) throw DimensionError("theta and x differ in length");
  Perturbation p;
  p.delta.resize(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double s = theta[i] > 0.0 ? 1.0 : (theta[i] < 0.0 ? -1.0 : 0.0);
    p.delta[i] = -static_cast<double>(y_pm) * eps * s;
  }
  return p;
}

double logistic_loss(double margin) {
  return margin > 0.0 ? std::log1p(std::exp(-margin)) : -margin + std::log1p(std::exp(margin));
}

}  // namespace a3t
