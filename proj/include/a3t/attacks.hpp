#pragma once

// L-infinity bounded input perturbations.

#include <cstdint>
#include <span>
#include <vector>

#include "a3t/numcore.hpp"

namespace a3t {

struct PerturbConfig {
  double budget_eps = 0.4;   // L-inf radius
  double step_alpha = 0.1;   // PGD step size
  std::size_t steps = 5;
  double init_sigma = 0.05;  // std-dev of the Gaussian start
  std::uint64_t seed = 0;
  // Ascent direction: sgn(grad) when true, the raw gradient otherwise.
  bool signed_step = true;

  void validate() const;
};

struct Perturbation {
  std::vector<double> delta;

  double linf_norm() const;
};

std::vector<double> project_linf(std::span<const double> delta, double eps);

Perturbation fgsm(const ModelParams& model, std::span<const double> x,
                  std::size_t label, double alpha);

// Gaussian start projected into the ball, then `steps` ascent steps on
// the loss against `target`, each followed by projection onto [-eps, eps].
// `eps` overrides cfg.budget_eps so callers can use per-sample budgets.
Perturbation pgd_toward(const ModelParams& model, std::span<const double> x,
                        const LabelDist& target, double eps,
                        const PerturbConfig& cfg, Rng& rng);

Perturbation pgd(const ModelParams& model, std::span<const double> x,
                 std::size_t attack_label, const PerturbConfig& cfg, Rng& rng);

// PGD against the model's own prediction on the clean input. For a
// correctly classified input this is exactly pgd() against the true label.
Perturbation a3t_perturb(const ModelParams& model, std::span<const double> x,
                         const PerturbConfig& cfg, Rng& rng);

// Closed-form maximizer of the logistic loss log(1 + exp(-y (theta.x + b)))
// over the L-inf ball: delta = -y * eps * sgn(theta).
Perturbation linear_inner_max(std::span<const double> theta, double b,
                              std::span<const double> x, int y_pm, double eps);

// log(1 + exp(-margin)), stable for large |margin|.
double logistic_loss(double margin);

}  // namespace a3t
