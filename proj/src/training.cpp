#include "a3t/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "a3t/kernels.hpp"

namespace a3t {

std::string to_string(TrainMode m) {
  switch (m) {
    case TrainMode::Standard:
      return "standard";
    case TrainMode::AT:
      return "at";
    case TrainMode::A3T:
      return "a3t";
    case TrainMode::A3TPlus:
      return "a3t+";
  }
  return "?";
}

TrainMode parse_train_mode(const std::string& s) {
  if (s == "standard") return TrainMode::Standard;
  if (s == "at") return TrainMode::AT;
  if (s == "a3t") return TrainMode::A3T;
  if (s == "a3t+" || s == "a3tplus") return TrainMode::A3TPlus;
  throw std::invalid_argument("unknown training mode '" + s + "'");
}

void TrainConfig::validate() const {
  if (warmup_epochs > epochs) {
    throw std::invalid_argument("warmup_epochs exceeds epochs");
  }
  if (!(lr > 0.0)) throw std::invalid_argument("learning rate must be > 0");
  if (batch_size == 0) throw std::invalid_argument("batch_size must be >= 1");
  if (!(momentum >= 0.0) || !(weight_decay >= 0.0)) {
    throw std::invalid_argument("momentum and weight decay must be >= 0");
  }
  for (const auto& [epoch, mult] : lr_schedule) {
    if (!(mult > 0.0)) throw std::invalid_argument("lr multipliers must be > 0");
  }
  perturb.validate();
}

double TrainConfig::lr_at(std::size_t epoch) const {
  double r = lr;
  for (const auto& [start, mult] : lr_schedule) {
    if (epoch >= start) r *= mult;
  }
  return r;
}

void A3TPlusConfig::validate() const {
  if (!(ls_weight_c >= 0.0)) throw std::invalid_argument("label-smoothing factor must be >= 0");
  if (!(eps_max > 0.0)) throw std::invalid_argument("eps_max must be > 0");
  if (!(mm_step_eta > 0.0)) throw std::invalid_argument("margin step must be > 0");
  if (!(dirichlet_beta > 0.0)) throw std::invalid_argument("Dirichlet beta must be > 0");
  if (ls_weight_c * eps_max > 1.0) {
    throw std::invalid_argument("label-smoothing weight c * eps_max exceeds 1");
  }
}

LabelDist smooth_label(std::size_t label, double eps_i, const A3TPlusConfig& plus,
                       Rng& rng, std::size_t classes) {
  const double w = plus.ls_weight_c * eps_i;
  if (!(w >= 0.0) || w > 1.0) {
    throw std::invalid_argument("smoothing weight c * eps_i = " + std::to_string(w) +
                                " outside [0, 1]");
  }
  LabelDist out = LabelDist::one_hot(label, classes);
  if (w == 0.0) return out;
  std::gamma_distribution<double> gamma(plus.dirichlet_beta, 1.0);
  std::vector<double> d(classes);
  double total = 0.0;
  for (double& v : d) {
    v = gamma(rng);
    total += v;
  }
  if (!(total > 0.0)) {
    // Every gamma draw underflowed (tiny beta); fall back to uniform.
    std::fill(d.begin(), d.end(), 1.0);
    total = static_cast<double>(classes);
  }
  for (std::size_t k = 0; k < classes; ++k) {
    out.probs[k] = (1.0 - w) * out.probs[k] + w * (d[k] / total);
  }
  return out;
}

namespace {

struct EvalCounts {
  double natural = 0.0;
  double robust = 0.0;
};

EvalCounts evaluate_train(const ModelParams& model, const Dataset& ds,
                          const TrainConfig& cfg, std::size_t epoch) {
  EvalCounts c;
  Rng rng(derive_seed(cfg.perturb.seed, epoch));
  std::vector<double> shifted(ds.dim());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto x = ds.row(i);
    if (predict(model, x).label == ds.labels[i]) c.natural += 1.0;
    if (cfg.track_robust) {
      const auto p = pgd(model, x, ds.labels[i], cfg.perturb, rng);
      kernels::add(x, p.delta, shifted);
      if (predict(model, shifted).label == ds.labels[i]) c.robust += 1.0;
    }
  }
  const double n = static_cast<double>(ds.size());
  c.natural /= n;
  c.robust /= n;
  return c;
}

}  // namespace

RunResult train(const Dataset& ds, const ModelParams& initial, const TrainConfig& cfg,
                const std::optional<A3TPlusConfig>& plus) {
  cfg.validate();
  ds.validate();
  initial.validate();
  if (ds.size() == 0) throw std::invalid_argument("training set is empty");
  if (ds.dim() != initial.spec.input_dim()) {
    throw DimensionError("dataset dimension does not match network input");
  }
  if (ds.class_count > initial.spec.class_count()) {
    throw DimensionError("dataset has more classes than the network outputs");
  }
  if ((cfg.mode == TrainMode::A3TPlus) != plus.has_value()) {
    throw std::invalid_argument("A3T+ settings must be given exactly when mode is a3t+");
  }
  if (plus) plus->validate();

  const std::size_t n = ds.size();
  const std::size_t classes = initial.spec.class_count();
  RunResult result;
  result.model = initial;
  ModelParams& model = result.model;
  SgdState state = SgdState::zeros_like(model);
  Rng rng(derive_seed(cfg.seed, 1));
  if (cfg.mode == TrainMode::A3TPlus) result.sample_eps.assign(n, 0.0);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> shifted(ds.dim());

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    const bool adversarial = epoch >= cfg.warmup_epochs && cfg.mode != TrainMode::Standard;
    const bool record = adversarial && cfg.record_adversarial_every > 0 &&
                        (epoch - cfg.warmup_epochs + 1) % cfg.record_adversarial_every == 0;
    const double lr = cfg.lr_at(epoch);
    double epoch_loss = 0.0;

    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t stop = std::min(n, start + cfg.batch_size);
      // All perturbations of a batch see the parameters from before its step.
      GradBundle batch = GradBundle::zeros_like(model);
      for (std::size_t pos = start; pos < stop; ++pos) {
        const std::size_t row = order[pos];
        const auto x = ds.row(row);
        const std::size_t y = ds.labels[row];
        LabelDist outer = LabelDist::one_hot(y, classes);
        std::span<const double> input = x;

        if (adversarial) {
          Perturbation p;
          switch (cfg.mode) {
            case TrainMode::AT:
              p = pgd(model, x, y, cfg.perturb, rng);
              break;
            case TrainMode::A3T:
              p = a3t_perturb(model, x, cfg.perturb, rng);
              break;
            case TrainMode::A3TPlus: {
              double& eps_i = result.sample_eps[row];
              const std::size_t predicted = predict(model, x).label;
              const LabelDist inner = smooth_label(predicted, eps_i, *plus, rng, classes);
              // The trial budget is capped so eps_i never leaves [0, eps_max].
              const double trial = eps_i + plus->mm_step_eta;
              const double budget = std::min(trial, plus->eps_max);
              p = pgd_toward(model, x, inner, budget, cfg.perturb, rng);
              kernels::add(x, p.delta, shifted);
              const bool fooled = argmax(forward(model, shifted)) != y;
              eps_i = std::min(plus->eps_max, fooled ? trial - plus->mm_step_eta : trial);
              outer = smooth_label(y, eps_i, *plus, rng, classes);
              break;
            }
            case TrainMode::Standard:
              break;
          }
          kernels::add(x, p.delta, shifted);
          input = shifted;
          if (record) result.adversarial.push_back({epoch, row, shifted});
        }

        auto lg = loss_and_grads(model, input, outer);
        if (adversarial && cfg.additive_clean_loss) {
          auto clean = loss_and_grads(model, x, outer);
          lg.loss += clean.loss;
          lg.grads.accumulate(clean.grads);
        }
        if (!std::isfinite(lg.loss) || !lg.grads.all_finite()) {
          throw TrainingAborted("non-finite loss at epoch " + std::to_string(epoch) +
                                    ", row " + std::to_string(row),
                                epoch, row);
        }
        epoch_loss += lg.loss;
        batch.accumulate(lg.grads);
      }
      if (stop - start > 1) batch.scale(1.0 / static_cast<double>(stop - start));
      sgd_step(model, batch, lr, cfg.momentum, cfg.weight_decay, state);
    }

    if (!model.all_finite()) {
      throw TrainingAborted("parameters became non-finite at epoch " + std::to_string(epoch),
                            epoch, 0);
    }
    const auto acc = evaluate_train(model, ds, cfg, epoch);
    result.epochs.push_back({epoch_loss / static_cast<double>(n), acc.natural, acc.robust});
  }
  return result;
}

RunResult train(const Dataset& ds, const NetworkSpec& spec, const TrainConfig& cfg,
                const std::optional<A3TPlusConfig>& plus) {
  Rng init(derive_seed(cfg.seed, 0));
  return train(ds, ModelParams::random(spec, init), cfg, plus);
}

}  // namespace a3t
