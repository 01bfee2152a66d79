#pragma once

// Standard, PGD adversarial, accuracy-aware (A3T) and A3T+ training loops.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "a3t/attacks.hpp"
#include "a3t/data.hpp"
#include "a3t/numcore.hpp"

namespace a3t {

enum class TrainMode { Standard, AT, A3T, A3TPlus };

std::string to_string(TrainMode m);
TrainMode parse_train_mode(const std::string& s);

struct TrainConfig {
  std::size_t epochs = 400;
  std::size_t warmup_epochs = 100;  // epochs of standard training before `mode` kicks in
  double lr = 0.01;
  double momentum = 0.0;
  double weight_decay = 0.0;
  TrainMode mode = TrainMode::Standard;
  PerturbConfig perturb;
  std::size_t batch_size = 1;
  // Step schedule: from `epoch` (0-based) on, lr is multiplied by the
  // product of all multipliers whose epoch has been reached.
  std::vector<std::pair<std::size_t, double>> lr_schedule;
  std::uint64_t seed = 0;
  // Adds the clean loss to the adversarial loss instead of replacing it.
  bool additive_clean_loss = false;
  // Per-epoch robust accuracy on the training rows costs one extra attack
  // per row; off leaves robust_acc at 0 in the records.
  bool track_robust = true;
  // Keep x + delta for every adversarial example of every n-th
  // adversarial epoch, counting so that the final epoch of each block of n
  // is recorded (0 disables).
  std::size_t record_adversarial_every = 0;

  void validate() const;
  double lr_at(std::size_t epoch) const;
};

struct A3TPlusConfig {
  double ls_weight_c = 1.0;     // label-smoothing factor c
  double dirichlet_beta = 1.0;  // Dirichlet concentration
  double mm_step_eta = 0.05;    // margin step
  double eps_max = 0.4;         // per-sample budget cap

  void validate() const;
};

struct EpochRecord {
  double train_loss = 0.0;
  double natural_acc = 0.0;
  double robust_acc = 0.0;
};

struct AdversarialSample {
  std::size_t epoch = 0;
  std::size_t row = 0;
  std::vector<double> point;  // x + delta
};

struct RunResult {
  ModelParams model;
  std::vector<EpochRecord> epochs;
  std::vector<double> sample_eps;  // A3T+ only: final per-row budgets
  std::vector<AdversarialSample> adversarial;
};

class TrainingAborted : public std::runtime_error {
 public:
  TrainingAborted(const std::string& what, std::size_t epoch, std::size_t row)
      : std::runtime_error(what), epoch_(epoch), row_(row) {}
  std::size_t epoch() const { return epoch_; }
  std::size_t row() const { return row_; }

 private:
  std::size_t epoch_;
  std::size_t row_;
};

// ỹ = (1 - c eps_i) onehot(label) + c eps_i d,  d ~ Dirichlet(beta 1_K).
// A zero weight returns the exact one-hot vector without drawing.
LabelDist smooth_label(std::size_t label, double eps_i, const A3TPlusConfig& plus,
                       Rng& rng, std::size_t classes);

// Trains from `initial` (its spec must match the dataset).
RunResult train(const Dataset& ds, const ModelParams& initial, const TrainConfig& cfg,
                const std::optional<A3TPlusConfig>& plus = std::nullopt);

// Initializes parameters from cfg.seed, then trains.
RunResult train(const Dataset& ds, const NetworkSpec& spec, const TrainConfig& cfg,
                const std::optional<A3TPlusConfig>& plus = std::nullopt);

}  // namespace a3t
