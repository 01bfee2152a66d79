#pragma once

// Evaluation and verification: accuracy under attack, the linear-model
// closeness check for predicted-label perturbations, boundary sampling,
// aggregation and the attack-parameter grid.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "a3t/attacks.hpp"
#include "a3t/data.hpp"
#include "a3t/numcore.hpp"
#include "a3t/training.hpp"

namespace a3t {

double natural_accuracy(const ModelParams& model, const Dataset& ds);

// Accuracy on x + pgd(x, true label); one generator seeded from cfg.seed
// walks the rows in order.
double robust_accuracy(const ModelParams& model, const Dataset& ds,
                       const PerturbConfig& cfg);

struct EvalReport {
  double natural_acc = 0.0;
  std::vector<double> robust_acc;  // one per attack config
  double mean_loss = 0.0;          // clean cross-entropy
  std::vector<bool> correct;       // clean correctness per row
};

EvalReport evaluate(const ModelParams& model, const Dataset& ds,
                    const std::vector<PerturbConfig>& attacks);

struct Box2 {
  double x_min = -1.5;
  double x_max = 2.5;
  double y_min = -1.0;
  double y_max = 1.5;
};

struct BandPoint {
  double x = 0.0;
  double y = 0.0;
  double top_prob = 0.0;
};

struct BoundaryBand {
  std::vector<BandPoint> points;
};

// Probes a grid_res x grid_res lattice over `region` (2-d coordinates,
// lifted through `projection` when given) and keeps points whose top-class
// probability lies in [lo, hi].
BoundaryBand boundary_band(const ModelParams& model, const Box2& region,
                           std::size_t grid_res, double lo, double hi,
                           const ProjectionMap* projection = nullptr);

struct LinearWorstCaseReport {
  std::size_t trials = 0;
  std::size_t dim = 0;
  double eps = 0.0;
  std::size_t violations = 0;
  // max over trials of |f(x + delta_pred)| / |f(x + delta_true)|
  double max_ratio = 0.0;
  // max over trials of (best oracle loss - closed-form loss), both labels
  double max_oracle_gap = 0.0;
  std::size_t rejected_draws = 0;
};

// Draws misclassified linear instances and compares the closed-form
// inner maximizer for the true label (delta_true) with the one for the
// flipped label (delta_pred). `swap_roles` checks the reversed inequality
// instead, which generic instances violate.
LinearWorstCaseReport verify_linear_worst_case(std::size_t trials, std::size_t dim, double eps,
                               std::uint64_t seed, bool swap_roles = false);

// Maximum logistic loss over the corners of the L-inf ball: exhaustive up
// to 12 dimensions, otherwise 2048 random corners plus a single-flip hill
// climb from one more random corner.
double corner_oracle_max_loss(std::span<const double> theta, double b,
                              std::span<const double> x, int y_pm, double eps,
                              Rng& rng);

struct GridCell {
  std::size_t train_id = 0;
  std::size_t attack_id = 0;
  double natural_acc = 0.0;
  double under_attack_acc = 0.0;
};

struct TrainSetup {
  TrainConfig train;
  std::optional<A3TPlusConfig> plus;
  std::string label;
};

struct GridResult {
  std::vector<GridCell> cells;  // train-major, averaged over seeds
  // Per train config: mean natural accuracy and mean under-attack
  // accuracy across all attack configs.
  std::vector<double> natural_mean;
  std::vector<double> under_attack_mean;
};

// The 2 x 3 x 2 attack grid: init sigma {0.05, 0.1}, step {0.2, 0.1, 0.05},
// budget {0.2, 0.4}, five steps each.
std::vector<PerturbConfig> standard_attack_grid(std::uint64_t seed = 0);

// Called from worker threads with each trained model; must only touch
// state owned by its (train_id, seed_id) slot.
using ModelHook = std::function<void(std::size_t train_id, std::size_t seed_id, const ModelParams&)>;

GridResult grid_search(const Dataset& train, const Dataset& test, const NetworkSpec& spec,
                       const std::vector<TrainSetup>& train_cfgs,
                       const std::vector<PerturbConfig>& attack_cfgs,
                       const std::vector<std::uint64_t>& seeds, std::size_t jobs = 1,
                       const ModelHook& on_model = nullptr);

// |a - b| / max(|a|, |b|, floor) over every component.
double max_relative_error(const GradBundle& a, const GradBundle& b, double floor = 1e-6);

struct GradCheckRow {
  NetworkSpec spec;
  double max_rel_error = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckRow> rows;
  double worst = 0.0;
};

// Analytic gradients against central differences on `nets` random small
// networks (widths 1..6, 2..4 classes, alternating activations, soft and
// one-hot targets). ReLU inputs closer than 1e-3 to a kink are redrawn.
GradCheckReport gradient_check(std::size_t nets, std::uint64_t seed, double h = 1e-5);

double rate_mse(std::span<const double> predicted, std::span<const double> actual);

struct MetricSummary {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation, 0 for one value
};

MetricSummary summarize(std::span<const double> values);

struct RunSummary {
  MetricSummary natural;
  MetricSummary robust;
};

RunSummary aggregate_runs(const std::vector<RunResult>& results, const Dataset& test,
                          const PerturbConfig& attack);

}  // namespace a3t
