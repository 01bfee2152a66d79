#pragma once

// Experiment configuration and the six commands behind the `a3t` binary.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "a3t/analysis.hpp"
#include "a3t/data.hpp"
#include "a3t/training.hpp"
#include "config.hpp"

namespace a3t::cli {

enum class Kind { Moons, Tabular, Theorem, Gradcheck, Train, Attack };

std::string to_string(Kind k);
Kind parse_kind(const std::string& s);

enum ExitCode : int { kOk = 0, kUsage = 1, kVerificationFailed = 2, kRuntimeAbort = 3 };

struct MoonsSettings {
  std::size_t samples = 1016;
  double noise = 0.3;
  std::size_t train_per_class = 16;
  std::size_t dim = 100;
  double projection_scale = 10.0;
  std::vector<TrainMode> methods{TrainMode::AT, TrainMode::A3T};
  std::vector<std::size_t> hidden{100};
  Activation activation = Activation::ReLU;
  TrainConfig train;
  A3TPlusConfig plus;
  PerturbConfig eval;
  std::size_t grid_res = 200;
  double band_lo = 0.49;
  double band_hi = 0.51;
  std::size_t plot_run = 0;
};

// Attack axes; the full cross product is used both for training configs
// and for the evaluation attacks.
struct AttackGrid {
  std::vector<double> sigma{0.05, 0.1};
  std::vector<double> alpha{0.2, 0.1, 0.05};
  std::vector<double> eps{0.2, 0.4};
  std::size_t steps = 5;

  std::vector<PerturbConfig> expand(std::uint64_t seed) const;
};

struct TabularSettings {
  std::string data;  // CSV path; empty uses the generated stand-in
  std::string label_column = "outcome";
  TabularStandInConfig standin;
  bool standardize = true;
  double test_fraction = 0.3;
  std::size_t seeds = 5;
  std::vector<TrainMode> modes{TrainMode::Standard, TrainMode::AT, TrainMode::A3T};
  std::vector<std::size_t> hidden{32, 16};
  Activation activation = Activation::ReLU;
  TrainConfig train;
  A3TPlusConfig plus;
  AttackGrid grid;
  std::string rate_group_column;  // non-empty enables rate prediction output
};

struct TheoremSettings {
  std::size_t trials = 1000;
  std::vector<std::size_t> dims{2, 10, 100};
  std::vector<double> eps{0.1, 0.4};
  double max_oracle_gap = 1e-9;
};

struct GradcheckSettings {
  std::size_t nets = 100;
  double step = 1e-5;
  double tolerance = 1e-4;
};

struct FitSettings {
  std::string data;
  std::string label_column = "outcome";
  TabularStandInConfig standin;
  bool standardize = true;
  std::vector<std::size_t> hidden{32, 16};
  Activation activation = Activation::ReLU;
  TrainConfig train;
  A3TPlusConfig plus;
};

struct AttackSettings {
  std::string model;  // empty: <out>/model.json
  std::string data;   // empty: the stand-in from [train]
  std::string label_column;  // empty: the model's label column
  std::string method = "pgd";      // pgd | fgsm
  std::string target = "true";     // true | predicted
  PerturbConfig perturb;
};

struct ExperimentConfig {
  Kind kind = Kind::Moons;
  std::uint64_t seed = 7;
  std::size_t runs = 50;
  std::string out = "a3t_out";
  MoonsSettings moons;
  TabularSettings tabular;
  TheoremSettings theorem;
  GradcheckSettings gradcheck;
  FitSettings fit;
  AttackSettings attack;

  ExperimentConfig();

  // Throws ConfigError.
  void validate() const;
};

// Binds every field of `cfg` under its config key.
void register_fields(Schema& schema, ExperimentConfig& cfg);

std::string dump_defaults();

// Defaults, then the file (if any), then `overrides` as key=value pairs.
ExperimentConfig load_config(const std::filesystem::path& path,
                             const std::vector<std::string>& overrides = {});

int run_experiment(const ExperimentConfig& cfg, std::size_t jobs, std::ostream& log);

int cmd_moons(const ExperimentConfig& cfg, std::size_t jobs, std::ostream& log);
int cmd_tabular(const ExperimentConfig& cfg, std::size_t jobs, std::ostream& log);
int cmd_theorem(const ExperimentConfig& cfg, std::size_t jobs, std::ostream& log);
int cmd_gradcheck(const ExperimentConfig& cfg, std::ostream& log);
int cmd_train(const ExperimentConfig& cfg, std::ostream& log);
int cmd_attack(const ExperimentConfig& cfg, std::ostream& log);

// Full entry point used by main(): returns the process exit code.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace a3t::cli
