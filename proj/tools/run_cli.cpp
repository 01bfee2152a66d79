#include <iostream>

#include "CLI11.hpp"
#include "experiments.hpp"
#include "a3t/kernels.hpp"

namespace a3t::cli {

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Accuracy-aware adversarial training experiments"};
  app.set_version_flag("--version", "a3t 1.0");
  std::string config_path;
  std::string out_dir;
  std::size_t jobs = 1;
  std::uint64_t seed = 0;
  bool dump = false;
  std::vector<std::string> overrides;
  app.add_option("--config", config_path, "experiment config file (INI sections)");
  app.add_option("--out", out_dir, "output directory (overrides `out`)");
  app.add_option("--jobs", jobs, "worker threads for independent runs")->check(CLI::Range(1, 1024));
  auto* seed_opt = app.add_option("--seed", seed, "base seed (overrides `seed`)");
  app.add_flag("--dump-defaults", dump, "print every config key with its default and exit");
  app.add_option("--set", overrides, "override one config key, e.g. --set moons.runs=5");
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForVersion& e) {
    out << e.what() << "\n";
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << "run with --help for usage\n";
    return kUsage;
  }
  if (dump) {
    out << dump_defaults();
    return kOk;
  }

  ExperimentConfig cfg;
  try {
    cfg = load_config(config_path, overrides);
    if (!out_dir.empty()) cfg.out = out_dir;
    if (*seed_opt) cfg.seed = seed;
    cfg.validate();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kUsage;
  }

  try {
    err << "a3t " << to_string(cfg.kind) << " (kernels: " << kernels::active().name << ", jobs " << jobs
        << ", seed " << cfg.seed << ")\n";
    const int code = run_experiment(cfg, jobs, out);
    if (code == kVerificationFailed) err << "verification failed\n";
    return code;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const TrainingAborted& e) {
    err << "training aborted at epoch " << e.epoch() << ", row " << e.row() << ": " << e.what() << "\n";
    return kRuntimeAbort;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRuntimeAbort;
  }
}

}  // namespace a3t::cli
