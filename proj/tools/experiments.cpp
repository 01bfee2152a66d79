#include "experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "a3t/parallel.hpp"
#include "model_io.hpp"
#include "svg.hpp"

namespace a3t {

// Found by argument-dependent lookup from the Schema templates.
void parse_value(std::string_view text, TrainMode& out) {
  out = parse_train_mode(std::string(cli::split_list(text).at(0)));
}
std::string format_value(TrainMode m) { return to_string(m); }
void parse_value(std::string_view text, Activation& out) {
  out = parse_activation(std::string(cli::split_list(text).at(0)));
}
std::string format_value(Activation a) { return to_string(a); }

}  // namespace a3t

namespace a3t::cli {
namespace {

std::string join_sizes(const std::vector<std::size_t>& v, char sep) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += sep;
    s += std::to_string(v[i]);
  }
  return s;
}

NetworkSpec make_spec(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out,
                      Activation act) {
  NetworkSpec spec;
  spec.layer_sizes.push_back(in);
  spec.layer_sizes.insert(spec.layer_sizes.end(), hidden.begin(), hidden.end());
  spec.layer_sizes.push_back(out);
  spec.hidden_activation = act;
  return spec;
}

void bind_train(Schema& s, const std::string& p, TrainConfig& t) {
  s.bind(p + ".epochs", t.epochs, "total training epochs");
  s.bind(p + ".warmup", t.warmup_epochs, "leading epochs of standard training");
  s.bind(p + ".lr", t.lr, "learning rate");
  s.bind(p + ".momentum", t.momentum, "SGD momentum");
  s.bind(p + ".weight_decay", t.weight_decay, "L2 weight decay");
  s.bind(p + ".batch_size", t.batch_size, "rows per update; 1 is per-sample SGD");
  s.add(p + ".lr_schedule", "learning-rate steps as epoch:multiplier, comma separated",
        [&t](std::string_view text) {
          t.lr_schedule.clear();
          for (const auto& item : split_list(text)) {
            const auto colon = item.find(':');
            if (colon == std::string::npos) throw ConfigError("expected epoch:multiplier");
            std::size_t epoch = 0;
            double mult = 0.0;
            parse_value(item.substr(0, colon), epoch);
            parse_value(item.substr(colon + 1), mult);
            t.lr_schedule.emplace_back(epoch, mult);
          }
        },
        [&t] {
          std::string out;
          for (const auto& [e, m] : t.lr_schedule) {
            if (!out.empty()) out += ", ";
            out += std::to_string(e) + ":" + format_double(m);
          }
          return out;
        });
  s.bind(p + ".additive_clean_loss", t.additive_clean_loss,
         "add the clean loss to the adversarial loss instead of replacing it");
  s.bind(p + ".track_robust", t.track_robust, "record robust training accuracy every epoch");
}

void bind_perturb(Schema& s, const std::string& p, PerturbConfig& c) {
  s.bind(p + ".eps", c.budget_eps, "L-inf budget");
  s.bind(p + ".alpha", c.step_alpha, "PGD step size");
  s.bind(p + ".steps", c.steps, "PGD steps");
  s.bind(p + ".sigma", c.init_sigma, "std-dev of the Gaussian start");
  s.bind(p + ".signed_step", c.signed_step, "step along sgn(grad) rather than grad");
}

void bind_plus(Schema& s, const std::string& p, A3TPlusConfig& c) {
  s.bind(p + ".c", c.ls_weight_c, "label-smoothing factor");
  s.bind(p + ".beta", c.dirichlet_beta, "Dirichlet concentration");
  s.bind(p + ".eta", c.mm_step_eta, "per-sample budget step");
  s.bind(p + ".eps_max", c.eps_max, "per-sample budget cap");
}

void bind_standin(Schema& s, const std::string& p, TabularStandInConfig& c) {
  s.bind(p + ".rows", c.rows, "rows to generate");
  s.bind(p + ".informative", c.informative, "numeric columns carrying the class signal");
  s.bind(p + ".noise_columns", c.noise_columns, "pure-noise numeric columns");
  s.bind(p + ".categorical_levels", c.categorical_levels, "levels of the categorical column");
  s.bind(p + ".class_gap", c.class_gap, "distance between the class means");
  s.bind(p + ".label_noise", c.label_noise, "fraction of flipped labels");
  s.bind(p + ".aux_shift", c.aux_shift, "class mean shift of every noise column");
  s.bind(p + ".years", c.years, "add a year column with this many values (0: none)");
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::filesystem::path prepare_out(const ExperimentConfig& cfg) {
  const std::filesystem::path dir(cfg.out);
  std::filesystem::create_directories(dir);
  return dir;
}

std::string fmt(double v) { return format_double(v); }

std::string fixed(double v, int digits = 4) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(digits);
  os << v;
  return os.str();
}

void check(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

void check_train(const TrainConfig& t, const std::string& where) {
  try {
    t.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

void check_perturb(const PerturbConfig& p, const std::string& where) {
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

void check_plus(const A3TPlusConfig& p, const std::string& where) {
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

void check_file(const std::string& path, const std::string& key) {
  if (!path.empty() && !std::filesystem::is_regular_file(path)) {
    throw ConfigError(key + ": file not found: " + path);
  }
}

// Tabular data for the tabular and train commands: CSV or generated
// stand-in, rejected rows reported.
struct LoadedTable {
  CsvTable table;
  CsvLoadResult loaded;
};

LoadedTable load_table(const std::string& path, const std::string& label_column,
                       const TabularStandInConfig& standin, std::uint64_t seed,
                       std::ostream& log) {
  LoadedTable t;
  t.table = path.empty() ? gen_tabular_standin(standin, seed) : read_csv(path);
  t.loaded = load_csv(t.table, {label_column, {}});
  const auto& rej = t.loaded.rejected;
  if (!rej.empty()) {
    log << "warning: " << rej.size() << " row(s) rejected\n";
    for (std::size_t i = 0; i < rej.size() && i < 10; ++i) {
      log << "  row " << rej[i].line << ": " << rej[i].reason << "\n";
    }
  }
  if (t.loaded.dataset.size() == 0) throw ConfigError("no usable rows in the dataset");
  return t;
}

}  // namespace

std::string to_string(Kind k) {
  switch (k) {
    case Kind::Moons: return "moons";
    case Kind::Tabular: return "tabular";
    case Kind::Theorem: return "theorem";
    case Kind::Gradcheck: return "gradcheck";
    case Kind::Train: return "train";
    case Kind::Attack: return "attack";
  }
  return "?";
}

Kind parse_kind(const std::string& s) {
  for (Kind k : {Kind::Moons, Kind::Tabular, Kind::Theorem, Kind::Gradcheck, Kind::Train,
                 Kind::Attack}) {
    if (to_string(k) == s) return k;
  }
  throw ConfigError("unknown experiment kind '" + s +
                    "' (moons, tabular, theorem, gradcheck, train, attack)");
}

std::vector<PerturbConfig> AttackGrid::expand(std::uint64_t seed) const {
  std::vector<PerturbConfig> out;
  std::uint64_t k = 0;
  for (double s : sigma) {
    for (double a : alpha) {
      for (double e : eps) {
        PerturbConfig c;
        c.init_sigma = s;
        c.step_alpha = a;
        c.budget_eps = e;
        c.steps = steps;
        c.seed = derive_seed(seed, k++);
        out.push_back(c);
      }
    }
  }
  return out;
}

ExperimentConfig::ExperimentConfig() {
  moons.train.epochs = 400;
  moons.train.warmup_epochs = 100;
  moons.train.lr = 0.01;
  moons.train.track_robust = false;
  moons.eval.steps = 20;

  tabular.train.epochs = 60;
  tabular.train.warmup_epochs = 15;
  tabular.train.lr = 0.01;
  tabular.train.track_robust = false;

  fit.train.epochs = 60;
  fit.train.warmup_epochs = 15;
  fit.train.lr = 0.01;
  fit.train.mode = TrainMode::A3T;
}

void register_fields(Schema& s, ExperimentConfig& c) {
  s.add("kind", "moons | tabular | theorem | gradcheck | train | attack",
        [&c](std::string_view t) {
          std::string v;
          parse_value(t, v);
          c.kind = parse_kind(v);
        },
        [&c] { return to_string(c.kind); });
  s.bind("seed", c.seed, "base seed; every random stream is derived from it");
  s.bind("runs", c.runs, "independent runs (moons)");
  s.bind("out", c.out, "output directory");

  auto& m = c.moons;
  s.bind("moons.samples", m.samples, "points generated on the two arcs");
  s.bind("moons.noise", m.noise, "Gaussian noise std-dev added to the arcs");
  s.bind("moons.train_per_class", m.train_per_class, "training points per class");
  s.bind("moons.dim", m.dim, "dimension of the random projection");
  s.bind("moons.projection_scale", m.projection_scale, "row norm of the projection map");
  s.bind("moons.methods", m.methods, "training modes compared per run");
  s.bind("moons.hidden", m.hidden, "hidden layer widths");
  s.bind("moons.activation", m.activation, "hidden activation (relu | tanh)");
  s.bind("moons.grid_res", m.grid_res, "lattice resolution for the boundary band");
  s.bind("moons.band_lo", m.band_lo, "lower top-class probability of the band");
  s.bind("moons.band_hi", m.band_hi, "upper top-class probability of the band");
  s.bind("moons.plot_run", m.plot_run, "run whose boundaries and samples are drawn");
  bind_train(s, "moons.train", m.train);
  bind_perturb(s, "moons.perturb", m.train.perturb);
  bind_plus(s, "moons.plus", m.plus);
  bind_perturb(s, "moons.eval", m.eval);

  auto& t = c.tabular;
  s.bind("tabular.data", t.data, "CSV file; empty generates the synthetic stand-in");
  s.bind("tabular.label_column", t.label_column, "label column name");
  s.bind("tabular.standardize", t.standardize, "z-score features with training statistics");
  s.bind("tabular.test_fraction", t.test_fraction, "stratified holdout fraction");
  s.bind("tabular.seeds", t.seeds, "training seeds averaged per config");
  s.bind("tabular.modes", t.modes, "training modes; adversarial modes use every grid config");
  s.bind("tabular.hidden", t.hidden, "hidden layer widths");
  s.bind("tabular.activation", t.activation, "hidden activation (relu | tanh)");
  s.bind("tabular.rate_group_column", t.rate_group_column,
         "column grouping rows for rate prediction (empty: off)");
  bind_standin(s, "tabular.standin", t.standin);
  bind_train(s, "tabular.train", t.train);
  bind_plus(s, "tabular.plus", t.plus);
  s.bind("tabular.grid.sigma", t.grid.sigma, "PGD start std-devs");
  s.bind("tabular.grid.alpha", t.grid.alpha, "PGD step sizes");
  s.bind("tabular.grid.eps", t.grid.eps, "PGD budgets");
  s.bind("tabular.grid.steps", t.grid.steps, "PGD steps");

  auto& th = c.theorem;
  s.bind("theorem.trials", th.trials, "misclassified instances per cell");
  s.bind("theorem.dims", th.dims, "input dimensions");
  s.bind("theorem.eps", th.eps, "budgets");
  s.bind("theorem.max_oracle_gap", th.max_oracle_gap,
         "largest tolerated corner-oracle loss above the closed form");

  auto& g = c.gradcheck;
  s.bind("gradcheck.nets", g.nets, "random networks checked");
  s.bind("gradcheck.step", g.step, "central-difference step");
  s.bind("gradcheck.tolerance", g.tolerance, "largest tolerated relative error");

  auto& f = c.fit;
  s.bind("train.data", f.data, "CSV file; empty generates the synthetic stand-in");
  s.bind("train.label_column", f.label_column, "label column name");
  s.bind("train.standardize", f.standardize, "z-score features (stored in model.json)");
  s.bind("train.mode", f.train.mode, "standard | at | a3t | a3t+");
  s.bind("train.hidden", f.hidden, "hidden layer widths");
  s.bind("train.activation", f.activation, "hidden activation (relu | tanh)");
  bind_standin(s, "train.standin", f.standin);
  bind_train(s, "train.fit", f.train);
  bind_perturb(s, "train.perturb", f.train.perturb);
  bind_plus(s, "train.plus", f.plus);

  auto& a = c.attack;
  s.bind("attack.model", a.model, "model.json; empty uses <out>/model.json");
  s.bind("attack.data", a.data, "CSV file; empty regenerates the [train] stand-in");
  s.bind("attack.label_column", a.label_column, "label column; empty uses the model's");
  s.bind("attack.method", a.method, "pgd | fgsm");
  s.bind("attack.target", a.target, "label attacked: true | predicted");
  bind_perturb(s, "attack.perturb", a.perturb);
}

void ExperimentConfig::validate() const {
  switch (kind) {
    case Kind::Moons: {
      const auto& m = moons;
      check(runs >= 1, "runs must be >= 1");
      check(m.samples >= 4, "moons.samples must be >= 4");
      check(m.noise >= 0.0, "moons.noise must be >= 0");
      check(m.dim >= 2, "moons.dim must be >= 2");
      check(m.projection_scale > 0.0, "moons.projection_scale must be > 0");
      check(m.train_per_class >= 1 && 2 * m.train_per_class < m.samples,
            "moons.train_per_class must leave test points");
      check(!m.methods.empty(), "moons.methods is empty");
      check(m.grid_res >= 2, "moons.grid_res must be >= 2");
      check(m.band_lo < m.band_hi, "moons.band_lo must be below moons.band_hi");
      check(m.plot_run < runs, "moons.plot_run must be < runs");
      check_train(m.train, "moons.train");
      check_perturb(m.eval, "moons.eval");
      check_plus(m.plus, "moons.plus");
      break;
    }
    case Kind::Tabular: {
      const auto& t = tabular;
      check_file(t.data, "tabular.data");
      check(!t.label_column.empty(), "tabular.label_column is empty");
      check(t.test_fraction > 0.0 && t.test_fraction < 1.0, "tabular.test_fraction must lie in (0, 1)");
      check(t.seeds >= 1, "tabular.seeds must be >= 1");
      check(!t.modes.empty(), "tabular.modes is empty");
      check(!t.grid.sigma.empty() && !t.grid.alpha.empty() && !t.grid.eps.empty(),
            "tabular.grid axes must be non-empty");
      check_train(t.train, "tabular.train");
      for (const auto& p : t.grid.expand(0)) check_perturb(p, "tabular.grid");
      if (std::count(t.modes.begin(), t.modes.end(), TrainMode::A3TPlus)) {
        for (double e : t.grid.eps) {
          A3TPlusConfig p = t.plus;
          p.eps_max = e;
          check_plus(p, "tabular.plus");
        }
      }
      break;
    }
    case Kind::Theorem:
      check(theorem.trials >= 1, "theorem.trials must be >= 1");
      check(!theorem.dims.empty() && !theorem.eps.empty(), "theorem.dims and theorem.eps must be non-empty");
      for (auto d : theorem.dims) check(d >= 1, "theorem.dims entries must be >= 1");
      for (double e : theorem.eps) check(e > 0.0, "theorem.eps entries must be > 0");
      break;
    case Kind::Gradcheck:
      check(gradcheck.nets >= 1, "gradcheck.nets must be >= 1");
      check(gradcheck.step > 0.0, "gradcheck.step must be > 0");
      check(gradcheck.tolerance > 0.0, "gradcheck.tolerance must be > 0");
      break;
    case Kind::Train:
      check_file(fit.data, "train.data");
      check(!fit.label_column.empty(), "train.label_column is empty");
      check_train(fit.train, "train.fit");
      if (fit.train.mode == TrainMode::A3TPlus) check_plus(fit.plus, "train.plus");
      break;
    case Kind::Attack:
      check_file(attack.model, "attack.model");
      check_file(attack.data, "attack.data");
      check(attack.method == "pgd" || attack.method == "fgsm", "attack.method must be pgd or fgsm");
      check(attack.target == "true" || attack.target == "predicted",
            "attack.target must be true or predicted");
      check_perturb(attack.perturb, "attack.perturb");
      break;
  }
}

std::string dump_defaults() {
  ExperimentConfig cfg;
  Schema schema;
  register_fields(schema, cfg);
  return schema.dump();
}

ExperimentConfig load_config(const std::filesystem::path& path,
                             const std::vector<std::string>& overrides) {
  ExperimentConfig cfg;
  Schema schema;
  register_fields(schema, cfg);
  if (!path.empty()) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    schema.apply(parse_ini(ss.str()));
  }
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw ConfigError("override needs key=value: " + o);
    std::string key = o.substr(0, eq);
    key.erase(key.find_last_not_of(' ') + 1);
    schema.set(key, o.substr(eq + 1));
  }
  return cfg;
}

int run_experiment(const ExperimentConfig& cfg, std::size_t jobs, std::ostream& log) {
  cfg.validate();
  switch (cfg.kind) {
    case Kind::Moons: return cmd_moons(cfg, jobs, log);
    case Kind::Tabular: return cmd_tabular(cfg, jobs, log);
    case Kind::Theorem: return cmd_theorem(cfg, jobs, log);
    case Kind::Gradcheck: return cmd_gradcheck(cfg, log);
    case Kind::Train: return cmd_train(cfg, log);
    case Kind::Attack: return cmd_attack(cfg, log);
  }
  return kUsage;
}

// ---- moons ----

namespace {

struct MoonsOutcome {
  double natural = 0.0;
  double robust = 0.0;
  ModelParams model;
  std::vector<AdversarialSample> adversarial;
};

void draw_points(SvgPanel& panel, const Dataset& pts2d, double radius, double opacity) {
  for (std::size_t i = 0; i < pts2d.size(); ++i) {
    const auto r = pts2d.row(i);
    panel.dot(r[0], r[1], radius, series_color(pts2d.labels[i]), opacity);
  }
}

void draw_band(SvgPanel& panel, const BoundaryBand& band, const std::string& color, double radius) {
  for (const auto& p : band.points) panel.dot(p.x, p.y, radius, color);
}

}  // namespace

int cmd_moons(const ExperimentConfig& cfg, std::size_t jobs, std::ostream& log) {
  const auto& m = cfg.moons;
  const auto dir = prepare_out(cfg);
  const Dataset base = gen_moons(m.samples, m.noise, derive_seed(cfg.seed, 1));
  const auto map = ProjectionMap::random(2, m.dim, derive_seed(cfg.seed, 2), m.projection_scale);
  const Dataset high = project_highdim(base, map);
  const NetworkSpec spec = make_spec(m.dim, m.hidden, 2, m.activation);
  const std::size_t n_methods = m.methods.size();

  std::vector<Split> splits;
  for (std::size_t r = 0; r < cfg.runs; ++r) {
    splits.push_back(split_per_class(high, m.train_per_class, derive_seed(cfg.seed, 1000 + r)));
  }
  auto run_seed = [&](std::size_t r) { return derive_seed(cfg.seed, 2000 + r); };

  std::vector<MoonsOutcome> outcomes(cfg.runs * n_methods);
  parallel_for(outcomes.size(), jobs, [&](std::size_t task) {
    const std::size_t r = task / n_methods;
    const TrainMode mode = m.methods[task % n_methods];
    TrainConfig tc = m.train;
    tc.mode = mode;
    tc.seed = run_seed(r);
    if (r == m.plot_run && tc.epochs > tc.warmup_epochs && mode != TrainMode::Standard) {
      tc.record_adversarial_every = tc.epochs - tc.warmup_epochs;
    }
    const std::optional<A3TPlusConfig> plus =
        mode == TrainMode::A3TPlus ? std::optional(m.plus) : std::nullopt;
    RunResult run;
    try {
      run = train(splits[r].train, spec, tc, plus);
    } catch (const TrainingAborted& e) {
      throw TrainingAborted("run " + std::to_string(r) + " (" + to_string(mode) + "): " + e.what(),
                            e.epoch(), e.row());
    }
    PerturbConfig eval = m.eval;
    eval.seed = derive_seed(cfg.seed, 3000 + r);
    auto& o = outcomes[task];
    o.natural = natural_accuracy(run.model, splits[r].test);
    o.robust = robust_accuracy(run.model, splits[r].test, eval);
    o.model = std::move(run.model);
    o.adversarial = std::move(run.adversarial);
  });

  CsvTable metrics;
  metrics.header = {"row_type", "run", "method", "seed", "natural_acc", "robust_acc",
                    "natural_std", "robust_std"};
  for (std::size_t r = 0; r < cfg.runs; ++r) {
    for (std::size_t k = 0; k < n_methods; ++k) {
      const auto& o = outcomes[r * n_methods + k];
      metrics.rows.push_back({"run", std::to_string(r), to_string(m.methods[k]),
                              std::to_string(run_seed(r)), fmt(o.natural), fmt(o.robust), "", ""});
    }
  }
  for (std::size_t k = 0; k < n_methods; ++k) {
    std::vector<double> nat, rob;
    for (std::size_t r = 0; r < cfg.runs; ++r) {
      nat.push_back(outcomes[r * n_methods + k].natural);
      rob.push_back(outcomes[r * n_methods + k].robust);
    }
    const auto sn = summarize(nat);
    const auto sr = summarize(rob);
    metrics.rows.push_back({"aggregate", "", to_string(m.methods[k]), std::to_string(cfg.seed),
                            fmt(sn.mean), fmt(sr.mean), fmt(sn.stddev), fmt(sr.stddev)});
    log << "moons " << to_string(m.methods[k]) << ": natural " << fixed(100 * sn.mean, 2) << "% (sd "
        << fixed(100 * sn.stddev, 2) << "), robust " << fixed(100 * sr.mean, 2) << "% over "
        << cfg.runs << " run(s)\n";
  }
  write_csv(dir / "metrics.csv", metrics);

  // Figures for one run: 2-d view of the data, the band after warmup and
  // after training, and the last epoch's adversarial examples.
  const Split& ps = splits[m.plot_run];
  const Dataset train2d = base.subset(ps.train_rows);
  const Dataset test2d = base.subset(ps.test_rows);
  const Box2 box;
  std::optional<BoundaryBand> warm_band;
  if (m.train.warmup_epochs > 0) {
    TrainConfig wc = m.train;
    wc.mode = TrainMode::Standard;
    wc.epochs = wc.warmup_epochs;
    wc.seed = run_seed(m.plot_run);
    wc.track_robust = false;
    const auto warm = train(ps.train, spec, wc);
    warm_band = boundary_band(warm.model, box, m.grid_res, m.band_lo, m.band_hi, &map);
  }
  const double pw = 420, ph = 280, margin = 50;
  const double width = margin + n_methods * (pw + margin);
  SvgDocument boundary(width, ph + 2 * margin + 20);
  SvgDocument points(width, ph + 2 * margin + 20);
  for (std::size_t k = 0; k < n_methods; ++k) {
    const auto& o = outcomes[m.plot_run * n_methods + k];
    const std::string name = to_string(m.methods[k]);
    const double left = margin + k * (pw + margin);
    const Range xr{box.x_min, box.x_max}, yr{box.y_min, box.y_max};
    const auto band = boundary_band(o.model, box, m.grid_res, m.band_lo, m.band_hi, &map);

    auto bp = boundary.panel(left, margin, pw, ph, xr, yr,
                             name + " (run " + std::to_string(m.plot_run) + ", natural " +
                                 fixed(100 * o.natural, 1) + "%)");
    draw_points(bp, test2d, 1.5, 0.25);
    draw_points(bp, train2d, 4.0, 1.0);
    if (warm_band) draw_band(bp, *warm_band, "#999", 1.2);
    draw_band(bp, band, "#000", 1.2);

    auto ap = points.panel(left, margin, pw, ph, xr, yr,
                           name + " adversarial examples, final epoch");
    draw_band(ap, band, "#bbb", 1.0);
    draw_points(ap, train2d, 4.0, 1.0);
    for (const auto& s : o.adversarial) {
      const auto src = train2d.row(s.row);
      const auto low = map.lower(s.point);
      ap.line(src[0], src[1], low[0], low[1], "#555", 0.8, 0.7);
      ap.ring(low[0], low[1], 3.5, series_color(train2d.labels[s.row]));
    }
  }
  const std::string legend =
      "dots: train (large) and test (faint) points by class; gray: band after warmup; black: final band [" +
      fixed(m.band_lo, 2) + ", " + fixed(m.band_hi, 2) + "]";
  boundary.text(margin, ph + 2 * margin + 5, legend, 11);
  points.text(margin, ph + 2 * margin + 5,
              "rings: training points moved by the final-epoch perturbation (mapped back to 2-d)", 11);
  write_text(dir / "boundary.svg", boundary.str());
  write_text(dir / "points.svg", points.str());
  return kOk;
}

// ---- tabular ----

int cmd_tabular(const ExperimentConfig& cfg, std::size_t jobs, std::ostream& log) {
  const auto& t = cfg.tabular;
  const auto dir = prepare_out(cfg);
  const auto lt = load_table(t.data, t.label_column, t.standin, derive_seed(cfg.seed, 40), log);
  const Dataset& ds = lt.loaded.dataset;
  Split split = split_fraction(ds, t.test_fraction, derive_seed(cfg.seed, 41));
  if (t.standardize) {
    const auto scaler = FeatureScaler::fit(split.train);
    scaler.apply(split.train);
    scaler.apply(split.test);
  }
  const NetworkSpec spec = make_spec(ds.dim(), t.hidden, ds.class_count, t.activation);

  const auto train_grid = t.grid.expand(derive_seed(cfg.seed, 43));
  std::vector<TrainSetup> setups;
  for (TrainMode mode : t.modes) {
    if (mode == TrainMode::Standard) {
      TrainConfig tc = t.train;
      tc.mode = mode;
      setups.push_back({tc, std::nullopt, "standard"});
      continue;
    }
    for (const auto& p : train_grid) {
      TrainConfig tc = t.train;
      tc.mode = mode;
      tc.perturb = p;
      std::optional<A3TPlusConfig> plus;
      if (mode == TrainMode::A3TPlus) {
        plus = t.plus;
        plus->eps_max = p.budget_eps;
      }
      setups.push_back({tc, plus,
                        to_string(mode) + " sigma=" + fmt(p.init_sigma) + " alpha=" +
                            fmt(p.step_alpha) + " eps=" + fmt(p.budget_eps)});
    }
  }
  const auto attacks = t.grid.expand(derive_seed(cfg.seed, 42));
  std::vector<std::uint64_t> seeds;
  for (std::size_t s = 0; s < t.seeds; ++s) seeds.push_back(derive_seed(cfg.seed, 100 + s));

  // Rate prediction: test rows grouped by the raw value of one column.
  const bool rate_mode = !t.rate_group_column.empty();
  std::vector<std::string> group_names;
  std::vector<std::size_t> group_of;  // per test row
  std::vector<double> actual_rate;
  std::vector<std::vector<double>> predicted;  // [train*seed][group]
  if (rate_mode) {
    if (ds.class_count != 2) throw ConfigError("rate prediction needs a binary label");
    const auto& h = lt.table.header;
    const auto col = std::find(h.begin(), h.end(), t.rate_group_column);
    if (col == h.end()) throw ConfigError("no column named '" + t.rate_group_column + "'");
    const auto ci = static_cast<std::size_t>(col - h.begin());
    std::map<std::string, std::size_t> index;
    std::vector<std::string> raw;
    for (std::size_t i : split.test_rows) {
      raw.push_back(lt.table.rows[lt.loaded.source_rows[i]][ci]);
      index.emplace(raw.back(), 0);
    }
    for (auto& [name, id] : index) {
      id = group_names.size();
      group_names.push_back(name);
    }
    std::vector<double> count(group_names.size(), 0.0);
    actual_rate.assign(group_names.size(), 0.0);
    for (std::size_t i = 0; i < raw.size(); ++i) {
      group_of.push_back(index[raw[i]]);
      count[group_of.back()] += 1.0;
      actual_rate[group_of.back()] += split.test.labels[i] == 1 ? 1.0 : 0.0;
    }
    for (std::size_t g = 0; g < count.size(); ++g) actual_rate[g] /= count[g];
    predicted.assign(setups.size() * seeds.size(), {});
  }
  ModelHook hook;
  if (rate_mode) {
    hook = [&](std::size_t ti, std::size_t si, const ModelParams& model) {
      std::vector<double> sum(group_names.size(), 0.0), count(group_names.size(), 0.0);
      for (std::size_t i = 0; i < split.test.size(); ++i) {
        sum[group_of[i]] += predict(model, split.test.row(i)).probs[1];
        count[group_of[i]] += 1.0;
      }
      for (std::size_t g = 0; g < sum.size(); ++g) sum[g] /= count[g];
      predicted[ti * seeds.size() + si] = std::move(sum);
    };
  }

  const GridResult grid = grid_search(split.train, split.test, spec, setups, attacks, seeds, jobs, hook);

  std::vector<std::vector<double>> mean_rates(setups.size());
  std::vector<double> mses(setups.size(), 0.0);
  if (rate_mode) {
    for (std::size_t ti = 0; ti < setups.size(); ++ti) {
      mean_rates[ti].assign(group_names.size(), 0.0);
      for (std::size_t si = 0; si < seeds.size(); ++si) {
        for (std::size_t g = 0; g < group_names.size(); ++g) {
          mean_rates[ti][g] += predicted[ti * seeds.size() + si][g] / static_cast<double>(seeds.size());
        }
      }
      mses[ti] = rate_mse(mean_rates[ti], actual_rate);
    }
  }

  CsvTable out;
  out.header = {"train_id", "label", "mode", "init_sigma", "step_alpha", "budget_eps", "natural_acc"};
  for (const auto& a : attacks) {
    out.header.push_back("attack_sigma" + fmt(a.init_sigma) + "_alpha" + fmt(a.step_alpha) + "_eps" +
                         fmt(a.budget_eps));
  }
  out.header.push_back("under_attack_mean");
  if (rate_mode) out.header.push_back("rate_mse");
  for (std::size_t ti = 0; ti < setups.size(); ++ti) {
    const auto& s = setups[ti];
    const bool adv = s.train.mode != TrainMode::Standard;
    std::vector<std::string> row{std::to_string(ti), s.label, to_string(s.train.mode),
                                 adv ? fmt(s.train.perturb.init_sigma) : "",
                                 adv ? fmt(s.train.perturb.step_alpha) : "",
                                 adv ? fmt(s.train.perturb.budget_eps) : "",
                                 fmt(grid.natural_mean[ti])};
    for (std::size_t a = 0; a < attacks.size(); ++a) {
      row.push_back(fmt(grid.cells[ti * attacks.size() + a].under_attack_acc));
    }
    row.push_back(fmt(grid.under_attack_mean[ti]));
    if (rate_mode) row.push_back(fmt(mses[ti]));
    out.rows.push_back(std::move(row));
    log << "tabular " << s.label << ": natural " << fixed(100 * grid.natural_mean[ti], 2)
        << "%, under attack " << fixed(100 * grid.under_attack_mean[ti], 2) << "%";
    if (rate_mode) log << ", rate MSE " << fmt(mses[ti]);
    log << "\n";
  }
  write_csv(dir / "grid.csv", out);

  // Natural vs under-attack scatter, one color per mode.
  double lo = 1.0;
  for (std::size_t ti = 0; ti < setups.size(); ++ti) {
    lo = std::min({lo, grid.natural_mean[ti], grid.under_attack_mean[ti]});
  }
  lo = std::max(0.0, std::floor(lo * 10.0 - 0.5) / 10.0);
  SvgDocument svg(560, 480);
  auto panel = svg.panel(70, 40, 420, 360, {lo, 1.0}, {lo, 1.0}, "accuracy, mean over seeds",
                         "natural accuracy", "mean under-attack accuracy");
  for (std::size_t ti = 0; ti < setups.size(); ++ti) {
    const auto pos = std::find(t.modes.begin(), t.modes.end(), setups[ti].train.mode) - t.modes.begin();
    panel.dot(grid.natural_mean[ti], grid.under_attack_mean[ti], 4.5,
              series_color(static_cast<std::size_t>(pos)), 0.85);
  }
  for (std::size_t k = 0; k < t.modes.size(); ++k) {
    svg.text(80 + 100 * static_cast<double>(k), 450, to_string(t.modes[k]), 12, "start", series_color(k));
  }
  write_text(dir / "pareto.svg", svg.str());

  if (rate_mode) {
    CsvTable rates;
    rates.header = {"train_id", "label", "group", "predicted_rate", "actual_rate"};
    for (std::size_t ti = 0; ti < setups.size(); ++ti) {
      for (std::size_t g = 0; g < group_names.size(); ++g) {
        rates.rows.push_back({std::to_string(ti), setups[ti].label, group_names[g],
                              fmt(mean_rates[ti][g]), fmt(actual_rate[g])});
      }
    }
    write_csv(dir / "rates.csv", rates);

    // Actual rates plus, per mode, its lowest-MSE config.
    SvgDocument rsvg(620, 420);
    const double n_groups = static_cast<double>(group_names.size());
    auto rp = rsvg.panel(70, 40, 480, 300, {0.0, std::max(1.0, n_groups - 1)}, {0.0, 1.0},
                         "rate per " + t.rate_group_column, t.rate_group_column, "positive rate");
    std::vector<double> xs;
    for (std::size_t g = 0; g < group_names.size(); ++g) xs.push_back(static_cast<double>(g));
    rp.polyline(xs, actual_rate, "#000", 2.0);
    rsvg.text(80, 395, "actual", 12, "start", "#000");
    for (std::size_t k = 0; k < t.modes.size(); ++k) {
      std::size_t best = setups.size();
      for (std::size_t ti = 0; ti < setups.size(); ++ti) {
        if (setups[ti].train.mode == t.modes[k] && (best == setups.size() || mses[ti] < mses[best])) {
          best = ti;
        }
      }
      if (best == setups.size()) continue;
      rp.polyline(xs, mean_rates[best], series_color(k), 1.5);
      rsvg.text(150 + 130 * static_cast<double>(k), 395,
                to_string(t.modes[k]) + " MSE " + fixed(mses[best], 5), 12, "start", series_color(k));
    }
    write_text(dir / "rates.svg", rsvg.str());
  }
  return kOk;
}

// ---- theorem ----

int cmd_theorem(const ExperimentConfig& cfg, std::size_t jobs, std::ostream& log) {
  const auto& th = cfg.theorem;
  const auto dir = prepare_out(cfg);
  std::vector<std::pair<std::size_t, double>> cells;
  for (auto d : th.dims) {
    for (double e : th.eps) cells.emplace_back(d, e);
  }
  std::vector<LinearWorstCaseReport> reports(cells.size());
  parallel_for(cells.size(), jobs, [&](std::size_t i) {
    reports[i] = verify_linear_worst_case(th.trials, cells[i].first, cells[i].second, derive_seed(cfg.seed, i));
  });
  CsvTable out;
  out.header = {"dim", "eps", "trials", "violations", "max_ratio", "max_oracle_gap", "rejected_draws"};
  bool failed = false;
  for (const auto& r : reports) {
    out.rows.push_back({std::to_string(r.dim), fmt(r.eps), std::to_string(r.trials),
                        std::to_string(r.violations), fmt(r.max_ratio), fmt(r.max_oracle_gap),
                        std::to_string(r.rejected_draws)});
    const bool ok = r.violations == 0 && r.max_oracle_gap < th.max_oracle_gap;
    failed |= !ok;
    log << "theorem dim=" << r.dim << " eps=" << fmt(r.eps) << ": " << r.violations << "/" << r.trials
        << " violations, max ratio " << fixed(r.max_ratio, 6) << ", oracle gap " << r.max_oracle_gap
        << (ok ? "  ok" : "  FAILED") << "\n";
  }
  write_csv(dir / "theorem.csv", out);
  return failed ? kVerificationFailed : kOk;
}

// ---- gradcheck ----

int cmd_gradcheck(const ExperimentConfig& cfg, std::ostream& log) {
  const auto& g = cfg.gradcheck;
  const auto dir = prepare_out(cfg);
  const auto rep = gradient_check(g.nets, cfg.seed, g.step);
  CsvTable out;
  out.header = {"net", "layers", "activation", "max_rel_error"};
  for (std::size_t i = 0; i < rep.rows.size(); ++i) {
    out.rows.push_back({std::to_string(i), join_sizes(rep.rows[i].spec.layer_sizes, '-'),
                        to_string(rep.rows[i].spec.hidden_activation), fmt(rep.rows[i].max_rel_error)});
  }
  write_csv(dir / "gradcheck.csv", out);
  const bool ok = rep.worst < g.tolerance;
  log << "gradcheck: " << rep.rows.size() << " nets, worst relative error " << rep.worst
      << (ok ? " (ok)" : " exceeds tolerance " + fmt(g.tolerance)) << "\n";
  return ok ? kOk : kVerificationFailed;
}

// ---- train / attack ----

int cmd_train(const ExperimentConfig& cfg, std::ostream& log) {
  const auto& f = cfg.fit;
  const auto dir = prepare_out(cfg);
  const auto lt = load_table(f.data, f.label_column, f.standin, derive_seed(cfg.seed, 40), log);
  Dataset ds = lt.loaded.dataset;
  SavedModel saved;
  if (f.standardize) {
    saved.scaler = FeatureScaler::fit(ds);
    saved.scaler->apply(ds);
  }
  TrainConfig tc = f.train;
  tc.seed = derive_seed(cfg.seed, 50);
  tc.perturb.seed = derive_seed(cfg.seed, 51);
  const std::optional<A3TPlusConfig> plus =
      tc.mode == TrainMode::A3TPlus ? std::optional(f.plus) : std::nullopt;
  const auto run = train(ds, make_spec(ds.dim(), f.hidden, ds.class_count, f.activation), tc, plus);

  saved.params = run.model;
  saved.label_column = f.label_column;
  saved.feature_names = ds.feature_names;
  saved.class_names = ds.class_names;
  saved.mode = to_string(tc.mode);
  save_model(dir / "model.json", saved);

  CsvTable hist;
  hist.header = {"epoch", "train_loss", "natural_acc", "robust_acc"};
  for (std::size_t e = 0; e < run.epochs.size(); ++e) {
    const auto& r = run.epochs[e];
    hist.rows.push_back({std::to_string(e), fmt(r.train_loss), fmt(r.natural_acc),
                         tc.track_robust ? fmt(r.robust_acc) : ""});
  }
  write_csv(dir / "history.csv", hist);
  if (!run.sample_eps.empty()) {
    CsvTable eps;
    eps.header = {"row", "eps"};
    for (std::size_t i = 0; i < run.sample_eps.size(); ++i) {
      eps.rows.push_back({std::to_string(i), fmt(run.sample_eps[i])});
    }
    write_csv(dir / "sample_eps.csv", eps);
  }
  log << "train " << saved.mode << ": " << ds.size() << " rows, final training accuracy "
      << fixed(100 * run.epochs.back().natural_acc, 2) << "%\n";
  return kOk;
}

int cmd_attack(const ExperimentConfig& cfg, std::ostream& log) {
  const auto& a = cfg.attack;
  const auto dir = prepare_out(cfg);
  const std::filesystem::path model_path = a.model.empty() ? dir / "model.json" : std::filesystem::path(a.model);
  if (!std::filesystem::is_regular_file(model_path)) {
    throw ConfigError("attack.model: file not found: " + model_path.string());
  }
  const SavedModel saved = load_model(model_path);
  const std::string label = a.label_column.empty() ? saved.label_column : a.label_column;
  if (label.empty()) throw ConfigError("attack.label_column is empty and the model names none");
  const auto lt = load_table(a.data, label, cfg.fit.standin, derive_seed(cfg.seed, 40), log);
  Dataset ds = lt.loaded.dataset;
  if (!saved.feature_names.empty() && ds.feature_names != saved.feature_names) {
    throw ConfigError("data columns do not match the model's input encoding");
  }
  if (!saved.class_names.empty() && ds.class_names != saved.class_names) {
    throw ConfigError("data labels do not match the model's classes");
  }
  if (saved.scaler) saved.scaler->apply(ds);
  if (ds.dim() != saved.params.spec.input_dim()) throw ConfigError("data width does not match the model");

  PerturbConfig pc = a.perturb;
  pc.seed = derive_seed(cfg.seed, 60);
  Rng rng(pc.seed);
  CsvTable out;
  out.header = {"row", "label", "clean_pred", "adv_pred", "linf"};
  for (std::size_t j = 0; j < ds.dim(); ++j) {
    out.header.push_back(ds.feature_names.empty() ? "x" + std::to_string(j) : ds.feature_names[j]);
  }
  std::size_t clean_hits = 0, adv_hits = 0;
  std::vector<double> adv(ds.dim());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto x = ds.row(i);
    const std::size_t clean = predict(saved.params, x).label;
    const std::size_t target = a.target == "true" ? ds.labels[i] : clean;
    const Perturbation p = a.method == "fgsm" ? fgsm(saved.params, x, target, pc.budget_eps)
                                              : pgd(saved.params, x, target, pc, rng);
    for (std::size_t j = 0; j < adv.size(); ++j) adv[j] = x[j] + p.delta[j];
    const std::size_t after = predict(saved.params, adv).label;
    clean_hits += clean == ds.labels[i];
    adv_hits += after == ds.labels[i];
    std::vector<std::string> row{std::to_string(lt.loaded.source_rows[i]), std::to_string(ds.labels[i]),
                                 std::to_string(clean), std::to_string(after), fmt(p.linf_norm())};
    for (double v : adv) row.push_back(fmt(v));
    out.rows.push_back(std::move(row));
  }
  write_csv(dir / "adversarial.csv", out);
  const double n = static_cast<double>(ds.size());
  CsvTable summary;
  summary.header = {"metric", "value"};
  summary.rows = {{"rows", std::to_string(ds.size())},
                  {"natural_acc", fmt(clean_hits / n)},
                  {"attacked_acc", fmt(adv_hits / n)}};
  write_csv(dir / "attack_summary.csv", summary);
  log << "attack " << a.method << " (" << a.target << " label): natural " << fixed(100 * clean_hits / n, 2)
      << "%, attacked " << fixed(100 * adv_hits / n, 2) << "%\n";
  return kOk;
}

}  // namespace a3t::cli
