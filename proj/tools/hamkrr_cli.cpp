// hamkrr: command-line driver for fitting and evaluating kernel Hamiltonian
// models. Run `hamkrr <command> --help` for the flags of each command.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hamkrr/hamkrr.hpp"

namespace fs = std::filesystem;
using namespace hamkrr;

namespace {

enum ExitCode { kOk = 0, kValidation = 1, kNumerical = 2 };

void report_error(const char* kind, const std::string& message) {
  std::cerr << "hamkrr: error: "
            << nlohmann::json{{"kind", kind}, {"message", message}}.dump() << '\n';
}

struct SystemArgs {
  std::string name;
  std::vector<std::string> params;

  void add(CLI::App* cmd, bool required = true) {
    auto* opt = cmd->add_option("--system", name, "Built-in system name");
    if (required) opt->required();
    cmd->add_option("--param", params, "System parameter as key=value (repeatable)");
  }

  HamiltonianSystem build() const {
    std::map<std::string, double> values;
    for (const auto& kv : params) {
      const auto eq = kv.find('=');
      require(eq != std::string::npos && eq > 0, "--param expects key=value, got '" + kv + "'");
      try {
        std::size_t used = 0;
        const std::string text = kv.substr(eq + 1);
        const double v = std::stod(text, &used);
        require(used == text.size(), "");
        values[kv.substr(0, eq)] = v;
      } catch (const std::exception&) {
        throw ValidationError("--param " + kv + ": value is not a number");
      }
    }
    return builtin(name, values);
  }
};

/// Two values apply to every coordinate; 2 * dim values give one interval
/// per coordinate.
Box parse_box(const std::vector<double>& v, Eigen::Index dim, const std::string& flag) {
  if (v.size() == 2) return uniform_box(dim, v[0], v[1]);
  require(v.size() == static_cast<std::size_t>(2 * dim),
          flag + " expects 2 or " + std::to_string(2 * dim) + " values");
  Box box;
  for (std::size_t i = 0; i < v.size(); i += 2) box.emplace_back(v[i], v[i + 1]);
  return box;
}

struct GridArgs {
  std::vector<double> q1{-1.0, 1.0};
  std::vector<double> q2;
  std::vector<int> resolution{50};

  void add(CLI::App* cmd) {
    cmd->add_option("--q1-range", q1, "q1 interval of the evaluation grid")->expected(2);
    cmd->add_option("--q2-range", q2, "q2 interval (defaults to the q1 interval)")->expected(2);
    cmd->add_option("--resolution", resolution, "Nodes per axis (one or two values)")
        ->expected(1, 2);
  }

  GridSpec build() const {
    const auto& q2r = q2.empty() ? q1 : q2;
    require(q1.size() == 2 && q2r.size() == 2, "grid ranges need two values");
    GridSpec g{{q1[0], q2r[0]}, {q1[1], q2r[1]}, {resolution.front(), resolution.back()}};
    g.validate();
    return g;
  }
};

void write_csv(const fs::path& path, const std::function<void(std::ostream&)>& writer) {
  io::write_atomically(path, writer);
  std::cout << "wrote " << path.string() << '\n';
}

Matrix truth_grid(const HamiltonianSystem& sys, const GridSpec& grid) {
  return potential_grid([&](const Vector& z) { return sys.h(z); }, grid);
}

// --- generate -------------------------------------------------------------

struct GenerateArgs {
  SystemArgs system;
  Eigen::Index n = 0;
  std::vector<double> box{-1.0, 1.0};
  double sigma = 0.0;
  std::uint64_t seed = 0;
  double exclusion_radius = 0.0;
  std::string out;
};

int run_generate(const GenerateArgs& a) {
  const auto sys = a.system.build();
  const auto data = sample_dataset(sys, a.n, parse_box(a.box, 2 * sys.d(), "--box"), a.sigma,
                                   a.seed, SamplingOptions{a.exclusion_radius});
  io::write_dataset(data, a.out);
  std::cout << "system=" << sys.name() << " N=" << data.n() << " d=" << data.d
            << " sigma=" << data.sigma << " seed=" << data.seed << '\n'
            << "wrote " << a.out << '\n';
  return kOk;
}

// --- fit --------------------------------------------------------------------

struct FitArgs {
  std::string data;
  double eta = 0.0;
  double c = 0.0;
  double alpha = 0.4;
  std::string out;
};

int run_fit(const FitArgs& a) {
  const auto data = io::read_dataset(a.data);
  const double lambda = scaled_lambda(a.c, data.n(), a.alpha);
  const auto model = fit(data, GaussianKernel(a.eta), lambda);
  io::write_model(model, a.out);
  std::cout.precision(6);
  std::cout << "N=" << data.n() << " eta=" << a.eta << " c=" << a.c << " alpha=" << a.alpha
            << " lambda=" << lambda << '\n'
            << "residual=" << model.residual << '\n'
            << "wrote " << a.out << '\n';
  return kOk;
}

// --- cv ---------------------------------------------------------------------

struct CvArgs {
  std::string data;
  std::vector<double> eta_grid;
  std::vector<double> eta_range;
  std::vector<double> c_grid;
  double alpha = 0.4;
  int folds = 5;
  std::uint64_t seed = 0;
  std::string out_dir = ".";
};

int run_cv(const CvArgs& a) {
  const auto data = io::read_dataset(a.data);
  SearchSpec spec;
  require(a.eta_grid.empty() != a.eta_range.empty(),
          "pass exactly one of --eta-grid or --eta-range");
  spec.eta_grid = a.eta_grid.empty() ? arange(a.eta_range[0], a.eta_range[1], a.eta_range[2])
                                     : a.eta_grid;
  if (!a.c_grid.empty()) spec.c_grid = a.c_grid;
  spec.alpha = a.alpha;
  spec.folds = a.folds;
  spec.seed = a.seed;
  const auto r = grid_search(data, spec);
  write_csv(fs::path(a.out_dir) / "cv_scores.csv",
            [&](std::ostream& out) { write_score_csv(out, r.table); });
  std::cout.precision(17);
  std::cout << "eta=" << r.eta << " c=" << r.c << " lambda=" << r.lambda
            << " score=" << r.score << '\n';
  return kOk;
}

// --- eval -------------------------------------------------------------------

struct EvalArgs {
  SystemArgs system;
  std::string model;
  GridArgs grid;
  std::string out_dir = ".";
};

int run_eval(const EvalArgs& a) {
  const auto sys = a.system.build();
  const GridSpec grid = a.grid.build();
  const fs::path dir(a.out_dir);
  const Matrix truth = truth_grid(sys, grid);
  write_csv(dir / "potential_truth.csv",
            [&](std::ostream& out) { write_grid_csv(out, truth, grid); });
  if (a.model.empty()) return kOk;

  const auto model = io::read_model(a.model);
  require(model.d == sys.d(), "model and system dimensions differ");
  const Matrix learned =
      potential_grid([&](const Vector& z) { return predict_h(model, z); }, grid);
  const ErrorReport rep = shifted_error(truth, learned);
  write_csv(dir / "potential_learned.csv",
            [&](std::ostream& out) { write_grid_csv(out, learned, grid); });
  write_csv(dir / "error_heatmap.csv",
            [&](std::ostream& out) { write_grid_csv(out, rep.grid_abs_error, grid); });
  std::cout.precision(17);
  std::cout << "shift=" << rep.shift << " sup_error=" << rep.sup_error
            << " mean_error=" << rep.mean_error << " rmse=" << rep.rmse
            << " nan_nodes=" << rep.nan_nodes << '\n';
  return kOk;
}

// --- converge / noise --------------------------------------------------------

struct StudyArgs {
  SystemArgs system;
  std::vector<Eigen::Index> n_list;
  Eigen::Index n = 0;
  std::vector<double> sigmas;
  double sigma = 0.0;
  double eta = 0.0;
  double c = 0.0;
  double alpha = 0.4;
  std::vector<std::uint64_t> seeds{0};
  std::vector<double> box{-1.0, 1.0};
  GridArgs grid;
  int phase_space = 0;
  std::string out_dir = ".";

  void add_common(CLI::App* cmd) {
    system.add(cmd);
    cmd->add_option("--eta", eta, "Kernel bandwidth")->required();
    cmd->add_option("--c", c, "Regularization constant in lambda = c N^-alpha")->required();
    cmd->add_option("--alpha", alpha, "Regularization decay exponent");
    cmd->add_option("--seeds", seeds, "Dataset seeds to average over");
    cmd->add_option("--box", box, "Sampling box (lo hi, or one pair per coordinate)");
    grid.add(cmd);
    cmd->add_option("--out-dir", out_dir, "Output directory");
  }

  StudyConfig config(const HamiltonianSystem& sys) const {
    StudyConfig cfg;
    cfg.eta = eta;
    cfg.c = c;
    cfg.alpha = alpha;
    cfg.seeds = seeds;
    cfg.box = parse_box(box, 2 * sys.d(), "--box");
    cfg.grid = grid.build();
    cfg.phase_space_samples = phase_space;
    return cfg;
  }
};

int run_converge(const StudyArgs& a) {
  const auto sys = a.system.build();
  const auto table = convergence_study(sys, a.n_list, a.sigma, a.config(sys));
  write_csv(fs::path(a.out_dir) / "convergence.csv",
            [&](std::ostream& out) { write_study_csv(out, table, a.phase_space > 0); });
  std::cout.precision(6);
  for (const auto& r : table.aggregated())
    std::cout << "N=" << r.n << " lambda=" << r.lambda << " sup_error=" << r.sup_error
              << " mean_error=" << r.mean_error << '\n';
  if (table.slope) std::cout << "slope=" << *table.slope << '\n';
  else std::cout << "slope=absent\n";
  return kOk;
}

int run_noise(const StudyArgs& a) {
  const auto sys = a.system.build();
  const auto table = noise_sweep(sys, a.n, a.sigmas, a.config(sys));
  write_csv(fs::path(a.out_dir) / "noise_sweep.csv",
            [&](std::ostream& out) { write_study_csv(out, table, a.phase_space > 0); });
  std::cout.precision(6);
  for (const auto& r : table.aggregated())
    std::cout << "sigma=" << r.sigma << " sup_error=" << r.sup_error
              << " mean_error=" << r.mean_error << '\n';
  return kOk;
}

// --- flow -------------------------------------------------------------------

struct FlowArgs {
  SystemArgs system;
  std::string model;
  double horizon = 1.0;
  double dt = 1e-2;
  int initial = 10;
  std::vector<double> ic_box{-0.5, 0.5};
  std::uint64_t seed = 0;
  std::string out_dir = ".";
};

int run_flow(const FlowArgs& a) {
  const auto sys = a.system.build();
  const VectorField truth = [&](const Vector& z) { return sys.field(z); };
  std::optional<FittedModel> model;
  if (!a.model.empty()) {
    model = io::read_model(a.model);
    require(model->d == sys.d(), "model and system dimensions differ");
  }
  const VectorField learned =
      model ? VectorField([&](const Vector& z) { return predict_field(*model, z); }) : truth;
  require(a.initial >= 1, "--initial must be >= 1");
  const Box box = parse_box(a.ic_box, 2 * sys.d(), "--ic-box");

  PortableRng rng(a.seed);
  std::vector<PhasePoint> starts;
  std::vector<double> errors;
  for (int i = 0; i < a.initial; ++i) {
    PhasePoint z(2 * sys.d());
    for (Eigen::Index k = 0; k < z.size(); ++k)
      z[k] = rng.uniform(box[static_cast<std::size_t>(k)].first,
                         box[static_cast<std::size_t>(k)].second);
    errors.push_back(flow_sup_error(truth, learned, z, a.horizon, a.dt));
    starts.push_back(std::move(z));
  }
  write_csv(fs::path(a.out_dir) / "flow_errors.csv", [&](std::ostream& out) {
    out << "index";
    for (Eigen::Index k = 0; k < sys.d(); ++k) out << ",q" << k + 1;
    for (Eigen::Index k = 0; k < sys.d(); ++k) out << ",p" << k + 1;
    out << ",sup_error\n";
    out.precision(17);
    for (std::size_t i = 0; i < starts.size(); ++i) {
      out << i;
      for (Eigen::Index k = 0; k < starts[i].size(); ++k) out << ',' << starts[i][k];
      out << ',' << errors[i] << '\n';
    }
  });
  double worst = 0.0, sum = 0.0;
  for (double e : errors) {
    worst = std::max(worst, e);
    sum += e;
  }
  std::cout.precision(17);
  std::cout << "max_sup_error=" << worst
            << " mean_sup_error=" << sum / static_cast<double>(errors.size()) << '\n';
  return kOk;
}

// --- online-demo -------------------------------------------------------------

struct OnlineArgs {
  std::string data;
  double eta = 0.0;
  std::optional<double> c;
  std::string out_dir = ".";
};

int run_online(const OnlineArgs& a) {
  const auto data = io::read_dataset(a.data);
  // Without an explicit constant, C = sigma^2 matches the GP posterior mean.
  require(a.c.has_value() || data.sigma > 0.0,
          "dataset is noise-free; pass --C explicitly");
  const double c = a.c ? *a.c : data.sigma * data.sigma;
  const GaussianKernel kernel(a.eta);
  OnlineRegressor reg(c, kernel, data.points[0], data.observations[0]);
  std::vector<double> deviation;
  auto check = [&](Eigen::Index n) {
    std::vector<std::size_t> rows(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    const auto batch = fit(data.subset(rows), kernel, c / static_cast<double>(n));
    const double denom = std::max(batch.coeffs.norm(), 1e-300);
    deviation.push_back((reg.coeffs() - batch.coeffs).norm() / denom);
  };
  check(1);
  for (Eigen::Index i = 1; i < data.n(); ++i) {
    reg.update(data.points[static_cast<std::size_t>(i)],
               data.observations[static_cast<std::size_t>(i)]);
    check(i + 1);
  }
  write_csv(fs::path(a.out_dir) / "online.csv", [&](std::ostream& out) {
    out << "N,lambda,relative_deviation\n";
    out.precision(17);
    for (std::size_t i = 0; i < deviation.size(); ++i)
      out << i + 1 << ',' << c / static_cast<double>(i + 1) << ',' << deviation[i] << '\n';
  });
  double worst = 0.0;
  for (double d : deviation) worst = std::max(worst, d);
  std::cout.precision(6);
  std::cout << "N=" << data.n() << " C=" << c << " updates=" << reg.counters().updates
            << " full_inversions=" << reg.counters().full_inversions << '\n'
            << "max_coeff_deviation=" << worst << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learn Hamiltonians from vector-field samples with kernel ridge regression"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every command");

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Sample a dataset from a built-in system");
  gen.system.add(g);
  g->add_option("--n", gen.n, "Number of samples")->required();
  g->add_option("--box", gen.box, "Sampling box (lo hi, or one pair per coordinate)");
  g->add_option("--sigma", gen.sigma, "Observation noise standard deviation");
  g->add_option("--seed", gen.seed, "Generator seed");
  g->add_option("--exclusion-radius", gen.exclusion_radius,
                "Resample points with |q| below this radius");
  g->add_option("--out", gen.out, "Output .hamdata.json path")->required();

  FitArgs fa;
  auto* f = app.add_subcommand("fit", "Fit a model with lambda = c N^-alpha");
  f->add_option("--data", fa.data, "Dataset file")->required();
  f->add_option("--eta", fa.eta, "Kernel bandwidth")->required();
  f->add_option("--c", fa.c, "Regularization constant")->required();
  f->add_option("--alpha", fa.alpha, "Regularization decay exponent");
  f->add_option("--out", fa.out, "Output model JSON path")->required();

  CvArgs cv;
  auto* v = app.add_subcommand("cv", "Grid search over (eta, c) with k-fold cross-validation");
  v->add_option("--data", cv.data, "Dataset file")->required();
  v->add_option("--eta-grid", cv.eta_grid, "Explicit eta values");
  v->add_option("--eta-range", cv.eta_range, "lo hi step (half-open, like numpy.arange)")
      ->expected(3);
  v->add_option("--c-grid", cv.c_grid, "c values (default: 5e-6 ... 1, 12 values)");
  v->add_option("--alpha", cv.alpha, "Regularization decay exponent");
  v->add_option("--folds", cv.folds, "Number of folds");
  v->add_option("--seed", cv.seed, "Fold shuffling seed");
  v->add_option("--out-dir", cv.out_dir, "Output directory");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Export potential grids and shifted errors");
  ev.system.add(e);
  e->add_option("--model", ev.model, "Model JSON (omit to export the truth only)");
  ev.grid.add(e);
  e->add_option("--out-dir", ev.out_dir, "Output directory");

  StudyArgs conv;
  auto* c = app.add_subcommand("converge", "Error versus N with lambda = c N^-alpha");
  conv.add_common(c);
  c->add_option("--n-list", conv.n_list, "Increasing sample sizes")->required();
  c->add_option("--sigma", conv.sigma, "Observation noise standard deviation");
  c->add_option("--phase-space", conv.phase_space,
                "Also report errors on this many uniform phase-space points");

  StudyArgs noise;
  auto* n = app.add_subcommand("noise", "Error versus observation noise level");
  noise.add_common(n);
  n->add_option("--n", noise.n, "Sample size")->required();
  n->add_option("--sigmas", noise.sigmas, "Noise levels")->required();

  FlowArgs fl;
  auto* w = app.add_subcommand("flow", "Compare RK4 flows of the true and learned fields");
  fl.system.add(w);
  w->add_option("--model", fl.model, "Model JSON (omit to compare the truth with itself)");
  w->add_option("--t", fl.horizon, "Time horizon");
  w->add_option("--dt", fl.dt, "RK4 step");
  w->add_option("--initial", fl.initial, "Number of initial conditions");
  w->add_option("--ic-box", fl.ic_box, "Box for initial conditions");
  w->add_option("--seed", fl.seed, "Seed for initial conditions");
  w->add_option("--out-dir", fl.out_dir, "Output directory");

  OnlineArgs on;
  auto* o = app.add_subcommand("online-demo", "Stream a dataset and compare with batch fits");
  o->add_option("--data", on.data, "Dataset file")->required();
  o->add_option("--eta", on.eta, "Kernel bandwidth")->required();
  o->add_option("--C", on.c, "Constant with lambda(N) N = C (default sigma^2)");
  o->add_option("--out-dir", on.out_dir, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::CallForAllHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::ParseError& ex) {
    report_error("validation", ex.what());
    return kValidation;
  }

  try {
    if (*g) return run_generate(gen);
    if (*f) return run_fit(fa);
    if (*v) return run_cv(cv);
    if (*e) return run_eval(ev);
    if (*c) return run_converge(conv);
    if (*n) return run_noise(noise);
    if (*w) return run_flow(fl);
    if (*o) return run_online(on);
  } catch (const ValidationError& ex) {
    report_error("validation", ex.what());
    return kValidation;
  } catch (const NumericalError& ex) {
    report_error("numerical", ex.what());
    return kNumerical;
  } catch (const fs::filesystem_error& ex) {
    report_error("validation", ex.what());
    return kValidation;
  }
  return kOk;
}
