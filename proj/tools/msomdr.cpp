#include "msomdr/baselines.hpp"
#include "msomdr/conformal.hpp"
#include "msomdr/experiment.hpp"
#include "msomdr/io.hpp"
#include "msomdr/metrics.hpp"
#include "msomdr/scoring.hpp"
#include "msomdr/simulate.hpp"
#include "msomdr/tuning.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace msomdr;
using nlohmann::json;

namespace {

BasisCounts parse_counts(const std::string& text) {
  BasisCounts out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t pos = 0;
    long v = 0;
    try {
      v = std::stol(item, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != item.size() || v < 1) throw std::invalid_argument("bad basis size '" + item + "' in '" + text + "'");
    out.push_back(static_cast<std::size_t>(v));
  }
  if (out.empty()) throw std::invalid_argument("empty basis size list");
  return out;
}

std::string counts_text(const BasisCounts& c) {
  std::string s;
  for (std::size_t j = 0; j < c.size(); ++j) s += (j ? "," : "") + std::to_string(c[j]);
  return s;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot write " + path);
  return os;
}

std::string sibling(const std::string& path, const std::string& suffix) {
  fs::path p(path);
  return (p.parent_path() / (p.stem().string() + suffix)).string();
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string scenario = "a1";
  std::size_t n = 500;
  std::size_t m = 1000;
  std::uint64_t seed = 0;
  std::string out_dir = ".";
  double alpha = 0.05;
  double train_fraction = 0.8;
  bool analytic = false;
};

int run_simulate(const SimulateArgs& a) {
  ScenarioConfig cfg;
  cfg.n = a.n;
  cfg.m = a.m;
  cfg.seed = a.seed;
  cfg.train_fraction = a.train_fraction;
  cfg.analytic_signal = a.analytic;

  std::error_code ec;
  fs::create_directories(a.out_dir, ec);
  if (ec) throw DataError("cannot create " + a.out_dir + ": " + ec.message());
  const fs::path dir(a.out_dir);

  json truth;
  if (a.scenario == "a1") {
    const ScenarioA1 sc = gen_scenario_a1(cfg);
    io::write_dataset((dir / "train").string(), sc.train);
    io::write_dataset((dir / "test").string(), sc.test);
    truth = io::truth_to_json(sc.truth, "a1");
    std::cout << "scenario a1: " << sc.train.size() << " train, " << sc.test.size() << " test subjects, m = " << a.m
              << '\n';
  } else if (a.scenario == "a2") {
    const ScenarioA2 sc = gen_scenario_a2(cfg);
    io::write_dataset((dir / "train1").string(), sc.train1);
    io::write_dataset((dir / "train2").string(), sc.train2);
    io::write_dataset((dir / "calibration").string(), sc.calibration);
    io::write_dataset((dir / "test").string(), sc.test);
    truth = io::truth_to_json(sc.truth, "a2");
    truth["alpha"] = a.alpha;
    std::cout << "scenario a2: " << sc.train1.size() << " train1, " << sc.train2.size() << " train2, "
              << sc.calibration.size() << " calibration, " << sc.test.size() << " test subjects, m = " << a.m << '\n';
  } else {
    throw std::invalid_argument("unknown scenario '" + a.scenario + "' (expected a1 or a2)");
  }
  truth["n"] = a.n;
  truth["m"] = a.m;
  truth["seed"] = a.seed;
  auto os = open_out((dir / "truth.json").string());
  os << truth.dump(1) << '\n';
  return 0;
}

// --------------------------------------------------------------------- fit

struct FitArgs {
  std::string covariates, draws, model_out = "model.json";
  std::string method = "msomdr";
  std::string basis = "cv";
  std::vector<std::size_t> cv_sizes{4, 5, 6, 7, 8};
  std::string lambda = "path";
  std::size_t folds = 5;
  double phi = 3.0;
  std::uint64_t seed = 0;
  std::size_t n_lambda = 100;
  double min_ratio = 1e-3;
  int degree = 3;
  double tol = 1e-7;
  int max_iter = 10000;
};

int run_fit(const FitArgs& a) {
  const Dataset train = io::read_dataset(a.covariates, a.draws);
  json meta{{"method", a.method}};

  FitResult model;
  std::optional<TuningResult> tuned;
  if (a.method == "mean-summary") {
    model = fit_mean_summary(train);
  } else if (a.method == "msomdr" || a.method == "soqfr") {
    const FeatureFactory factory =
        a.method == "msomdr" ? tensor_feature_factory(a.degree) : quantile_feature_factory(QuantileGrid::interior(), a.degree);
    SolverOptions opts;
    opts.tol = a.tol;
    opts.max_iter = a.max_iter;

    std::vector<BasisCounts> candidates;
    if (a.basis == "cv") {
      for (std::size_t s : a.cv_sizes) candidates.push_back(BasisCounts(train.dims.d, s));
    } else {
      candidates.push_back(parse_counts(a.basis));
    }
    std::optional<double> fixed_lambda;
    if (a.lambda != "path") {
      std::size_t pos = 0;
      try {
        fixed_lambda = std::stod(a.lambda, &pos);
      } catch (const std::exception&) {
        pos = 0;
      }
      if (pos != a.lambda.size() || !(*fixed_lambda >= 0.0)) {
        throw std::invalid_argument("--lambda expects a non-negative number or 'path'");
      }
    }

    if (candidates.size() == 1 && fixed_lambda) {
      model = fit_fixed(train, candidates.front(), McpSpec{*fixed_lambda, a.phi}, opts, factory);
      meta["basis"] = candidates.front();
      meta["lambda"] = *fixed_lambda;
    } else {
      TuningGrid grid;
      grid.basis_counts = candidates;
      grid.n_lambda = a.n_lambda;
      grid.min_ratio = a.min_ratio;
      grid.folds = a.folds;
      grid.seed = a.seed;
      grid.degree = a.degree;
      if (fixed_lambda) grid.lambdas = std::vector<double>{*fixed_lambda};
      tuned = cross_validate(train, grid, a.phi, opts, factory);
      model = tuned->refit;
      meta["basis"] = tuned->best_counts;
      meta["lambda"] = tuned->best_lambda;
      meta["folds"] = a.folds;
      meta["seed"] = a.seed;
    }
  } else {
    throw std::invalid_argument("unknown method '" + a.method + "' (expected msomdr, mean-summary or soqfr)");
  }

  io::save_model(a.model_out, model, std::nullopt, meta);
  if (tuned) {
    const std::string cv_path = sibling(a.model_out, "_cv.csv");
    auto os = open_out(cv_path);
    write_cv_table(os, *tuned);
    std::cout << "cv table: " << cv_path << '\n';
  }
  std::cout << "method: " << a.method << '\n';
  if (meta.contains("basis")) std::cout << "basis: " << counts_text(meta["basis"].get<BasisCounts>()) << '\n';
  std::cout << "lambda: " << io::format_double(model.mcp.lambda) << '\n';
  std::cout << "active groups: " << model.active_groups.size() << " of " << model.theta.rows() << '\n';
  if (!model.converged) std::cerr << "warning: solver stopped at the iteration limit\n";
  std::cout << "model: " << a.model_out << '\n';
  return 0;
}

// --------------------------------------------------------------- conformal

struct CalibrateArgs {
  std::string model, train2, calibration, model_out;
  double alpha = 0.05;
  bool uncorrected = false;
};

int run_calibrate(const CalibrateArgs& a) {
  io::LoadedModel lm = io::load_model(a.model);
  const Dataset train2 = io::read_dataset_prefix(a.train2);
  const Dataset cal = io::read_dataset_prefix(a.calibration);
  const ConformalModel cm = calibrate(lm.fit, train2, cal, a.alpha, !a.uncorrected);
  const std::string out = a.model_out.empty() ? a.model : a.model_out;
  io::save_model(out, lm.fit, cm, lm.extra);
  std::cout << "n_cal: " << cm.n_cal << '\n'
            << "rank: " << conformal_rank(cm.n_cal, cm.alpha, cm.finite_sample_correction) << '\n'
            << "q_hat: " << io::format_double(cm.q_hat) << '\n'
            << "model: " << out << '\n';
  return 0;
}

struct PredictArgs {
  std::string model, input, out;
};

int run_predict(const PredictArgs& a) {
  const io::LoadedModel lm = io::load_model(a.model);
  if (!lm.conformal) throw DataError(a.model + ": model is not calibrated; run 'conformal calibrate' first");
  const Dataset data = io::read_dataset_prefix(a.input, false);
  std::vector<std::string> ids;
  std::vector<PredictionRegion> regions;
  for (const auto& s : data.subjects) {
    ids.push_back(s.id);
    regions.push_back(predict_region(*lm.conformal, s.x, s.z));
  }
  auto os = open_out(a.out);
  io::write_regions(os, ids, regions);
  std::cout << "regions: " << regions.size() << " subjects -> " << a.out << '\n';
  return 0;
}

// ---------------------------------------------------------------- evaluate

struct EvaluateArgs {
  std::string model, covariates, draws, truth, report = "report.json";
  std::size_t grid_points = 50;
};

int run_evaluate(const EvaluateArgs& a) {
  const io::LoadedModel lm = io::load_model(a.model);
  const Dataset test = io::read_dataset(a.covariates, a.draws);
  EvalReport rep;
  rep.predictions = predict(lm.fit, test);
  rep.r2 = r_squared(test.outcome_matrix(), rep.predictions);
  for (const auto& s : test.subjects) rep.ids.push_back(s.id);

  if (a.truth.empty()) {
    std::cerr << "warning: no --truth sidecar given; surface L2 loss omitted\n";
  } else if (!std::holds_alternative<TensorBasis>(lm.fit.features)) {
    std::cerr << "warning: surface L2 loss needs a tensor-basis model; omitted\n";
  } else {
    std::ifstream is(a.truth);
    if (!is) throw DataError("cannot open " + a.truth);
    json truth;
    try {
      truth = json::parse(is);
    } catch (const json::exception& e) {
      throw DataError(a.truth + ": " + e.what());
    }
    const std::string scenario = truth.value("scenario", "");
    if (scenario != "a1" && scenario != "a2") throw DataError(a.truth + ": unknown scenario '" + scenario + "'");
    const SurfaceFunction f = [](std::size_t k, std::span<const double> p) { return true_beta(k, p[0], p[1]); };
    rep.surface_l2 = beta_l2_loss(lm.fit, f, GridSpec{a.grid_points, {}});
  }
  if (lm.conformal) rep.coverage = empirical_coverage(*lm.conformal, test);

  json doc = io::report_to_json(rep);
  doc["model"] = a.model;
  auto os = open_out(a.report);
  os << doc.dump(1) << '\n';
  std::cout << "r2:";
  for (Eigen::Index k = 0; k < rep.r2.size(); ++k) std::cout << ' ' << io::format_double(rep.r2[k]);
  std::cout << '\n';
  if (rep.surface_l2) {
    std::cout << "surface_l2:";
    for (Eigen::Index k = 0; k < rep.surface_l2->size(); ++k) std::cout << ' ' << io::format_double((*rep.surface_l2)[k]);
    std::cout << '\n';
  }
  if (rep.coverage) std::cout << "coverage: " << io::format_double(*rep.coverage) << '\n';
  return 0;
}

// ----------------------------------------------------------------- surface

struct SurfaceArgs {
  std::string model, out;
  std::size_t outcome = 1;
  std::size_t points = 50;
};

int run_surface(const SurfaceArgs& a) {
  const io::LoadedModel lm = io::load_model(a.model);
  if (a.outcome < 1 || a.outcome > lm.fit.K()) throw std::invalid_argument("--outcome out of range");
  const auto surface = export_surface(lm.fit, a.outcome - 1, GridSpec{a.points, {}});
  auto os = open_out(a.out);
  write_surface_csv(os, surface);
  std::cout << "surface: " << surface.size() << " points -> " << a.out << '\n';
  return 0;
}

// --------------------------------------------------------------- replicate

struct ReplicateArgs {
  std::string scenario = "a2";
  std::size_t reps = 10;
  std::uint64_t seed = 1;
  std::vector<std::uint64_t> seeds;
  std::size_t n = 2000;
  std::size_t m = 200;
  double alpha = 0.05;
  std::vector<std::string> basis{"6,6"};
  std::size_t n_lambda = 30;
  std::size_t folds = 5;
  bool no_baselines = false;
  std::string out = "replications.csv";
};

int run_replicate(const ReplicateArgs& a) {
  const std::vector<std::uint64_t> seeds = a.seeds.empty() ? consecutive_seeds(a.seed, a.reps) : a.seeds;
  ModelSettings model;
  model.basis_counts.clear();
  for (const auto& b : a.basis) model.basis_counts.push_back(parse_counts(b));
  model.n_lambda = a.n_lambda;
  model.folds = a.folds;
  ScenarioConfig cfg;
  cfg.n = a.n;
  cfg.m = a.m;

  auto os = open_out(a.out);
  if (a.scenario == "a1") {
    A1Settings s;
    s.scenario = cfg;
    s.model = model;
    s.baselines = !a.no_baselines;
    const auto results = replicate_a1(s, seeds);
    write_replications_csv(os, results);
    std::vector<double> r2;
    for (const auto& r : results) r2.push_back(r.r2[0]);
    std::cout << "replications: " << results.size() << ", mean r2_1 = " << io::format_double(mean_of(r2)) << '\n';
  } else if (a.scenario == "a2") {
    A2Settings s;
    s.scenario = cfg;
    s.model = model;
    s.alpha = a.alpha;
    const auto results = replicate_a2(s, seeds);
    write_replications_csv(os, results);
    std::vector<double> cov;
    for (const auto& r : results) cov.push_back(r.coverage);
    std::cout << "replications: " << results.size() << ", mean coverage = " << io::format_double(mean_of(cov))
              << ", sd = " << io::format_double(sd_of(cov)) << '\n';
  } else {
    throw std::invalid_argument("unknown scenario '" + a.scenario + "' (expected a1 or a2)");
  }
  std::cout << "table: " << a.out << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multivariate scalar-on-distribution regression with conformal prediction regions"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "Generate a synthetic scenario as CSV files plus truth.json");
  c_sim->add_option("--scenario", sim.scenario, "a1 or a2")->capture_default_str();
  c_sim->add_option("--n", sim.n, "subjects")->capture_default_str()->check(CLI::PositiveNumber);
  c_sim->add_option("--m", sim.m, "draws per subject")->capture_default_str()->check(CLI::PositiveNumber);
  c_sim->add_option("--seed", sim.seed)->capture_default_str();
  c_sim->add_option("--out-dir", sim.out_dir)->capture_default_str();
  c_sim->add_option("--alpha", sim.alpha, "recorded in truth.json for a2")->capture_default_str();
  c_sim->add_option("--train-fraction", sim.train_fraction)->capture_default_str();
  c_sim->add_flag("--analytic-signal", sim.analytic, "closed-form E[beta(Z)] instead of the draw average");

  FitArgs fit_a;
  auto* c_fit = app.add_subcommand("fit", "Fit a model and write a model file");
  c_fit->add_option("--covariates", fit_a.covariates)->required();
  c_fit->add_option("--draws", fit_a.draws)->required();
  c_fit->add_option("--method", fit_a.method, "msomdr, mean-summary or soqfr")->capture_default_str();
  c_fit->add_option("--basis", fit_a.basis, "basis sizes per dimension (e.g. 6,6) or cv")->capture_default_str();
  c_fit->add_option("--cv-sizes", fit_a.cv_sizes, "per-dimension sizes tried by --basis cv")->capture_default_str();
  c_fit->add_option("--lambda", fit_a.lambda, "penalty level or path")->capture_default_str();
  c_fit->add_option("--folds", fit_a.folds)->capture_default_str()->check(CLI::Range(2, 1000));
  c_fit->add_option("--phi", fit_a.phi)->capture_default_str();
  c_fit->add_option("--seed", fit_a.seed)->capture_default_str();
  c_fit->add_option("--n-lambda", fit_a.n_lambda)->capture_default_str()->check(CLI::PositiveNumber);
  c_fit->add_option("--min-ratio", fit_a.min_ratio)->capture_default_str();
  c_fit->add_option("--degree", fit_a.degree)->capture_default_str();
  c_fit->add_option("--tol", fit_a.tol)->capture_default_str();
  c_fit->add_option("--max-iter", fit_a.max_iter)->capture_default_str();
  c_fit->add_option("--model-out", fit_a.model_out)->capture_default_str();

  auto* c_conf = app.add_subcommand("conformal", "Split-conformal calibration and prediction regions");
  c_conf->require_subcommand(1);
  CalibrateArgs cal;
  auto* c_cal = c_conf->add_subcommand("calibrate", "Add conformal calibration to a model file");
  c_cal->add_option("--model", cal.model)->required();
  c_cal->add_option("--train2", cal.train2, "dataset prefix (<prefix>_covariates.csv, <prefix>_draws.csv)")->required();
  c_cal->add_option("--calibration", cal.calibration, "dataset prefix")->required();
  c_cal->add_option("--alpha", cal.alpha)->capture_default_str();
  c_cal->add_flag("--uncorrected", cal.uncorrected, "use rank ceil(n(1-alpha)) instead of ceil((n+1)(1-alpha))");
  c_cal->add_option("--model-out", cal.model_out, "defaults to overwriting --model");
  PredictArgs pred;
  auto* c_pred = c_conf->add_subcommand("predict", "Write per-subject prediction boxes");
  c_pred->add_option("--model", pred.model)->required();
  c_pred->add_option("--input", pred.input, "dataset prefix; outcome columns optional")->required();
  c_pred->add_option("--out", pred.out)->required();

  EvaluateArgs ev;
  auto* c_ev = app.add_subcommand("evaluate", "Test-set R2, surface L2 loss and coverage as a JSON report");
  c_ev->add_option("--model", ev.model)->required();
  c_ev->add_option("--test-covariates", ev.covariates)->required();
  c_ev->add_option("--test-draws", ev.draws)->required();
  c_ev->add_option("--truth", ev.truth, "truth.json written by simulate");
  c_ev->add_option("--grid-points", ev.grid_points)->capture_default_str()->check(CLI::PositiveNumber);
  c_ev->add_option("--report", ev.report)->capture_default_str();

  SurfaceArgs surf;
  auto* c_surf = app.add_subcommand("surface", "Export a fitted coefficient surface on a grid");
  c_surf->add_option("--model", surf.model)->required();
  c_surf->add_option("--outcome", surf.outcome, "1-based outcome index")->capture_default_str();
  c_surf->add_option("--points", surf.points)->capture_default_str()->check(CLI::PositiveNumber);
  c_surf->add_option("--out", surf.out)->required();

  ReplicateArgs rep;
  auto* c_rep = app.add_subcommand("replicate", "Monte-Carlo replications of a scenario");
  c_rep->add_option("--scenario", rep.scenario)->capture_default_str();
  c_rep->add_option("--reps", rep.reps)->capture_default_str()->check(CLI::PositiveNumber);
  c_rep->add_option("--seed", rep.seed, "first seed; replications use seed, seed+1, ...")->capture_default_str();
  c_rep->add_option("--seeds", rep.seeds, "explicit seed list (overrides --reps/--seed)");
  c_rep->add_option("--n", rep.n)->capture_default_str();
  c_rep->add_option("--m", rep.m)->capture_default_str();
  c_rep->add_option("--alpha", rep.alpha)->capture_default_str();
  c_rep->add_option("--basis", rep.basis, "candidate basis tuples, e.g. 5,5 6,6")->capture_default_str();
  c_rep->add_option("--n-lambda", rep.n_lambda)->capture_default_str();
  c_rep->add_option("--folds", rep.folds)->capture_default_str();
  c_rep->add_flag("--no-baselines", rep.no_baselines, "skip the mean-summary and SOQFR fits (a1)");
  c_rep->add_option("--out", rep.out)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (c_sim->parsed()) return run_simulate(sim);
    if (c_fit->parsed()) return run_fit(fit_a);
    if (c_cal->parsed()) return run_calibrate(cal);
    if (c_pred->parsed()) return run_predict(pred);
    if (c_ev->parsed()) return run_evaluate(ev);
    if (c_surf->parsed()) return run_surface(surf);
    if (c_rep->parsed()) return run_replicate(rep);
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 1;
}
