#include "msomdr/experiment.hpp"

#include "msomdr/baselines.hpp"
#include "msomdr/conformal.hpp"
#include "msomdr/metrics.hpp"
#include "msomdr/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <ostream>
#include <sstream>

namespace msomdr {

namespace {

TuningGrid model_grid(const ModelSettings& m, std::uint64_t seed) {
  TuningGrid g;
  g.basis_counts = m.basis_counts;
  g.n_lambda = m.n_lambda;
  g.min_ratio = m.min_ratio;
  g.folds = m.folds;
  g.seed = seed;
  return g;
}

template <class Result, class Settings, class Run>
std::vector<Result> replicate(const Settings& settings, const std::vector<std::uint64_t>& seeds, Run run) {
  const std::size_t reps = seeds.size();
  std::vector<Result> out(reps);
  std::vector<std::exception_ptr> errors(reps);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t r = 0; r < reps; ++r) {
    try {
      Settings local = settings;
      local.scenario.seed = seeds[r];
      out[r] = run(local);
    } catch (...) {
      errors[r] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

void write_counts(std::ostream& os, const BasisCounts& c) {
  for (std::size_t j = 0; j < c.size(); ++j) os << (j ? "x" : "") << c[j];
}

}  // namespace

A1Result run_a1_replication(const A1Settings& settings) {
  const ScenarioA1 sc = gen_scenario_a1(settings.scenario);
  const TuningResult tuned = cross_validate(sc.train, model_grid(settings.model, settings.scenario.seed),
                                            settings.model.phi, settings.model.solver);

  A1Result r;
  r.seed = settings.scenario.seed;
  r.counts = tuned.best_counts;
  r.lambda = tuned.best_lambda;
  r.active_groups = tuned.refit.active_groups.size();
  const Eigen::MatrixXd y_test = sc.test.outcome_matrix();
  r.r2 = r_squared(y_test, predict(tuned.refit, sc.test));
  const SurfaceFunction truth = [](std::size_t k, std::span<const double> p) { return true_beta(k, p[0], p[1]); };
  r.surface_l2 = beta_l2_loss(tuned.refit, truth, GridSpec{settings.surface_points, {}});

  if (settings.baselines) {
    r.r2_mean_summary = r_squared(y_test, predict(fit_mean_summary(sc.train), sc.test));
    TuningGrid sg = model_grid(settings.model, settings.scenario.seed);
    sg.basis_counts.clear();
    for (const auto& c : settings.soqfr_counts) {
      // one size per draw dimension
      sg.basis_counts.push_back(c.size() == 1 ? BasisCounts(sc.train.dims.d, c[0]) : c);
    }
    const TuningResult soqfr = fit_soqfr(sc.train, sg, QuantileGrid::interior(), settings.model.phi, settings.model.solver);
    r.r2_soqfr = r_squared(y_test, predict(soqfr.refit, sc.test));
  }
  return r;
}

A2Result run_a2_replication(const A2Settings& settings) {
  const ScenarioA2 sc = gen_scenario_a2(settings.scenario);
  const TuningResult tuned = cross_validate(sc.train1, model_grid(settings.model, settings.scenario.seed),
                                            settings.model.phi, settings.model.solver);
  const ConformalModel cm =
      calibrate(tuned.refit, sc.train2, sc.calibration, settings.alpha, settings.finite_sample_correction);

  FitResult constant = tuned.refit;
  constant.gamma.setZero();
  constant.theta.setZero();
  constant.intercept = sc.train1.outcome_matrix().colwise().mean().transpose();
  const ConformalModel cm_const =
      calibrate(constant, sc.train2, sc.calibration, settings.alpha, settings.finite_sample_correction);

  A2Result r;
  r.seed = settings.scenario.seed;
  r.counts = tuned.best_counts;
  r.lambda = tuned.best_lambda;
  r.coverage = empirical_coverage(cm, sc.test);
  r.constant_coverage = empirical_coverage(cm_const, sc.test);
  r.q_hat = cm.q_hat;
  r.n_cal = cm.n_cal;
  r.n_test = sc.test.size();
  return r;
}

std::vector<A1Result> replicate_a1(const A1Settings& settings, const std::vector<std::uint64_t>& seeds) {
  return replicate<A1Result>(settings, seeds, run_a1_replication);
}

std::vector<A2Result> replicate_a2(const A2Settings& settings, const std::vector<std::uint64_t>& seeds) {
  return replicate<A2Result>(settings, seeds, run_a2_replication);
}

std::vector<std::uint64_t> consecutive_seeds(std::uint64_t base, std::size_t reps) {
  std::vector<std::uint64_t> seeds(reps);
  for (std::size_t r = 0; r < reps; ++r) seeds[r] = base + r;
  return seeds;
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::nan("");
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sd_of(const std::vector<double>& v) {
  if (v.size() < 2) return std::nan("");
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double median_of(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

namespace {

/// Writes per-replication rows followed by mean/sd/median rows of the numeric columns.
void write_table(std::ostream& os, const std::vector<std::string>& header, const std::vector<std::string>& labels,
                 const std::vector<std::string>& counts, const std::vector<std::vector<double>>& rows) {
  os << "replication,seed,basis";
  for (const auto& h : header) os << ',' << h;
  os << '\n';
  os.precision(10);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    os << r << ',' << labels[r] << ',' << counts[r];
    for (double v : rows[r]) os << ',' << v;
    os << '\n';
  }
  const std::size_t cols = header.size();
  std::vector<std::vector<double>> by_col(cols);
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < cols; ++c) by_col[c].push_back(row[c]);
  }
  for (const char* stat : {"mean", "sd", "median"}) {
    os << stat << ",,";
    for (std::size_t c = 0; c < cols; ++c) {
      const std::string s = stat;
      const double v = s == "mean" ? mean_of(by_col[c]) : s == "sd" ? sd_of(by_col[c]) : median_of(by_col[c]);
      os << ',' << v;
    }
    os << '\n';
  }
}

}  // namespace

void write_replications_csv(std::ostream& os, const std::vector<A1Result>& results) {
  std::vector<std::string> header{"lambda", "active_groups"};
  const Eigen::Index K = results.empty() ? 0 : results.front().r2.size();
  for (Eigen::Index k = 1; k <= K; ++k) header.push_back("r2_" + std::to_string(k));
  for (Eigen::Index k = 1; k <= K; ++k) header.push_back("l2_" + std::to_string(k));
  const bool base = !results.empty() && results.front().r2_mean_summary.has_value();
  if (base) {
    for (Eigen::Index k = 1; k <= K; ++k) header.push_back("r2_mean_summary_" + std::to_string(k));
    for (Eigen::Index k = 1; k <= K; ++k) header.push_back("r2_soqfr_" + std::to_string(k));
  }
  std::vector<std::string> labels, counts;
  std::vector<std::vector<double>> rows;
  for (const auto& r : results) {
    labels.push_back(std::to_string(r.seed));
    std::ostringstream c;
    write_counts(c, r.counts);
    counts.push_back(c.str());
    std::vector<double> row{r.lambda, static_cast<double>(r.active_groups)};
    for (Eigen::Index k = 0; k < K; ++k) row.push_back(r.r2[k]);
    for (Eigen::Index k = 0; k < K; ++k) row.push_back(r.surface_l2[k]);
    if (base) {
      for (Eigen::Index k = 0; k < K; ++k) row.push_back((*r.r2_mean_summary)[k]);
      for (Eigen::Index k = 0; k < K; ++k) row.push_back((*r.r2_soqfr)[k]);
    }
    rows.push_back(std::move(row));
  }
  write_table(os, header, labels, counts, rows);
}

void write_replications_csv(std::ostream& os, const std::vector<A2Result>& results) {
  const std::vector<std::string> header{"lambda", "coverage", "constant_coverage", "q_hat", "n_cal", "n_test"};
  std::vector<std::string> labels, counts;
  std::vector<std::vector<double>> rows;
  for (const auto& r : results) {
    labels.push_back(std::to_string(r.seed));
    std::ostringstream c;
    write_counts(c, r.counts);
    counts.push_back(c.str());
    rows.push_back({r.lambda, r.coverage, r.constant_coverage, r.q_hat, static_cast<double>(r.n_cal),
                    static_cast<double>(r.n_test)});
  }
  write_table(os, header, labels, counts, rows);
}

}  // namespace msomdr
