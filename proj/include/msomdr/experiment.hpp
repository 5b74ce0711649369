#pragma once

#include "msomdr/simulate.hpp"
#include "msomdr/solver.hpp"
#include "msomdr/tuning.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

namespace msomdr {

// Monte-Carlo replication drivers for the simulated scenarios. Each
// replication is fully determined by its scenario seed; results come back in
// the order of the seed list regardless of completion order.

struct ModelSettings {
  std::vector<BasisCounts> basis_counts{{6, 6}};
  std::size_t n_lambda = 30;
  double min_ratio = 1e-3;
  std::size_t folds = 5;
  double phi = 3.0;
  SolverOptions solver;
};

struct A1Settings {
  ScenarioConfig scenario;
  ModelSettings model;
  bool baselines = true;
  /// Per-dimension quantile basis sizes tried by the SOQFR baseline.
  std::vector<BasisCounts> soqfr_counts{{4}, {6}, {8}};
  std::size_t surface_points = 50;
};

struct A1Result {
  std::uint64_t seed = 0;
  BasisCounts counts;
  double lambda = 0.0;
  std::size_t active_groups = 0;
  Eigen::VectorXd r2;
  Eigen::VectorXd surface_l2;
  std::optional<Eigen::VectorXd> r2_mean_summary;
  std::optional<Eigen::VectorXd> r2_soqfr;
};

struct A2Settings {
  ScenarioConfig scenario;
  ModelSettings model;
  double alpha = 0.05;
  bool finite_sample_correction = true;
};

struct A2Result {
  std::uint64_t seed = 0;
  BasisCounts counts;
  double lambda = 0.0;
  double coverage = 0.0;
  /// Coverage of the same procedure with the fit replaced by the train1 outcome mean.
  double constant_coverage = 0.0;
  double q_hat = 0.0;
  std::size_t n_cal = 0;
  std::size_t n_test = 0;
};

A1Result run_a1_replication(const A1Settings& settings);
A2Result run_a2_replication(const A2Settings& settings);

/// Runs one replication per seed, concurrently.
std::vector<A1Result> replicate_a1(const A1Settings& settings, const std::vector<std::uint64_t>& seeds);
std::vector<A2Result> replicate_a2(const A2Settings& settings, const std::vector<std::uint64_t>& seeds);

/// base, base + 1, ..., base + reps - 1
std::vector<std::uint64_t> consecutive_seeds(std::uint64_t base, std::size_t reps);

/// One row per replication, then rows "mean", "sd" and "median" over replications.
void write_replications_csv(std::ostream& os, const std::vector<A1Result>& results);
void write_replications_csv(std::ostream& os, const std::vector<A2Result>& results);

double mean_of(const std::vector<double>& v);
/// Sample standard deviation (n - 1).
double sd_of(const std::vector<double>& v);
double median_of(std::vector<double> v);

}  // namespace msomdr
