#pragma once

#include "msomdr/core.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

namespace msomdr {

/// Two-outcome, two-covariate, bivariate-draw generator:
///   X_i ~ N2(0, [[1, .5], [.5, 1]]),  mu_i ~ N2(0, I),  C_i ~ U(1, 3),
///   Z_il ~ N2(mu_i, C_i [[1, .3], [.3, 1]]),
///   Y_ik = X_i^T gamma_k + signal_ik + eps_ik,  eps_ik ~ N(0, 1),
/// with gamma_1 = (1, 3), gamma_2 = (2, 4),
/// beta_1(u, v) = (u^2 + v^2) / 2 and beta_2(u, v) = (u + 4v + 2uv) / 3.
struct ScenarioConfig {
  std::size_t n = 500;
  std::size_t m = 1000;
  std::uint64_t seed = 0;
  double train_fraction = 0.8;
  /// signal = E_{P_Z}[beta_k] in closed form instead of the average over the draws.
  bool analytic_signal = false;
  bool noise = true;
  bool zero_gamma = false;
};

void validate(const ScenarioConfig& cfg);

struct SubjectLatent {
  Eigen::Vector2d mu;
  double c = 1.0;
};

struct GroundTruth {
  Eigen::MatrixXd gamma;  // q x K = 2 x 2
  /// Distributional term of each subject's outcomes, keyed by subject id.
  std::unordered_map<std::string, Eigen::VectorXd> signal;
  std::unordered_map<std::string, SubjectLatent> latent;
  bool analytic_signal = false;
};

/// True coefficient surface, outcome k in {0, 1}.
double true_beta(std::size_t k, double u, double v);

/// E[beta_k(Z)] for Z ~ N2(mu, c * Sigma0).
double analytic_beta_mean(std::size_t k, const Eigen::Vector2d& mu, double c);

/// m draws from N2(mu, c * Sigma0) via the Cholesky factor of Sigma0.
Eigen::MatrixXd draw_subject_z(const Eigen::Vector2d& mu, double c, std::size_t m, std::mt19937_64& rng);

/// Generator seeded from (seed, subject index), so subjects can be drawn in
/// any order or concurrently.
std::mt19937_64 subject_rng(std::uint64_t seed, std::uint64_t index);

struct ScenarioA1 {
  Dataset data;   // all n subjects
  Dataset train;  // exact train_fraction share of `data`
  Dataset test;
  GroundTruth truth;
};

ScenarioA1 gen_scenario_a1(const ScenarioConfig& cfg);

/// Exact-size random holdout: round(n * (1 - train_fraction)) test subjects.
std::pair<Dataset, Dataset> train_test_split(const Dataset& data, double train_fraction, std::uint64_t seed);

struct ScenarioA2 {
  Dataset train1;
  Dataset train2;
  Dataset calibration;
  Dataset test;
  GroundTruth truth;
};

/// A1 law; 20% exact test holdout, remaining subjects split three ways with
/// equal probability.
ScenarioA2 gen_scenario_a2(const ScenarioConfig& cfg);

}  // namespace msomdr
