#pragma once

#include "msomdr/core.hpp"
#include "msomdr/solver.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace msomdr {

/// Split-conformal model: a frozen fit plus per-outcome modulation scales
/// and the calibrated sup-norm radius.
struct ConformalModel {
  FitResult fit;
  Eigen::VectorXd s;            // modulation scale per outcome, > 0
  std::vector<double> scores;   // calibration scores, ascending
  double alpha = 0.05;
  double q_hat = 0.0;           // +inf when the corrected rank exceeds n_cal
  std::size_t n_cal = 0;
  bool finite_sample_correction = true;
};

/// Axis-aligned box prod_k [center_k - half_width_k, center_k + half_width_k].
struct PredictionRegion {
  Eigen::VectorXd center;
  Eigen::VectorXd half_width;

  Eigen::VectorXd lower() const { return center - half_width; }
  Eigen::VectorXd upper() const { return center + half_width; }
};

/// Rank of the order statistic used as the radius: ceil((n+1)(1-alpha))
/// with the finite-sample correction, ceil(n(1-alpha)) without. May exceed n.
std::size_t conformal_rank(std::size_t n_cal, double alpha, bool finite_sample_correction = true);

/// The rank-th smallest score, or +inf when rank > n. `sorted_scores` must be ascending.
double conformal_quantile(const std::vector<double>& sorted_scores, double alpha, bool finite_sample_correction = true);

/// Sample standard deviation (n-1) of each column of absolute residuals.
/// Throws NumericalError when a column has zero spread.
Eigen::VectorXd modulation_scales(const Eigen::MatrixXd& abs_residuals);

/// Sup-norm scores R_i = max_k |r_ik| / s_k.
std::vector<double> nonconformity_scores(const Eigen::MatrixXd& residuals, const Eigen::VectorXd& s);

/// Modulation from train2 residuals, scores and radius from calibration
/// residuals. The fit must not have seen either set.
ConformalModel calibrate(FitResult fit, const Dataset& train2, const Dataset& calibration, double alpha,
                         bool finite_sample_correction = true);

/// Same as calibrate() but from precomputed residual matrices.
ConformalModel calibrate_residuals(FitResult fit, const Eigen::MatrixXd& train2_residuals,
                                   const Eigen::MatrixXd& calibration_residuals, double alpha,
                                   bool finite_sample_correction = true);

PredictionRegion predict_region(const ConformalModel& cm, const Eigen::VectorXd& x, const Eigen::MatrixXd& z);

/// Closed box membership.
bool contains(const PredictionRegion& region, const Eigen::VectorXd& y);

/// Fraction of subjects whose outcome vector falls in its region.
double empirical_coverage(const ConformalModel& cm, const Dataset& test);

}  // namespace msomdr
