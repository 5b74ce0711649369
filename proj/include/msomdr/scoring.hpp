#pragma once

#include "msomdr/core.hpp"
#include "msomdr/solver.hpp"

#include <Eigen/Dense>

#include <span>

namespace msomdr {

/// Fitted regression function m(x, P_Z) for one subject, all K outcomes.
Eigen::VectorXd predict(const FitResult& fit, const Eigen::VectorXd& x, const Eigen::MatrixXd& z);

/// Predictions from precomputed covariate and raw feature rows (n x q, n x p).
Eigen::MatrixXd predict_rows(const FitResult& fit, const Eigen::MatrixXd& X, const Eigen::MatrixXd& W_raw);

/// n x K predictions for every subject in `data`.
Eigen::MatrixXd predict(const FitResult& fit, const Dataset& data);

/// Averaged features of `z` dotted with the raw-scale coefficients of
/// outcome k: the fitted distributional term (biomarker) of a subject.
double distributional_score(const FitResult& fit, const Eigen::MatrixXd& z, std::size_t k);

/// Fitted surface beta_k at a point; requires a tensor-basis fit.
double beta_surface(const FitResult& fit, std::size_t k, std::span<const double> point);

}  // namespace msomdr
