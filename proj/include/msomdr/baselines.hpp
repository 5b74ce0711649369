#pragma once

#include "msomdr/baseline_features.hpp"
#include "msomdr/core.hpp"
#include "msomdr/solver.hpp"
#include "msomdr/tuning.hpp"

#include <Eigen/Dense>

#include <functional>

namespace msomdr {

/// Per-outcome OLS of Y on [1, X, W] via column-pivoted QR. Throws
/// NumericalError (with a condition estimate) when [1, X, W] is rank deficient.
FitResult ols_with_intercept(const Eigen::MatrixXd& Y, const Eigen::MatrixXd& X, const Eigen::MatrixXd& W,
                             FeatureSpec features);

/// Summary-mean baseline: subject mean of the draws as d extra linear predictors.
FitResult fit_mean_summary(const Dataset& train);

/// Quantile-function features on a fixed grid with clamped uniform cubic
/// bases on [0, 1] of the requested size per dimension.
FeatureFactory quantile_feature_factory(QuantileGrid grid = QuantileGrid::interior(), int degree = 3);

/// Scalar-on-quantile-function baseline fitted with the same group-MCP solver
/// and cross-validation as the main model; the grid's basis tuples are the
/// per-dimension basis sizes.
TuningResult fit_soqfr(const Dataset& train, const TuningGrid& grid, QuantileGrid levels = QuantileGrid::interior(),
                       double phi = 3.0, const SolverOptions& options = {});

/// d = 1 dataset whose draws are a per-draw scalar composite of the original
/// coordinates (for example the coordinate sum).
Dataset composite_dataset(const Dataset& data, const std::function<double(const Eigen::RowVectorXd&)>& composite);

}  // namespace msomdr
