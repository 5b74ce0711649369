#pragma once

#include "msomdr/core.hpp"
#include "msomdr/feature_map.hpp"

#include <Eigen/Dense>

#include <vector>

namespace msomdr {

/// Centers and scales learned on the training design, reused at prediction.
/// Scales are population standard deviations (1/n), so every retained
/// standardized column c satisfies c^T c / n = 1.
struct Standardization {
  Eigen::VectorXd y_center;
  Eigen::VectorXd x_center;
  Eigen::VectorXd x_scale;
  Eigen::VectorXd w_center;
  Eigen::VectorXd w_scale;
  std::vector<bool> x_active;
  std::vector<bool> w_active;  // false for zero-variance feature columns
};

/// Standardized blocks of the stacked multivariate linear model
/// Y = 1 b^T + X Gamma + W Theta + E.
struct DesignBlocks {
  Eigen::MatrixXd Y;  // n x K, column-centered
  Eigen::MatrixXd X;  // n x q, standardized (inactive columns zeroed)
  Eigen::MatrixXd W;  // n x N0, standardized (inactive columns zeroed)
  Standardization scaling;
  FeatureSpec features;
  /// Raw feature rows sum to one, so the intercept is folded into theta
  /// when coefficients are mapped back to the raw scale.
  bool fold_intercept = false;

  Eigen::Index n() const { return Y.rows(); }
  Eigen::Index K() const { return Y.cols(); }
  Eigen::Index q() const { return X.cols(); }
  Eigen::Index n_groups() const { return W.cols(); }
};

/// Centers Y and standardizes X and W_raw column-wise.
DesignBlocks standardize(const Eigen::MatrixXd& Y, const Eigen::MatrixXd& X, const Eigen::MatrixXd& W_raw,
                         FeatureSpec features = {}, bool fold_intercept = false);

/// Averaged feature rows for every subject, then standardize().
DesignBlocks build_design(const Dataset& data, const FeatureSpec& features);

/// Raw-scale W recovered from the standardized blocks (inactive columns
/// come back as their constant center).
Eigen::MatrixXd destandardized_w(const DesignBlocks& blocks);

}  // namespace msomdr
