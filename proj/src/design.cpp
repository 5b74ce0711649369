#include "msomdr/design.hpp"

#include <algorithm>
#include <cmath>

namespace msomdr {

namespace {

void standardize_columns(Eigen::MatrixXd& M, Eigen::VectorXd& center, Eigen::VectorXd& scale, std::vector<bool>& active) {
  const Eigen::Index n = M.rows();
  center = M.colwise().mean().transpose();
  scale = Eigen::VectorXd::Ones(M.cols());
  active.assign(static_cast<std::size_t>(M.cols()), false);
  for (Eigen::Index c = 0; c < M.cols(); ++c) {
    M.col(c).array() -= center[c];
    const double sd = std::sqrt(M.col(c).squaredNorm() / static_cast<double>(n));
    if (sd > 1e-12 * std::max(1.0, std::abs(center[c]))) {
      scale[c] = sd;
      M.col(c) /= sd;
      active[static_cast<std::size_t>(c)] = true;
    } else {
      M.col(c).setZero();
    }
  }
}

}  // namespace

DesignBlocks standardize(const Eigen::MatrixXd& Y, const Eigen::MatrixXd& X, const Eigen::MatrixXd& W_raw,
                         FeatureSpec features, bool fold_intercept) {
  if (Y.rows() == 0) throw DataError("design has no rows");
  if (X.rows() != Y.rows() || W_raw.rows() != Y.rows()) throw DataError("design blocks have mismatched row counts");

  DesignBlocks b;
  b.features = std::move(features);
  b.fold_intercept = fold_intercept;
  b.Y = Y;
  b.scaling.y_center = Y.colwise().mean().transpose();
  b.Y.rowwise() -= b.scaling.y_center.transpose();
  b.X = X;
  standardize_columns(b.X, b.scaling.x_center, b.scaling.x_scale, b.scaling.x_active);
  b.W = W_raw;
  standardize_columns(b.W, b.scaling.w_center, b.scaling.w_scale, b.scaling.w_active);
  return b;
}

DesignBlocks build_design(const Dataset& data, const FeatureSpec& features) {
  validate(data);
  const Eigen::MatrixXd W = feature_matrix(features, data);
  return standardize(data.outcome_matrix(), data.covariate_matrix(), W, features, rows_sum_to_one(features));
}

Eigen::MatrixXd destandardized_w(const DesignBlocks& blocks) {
  Eigen::MatrixXd W = blocks.W;
  for (Eigen::Index c = 0; c < W.cols(); ++c) {
    W.col(c) = W.col(c) * blocks.scaling.w_scale[c];
    W.col(c).array() += blocks.scaling.w_center[c];
  }
  return W;
}

}  // namespace msomdr
