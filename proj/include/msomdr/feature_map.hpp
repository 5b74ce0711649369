#pragma once

#include "msomdr/baseline_features.hpp"
#include "msomdr/core.hpp"
#include "msomdr/tensor_basis.hpp"

#include <Eigen/Dense>

#include <variant>

namespace msomdr {

/// How a subject's draws become a row of the distributional design block.
/// TensorBasis is the model proper; the other two back the baselines.
using FeatureSpec = std::variant<TensorBasis, QuantileFeatureMap, MeanFeatureMap>;

std::size_t feature_count(const FeatureSpec& spec);

/// True when every feature row sums to one (tensor B-spline features), so a
/// constant shift of all coefficients is equivalent to an intercept.
bool rows_sum_to_one(const FeatureSpec& spec);

Eigen::VectorXd raw_features(const FeatureSpec& spec, const Eigen::MatrixXd& z);

/// n x p matrix of raw feature rows, one per subject. Rows are computed in
/// parallel; each row is produced by the same sequential kernel, so the
/// result is identical to feature_matrix_serial.
Eigen::MatrixXd feature_matrix(const FeatureSpec& spec, const Dataset& data);

/// Single-threaded reference. For tensor bases it also uses the dense
/// tensor_row path instead of the local-support kernel.
Eigen::MatrixXd feature_matrix_serial(const FeatureSpec& spec, const Dataset& data);

}  // namespace msomdr
