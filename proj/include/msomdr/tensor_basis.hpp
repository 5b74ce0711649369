#pragma once

#include "msomdr/bspline.hpp"
#include "msomdr/core.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace msomdr {

/// Tensor product of d univariate bases. Features are flattened
/// dimension-major with the last dimension varying fastest, so for d = 2 the
/// feature (f, g) sits at f * N_2 + g.
struct TensorBasis {
  std::vector<BSplineBasis> bases;

  std::size_t dim() const { return bases.size(); }
  std::size_t n0() const;
  std::vector<std::size_t> counts() const;

  friend bool operator==(const TensorBasis&, const TensorBasis&) = default;
};

/// One basis per column of the pooled draws of `data`, with the given counts.
TensorBasis make_tensor_basis(const Dataset& data, std::span<const std::size_t> counts, int degree = 3);

/// Per-dimension [lo_level, hi_level] empirical quantiles of the pooled draws.
std::vector<std::pair<double, double>> pooled_quantile_box(const Dataset& data, double lo_level, double hi_level);

/// Dense feature vector W(z) of length n0.
Eigen::VectorXd tensor_row(const TensorBasis& tb, std::span<const double> z);

/// Mean of W(z_l) over the rows of `z`. Uses the local support of each
/// univariate basis, touching (degree+1)^d entries per draw.
Eigen::VectorXd subject_features(const TensorBasis& tb, const Eigen::MatrixXd& z);

/// Same mean computed from dense tensor_row evaluations; kept as the
/// reference the sparse kernel is tested against.
Eigen::VectorXd subject_features_reference(const TensorBasis& tb, const Eigen::MatrixXd& z);

}  // namespace msomdr
