#pragma once

#include "msomdr/bspline.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

namespace msomdr {

/// Probability levels at which subject quantile functions are sampled.
struct QuantileGrid {
  std::vector<double> levels;

  /// `count` equally spaced interior points j/(count+1), j = 1..count.
  static QuantileGrid interior(std::size_t count = 101);
};

/// Empirical quantiles of `samples` at each level (type-7 interpolation of
/// order statistics). Level 0 maps to the minimum, level 1 to the maximum.
Eigen::VectorXd quantile_function(std::span<const double> samples, std::span<const double> levels);

/// Scalar-on-quantile-function features: for each draw dimension, the Riemann
/// average over the grid of Q(p) * B_j(p) for a B-spline basis on [0, 1].
class QuantileFeatureMap {
 public:
  QuantileFeatureMap() = default;
  QuantileFeatureMap(std::vector<double> levels, std::vector<BSplineBasis> bases);

  const std::vector<double>& levels() const { return levels_; }
  const std::vector<BSplineBasis>& bases() const { return bases_; }
  std::size_t dim() const { return bases_.size(); }
  std::size_t size() const;

  Eigen::VectorXd features(const Eigen::MatrixXd& z) const;

  friend bool operator==(const QuantileFeatureMap& a, const QuantileFeatureMap& b) {
    return a.levels_ == b.levels_ && a.bases_ == b.bases_;
  }

 private:
  std::vector<double> levels_;
  std::vector<BSplineBasis> bases_;
  std::vector<Eigen::MatrixXd> at_levels_;  // |levels| x n_basis per dimension
};

/// Per-dimension mean of the draws (the summary-mean baseline).
struct MeanFeatureMap {
  std::size_t d = 0;

  std::size_t size() const { return d; }
  Eigen::VectorXd features(const Eigen::MatrixXd& z) const;

  friend bool operator==(const MeanFeatureMap&, const MeanFeatureMap&) = default;
};

}  // namespace msomdr
