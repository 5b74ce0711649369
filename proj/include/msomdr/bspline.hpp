#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

namespace msomdr {

/// Clamped univariate B-spline basis: boundary knots repeated degree+1 times,
/// strictly increasing interior knots.
class BSplineBasis {
 public:
  static constexpr int kMaxDegree = 7;

  BSplineBasis() = default;
  /// Validates the knot vector; throws DataError on violation.
  BSplineBasis(std::vector<double> knots, int degree);

  int degree() const { return degree_; }
  std::size_t size() const { return knots_.size() - static_cast<std::size_t>(degree_) - 1; }
  const std::vector<double>& knots() const { return knots_; }
  double lower() const { return knots_.front(); }
  double upper() const { return knots_.back(); }

  /// Writes the degree+1 possibly-nonzero basis values at u (clamped to the
  /// support) into `values` and returns the index of the first of them.
  std::size_t eval_nonzero(double u, std::span<double> values) const;

  /// All n_basis values at u.
  Eigen::VectorXd eval(double u) const;

  friend bool operator==(const BSplineBasis&, const BSplineBasis&) = default;

 private:
  std::vector<double> knots_;
  int degree_ = 0;
};

/// Boundary knots at min/max of the samples, interior knots at equally spaced
/// empirical quantiles (levels j/(n_int+1)) of the samples.
BSplineBasis make_basis(std::span<const double> samples, std::size_t n_basis, int degree = 3);

/// Clamped basis on [lo, hi] with equally spaced interior knots.
BSplineBasis uniform_basis(double lo, double hi, std::size_t n_basis, int degree = 3);

/// Dense evaluation; throws DataError for non-finite u.
Eigen::VectorXd eval_basis(const BSplineBasis& basis, double u);

/// Linear interpolation between order statistics (R type 7) of sorted data.
double sorted_quantile(std::span<const double> sorted, double level);

}  // namespace msomdr
