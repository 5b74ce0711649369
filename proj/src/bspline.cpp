#include "msomdr/bspline.hpp"

#include "msomdr/core.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

namespace msomdr {

BSplineBasis::BSplineBasis(std::vector<double> knots, int degree) : knots_(std::move(knots)), degree_(degree) {
  if (degree_ < 0 || degree_ > kMaxDegree) {
    throw DataError("B-spline degree " + std::to_string(degree_) + " outside [0, " + std::to_string(kMaxDegree) + "]");
  }
  const std::size_t order = static_cast<std::size_t>(degree_) + 1;
  if (knots_.size() < 2 * order) throw DataError("knot vector too short for the requested degree");
  for (double t : knots_) {
    if (!std::isfinite(t)) throw DataError("non-finite knot");
  }
  if (!std::is_sorted(knots_.begin(), knots_.end())) throw DataError("knots must be nondecreasing");
  const double lo = knots_.front();
  const double hi = knots_.back();
  if (!(lo < hi)) throw DataError("knot vector has zero width");
  for (std::size_t i = 0; i < order; ++i) {
    if (knots_[i] != lo || knots_[knots_.size() - 1 - i] != hi) {
      throw DataError("boundary knots must be repeated degree+1 times");
    }
  }
  for (std::size_t i = order - 1; i + order < knots_.size(); ++i) {
    if (!(knots_[i] < knots_[i + 1])) throw DataError("interior knots must be strictly increasing inside the boundary");
  }
}

std::size_t BSplineBasis::eval_nonzero(double u, std::span<double> values) const {
  const int p = degree_;
  const std::size_t n = size();
  u = std::clamp(u, lower(), upper());

  // Knot span index: t[span] <= u < t[span + 1], with the right end folded
  // into the last nonempty span.
  std::size_t span;
  if (u >= upper()) {
    span = n - 1;
  } else {
    auto it = std::upper_bound(knots_.begin() + p, knots_.begin() + static_cast<std::ptrdiff_t>(n) + 1, u);
    span = static_cast<std::size_t>(it - knots_.begin()) - 1;
  }

  std::array<double, kMaxDegree + 1> left{};
  std::array<double, kMaxDegree + 1> right{};
  values[0] = 1.0;
  for (int j = 1; j <= p; ++j) {
    left[j] = u - knots_[span + 1 - j];
    right[j] = knots_[span + j] - u;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double temp = values[r] / (right[r + 1] + left[j - r]);
      values[r] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    values[j] = saved;
  }
  return span - static_cast<std::size_t>(p);
}

Eigen::VectorXd BSplineBasis::eval(double u) const {
  std::array<double, kMaxDegree + 1> local{};
  const std::size_t first = eval_nonzero(u, local);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(size()));
  for (int j = 0; j <= degree_; ++j) out[static_cast<Eigen::Index>(first) + j] = local[j];
  return out;
}

double sorted_quantile(std::span<const double> sorted, double level) {
  if (sorted.empty()) throw DataError("quantile of an empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * std::clamp(level, 0.0, 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

namespace {

std::vector<double> clamped_knots(double lo, double hi, std::vector<double> interior, int degree) {
  std::vector<double> knots;
  knots.reserve(interior.size() + 2 * static_cast<std::size_t>(degree + 1));
  knots.insert(knots.end(), static_cast<std::size_t>(degree + 1), lo);
  double prev = lo;
  for (double t : interior) {
    // Ties (heavy atoms in the data) are nudged to the next representable value.
    t = std::max(t, std::nextafter(prev, std::numeric_limits<double>::infinity()));
    if (!(t < hi)) throw DataError("too many tied samples to place distinct interior knots");
    knots.push_back(t);
    prev = t;
  }
  knots.insert(knots.end(), static_cast<std::size_t>(degree + 1), hi);
  return knots;
}

void check_counts(std::size_t n_basis, int degree) {
  if (degree < 0 || degree > BSplineBasis::kMaxDegree) throw DataError("unsupported B-spline degree");
  if (n_basis < static_cast<std::size_t>(degree) + 1) {
    throw DataError("n_basis = " + std::to_string(n_basis) + " is below degree + 1 = " + std::to_string(degree + 1));
  }
}

}  // namespace

BSplineBasis make_basis(std::span<const double> samples, std::size_t n_basis, int degree) {
  check_counts(n_basis, degree);
  if (samples.empty()) throw DataError("cannot place knots on an empty sample");
  std::vector<double> sorted(samples.begin(), samples.end());
  for (double s : sorted) {
    if (!std::isfinite(s)) throw DataError("non-finite sample while placing knots");
  }
  std::sort(sorted.begin(), sorted.end());
  const double lo = sorted.front();
  const double hi = sorted.back();
  if (!(lo < hi)) throw DataError("all samples identical; cannot place knots");

  const std::size_t n_int = n_basis - static_cast<std::size_t>(degree) - 1;
  std::vector<double> interior(n_int);
  for (std::size_t j = 1; j <= n_int; ++j) {
    interior[j - 1] = sorted_quantile(sorted, static_cast<double>(j) / static_cast<double>(n_int + 1));
  }
  return BSplineBasis(clamped_knots(lo, hi, std::move(interior), degree), degree);
}

BSplineBasis uniform_basis(double lo, double hi, std::size_t n_basis, int degree) {
  check_counts(n_basis, degree);
  if (!(lo < hi)) throw DataError("uniform basis needs lo < hi");
  const std::size_t n_int = n_basis - static_cast<std::size_t>(degree) - 1;
  std::vector<double> interior(n_int);
  for (std::size_t j = 1; j <= n_int; ++j) {
    interior[j - 1] = lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(n_int + 1);
  }
  return BSplineBasis(clamped_knots(lo, hi, std::move(interior), degree), degree);
}

Eigen::VectorXd eval_basis(const BSplineBasis& basis, double u) {
  if (!std::isfinite(u)) throw DataError("cannot evaluate a B-spline basis at a non-finite point");
  return basis.eval(u);
}

}  // namespace msomdr
