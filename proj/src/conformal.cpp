#include "msomdr/conformal.hpp"

#include "msomdr/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace msomdr {

namespace {

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
}

}  // namespace

std::size_t conformal_rank(std::size_t n_cal, double alpha, bool finite_sample_correction) {
  check_alpha(alpha);
  const double n = static_cast<double>(finite_sample_correction ? n_cal + 1 : n_cal);
  const double target = n * (1.0 - alpha);
  // Guard against products like 20 * 0.95 landing a hair above an integer.
  const double rounded = std::round(target);
  const double rank = std::abs(target - rounded) <= 1e-9 * std::max(1.0, target) ? rounded : std::ceil(target);
  return static_cast<std::size_t>(std::max(rank, 1.0));
}

double conformal_quantile(const std::vector<double>& sorted_scores, double alpha, bool finite_sample_correction) {
  if (sorted_scores.empty()) throw DataError("no calibration scores");
  const std::size_t rank = conformal_rank(sorted_scores.size(), alpha, finite_sample_correction);
  if (rank > sorted_scores.size()) return std::numeric_limits<double>::infinity();
  return sorted_scores[rank - 1];
}

Eigen::VectorXd modulation_scales(const Eigen::MatrixXd& abs_residuals) {
  const Eigen::Index n = abs_residuals.rows();
  if (n < 2) throw DataError("modulation scales need at least 2 subjects in the second training set");
  Eigen::VectorXd s(abs_residuals.cols());
  for (Eigen::Index k = 0; k < abs_residuals.cols(); ++k) {
    const auto col = abs_residuals.col(k).array();
    const double mean = col.mean();
    s[k] = std::sqrt((col - mean).square().sum() / static_cast<double>(n - 1));
    if (!(s[k] > 0.0) || !std::isfinite(s[k])) {
      std::ostringstream os;
      os << "modulation scale for outcome " << (k + 1) << " is " << s[k]
         << "; residuals on the second training set have no spread (leakage or degenerate data?)";
      throw NumericalError(os.str());
    }
  }
  return s;
}

std::vector<double> nonconformity_scores(const Eigen::MatrixXd& residuals, const Eigen::VectorXd& s) {
  if (residuals.cols() != s.size()) throw std::invalid_argument("residual width does not match the modulation vector");
  std::vector<double> scores(static_cast<std::size_t>(residuals.rows()));
  for (Eigen::Index i = 0; i < residuals.rows(); ++i) {
    scores[static_cast<std::size_t>(i)] = (residuals.row(i).transpose().cwiseAbs().array() / s.array()).maxCoeff();
  }
  return scores;
}

ConformalModel calibrate_residuals(FitResult fit, const Eigen::MatrixXd& train2_residuals,
                                   const Eigen::MatrixXd& calibration_residuals, double alpha,
                                   bool finite_sample_correction) {
  check_alpha(alpha);
  if (calibration_residuals.rows() == 0) throw DataError("calibration set is empty");
  ConformalModel cm;
  cm.fit = std::move(fit);
  cm.alpha = alpha;
  cm.finite_sample_correction = finite_sample_correction;
  cm.s = modulation_scales(train2_residuals.cwiseAbs());
  cm.scores = nonconformity_scores(calibration_residuals, cm.s);
  std::sort(cm.scores.begin(), cm.scores.end());
  cm.n_cal = cm.scores.size();
  cm.q_hat = conformal_quantile(cm.scores, alpha, finite_sample_correction);
  return cm;
}

ConformalModel calibrate(FitResult fit, const Dataset& train2, const Dataset& calibration, double alpha,
                         bool finite_sample_correction) {
  validate(train2);
  validate(calibration);
  const Eigen::MatrixXd r2 = train2.outcome_matrix() - predict(fit, train2);
  const Eigen::MatrixXd rc = calibration.outcome_matrix() - predict(fit, calibration);
  return calibrate_residuals(std::move(fit), r2, rc, alpha, finite_sample_correction);
}

PredictionRegion predict_region(const ConformalModel& cm, const Eigen::VectorXd& x, const Eigen::MatrixXd& z) {
  PredictionRegion region;
  region.center = predict(cm.fit, x, z);
  if (region.center.size() != cm.s.size()) throw DataError("model outcome count does not match modulation vector");
  region.half_width = cm.s * cm.q_hat;
  return region;
}

bool contains(const PredictionRegion& region, const Eigen::VectorXd& y) {
  if (y.size() != region.center.size()) throw DataError("outcome vector length does not match the region");
  for (Eigen::Index k = 0; k < y.size(); ++k) {
    if (std::isinf(region.half_width[k])) continue;
    if (y[k] < region.center[k] - region.half_width[k] || y[k] > region.center[k] + region.half_width[k]) return false;
  }
  return true;
}

double empirical_coverage(const ConformalModel& cm, const Dataset& test) {
  if (test.empty()) throw DataError("coverage needs a nonempty test set");
  std::size_t covered = 0;
  for (const auto& s : test.subjects) covered += contains(predict_region(cm, s.x, s.z), s.y) ? 1 : 0;
  return static_cast<double>(covered) / static_cast<double>(test.size());
}

}  // namespace msomdr
