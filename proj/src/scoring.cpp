#include "msomdr/scoring.hpp"

#include <exception>
#include <string>

namespace msomdr {

namespace {

void check_outcome(const FitResult& fit, std::size_t k) {
  if (k >= static_cast<std::size_t>(fit.theta.cols())) {
    throw std::out_of_range("outcome index " + std::to_string(k) + " out of range for K = " + std::to_string(fit.theta.cols()));
  }
}

}  // namespace

Eigen::VectorXd predict(const FitResult& fit, const Eigen::VectorXd& x, const Eigen::MatrixXd& z) {
  if (x.size() != fit.gamma.rows()) {
    throw DataError("covariate vector has length " + std::to_string(x.size()) + ", model expects q = " +
                    std::to_string(fit.gamma.rows()));
  }
  const Eigen::VectorXd w = raw_features(fit.features, z);
  Eigen::VectorXd out = fit.intercept;
  if (x.size() > 0) out += fit.gamma.transpose() * x;
  if (w.size() > 0) out += fit.theta.transpose() * w;
  return out;
}

Eigen::MatrixXd predict_rows(const FitResult& fit, const Eigen::MatrixXd& X, const Eigen::MatrixXd& W_raw) {
  if (X.cols() != fit.gamma.rows() || W_raw.cols() != fit.theta.rows() || X.rows() != W_raw.rows()) {
    throw std::invalid_argument("predict_rows: design shapes do not match the fit");
  }
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(X.rows(), fit.intercept.size());
  out.rowwise() += fit.intercept.transpose();
  if (X.cols() > 0) out.noalias() += X * fit.gamma;
  if (W_raw.cols() > 0) out.noalias() += W_raw * fit.theta;
  return out;
}

Eigen::MatrixXd predict(const FitResult& fit, const Dataset& data) {
  const auto n = static_cast<Eigen::Index>(data.size());
  Eigen::MatrixXd out(n, fit.intercept.size());
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic, 8)
  for (Eigen::Index i = 0; i < n; ++i) {
    try {
      const auto& s = data.subjects[static_cast<std::size_t>(i)];
      out.row(i) = predict(fit, s.x, s.z).transpose();
    } catch (...) {
#pragma omp critical(msomdr_predict_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return out;
}

double distributional_score(const FitResult& fit, const Eigen::MatrixXd& z, std::size_t k) {
  check_outcome(fit, k);
  return raw_features(fit.features, z).dot(fit.theta.col(static_cast<Eigen::Index>(k)));
}

double beta_surface(const FitResult& fit, std::size_t k, std::span<const double> point) {
  check_outcome(fit, k);
  const auto* tb = std::get_if<TensorBasis>(&fit.features);
  if (tb == nullptr) throw std::invalid_argument("coefficient surfaces are only defined for tensor-basis fits");
  return tensor_row(*tb, point).dot(fit.theta.col(static_cast<Eigen::Index>(k)));
}

}  // namespace msomdr
