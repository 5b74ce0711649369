#include "msomdr/baselines.hpp"

#include "msomdr/design.hpp"

#include <cmath>
#include <sstream>

namespace msomdr {

FitResult ols_with_intercept(const Eigen::MatrixXd& Y, const Eigen::MatrixXd& X, const Eigen::MatrixXd& W,
                             FeatureSpec features) {
  const Eigen::Index n = Y.rows();
  const Eigen::Index q = X.cols();
  const Eigen::Index p = W.cols();
  Eigen::MatrixXd A(n, 1 + q + p);
  A.col(0).setOnes();
  A.middleCols(1, q) = X;
  A.middleCols(1 + q, p) = W;

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  if (qr.rank() < A.cols()) {
    const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXd>(A).singularValues();
    std::ostringstream os;
    os << "singular design for OLS: rank " << qr.rank() << " < " << A.cols() << " columns, condition estimate "
       << (sv.minCoeff() > 0.0 ? sv.maxCoeff() / sv.minCoeff() : INFINITY);
    throw NumericalError(os.str());
  }
  const Eigen::MatrixXd B = qr.solve(Y);

  FitResult f;
  f.intercept = B.row(0).transpose();
  f.gamma = B.middleRows(1, q);
  f.theta = B.middleRows(1 + q, p);
  f.features = std::move(features);
  f.mcp = McpSpec{0.0, 3.0};
  f.converged = true;
  for (Eigen::Index l = 0; l < p; ++l) f.active_groups.push_back(static_cast<std::size_t>(l));
  f.objective = (Y - A * B).squaredNorm() / (2.0 * static_cast<double>(n));

  // Standardized-scale copies for consistency with penalized fits.
  const DesignBlocks blocks = standardize(Y, X, W);
  f.scaling = blocks.scaling;
  f.gamma_std = f.gamma.array().colwise() * f.scaling.x_scale.array();
  f.theta_std = f.theta.array().colwise() * f.scaling.w_scale.array();
  return f;
}

FitResult fit_mean_summary(const Dataset& train) {
  validate(train);
  const FeatureSpec spec = MeanFeatureMap{train.dims.d};
  return ols_with_intercept(train.outcome_matrix(), train.covariate_matrix(), feature_matrix(spec, train), spec);
}

FeatureFactory quantile_feature_factory(QuantileGrid grid, int degree) {
  return [grid = std::move(grid), degree](const Dataset& train, const BasisCounts& counts) -> FeatureSpec {
    if (counts.size() != train.dims.d) throw std::invalid_argument("basis tuple length does not match the draw dimension");
    std::vector<BSplineBasis> bases;
    for (std::size_t c : counts) bases.push_back(uniform_basis(0.0, 1.0, c, degree));
    return QuantileFeatureMap(grid.levels, std::move(bases));
  };
}

TuningResult fit_soqfr(const Dataset& train, const TuningGrid& grid, QuantileGrid levels, double phi,
                       const SolverOptions& options) {
  return cross_validate(train, grid, phi, options, quantile_feature_factory(std::move(levels), grid.degree));
}

Dataset composite_dataset(const Dataset& data, const std::function<double(const Eigen::RowVectorXd&)>& composite) {
  Dataset out;
  out.dims = Dims{data.dims.K, data.dims.q, 1};
  out.subjects.reserve(data.size());
  for (const auto& s : data.subjects) {
    SubjectRecord r{s.id, s.y, s.x, Eigen::MatrixXd(s.z.rows(), 1)};
    for (Eigen::Index l = 0; l < s.z.rows(); ++l) r.z(l, 0) = composite(s.z.row(l));
    out.subjects.push_back(std::move(r));
  }
  return out;
}

}  // namespace msomdr
