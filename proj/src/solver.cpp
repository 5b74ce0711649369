#include "msomdr/solver.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <sstream>
#include <stdexcept>

namespace msomdr {

void validate(const McpSpec& spec) {
  if (!(spec.lambda >= 0.0) || !std::isfinite(spec.lambda)) throw std::invalid_argument("MCP lambda must be finite and >= 0");
  if (!(spec.phi > 1.0) || !std::isfinite(spec.phi)) throw std::invalid_argument("MCP phi must be finite and > 1");
}

double mcp_penalty(double t, const McpSpec& spec) {
  if (t < 0.0) throw std::invalid_argument("MCP penalty evaluated at a negative norm");
  if (t <= spec.lambda * spec.phi) return spec.lambda * t - t * t / (2.0 * spec.phi);
  return 0.5 * spec.lambda * spec.lambda * spec.phi;
}

Eigen::VectorXd group_firm_threshold(const Eigen::VectorXd& z, const McpSpec& spec) {
  const double norm = z.norm();
  if (norm <= spec.lambda) return Eigen::VectorXd::Zero(z.size());
  if (norm < spec.lambda * spec.phi) {
    return (spec.phi / (spec.phi - 1.0)) * (1.0 - spec.lambda / norm) * z;
  }
  return z;
}

namespace {

Eigen::MatrixXd residual(const DesignBlocks& b, const Eigen::MatrixXd& gamma, const Eigen::MatrixXd& theta) {
  Eigen::MatrixXd R = b.Y;
  if (b.q() > 0) R.noalias() -= b.X * gamma;
  if (b.n_groups() > 0) R.noalias() -= b.W * theta;
  return R;
}

void check_warm(const DesignBlocks& b, const Coefficients& w) {
  if (w.gamma.rows() != b.q() || w.gamma.cols() != b.K() || w.theta.rows() != b.n_groups() || w.theta.cols() != b.K()) {
    throw std::invalid_argument("warm start coefficients do not match the design");
  }
}

/// Covariance-form descent state over A = [X W]: the cross-product matrix
/// C = A^T A / n and the gradient G = A^T R / n, kept current as
/// coefficients move, so a group update costs O((q + p) K) instead of O(n K).
class GramState {
 public:
  GramState(const DesignBlocks& b, const Eigen::MatrixXd& gamma, const Eigen::MatrixXd& theta)
      : q_(b.q()), p_(b.n_groups()) {
    const double inv_n = 1.0 / static_cast<double>(b.n());
    Eigen::MatrixXd A(b.n(), q_ + p_);
    A.leftCols(q_) = b.X;
    A.rightCols(p_) = b.W;
    C_ = (A.transpose() * A) * inv_n;
    G_ = (A.transpose() * residual(b, gamma, theta)) * inv_n;

    for (Eigen::Index j = 0; j < q_; ++j) {
      if (b.scaling.x_active[static_cast<std::size_t>(j)]) active_x_.push_back(j);
    }
    if (active_x_.empty()) return;
    Eigen::MatrixXd Xa(b.n(), static_cast<Eigen::Index>(active_x_.size()));
    for (std::size_t a = 0; a < active_x_.size(); ++a) Xa.col(static_cast<Eigen::Index>(a)) = b.X.col(active_x_[a]);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Xa);
    if (qr.rank() < Xa.cols()) throw NumericalError("scalar covariates are collinear; cannot fit unpenalized effects");
    const auto m = static_cast<Eigen::Index>(active_x_.size());
    Cxx_.resize(m, m);
    Cax_.resize(q_ + p_, m);
    for (Eigen::Index a = 0; a < m; ++a) {
      Cax_.col(a) = C_.col(active_x_[static_cast<std::size_t>(a)]);
      for (Eigen::Index c = 0; c < m; ++c) Cxx_(c, a) = C_(active_x_[static_cast<std::size_t>(c)], active_x_[static_cast<std::size_t>(a)]);
    }
    ldlt_.compute(Cxx_);
  }

  /// Exact least-squares update of the unpenalized covariate rows of gamma
  /// given theta; returns the largest absolute change.
  double update_covariates(Eigen::MatrixXd& gamma) {
    if (active_x_.empty()) return 0.0;
    const auto m = static_cast<Eigen::Index>(active_x_.size());
    Eigen::MatrixXd old(m, gamma.cols()), grad(m, gamma.cols());
    for (Eigen::Index a = 0; a < m; ++a) {
      old.row(a) = gamma.row(active_x_[static_cast<std::size_t>(a)]);
      grad.row(a) = G_.row(active_x_[static_cast<std::size_t>(a)]);
    }
    const Eigen::MatrixXd next = ldlt_.solve(grad + Cxx_ * old);
    const Eigen::MatrixXd delta = next - old;
    G_.noalias() -= Cax_ * delta;
    for (Eigen::Index a = 0; a < m; ++a) gamma.row(active_x_[static_cast<std::size_t>(a)]) = next.row(a);
    return delta.cwiseAbs().maxCoeff();
  }

  /// (1/n) W_l^T R
  Eigen::VectorXd group_gradient(Eigen::Index l) const { return G_.row(q_ + l).transpose(); }

  void move_group(Eigen::Index l, const Eigen::RowVectorXd& delta) { G_.noalias() -= C_.col(q_ + l) * delta; }

 private:
  Eigen::Index q_, p_;
  Eigen::MatrixXd C_, G_, Cxx_, Cax_;
  std::vector<Eigen::Index> active_x_;
  Eigen::LDLT<Eigen::MatrixXd> ldlt_;
};

Eigen::VectorXd group_score(const DesignBlocks& b, const Eigen::MatrixXd& R, Eigen::Index l, double inv_n) {
  Eigen::VectorXd g = R.transpose() * b.W.col(l);
  g *= inv_n;
  return g;
}

}  // namespace

double objective(const DesignBlocks& blocks, const McpSpec& spec, const Eigen::MatrixXd& gamma_std,
                 const Eigen::MatrixXd& theta_std) {
  const Eigen::MatrixXd R = residual(blocks, gamma_std, theta_std);
  double value = R.squaredNorm() / (2.0 * static_cast<double>(blocks.n()));
  for (Eigen::Index l = 0; l < theta_std.rows(); ++l) value += mcp_penalty(theta_std.row(l).norm(), spec);
  return value;
}

FitResult fit(const DesignBlocks& blocks, const McpSpec& spec, const SolverOptions& options, const Coefficients* warm) {
  validate(spec);
  if (!(options.tol > 0.0)) throw std::invalid_argument("solver tolerance must be positive");
  if (options.max_iter < 1) throw std::invalid_argument("max_iter must be at least 1");

  const Eigen::Index n = blocks.n();
  const Eigen::Index K = blocks.K();
  const Eigen::Index q = blocks.q();
  const Eigen::Index p = blocks.n_groups();
  if (n == 0) throw DataError("cannot fit an empty design");

  Eigen::MatrixXd gamma = Eigen::MatrixXd::Zero(q, K);
  Eigen::MatrixXd theta = Eigen::MatrixXd::Zero(p, K);
  if (warm != nullptr) {
    check_warm(blocks, *warm);
    gamma = warm->gamma;
    theta = warm->theta;
    for (Eigen::Index l = 0; l < p; ++l) {
      if (!blocks.scaling.w_active[static_cast<std::size_t>(l)]) theta.row(l).setZero();
    }
  }
  GramState state(blocks, gamma, theta);

  FitResult out;
  auto cycle = [&](bool all_groups) {
    double change = state.update_covariates(gamma);
    for (Eigen::Index l = 0; l < p; ++l) {
      if (!blocks.scaling.w_active[static_cast<std::size_t>(l)]) continue;
      const bool is_zero = theta.row(l).isZero(0.0);
      if (!all_groups && is_zero) continue;
      Eigen::VectorXd z = state.group_gradient(l);
      z += theta.row(l).transpose();
      const Eigen::VectorXd next = group_firm_threshold(z, spec);
      const Eigen::RowVectorXd delta = next.transpose() - theta.row(l);
      if (!delta.isZero(0.0)) {
        state.move_group(l, delta);
        theta.row(l) = next.transpose();
        change = std::max(change, delta.cwiseAbs().maxCoeff());
      }
    }
    ++out.iterations;
    if (options.record_trace) out.objective_trace.push_back(objective(blocks, spec, gamma, theta));
    return change;
  };

  while (out.iterations < options.max_iter) {
    if (cycle(true) < options.tol) {
      out.converged = true;
      break;
    }
    while (out.iterations < options.max_iter && cycle(false) >= options.tol) {
    }
  }

  out.mcp = spec;
  out.features = blocks.features;
  out.scaling = blocks.scaling;
  out.gamma_std = gamma;
  out.theta_std = theta;
  out.objective = objective(blocks, spec, gamma, theta);
  if (!std::isfinite(out.objective)) {
    std::ostringstream os;
    os << "solver produced a non-finite objective after " << out.iterations << " cycles (lambda = " << spec.lambda << ")";
    throw NumericalError(os.str());
  }
  for (Eigen::Index l = 0; l < p; ++l) {
    if (theta.row(l).norm() > 0.0) out.active_groups.push_back(static_cast<std::size_t>(l));
  }

  // Back to the raw scale.
  const Standardization& s = blocks.scaling;
  out.gamma = Eigen::MatrixXd::Zero(q, K);
  for (Eigen::Index j = 0; j < q; ++j) {
    if (s.x_active[static_cast<std::size_t>(j)]) out.gamma.row(j) = gamma.row(j) / s.x_scale[j];
  }
  out.theta = Eigen::MatrixXd::Zero(p, K);
  for (Eigen::Index l = 0; l < p; ++l) {
    if (s.w_active[static_cast<std::size_t>(l)]) out.theta.row(l) = theta.row(l) / s.w_scale[l];
  }
  out.intercept = s.y_center;
  if (q > 0) out.intercept -= out.gamma.transpose() * s.x_center;
  if (p > 0) out.intercept -= out.theta.transpose() * s.w_center;
  if (blocks.fold_intercept && p > 0) {
    out.theta.rowwise() += out.intercept.transpose();
    out.intercept.setZero();
  }
  return out;
}

std::vector<double> lambda_path(const DesignBlocks& blocks, std::size_t n_lambda, double min_ratio) {
  if (n_lambda < 2) throw std::invalid_argument("lambda path needs at least 2 values");
  if (!(min_ratio > 0.0 && min_ratio < 1.0)) throw std::invalid_argument("lambda path min_ratio must lie in (0, 1)");

  // Same arithmetic as the first descent cycle from a cold start, so that a
  // fit at lambda_max leaves theta exactly zero.
  Eigen::MatrixXd gamma = Eigen::MatrixXd::Zero(blocks.q(), blocks.K());
  const Eigen::MatrixXd theta = Eigen::MatrixXd::Zero(blocks.n_groups(), blocks.K());
  GramState state(blocks, gamma, theta);
  state.update_covariates(gamma);
  double lambda_max = 0.0;
  for (Eigen::Index l = 0; l < blocks.n_groups(); ++l) {
    if (!blocks.scaling.w_active[static_cast<std::size_t>(l)]) continue;
    Eigen::VectorXd z = state.group_gradient(l);
    z += theta.row(l).transpose();
    lambda_max = std::max(lambda_max, z.norm());
  }
  // Gradients at rounding level of the outcome scale count as zero.
  const double y_rms = std::sqrt(blocks.Y.squaredNorm() / static_cast<double>(std::max<Eigen::Index>(blocks.Y.size(), 1)));
  if (!(lambda_max > 1e-12 * y_rms)) {
    std::clog << "warning: residual after the unpenalized fit is zero; lambda path degenerates to {0}\n";
    return {0.0};
  }
  std::vector<double> path(n_lambda);
  for (std::size_t j = 0; j < n_lambda; ++j) {
    path[j] = lambda_max * std::pow(min_ratio, static_cast<double>(j) / static_cast<double>(n_lambda - 1));
  }
  return path;
}

double kkt_violation(const DesignBlocks& blocks, const FitResult& fit) {
  const Eigen::MatrixXd R = residual(blocks, fit.gamma_std, fit.theta_std);
  const double inv_n = 1.0 / static_cast<double>(blocks.n());
  const McpSpec& spec = fit.mcp;
  double worst = 0.0;
  for (Eigen::Index j = 0; j < blocks.q(); ++j) {
    if (blocks.scaling.x_active[static_cast<std::size_t>(j)]) {
      worst = std::max(worst, (R.transpose() * blocks.X.col(j) * inv_n).cwiseAbs().maxCoeff());
    }
  }
  for (Eigen::Index l = 0; l < blocks.n_groups(); ++l) {
    if (!blocks.scaling.w_active[static_cast<std::size_t>(l)]) continue;
    const Eigen::VectorXd g = group_score(blocks, R, l, inv_n);
    const Eigen::VectorXd th = fit.theta_std.row(l).transpose();
    const double t = th.norm();
    if (t == 0.0) {
      worst = std::max(worst, g.norm() - spec.lambda);
    } else {
      const Eigen::VectorXd dpen =
          t < spec.lambda * spec.phi ? Eigen::VectorXd((spec.lambda - t / spec.phi) / t * th) : Eigen::VectorXd::Zero(th.size());
      worst = std::max(worst, (g - dpen).norm());
    }
  }
  return std::max(worst, 0.0);
}

}  // namespace msomdr
