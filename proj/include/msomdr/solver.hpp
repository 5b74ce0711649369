#pragma once

#include "msomdr/design.hpp"
#include "msomdr/feature_map.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

namespace msomdr {

/// Minimax concave penalty parameters.
struct McpSpec {
  double lambda = 0.0;
  double phi = 3.0;
};

void validate(const McpSpec& spec);

struct SolverOptions {
  double tol = 1e-7;       // max absolute standardized coefficient change per cycle
  int max_iter = 10000;    // descent cycles
  bool record_trace = false;
};

/// Standardized-scale coefficients, used for warm starts along a path.
struct Coefficients {
  Eigen::MatrixXd gamma;  // q x K
  Eigen::MatrixXd theta;  // N0 x K
};

struct FitResult {
  Eigen::MatrixXd gamma;      // q x K, raw scale
  Eigen::VectorXd intercept;  // K
  Eigen::MatrixXd theta;      // N0 x K, raw scale
  Eigen::MatrixXd gamma_std;
  Eigen::MatrixXd theta_std;
  FeatureSpec features;
  Standardization scaling;
  McpSpec mcp;
  std::vector<std::size_t> active_groups;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> objective_trace;  // one entry per descent cycle when requested
  /// Per-dimension box used for surface evaluation and L2 losses; empty
  /// unless set by the caller that knows the training draws.
  std::vector<std::pair<double, double>> surface_window;

  std::size_t K() const { return static_cast<std::size_t>(intercept.size()); }
  std::size_t q() const { return static_cast<std::size_t>(gamma.rows()); }
  Coefficients standardized() const { return {gamma_std, theta_std}; }
};

/// MCP(t) = lambda t - t^2 / (2 phi) for t <= lambda phi, else lambda^2 phi / 2.
double mcp_penalty(double t, const McpSpec& spec);

/// Closed-form minimizer of 0.5 ||theta - z||^2 + MCP(||theta||).
Eigen::VectorXd group_firm_threshold(const Eigen::VectorXd& z, const McpSpec& spec);

/// (1/(2n)) ||Y - X gamma - W theta||_F^2 + sum_l MCP(||theta_l.||) on the
/// standardized blocks.
double objective(const DesignBlocks& blocks, const McpSpec& spec, const Eigen::MatrixXd& gamma_std,
                 const Eigen::MatrixXd& theta_std);

/// Group coordinate descent for the multi-task group-MCP criterion. Each
/// feature l is one group holding its K outcome coefficients. Returns with
/// converged = false when max_iter cycles are exhausted; throws
/// NumericalError on a non-finite objective.
FitResult fit(const DesignBlocks& blocks, const McpSpec& spec, const SolverOptions& options = {},
              const Coefficients* warm = nullptr);

/// Log-spaced path from lambda_max (smallest value at which theta = 0 is
/// stationary) down to lambda_max * min_ratio.
std::vector<double> lambda_path(const DesignBlocks& blocks, std::size_t n_lambda, double min_ratio);

/// Largest stationarity violation over groups: for zero groups
/// max(0, ||g_l|| - lambda), for nonzero groups ||g_l - dMCP(theta_l)||,
/// where g_l = W_l^T R / n.
double kkt_violation(const DesignBlocks& blocks, const FitResult& fit);

}  // namespace msomdr
