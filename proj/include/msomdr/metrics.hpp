#pragma once

#include "msomdr/solver.hpp"

#include <Eigen/Dense>

#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace msomdr {

/// Out-of-sample R^2 per outcome, with the mean taken over the test outcomes.
/// Throws DataError when an outcome has zero variance.
Eigen::VectorXd r_squared(const Eigen::MatrixXd& y_true, const Eigen::MatrixXd& y_pred);

/// Regular grid over a per-dimension box. An empty window means "use the
/// fit's surface_window".
struct GridSpec {
  std::size_t points = 50;
  std::vector<std::pair<double, double>> window;
};

/// True surface: (outcome, point) -> value.
using SurfaceFunction = std::function<double(std::size_t, std::span<const double>)>;

/// { integral over the window of (beta_hat_k - beta_k)^2 }^(1/2) per outcome,
/// midpoint rule on a points^d grid.
Eigen::VectorXd beta_l2_loss(const FitResult& fit, const SurfaceFunction& truth, const GridSpec& grid = {});

struct SurfacePoint {
  std::vector<double> coords;
  double value = 0.0;
};

/// Fitted surface of outcome k on a points^d grid including the window
/// endpoints; the last coordinate varies fastest.
std::vector<SurfacePoint> export_surface(const FitResult& fit, std::size_t k, const GridSpec& grid = {});

/// CSV with header u1..ud,value.
void write_surface_csv(std::ostream& os, const std::vector<SurfacePoint>& surface);

struct EvalReport {
  Eigen::VectorXd r2;
  std::vector<std::string> ids;
  Eigen::MatrixXd predictions;
  std::optional<Eigen::VectorXd> surface_l2;
  std::optional<double> coverage;
};

}  // namespace msomdr
