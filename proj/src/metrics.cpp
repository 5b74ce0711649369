#include "msomdr/metrics.hpp"

#include "msomdr/core.hpp"
#include "msomdr/scoring.hpp"

#include <cmath>
#include <ostream>

namespace msomdr {

Eigen::VectorXd r_squared(const Eigen::MatrixXd& y_true, const Eigen::MatrixXd& y_pred) {
  if (y_true.rows() != y_pred.rows() || y_true.cols() != y_pred.cols()) {
    throw std::invalid_argument("r_squared: outcome and prediction shapes differ");
  }
  if (y_true.rows() == 0) throw DataError("r_squared: no test subjects");
  Eigen::VectorXd r2(y_true.cols());
  for (Eigen::Index k = 0; k < y_true.cols(); ++k) {
    const double mean = y_true.col(k).mean();
    const double ss_tot = (y_true.col(k).array() - mean).square().sum();
    if (!(ss_tot > 0.0)) throw DataError("r_squared: outcome " + std::to_string(k + 1) + " has zero test variance");
    r2[k] = 1.0 - (y_true.col(k) - y_pred.col(k)).squaredNorm() / ss_tot;
  }
  return r2;
}

namespace {

const std::vector<std::pair<double, double>>& resolve_window(const FitResult& fit, const GridSpec& grid) {
  const auto& w = grid.window.empty() ? fit.surface_window : grid.window;
  if (w.empty()) throw std::invalid_argument("no evaluation window: pass one or fit with training draws");
  for (const auto& [lo, hi] : w) {
    if (!(lo < hi)) throw std::invalid_argument("evaluation window needs lo < hi in every dimension");
  }
  if (grid.points < 1) throw std::invalid_argument("grid needs at least one point per dimension");
  return w;
}

/// Visits every point of a points^d lattice, last dimension fastest.
template <class F>
void for_each_grid_point(const std::vector<std::pair<double, double>>& window, std::size_t points, bool midpoints, F&& f) {
  const std::size_t d = window.size();
  std::vector<std::size_t> idx(d, 0);
  std::vector<double> x(d);
  while (true) {
    for (std::size_t j = 0; j < d; ++j) {
      const auto [lo, hi] = window[j];
      if (midpoints) {
        x[j] = lo + (static_cast<double>(idx[j]) + 0.5) * (hi - lo) / static_cast<double>(points);
      } else {
        x[j] = points == 1 ? 0.5 * (lo + hi) : lo + static_cast<double>(idx[j]) * (hi - lo) / static_cast<double>(points - 1);
      }
    }
    f(std::span<const double>(x));
    std::size_t j = d;
    while (j > 0) {
      --j;
      if (++idx[j] < points) break;
      idx[j] = 0;
      if (j == 0) return;
    }
    if (d == 0) return;
  }
}

}  // namespace

Eigen::VectorXd beta_l2_loss(const FitResult& fit, const SurfaceFunction& truth, const GridSpec& grid) {
  const auto& window = resolve_window(fit, grid);
  double cell = 1.0;
  for (const auto& [lo, hi] : window) cell *= (hi - lo) / static_cast<double>(grid.points);
  const std::size_t K = static_cast<std::size_t>(fit.theta.cols());
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(K));
  for_each_grid_point(window, grid.points, true, [&](std::span<const double> x) {
    for (std::size_t k = 0; k < K; ++k) {
      const double diff = beta_surface(fit, k, x) - truth(k, x);
      acc[static_cast<Eigen::Index>(k)] += diff * diff;
    }
  });
  return (acc * cell).cwiseSqrt();
}

std::vector<SurfacePoint> export_surface(const FitResult& fit, std::size_t k, const GridSpec& grid) {
  const auto& window = resolve_window(fit, grid);
  std::vector<SurfacePoint> out;
  for_each_grid_point(window, grid.points, false, [&](std::span<const double> x) {
    out.push_back(SurfacePoint{std::vector<double>(x.begin(), x.end()), beta_surface(fit, k, x)});
  });
  return out;
}

void write_surface_csv(std::ostream& os, const std::vector<SurfacePoint>& surface) {
  if (surface.empty()) return;
  for (std::size_t j = 0; j < surface.front().coords.size(); ++j) os << 'u' << (j + 1) << ',';
  os << "value\n";
  os.precision(17);
  for (const auto& p : surface) {
    for (double c : p.coords) os << c << ',';
    os << p.value << '\n';
  }
}

}  // namespace msomdr
