#include "msomdr/baseline_features.hpp"

#include "msomdr/core.hpp"

#include <algorithm>
#include <string>

namespace msomdr {

QuantileGrid QuantileGrid::interior(std::size_t count) {
  QuantileGrid g;
  g.levels.resize(count);
  for (std::size_t j = 1; j <= count; ++j) g.levels[j - 1] = static_cast<double>(j) / static_cast<double>(count + 1);
  return g;
}

Eigen::VectorXd quantile_function(std::span<const double> samples, std::span<const double> levels) {
  if (samples.empty()) throw DataError("quantile function of an empty sample");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  Eigen::VectorXd q(static_cast<Eigen::Index>(levels.size()));
  for (std::size_t i = 0; i < levels.size(); ++i) q[static_cast<Eigen::Index>(i)] = sorted_quantile(sorted, levels[i]);
  return q;
}

QuantileFeatureMap::QuantileFeatureMap(std::vector<double> levels, std::vector<BSplineBasis> bases)
    : levels_(std::move(levels)), bases_(std::move(bases)) {
  if (levels_.empty()) throw DataError("quantile grid is empty");
  for (std::size_t i = 0; i < levels_.size(); ++i) {
    if (!(levels_[i] > 0.0 && levels_[i] < 1.0)) throw DataError("quantile levels must lie in (0, 1)");
    if (i > 0 && !(levels_[i - 1] < levels_[i])) throw DataError("quantile levels must be strictly increasing");
  }
  if (bases_.empty()) throw DataError("quantile feature map needs at least one dimension");
  for (const auto& b : bases_) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(levels_.size()), static_cast<Eigen::Index>(b.size()));
    for (std::size_t i = 0; i < levels_.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = b.eval(levels_[i]).transpose();
    at_levels_.push_back(std::move(m));
  }
}

std::size_t QuantileFeatureMap::size() const {
  std::size_t n = 0;
  for (const auto& b : bases_) n += b.size();
  return n;
}

Eigen::VectorXd QuantileFeatureMap::features(const Eigen::MatrixXd& z) const {
  if (static_cast<std::size_t>(z.cols()) != dim()) {
    throw DataError("draws have " + std::to_string(z.cols()) + " columns, quantile map expects " + std::to_string(dim()));
  }
  if (z.rows() < 1) throw DataError("subject has no draws");
  Eigen::VectorXd out(static_cast<Eigen::Index>(size()));
  Eigen::Index offset = 0;
  const double inv = 1.0 / static_cast<double>(levels_.size());
  for (std::size_t c = 0; c < dim(); ++c) {
    const Eigen::VectorXd col = z.col(static_cast<Eigen::Index>(c));
    const Eigen::VectorXd q = quantile_function(std::span<const double>(col.data(), static_cast<std::size_t>(col.size())), levels_);
    const Eigen::MatrixXd& B = at_levels_[c];
    out.segment(offset, B.cols()) = (B.transpose() * q) * inv;
    offset += B.cols();
  }
  return out;
}

Eigen::VectorXd MeanFeatureMap::features(const Eigen::MatrixXd& z) const {
  if (static_cast<std::size_t>(z.cols()) != d) throw DataError("draw dimension mismatch for mean features");
  if (z.rows() < 1) throw DataError("subject has no draws");
  return z.colwise().mean().transpose();
}

}  // namespace msomdr
