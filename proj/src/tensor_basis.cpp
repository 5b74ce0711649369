#include "msomdr/tensor_basis.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

namespace msomdr {

std::size_t TensorBasis::n0() const {
  if (bases.empty()) return 0;
  std::size_t n = 1;
  for (const auto& b : bases) n *= b.size();
  return n;
}

std::vector<std::size_t> TensorBasis::counts() const {
  std::vector<std::size_t> out;
  out.reserve(bases.size());
  for (const auto& b : bases) out.push_back(b.size());
  return out;
}

TensorBasis make_tensor_basis(const Dataset& data, std::span<const std::size_t> counts, int degree) {
  if (counts.size() != data.dims.d) {
    throw DataError("basis count tuple has " + std::to_string(counts.size()) + " entries, expected d = " +
                    std::to_string(data.dims.d));
  }
  std::size_t total = 0;
  for (const auto& s : data.subjects) total += s.n_draws();

  TensorBasis tb;
  std::vector<double> pooled;
  pooled.reserve(total);
  for (std::size_t c = 0; c < data.dims.d; ++c) {
    pooled.clear();
    for (const auto& s : data.subjects) {
      const auto col = s.z.col(static_cast<Eigen::Index>(c));
      pooled.insert(pooled.end(), col.data(), col.data() + col.size());
    }
    tb.bases.push_back(make_basis(pooled, counts[c], degree));
  }
  return tb;
}

std::vector<std::pair<double, double>> pooled_quantile_box(const Dataset& data, double lo_level, double hi_level) {
  std::vector<std::pair<double, double>> box;
  std::vector<double> pooled;
  for (std::size_t c = 0; c < data.dims.d; ++c) {
    pooled.clear();
    for (const auto& s : data.subjects) {
      const auto col = s.z.col(static_cast<Eigen::Index>(c));
      pooled.insert(pooled.end(), col.data(), col.data() + col.size());
    }
    std::sort(pooled.begin(), pooled.end());
    box.emplace_back(sorted_quantile(pooled, lo_level), sorted_quantile(pooled, hi_level));
  }
  return box;
}

namespace {

void check_point(const TensorBasis& tb, std::size_t len) {
  if (tb.dim() == 0) throw DataError("tensor basis has no dimensions");
  if (len != tb.dim()) {
    throw DataError("point has " + std::to_string(len) + " coordinates, basis has d = " + std::to_string(tb.dim()));
  }
}

using Local = std::array<double, BSplineBasis::kMaxDegree + 1>;

}  // namespace

Eigen::VectorXd tensor_row(const TensorBasis& tb, std::span<const double> z) {
  check_point(tb, z.size());
  Eigen::VectorXd out = Eigen::VectorXd::Ones(1);
  for (std::size_t j = 0; j < tb.dim(); ++j) {
    const Eigen::VectorXd b = eval_basis(tb.bases[j], z[j]);
    Eigen::VectorXd next(out.size() * b.size());
    for (Eigen::Index a = 0; a < out.size(); ++a) {
      for (Eigen::Index c = 0; c < b.size(); ++c) next[a * b.size() + c] = out[a] * b[c];
    }
    out = std::move(next);
  }
  return out;
}

Eigen::VectorXd subject_features(const TensorBasis& tb, const Eigen::MatrixXd& z) {
  const std::size_t d = tb.dim();
  if (z.rows() < 1) throw DataError("subject has no draws");
  check_point(tb, static_cast<std::size_t>(z.cols()));

  std::vector<std::size_t> stride(d, 1);
  for (std::size_t j = d - 1; j-- > 0;) stride[j] = stride[j + 1] * tb.bases[j + 1].size();

  std::vector<Local> values(d);
  std::vector<std::size_t> first(d);
  std::vector<int> width(d);
  for (std::size_t j = 0; j < d; ++j) width[j] = tb.bases[j].degree() + 1;

  Eigen::VectorXd acc = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(tb.n0()));
  std::vector<int> pos(d);
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    for (std::size_t j = 0; j < d; ++j) {
      const double u = z(r, static_cast<Eigen::Index>(j));
      if (!std::isfinite(u)) throw DataError("non-finite draw");
      first[j] = tb.bases[j].eval_nonzero(u, values[j]);
    }
    // Odometer over the (degree+1)^d supported multi-indices; the product is
    // formed left to right exactly as tensor_row does.
    std::fill(pos.begin(), pos.end(), 0);
    while (true) {
      double prod = 1.0;
      std::size_t flat = 0;
      for (std::size_t j = 0; j < d; ++j) {
        prod *= values[j][pos[j]];
        flat += (first[j] + static_cast<std::size_t>(pos[j])) * stride[j];
      }
      acc[static_cast<Eigen::Index>(flat)] += prod;

      bool done = true;
      for (std::size_t j = d; j-- > 0;) {
        if (++pos[j] < width[j]) {
          done = false;
          break;
        }
        pos[j] = 0;
      }
      if (done) break;
    }
  }
  return acc / static_cast<double>(z.rows());
}

Eigen::VectorXd subject_features_reference(const TensorBasis& tb, const Eigen::MatrixXd& z) {
  if (z.rows() < 1) throw DataError("subject has no draws");
  check_point(tb, static_cast<std::size_t>(z.cols()));
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(tb.n0()));
  std::vector<double> point(tb.dim());
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    for (std::size_t j = 0; j < tb.dim(); ++j) point[j] = z(r, static_cast<Eigen::Index>(j));
    acc += tensor_row(tb, point);
  }
  return acc / static_cast<double>(z.rows());
}

}  // namespace msomdr
