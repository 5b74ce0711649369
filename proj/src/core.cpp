#include "msomdr/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_set>

namespace msomdr {

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.dims = dims;
  out.subjects.reserve(indices.size());
  for (std::size_t i : indices) out.subjects.push_back(subjects.at(i));
  return out;
}

Eigen::MatrixXd Dataset::outcome_matrix() const {
  Eigen::MatrixXd Y(static_cast<Eigen::Index>(size()), static_cast<Eigen::Index>(dims.K));
  for (std::size_t i = 0; i < size(); ++i) Y.row(static_cast<Eigen::Index>(i)) = subjects[i].y.transpose();
  return Y;
}

Eigen::MatrixXd Dataset::covariate_matrix() const {
  Eigen::MatrixXd X(static_cast<Eigen::Index>(size()), static_cast<Eigen::Index>(dims.q));
  for (std::size_t i = 0; i < size(); ++i) X.row(static_cast<Eigen::Index>(i)) = subjects[i].x.transpose();
  return X;
}

namespace {

[[noreturn]] void fail(const SubjectRecord& s, const std::string& what) {
  throw DataError("subject '" + s.id + "': " + what);
}

}  // namespace

void validate(const Dataset& dataset) {
  if (dataset.empty()) throw DataError("dataset has no subjects");
  const Dims& dims = dataset.dims;
  if (dims.d == 0) throw DataError("draw dimension d must be at least 1");

  std::unordered_set<std::string> seen;
  for (const SubjectRecord& s : dataset.subjects) {
    if (!seen.insert(s.id).second) fail(s, "duplicate subject id");
    if (static_cast<std::size_t>(s.y.size()) != dims.K) {
      fail(s, "y has length " + std::to_string(s.y.size()) + ", expected K = " + std::to_string(dims.K));
    }
    if (static_cast<std::size_t>(s.x.size()) != dims.q) {
      fail(s, "x has length " + std::to_string(s.x.size()) + ", expected q = " + std::to_string(dims.q));
    }
    if (static_cast<std::size_t>(s.z.cols()) != dims.d) {
      fail(s, "z_samples has " + std::to_string(s.z.cols()) + " columns, expected d = " + std::to_string(dims.d));
    }
    if (s.z.rows() < 1) fail(s, "z_samples has no draws");
    for (Eigen::Index k = 0; k < s.y.size(); ++k) {
      if (!std::isfinite(s.y[k])) fail(s, "y[" + std::to_string(k) + "] is not finite");
    }
    for (Eigen::Index j = 0; j < s.x.size(); ++j) {
      if (!std::isfinite(s.x[j])) fail(s, "x[" + std::to_string(j) + "] is not finite");
    }
    for (Eigen::Index c = 0; c < s.z.cols(); ++c) {
      for (Eigen::Index r = 0; r < s.z.rows(); ++r) {
        if (!std::isfinite(s.z(r, c))) {
          fail(s, "z_samples(" + std::to_string(r) + ", " + std::to_string(c) + ") is not finite");
        }
      }
    }
  }
}

void validate(const SplitPlan& plan) {
  if (plan.proportions.empty()) throw DataError("split plan has no proportions");
  double total = 0.0;
  for (double p : plan.proportions) {
    if (!(p > 0.0 && p <= 1.0)) {
      std::ostringstream os;
      os << "split proportion " << p << " outside (0, 1]";
      throw DataError(os.str());
    }
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    std::ostringstream os;
    os.precision(17);
    os << "split proportions sum to " << total << ", not 1";
    throw DataError(os.str());
  }
}

std::vector<Dataset> split(const Dataset& dataset, const SplitPlan& plan) {
  if (dataset.empty()) throw DataError("cannot split an empty dataset");
  validate(plan);

  const std::size_t parts = plan.proportions.size();
  std::vector<double> cumulative(parts);
  std::partial_sum(plan.proportions.begin(), plan.proportions.end(), cumulative.begin());

  std::mt19937_64 rng(plan.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<std::vector<std::size_t>> members(parts);
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const double u = unif(rng);
    std::size_t j = 0;
    while (j + 1 < parts && u >= cumulative[j]) ++j;
    members[j].push_back(i);
  }

  std::vector<Dataset> out;
  out.reserve(parts);
  for (const auto& idx : members) out.push_back(dataset.subset(idx));
  return out;
}

Dataset sorted_by_id(const Dataset& dataset) {
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return dataset.subjects[a].id < dataset.subjects[b].id;
  });
  return dataset.subset(order);
}

Dataset concatenate(std::span<const Dataset> parts) {
  Dataset out;
  if (parts.empty()) return out;
  out.dims = parts.front().dims;
  for (const Dataset& p : parts) {
    if (!(p.dims == out.dims)) throw DataError("cannot concatenate datasets with different dims");
    out.subjects.insert(out.subjects.end(), p.subjects.begin(), p.subjects.end());
  }
  return out;
}

}  // namespace msomdr
