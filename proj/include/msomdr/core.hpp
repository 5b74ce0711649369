#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace msomdr {

/// Malformed or inconsistent input data.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical routine could not produce a usable result (NaN objective,
/// singular system, zero modulation scale, ...).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dataset-level dimensions: K outcomes, q scalar covariates, d-dimensional draws.
struct Dims {
  std::size_t K = 0;
  std::size_t q = 0;
  std::size_t d = 0;

  friend bool operator==(const Dims&, const Dims&) = default;
};

/// One subject: outcomes, covariates and m_i draws (rows) from its latent
/// d-dimensional distribution.
struct SubjectRecord {
  std::string id;
  Eigen::VectorXd y;
  Eigen::VectorXd x;
  Eigen::MatrixXd z;

  std::size_t n_draws() const { return static_cast<std::size_t>(z.rows()); }
};

struct Dataset {
  std::vector<SubjectRecord> subjects;
  Dims dims;

  std::size_t size() const { return subjects.size(); }
  bool empty() const { return subjects.empty(); }

  /// Subjects at the given positions, in that order.
  Dataset subset(std::span<const std::size_t> indices) const;
  /// Outcomes stacked as an n x K matrix.
  Eigen::MatrixXd outcome_matrix() const;
  /// Covariates stacked as an n x q matrix.
  Eigen::MatrixXd covariate_matrix() const;
};

/// Proportions of a seeded per-subject random partition.
struct SplitPlan {
  std::vector<double> proportions;
  std::uint64_t seed = 0;
};

/// Throws DataError naming the first offending subject and field.
void validate(const Dataset& dataset);

/// Throws DataError if the plan is not a valid probability vector.
void validate(const SplitPlan& plan);

/// Assigns every subject to one subset by a seeded uniform draw against the
/// cumulative proportions. Subjects keep their relative order within a subset.
std::vector<Dataset> split(const Dataset& dataset, const SplitPlan& plan);

/// Copy of the dataset with subjects sorted by id.
Dataset sorted_by_id(const Dataset& dataset);

/// Union of disjoint datasets sharing dims, in argument order.
Dataset concatenate(std::span<const Dataset> parts);

}  // namespace msomdr
