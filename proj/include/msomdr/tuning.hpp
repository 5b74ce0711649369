#pragma once

#include "msomdr/core.hpp"
#include "msomdr/feature_map.hpp"
#include "msomdr/solver.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

namespace msomdr {

using BasisCounts = std::vector<std::size_t>;

/// Builds the feature map for one candidate basis tuple from training data
/// only (knots, quantile bases, ...).
using FeatureFactory = std::function<FeatureSpec(const Dataset& train, const BasisCounts& counts)>;

/// Tensor B-spline bases with quantile knots of the pooled training draws.
FeatureFactory tensor_feature_factory(int degree = 3);

struct TuningGrid {
  std::vector<BasisCounts> basis_counts;
  std::size_t n_lambda = 100;
  double min_ratio = 1e-3;
  std::size_t folds = 5;
  std::uint64_t seed = 0;
  /// Explicit lambda values; when set they replace the computed path.
  std::optional<std::vector<double>> lambdas;
  int degree = 3;
};

struct CvRecord {
  BasisCounts counts;
  std::size_t n_features = 0;
  double lambda = 0.0;
  double cv_sse = 0.0;
  std::vector<double> fold_sse;
};

struct TuningResult {
  BasisCounts best_counts;
  double best_lambda = 0.0;
  std::vector<CvRecord> cv_table;
  FitResult refit;
};

/// V-fold cross-validation jointly over basis tuples and the lambda path.
/// Knots and standardization are rebuilt inside each fold; the lambda path
/// for a tuple is computed once on the full training design and shared by
/// its folds. Subjects are put in id order first, so results do not depend
/// on the input order.
TuningResult cross_validate(const Dataset& train, const TuningGrid& grid, double phi = 3.0,
                            const SolverOptions& options = {}, const FeatureFactory& factory = tensor_feature_factory());

/// Single fit at a fixed basis tuple and lambda on all of `train`.
FitResult fit_fixed(const Dataset& train, const BasisCounts& counts, const McpSpec& spec, const SolverOptions& options = {},
                    const FeatureFactory& factory = tensor_feature_factory());

/// Fits along `path` (largest lambda first) with warm starts and returns the
/// fit at every value.
std::vector<FitResult> fit_path(const DesignBlocks& blocks, const std::vector<double>& path, double phi,
                                const SolverOptions& options = {});

/// Fold index for each subject of `data` (in the given order).
std::vector<std::size_t> fold_assignment(const Dataset& data, std::size_t folds, std::uint64_t seed);

/// CSV export: n1,...,nd,lambda,fold,sse (one row per fold) .
void write_cv_table(std::ostream& os, const TuningResult& result);

}  // namespace msomdr
