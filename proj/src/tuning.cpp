#include "msomdr/tuning.hpp"

#include "msomdr/design.hpp"
#include "msomdr/scoring.hpp"

#include <algorithm>
#include <exception>
#include <numeric>
#include <ostream>
#include <random>
#include <string>

namespace msomdr {

FeatureFactory tensor_feature_factory(int degree) {
  return [degree](const Dataset& train, const BasisCounts& counts) -> FeatureSpec {
    return make_tensor_basis(train, counts, degree);
  };
}

std::vector<FitResult> fit_path(const DesignBlocks& blocks, const std::vector<double>& path, double phi,
                                const SolverOptions& options) {
  std::vector<FitResult> fits;
  fits.reserve(path.size());
  for (std::size_t j = 0; j < path.size(); ++j) {
    if (j > 0 && path[j] > path[j - 1]) throw std::invalid_argument("lambda path must be nonincreasing");
    const Coefficients warm = j > 0 ? fits.back().standardized() : Coefficients{};
    fits.push_back(fit(blocks, McpSpec{path[j], phi}, options, j > 0 ? &warm : nullptr));
  }
  return fits;
}

namespace {

void attach_window(FitResult& f, const Dataset& data) {
  if (std::holds_alternative<TensorBasis>(f.features)) f.surface_window = pooled_quantile_box(data, 0.025, 0.975);
}

}  // namespace

FitResult fit_fixed(const Dataset& train, const BasisCounts& counts, const McpSpec& spec, const SolverOptions& options,
                    const FeatureFactory& factory) {
  validate(train);
  const Dataset data = sorted_by_id(train);
  FitResult f = fit(build_design(data, factory(data, counts)), spec, options);
  attach_window(f, data);
  return f;
}

std::vector<std::size_t> fold_assignment(const Dataset& data, std::size_t folds, std::uint64_t seed) {
  if (folds < 2) throw std::invalid_argument("cross-validation needs at least 2 folds");
  if (data.size() < folds) {
    throw DataError("cross-validation with " + std::to_string(folds) + " folds needs at least that many subjects, got " +
                    std::to_string(data.size()));
  }
  std::vector<std::size_t> perm(data.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<std::size_t> fold(data.size());
  for (std::size_t i = 0; i < perm.size(); ++i) fold[perm[i]] = i % folds;
  return fold;
}

namespace {

void check_grid(const TuningGrid& grid, std::size_t d) {
  if (grid.basis_counts.empty()) throw std::invalid_argument("tuning grid has no basis tuples");
  for (const auto& c : grid.basis_counts) {
    if (c.size() != d) throw std::invalid_argument("basis tuple length does not match the draw dimension");
  }
  if (grid.lambdas) {
    if (grid.lambdas->empty()) throw std::invalid_argument("explicit lambda list is empty");
    for (std::size_t j = 1; j < grid.lambdas->size(); ++j) {
      if ((*grid.lambdas)[j] > (*grid.lambdas)[j - 1]) throw std::invalid_argument("lambda values must be nonincreasing");
    }
  }
}

/// Per-lambda held-out SSE for one (tuple, fold) task.
std::vector<double> fold_sse(const Dataset& fold_train, const Dataset& held_out, const BasisCounts& counts,
                             const std::vector<double>& path, double phi, const SolverOptions& options,
                             const FeatureFactory& factory) {
  const FeatureSpec spec = factory(fold_train, counts);
  const DesignBlocks blocks = build_design(fold_train, spec);
  const Eigen::MatrixXd X_out = held_out.covariate_matrix();
  const Eigen::MatrixXd W_out = feature_matrix(spec, held_out);
  const Eigen::MatrixXd Y_out = held_out.outcome_matrix();
  std::vector<double> sse(path.size(), 0.0);
  Coefficients warm;
  for (std::size_t j = 0; j < path.size(); ++j) {
    const FitResult f = fit(blocks, McpSpec{path[j], phi}, options, j > 0 ? &warm : nullptr);
    warm = f.standardized();
    sse[j] = (Y_out - predict_rows(f, X_out, W_out)).squaredNorm();
  }
  return sse;
}

}  // namespace

TuningResult cross_validate(const Dataset& train, const TuningGrid& grid, double phi, const SolverOptions& options,
                            const FeatureFactory& factory) {
  validate(train);
  check_grid(grid, train.dims.d);
  const Dataset data = sorted_by_id(train);
  const std::size_t V = grid.folds;
  const std::vector<std::size_t> fold = fold_assignment(data, V, grid.seed);

  std::vector<Dataset> fold_train(V), held_out(V);
  for (std::size_t v = 0; v < V; ++v) {
    std::vector<std::size_t> in, out;
    for (std::size_t i = 0; i < data.size(); ++i) (fold[i] == v ? out : in).push_back(i);
    if (out.empty()) throw DataError("fold " + std::to_string(v) + " has no subjects");
    fold_train[v] = data.subset(in);
    held_out[v] = data.subset(out);
  }

  const std::size_t T = grid.basis_counts.size();
  std::vector<DesignBlocks> full(T);
  std::vector<std::vector<double>> paths(T);
  for (std::size_t t = 0; t < T; ++t) {
    full[t] = build_design(data, factory(data, grid.basis_counts[t]));
    paths[t] = grid.lambdas ? *grid.lambdas : lambda_path(full[t], grid.n_lambda, grid.min_ratio);
  }

  // Every (tuple, fold) task writes its own slot; reductions below run in a
  // fixed order.
  std::vector<std::vector<double>> sse(T * V);
  std::exception_ptr error;
  const auto tasks = static_cast<std::ptrdiff_t>(T * V);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t task = 0; task < tasks; ++task) {
    const std::size_t t = static_cast<std::size_t>(task) / V;
    const std::size_t v = static_cast<std::size_t>(task) % V;
    try {
      sse[static_cast<std::size_t>(task)] =
          fold_sse(fold_train[v], held_out[v], grid.basis_counts[t], paths[t], phi, options, factory);
    } catch (...) {
#pragma omp critical(msomdr_cv_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);

  TuningResult result;
  std::size_t best_row = 0;
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t j = 0; j < paths[t].size(); ++j) {
      CvRecord rec;
      rec.counts = grid.basis_counts[t];
      rec.n_features = feature_count(full[t].features);
      rec.lambda = paths[t][j];
      for (std::size_t v = 0; v < V; ++v) {
        rec.fold_sse.push_back(sse[t * V + v][j]);
        rec.cv_sse += sse[t * V + v][j];
      }
      result.cv_table.push_back(std::move(rec));
      const CvRecord& cand = result.cv_table.back();
      const CvRecord& best = result.cv_table[best_row];
      const bool better = cand.cv_sse < best.cv_sse ||
                          (cand.cv_sse == best.cv_sse &&
                           (cand.n_features < best.n_features ||
                            (cand.n_features == best.n_features && cand.lambda > best.lambda)));
      if (result.cv_table.size() == 1 || better) best_row = result.cv_table.size() - 1;
    }
  }

  const CvRecord& best = result.cv_table[best_row];
  result.best_counts = best.counts;
  result.best_lambda = best.lambda;
  const std::size_t t = static_cast<std::size_t>(
      std::find(grid.basis_counts.begin(), grid.basis_counts.end(), best.counts) - grid.basis_counts.begin());
  const auto stop = std::find(paths[t].begin(), paths[t].end(), best.lambda);
  const std::vector<double> prefix(paths[t].begin(), stop + 1);
  result.refit = std::move(fit_path(full[t], prefix, phi, options).back());
  attach_window(result.refit, data);
  return result;
}

void write_cv_table(std::ostream& os, const TuningResult& result) {
  if (result.cv_table.empty()) return;
  const std::size_t d = result.cv_table.front().counts.size();
  for (std::size_t j = 0; j < d; ++j) os << 'n' << (j + 1) << ',';
  os << "lambda,fold,sse\n";
  os.precision(17);
  for (const auto& rec : result.cv_table) {
    auto prefix = [&] {
      for (std::size_t c : rec.counts) os << c << ',';
      os << rec.lambda << ',';
    };
    for (std::size_t v = 0; v < rec.fold_sse.size(); ++v) {
      prefix();
      os << (v + 1) << ',' << rec.fold_sse[v] << '\n';
    }
    prefix();
    os << "all," << rec.cv_sse << '\n';
  }
}

}  // namespace msomdr
