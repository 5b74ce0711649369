#include "msomdr/design.hpp"
#include "msomdr/solver.hpp"
#include "msomdr/tensor_basis.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

using namespace msomdr;
using msomdr::testing::random_dataset;
using msomdr::testing::random_matrix;

namespace {

// Brute-force minimizer of 0.5 (t - a)^2 + MCP(|t|) on the real line.
double grid_minimizer(double a, const McpSpec& spec) {
  auto f = [&](double t) { return 0.5 * (t - a) * (t - a) + mcp_penalty(std::abs(t), spec); };
  const double span = std::abs(a) + 1.0;
  double best = 0.0, best_value = f(0.0);
  double step = 1e-4;
  for (double t = -span; t <= span; t += step) {
    if (f(t) < best_value) best_value = f(t), best = t;
  }
  const double centre = best;
  step = 1e-8;
  for (double t = centre - 2e-4; t <= centre + 2e-4; t += step) {
    if (f(t) < best_value) best_value = f(t), best = t;
  }
  return best;
}

// Generic (not row-sum-one) design with an intercept, as on a raw scale.
struct RawProblem {
  Eigen::MatrixXd Y, X, W;
};

RawProblem random_problem(Eigen::Index n, Eigen::Index K, Eigen::Index q, Eigen::Index p, std::mt19937_64& rng) {
  RawProblem r;
  r.X = random_matrix(n, q, rng);
  r.W = random_matrix(n, p, rng);
  Eigen::MatrixXd coef = random_matrix(q + p, K, rng);
  Eigen::MatrixXd A(n, q + p);
  A << r.X, r.W;
  r.Y = A * coef + 0.5 * random_matrix(n, K, rng);
  r.Y.rowwise() += Eigen::RowVectorXd::LinSpaced(K, 1.0, 2.0);
  return r;
}

// Normal equations on [1 X W]: rows 0, 1..q, q+1..q+p of the solution.
Eigen::MatrixXd ols_oracle(const RawProblem& r) {
  const Eigen::Index n = r.Y.rows();
  Eigen::MatrixXd A(n, 1 + r.X.cols() + r.W.cols());
  A << Eigen::VectorXd::Ones(n), r.X, r.W;
  const Eigen::MatrixXd AtA = A.transpose() * A;
  return AtA.llt().solve(A.transpose() * r.Y);
}

double relative_error(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) { return (a - b).norm() / b.norm(); }

DesignBlocks tensor_design(std::size_t n, std::uint64_t seed, std::size_t K = 2, std::size_t q = 2) {
  Dataset data = random_dataset(n, K, q, 2, 30, seed);
  // Make the outcomes depend on the draws so that the path is non-trivial.
  for (auto& s : data.subjects) {
    const double signal = s.z.col(0).array().square().mean() - s.z.col(1).mean();
    for (Eigen::Index k = 0; k < s.y.size(); ++k) s.y[k] = 0.3 * s.y[k] + (k + 1.0) * signal + 0.5 * s.x.sum();
  }
  return build_design(data, make_tensor_basis(data, std::vector<std::size_t>{5, 5}));
}

double kkt_bound(const DesignBlocks& b, const SolverOptions& o) {
  return o.tol * std::sqrt(static_cast<double>(b.K())) * static_cast<double>(b.q() + b.n_groups()) + 1e-10;
}

}  // namespace

TEST_CASE("MCP penalty values") {
  const McpSpec s{1.0, 3.0};
  CHECK(mcp_penalty(0.0, s) == 0.0);
  CHECK(mcp_penalty(2.0, s) == doctest::Approx(4.0 / 3.0));
  CHECK(mcp_penalty(3.0, s) == doctest::Approx(1.5));
  CHECK(mcp_penalty(10.0, s) == doctest::Approx(1.5));
  CHECK(std::abs(mcp_penalty(3.0 - 1e-9, s) - mcp_penalty(3.0 + 1e-9, s)) < 1e-8);
  CHECK_THROWS_AS(mcp_penalty(-1e-3, s), std::invalid_argument);
  CHECK_THROWS_AS(validate(McpSpec{-1.0, 3.0}), std::invalid_argument);
  CHECK_THROWS_AS(validate(McpSpec{1.0, 1.0}), std::invalid_argument);
}

TEST_CASE("group firm threshold") {
  const McpSpec s{1.0, 3.0};
  const Eigen::VectorXd out = group_firm_threshold(Eigen::Vector2d(2.0, 0.0), s);
  CHECK(out[0] == doctest::Approx(1.5));
  CHECK(out[1] == 0.0);
  CHECK(group_firm_threshold(Eigen::Vector2d(0.6, 0.8), s).isZero(0.0));
  CHECK(group_firm_threshold(Eigen::Vector2d(3.0, 4.0), s) == Eigen::Vector2d(3.0, 4.0));

  SUBCASE("matches a brute-force minimizer") {
    for (double phi : {1.5, 3.0, 8.0}) {
      for (double a : {-5.0, -2.1, -0.99, 0.0, 0.4, 1.01, 1.7, 2.9, 3.2, 12.0}) {
        const McpSpec spec{1.0, phi};
        const double closed = group_firm_threshold(Eigen::VectorXd::Constant(1, a), spec)[0];
        CHECK(std::abs(closed - grid_minimizer(a, spec)) < 1e-6);
      }
    }
  }
  SUBCASE("acts on the norm and keeps the direction") {
    std::mt19937_64 rng(1);
    for (int i = 0; i < 50; ++i) {
      const Eigen::VectorXd z = 2.0 * random_matrix(3, 1, rng);
      const McpSpec spec{1.0, 2.5};
      const Eigen::VectorXd t = group_firm_threshold(z, spec);
      const double expected = std::abs(group_firm_threshold(Eigen::VectorXd::Constant(1, z.norm()), spec)[0]);
      CHECK(std::abs(t.norm() - expected) < 1e-12);
      if (t.norm() > 0.0) CHECK((t / t.norm() - z / z.norm()).norm() < 1e-12);
    }
  }
}

TEST_CASE("lambda = 0 reproduces ordinary least squares") {
  std::mt19937_64 rng(2);
  SolverOptions tight;
  tight.tol = 1e-12;
  tight.max_iter = 100000;
  for (int rep = 0; rep < 20; ++rep) {
    const RawProblem r = random_problem(60, 2, 2, 5, rng);
    const DesignBlocks b = standardize(r.Y, r.X, r.W);
    const FitResult f = fit(b, McpSpec{0.0, 3.0}, tight);
    REQUIRE(f.converged);
    const Eigen::MatrixXd oracle = ols_oracle(r);
    Eigen::MatrixXd got(1 + 2 + 5, 2);
    got << f.intercept.transpose(), f.gamma, f.theta;
    CHECK(relative_error(got, oracle) < 1e-6);
  }
}

TEST_CASE("orthonormal design: the fit is the firm threshold of the least-squares groups") {
  std::mt19937_64 rng(3);
  const Eigen::Index n = 50, p = 4;
  Eigen::MatrixXd M(n, p + 1);
  M << Eigen::VectorXd::Ones(n), random_matrix(n, p, rng);
  const Eigen::MatrixXd Q = Eigen::HouseholderQR<Eigen::MatrixXd>(M).householderQ() * Eigen::MatrixXd::Identity(n, p + 1);
  const Eigen::MatrixXd W = Q.rightCols(p) * std::sqrt(static_cast<double>(n));
  Eigen::MatrixXd coef(p, 2);
  coef << 3.0, 0.5, 0.3, -0.2, 1.2, 1.1, 0.0, 0.1;
  const Eigen::MatrixXd Y = W * coef + 0.2 * random_matrix(n, 2, rng);
  const DesignBlocks b = standardize(Y, Eigen::MatrixXd(n, 0), W);

  const McpSpec spec{0.8, 3.0};
  const FitResult f = fit(b, spec);
  CHECK(f.converged);
  const Eigen::MatrixXd ls = b.W.transpose() * b.Y / static_cast<double>(n);
  for (Eigen::Index l = 0; l < p; ++l) {
    const Eigen::VectorXd expected = group_firm_threshold(ls.row(l).transpose(), spec);
    CHECK((f.theta_std.row(l).transpose() - expected).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("converged fits satisfy the stationarity conditions along a path") {
  const DesignBlocks b = tensor_design(120, 4);
  const SolverOptions opts;
  const auto path = lambda_path(b, 20, 1e-2);
  Coefficients held;
  const Coefficients* warm = nullptr;
  for (double lambda : path) {
    const FitResult f = fit(b, McpSpec{lambda, 3.0}, opts, warm);
    if (f.converged) CHECK(kkt_violation(b, f) <= kkt_bound(b, opts));
    held = f.standardized();
    warm = &held;
  }
}

TEST_CASE("stationarity on random designs") {
  std::mt19937_64 rng(5);
  const SolverOptions opts;
  for (int rep = 0; rep < 10; ++rep) {
    const RawProblem r = random_problem(80, 3, 1, 12, rng);
    const DesignBlocks b = standardize(r.Y, r.X, r.W);
    for (double ratio : {0.9, 0.5, 0.2, 0.05}) {
      const FitResult f = fit(b, McpSpec{ratio * lambda_path(b, 2, 0.5)[0], 2.0}, opts);
      REQUIRE(f.converged);
      CHECK(kkt_violation(b, f) <= kkt_bound(b, opts));
    }
  }
}

TEST_CASE("objective never increases across descent cycles") {
  SolverOptions opts;
  opts.record_trace = true;
  for (std::uint64_t seed : {6u, 7u}) {
    const DesignBlocks b = tensor_design(100, seed);
    for (double lambda : lambda_path(b, 8, 1e-3)) {
      const FitResult f = fit(b, McpSpec{lambda, 3.0}, opts);
      REQUIRE(static_cast<int>(f.objective_trace.size()) == f.iterations);
      const double start = objective(b, f.mcp, Eigen::MatrixXd::Zero(b.q(), b.K()), Eigen::MatrixXd::Zero(b.n_groups(), b.K()));
      CHECK(f.objective_trace.front() <= start + 1e-10);
      for (std::size_t i = 1; i < f.objective_trace.size(); ++i) {
        CHECK(f.objective_trace[i] <= f.objective_trace[i - 1] + 1e-10);
      }
    }
  }
}

TEST_CASE("a warm start at the solution returns it") {
  const DesignBlocks b = tensor_design(100, 8);
  const double lambda = lambda_path(b, 10, 1e-2)[4];
  const SolverOptions opts;
  const FitResult cold = fit(b, McpSpec{lambda, 3.0}, opts);
  REQUIRE(cold.converged);
  const Coefficients start = cold.standardized();
  const FitResult warm = fit(b, McpSpec{lambda, 3.0}, opts, &start);
  CHECK(warm.converged);
  CHECK((warm.theta_std - cold.theta_std).cwiseAbs().maxCoeff() < opts.tol);
  CHECK((warm.gamma_std - cold.gamma_std).cwiseAbs().maxCoeff() < opts.tol);
}

TEST_CASE("lambda_max zeroes every group and the path is log-spaced") {
  const DesignBlocks b = tensor_design(90, 9);
  const auto path = lambda_path(b, 5, 1e-2);
  REQUIRE(path.size() == 5);
  CHECK(path.back() == doctest::Approx(path.front() * 1e-2));
  for (std::size_t j = 1; j < path.size(); ++j) CHECK(path[j] / path[j - 1] == doctest::Approx(std::pow(1e-2, 0.25)));

  const FitResult at_max = fit(b, McpSpec{path.front(), 3.0});
  CHECK(at_max.theta_std.isZero(0.0));
  CHECK(at_max.active_groups.empty());
  const FitResult below = fit(b, McpSpec{path.front() * 0.95, 3.0});
  CHECK(!below.active_groups.empty());

  CHECK_THROWS_AS(lambda_path(b, 1, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(lambda_path(b, 5, 1.0), std::invalid_argument);
}

TEST_CASE("lambda_max on a hand design") {
  Eigen::MatrixXd W(4, 2), Y(4, 2);
  W << 1, 1, -1, 1, 1, -1, -1, -1;
  Y << 1, 0, 0, 0, 0, 2, 0, 0;
  const DesignBlocks b = standardize(Y, Eigen::MatrixXd(4, 0), W);
  // W^T Yc / n has rows (1/4, 1/2) and (1/4, -1/2).
  CHECK(lambda_path(b, 2, 0.5)[0] == doctest::Approx(std::sqrt(5.0) / 4.0).epsilon(1e-14));
}

TEST_CASE("a perfectly explained outcome gives the degenerate path") {
  std::mt19937_64 rng(10);
  const Eigen::MatrixXd X = random_matrix(30, 2, rng);
  const Eigen::MatrixXd W = random_matrix(30, 3, rng);
  const Eigen::MatrixXd Y = X * Eigen::Vector2d(1.0, -2.0);
  const auto path = lambda_path(standardize(Y, X, W), 10, 0.1);
  REQUIRE(path.size() == 1);
  CHECK(std::abs(path[0]) < 1e-12);
}

TEST_CASE("a huge lambda leaves the covariate least-squares fit") {
  std::mt19937_64 rng(11);
  const RawProblem r = random_problem(70, 2, 3, 6, rng);
  const DesignBlocks b = standardize(r.Y, r.X, r.W);
  const FitResult f = fit(b, McpSpec{1e6, 3.0});
  CHECK(f.theta.isZero(0.0));
  RawProblem covariates_only{r.Y, r.X, Eigen::MatrixXd(70, 0)};
  const Eigen::MatrixXd oracle = ols_oracle(covariates_only);
  Eigen::MatrixXd got(4, 2);
  got << f.intercept.transpose(), f.gamma;
  CHECK(relative_error(got, oracle) < 1e-9);
}

TEST_CASE("reported objective and active set are exact functions of the coefficients") {
  const DesignBlocks b = tensor_design(110, 12);
  for (double lambda : lambda_path(b, 6, 1e-2)) {
    const FitResult f = fit(b, McpSpec{lambda, 3.0});
    const double recomputed = objective(b, f.mcp, f.gamma_std, f.theta_std);
    CHECK(std::abs(f.objective - recomputed) <= 1e-8 * std::max(1.0, std::abs(recomputed)));
    std::vector<std::size_t> nonzero;
    for (Eigen::Index l = 0; l < f.theta_std.rows(); ++l) {
      if (f.theta_std.row(l).norm() > 0.0) nonzero.push_back(static_cast<std::size_t>(l));
    }
    CHECK(f.active_groups == nonzero);
  }
}

TEST_CASE("folded intercept: raw predictions equal standardized predictions") {
  const DesignBlocks b = tensor_design(80, 13);
  REQUIRE(b.fold_intercept);
  const FitResult f = fit(b, McpSpec{lambda_path(b, 10, 1e-2)[5], 3.0});
  CHECK(f.intercept.isZero(0.0));
  const Eigen::MatrixXd raw_w = destandardized_w(b);
  Eigen::MatrixXd X_raw = b.X;
  for (Eigen::Index j = 0; j < b.q(); ++j) X_raw.col(j) = b.X.col(j) * b.scaling.x_scale[j] + Eigen::VectorXd::Constant(b.n(), b.scaling.x_center[j]);
  Eigen::MatrixXd raw_pred = raw_w * f.theta + X_raw * f.gamma;
  raw_pred.rowwise() += f.intercept.transpose();
  Eigen::MatrixXd std_pred = b.X * f.gamma_std + b.W * f.theta_std;
  std_pred.rowwise() += b.scaling.y_center.transpose();
  CHECK((raw_pred - std_pred).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("inactive feature columns keep zero coefficients") {
  std::mt19937_64 rng(14);
  RawProblem r = random_problem(40, 2, 1, 4, rng);
  r.W.col(2).setConstant(0.7);
  const DesignBlocks b = standardize(r.Y, r.X, r.W);
  CHECK_FALSE(b.scaling.w_active[2]);
  const FitResult f = fit(b, McpSpec{0.0, 3.0});
  CHECK(f.theta.row(2).isZero(0.0));
}

TEST_CASE("solver failure modes") {
  std::mt19937_64 rng(15);
  const RawProblem r = random_problem(30, 2, 2, 3, rng);

  SUBCASE("exhausted iterations are reported, not thrown") {
    const DesignBlocks b = tensor_design(100, 16);
    SolverOptions one;
    one.max_iter = 1;
    const FitResult f = fit(b, McpSpec{lambda_path(b, 10, 1e-3).back(), 3.0}, one);
    CHECK_FALSE(f.converged);
    CHECK(f.iterations == 1);
  }
  SUBCASE("non-finite data") {
    DesignBlocks b = standardize(r.Y, r.X, r.W);
    b.Y(3, 1) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(fit(b, McpSpec{0.1, 3.0}), NumericalError);
  }
  SUBCASE("collinear covariates") {
    Eigen::MatrixXd X(30, 2);
    X << r.X.col(0), 2.0 * r.X.col(0);
    CHECK_THROWS_AS(fit(standardize(r.Y, X, r.W), McpSpec{0.1, 3.0}), NumericalError);
  }
  SUBCASE("bad options") {
    const DesignBlocks b = standardize(r.Y, r.X, r.W);
    SolverOptions bad;
    bad.tol = 0.0;
    CHECK_THROWS_AS(fit(b, McpSpec{0.1, 3.0}, bad), std::invalid_argument);
    CHECK_THROWS_AS(fit(b, McpSpec{0.1, 0.5}), std::invalid_argument);
    Coefficients wrong{Eigen::MatrixXd::Zero(1, 2), Eigen::MatrixXd::Zero(3, 2)};
    CHECK_THROWS_AS(fit(b, McpSpec{0.1, 3.0}, {}, &wrong), std::invalid_argument);
  }
}
