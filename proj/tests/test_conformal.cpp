#include "msomdr/conformal.hpp"
#include "msomdr/scoring.hpp"
#include "msomdr/tuning.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

using namespace msomdr;
using msomdr::testing::random_dataset;
using msomdr::testing::random_matrix;

namespace {

// Predicts the constant c for every subject.
FitResult constant_fit(const Eigen::VectorXd& c, std::size_t q, std::size_t d) {
  FitResult f;
  f.features = MeanFeatureMap{d};
  f.gamma = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(q), c.size());
  f.theta = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d), c.size());
  f.intercept = c;
  return f;
}

std::vector<double> tenths(int n) {
  std::vector<double> s;
  for (int i = 1; i <= n; ++i) s.push_back(i / 10.0);
  return s;
}

}  // namespace

TEST_CASE("conformal rank and quantile") {
  CHECK(conformal_rank(19, 0.05) == 19);
  CHECK(conformal_rank(19, 0.1) == 18);
  CHECK(conformal_rank(19, 0.04) == 20);
  CHECK(conformal_rank(19, 0.1, false) == 18);
  CHECK(conformal_rank(100, 0.05, false) == 95);
  CHECK(conformal_rank(99, 0.05) == 95);

  const auto s = tenths(19);
  CHECK(conformal_quantile(s, 0.05) == doctest::Approx(1.9));
  CHECK(std::isinf(conformal_quantile(s, 0.04)));
  CHECK(conformal_quantile(s, 0.04, false) == doctest::Approx(1.9));
  CHECK_THROWS_AS(conformal_quantile(std::vector<double>{}, 0.1), DataError);
  CHECK_THROWS_AS(conformal_rank(10, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(conformal_rank(10, 1.0), std::invalid_argument);
}

TEST_CASE("the radius is nonincreasing in alpha") {
  std::mt19937_64 rng(1);
  std::exponential_distribution<double> E(1.0);
  std::vector<double> s(37);
  for (double& v : s) v = E(rng);
  std::sort(s.begin(), s.end());
  double previous = std::numeric_limits<double>::infinity();
  for (double alpha = 0.01; alpha < 0.99; alpha += 0.01) {
    const double q = conformal_quantile(s, alpha);
    CHECK(q <= previous);
    previous = q;
  }
}

TEST_CASE("modulation scales and scores by hand") {
  Eigen::MatrixXd abs_r(3, 2);
  abs_r << 1, 2, 2, 2, 3, 5;
  const Eigen::VectorXd s = modulation_scales(abs_r);
  CHECK(s[0] == doctest::Approx(1.0));
  CHECK(s[1] == doctest::Approx(std::sqrt(3.0)));

  Eigen::MatrixXd r(2, 2);
  r << 1.0, -2.0, 0.1, 0.2;
  const auto scores = nonconformity_scores(r, Eigen::Vector2d(0.5, 1.0));
  CHECK(scores[0] == doctest::Approx(2.0));
  CHECK(scores[1] == doctest::Approx(0.2));

  Eigen::MatrixXd flat(4, 2);
  flat << 1, 1, 2, 1, 3, 1, 4, 1;
  CHECK_THROWS_AS(modulation_scales(flat), NumericalError);
  CHECK_THROWS_AS(modulation_scales(Eigen::MatrixXd::Ones(1, 2)), DataError);
}

TEST_CASE("regions are closed boxes") {
  PredictionRegion region{Eigen::Vector2d(1.0, 2.0), Eigen::Vector2d(0.5, 1.0)};
  CHECK(region.lower() == Eigen::Vector2d(0.5, 1.0));
  CHECK(region.upper() == Eigen::Vector2d(1.5, 3.0));
  CHECK(contains(region, Eigen::Vector2d(0.5, 3.0)));
  CHECK(contains(region, Eigen::Vector2d(1.5, 1.0)));
  CHECK_FALSE(contains(region, Eigen::Vector2d(1.5 + 1e-12, 2.0)));
  CHECK_FALSE(contains(region, Eigen::Vector2d(1.0, 0.9)));
  CHECK_THROWS_AS(contains(region, Eigen::Vector3d(1, 2, 3)), DataError);
}

TEST_CASE("a box built from the radius, s and the fitted center") {
  const Dataset d = random_dataset(30, 2, 1, 1, 3, 2);
  ConformalModel cm;
  cm.fit = constant_fit(Eigen::Vector2d(1.0, 2.0), 1, 1);
  cm.s = Eigen::Vector2d(0.5, 1.0);
  cm.q_hat = 1.0;
  const PredictionRegion region = predict_region(cm, d.subjects[0].x, d.subjects[0].z);
  CHECK(region.lower() == Eigen::Vector2d(0.5, 1.0));
  CHECK(region.upper() == Eigen::Vector2d(1.5, 3.0));
}

TEST_CASE("an infinite radius covers everything") {
  const Dataset d = random_dataset(19, 2, 0, 1, 2, 3);
  const Dataset test = random_dataset(40, 2, 0, 1, 2, 4);
  const ConformalModel cm = calibrate(constant_fit(Eigen::Vector2d::Zero(), 0, 1), d, d, 0.04);
  CHECK(std::isinf(cm.q_hat));
  CHECK(empirical_coverage(cm, test) == 1.0);
}

TEST_CASE("calibration uses fitted residuals from the two held-out sets") {
  const Dataset train = random_dataset(60, 2, 1, 2, 10, 5);
  const Dataset train2 = random_dataset(40, 2, 1, 2, 10, 6);
  const Dataset cal = random_dataset(39, 2, 1, 2, 10, 7);
  const FitResult f = fit_fixed(train, {4, 4}, McpSpec{0.05, 3.0});
  const ConformalModel cm = calibrate(f, train2, cal, 0.1);

  const Eigen::MatrixXd r2 = train2.outcome_matrix() - predict(f, train2);
  const Eigen::VectorXd s = modulation_scales(r2.cwiseAbs());
  CHECK((cm.s - s).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(cm.n_cal == 39);
  CHECK(std::is_sorted(cm.scores.begin(), cm.scores.end()));
  CHECK(cm.q_hat == cm.scores[35]);  // rank ceil(40 * 0.9) = 36

  const auto& subject = cal.subjects[0];
  const PredictionRegion region = predict_region(cm, subject.x, subject.z);
  CHECK((region.center - predict(f, subject.x, subject.z)).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((region.half_width - cm.s * cm.q_hat).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("radius invariances") {
  std::mt19937_64 rng(8);
  const Eigen::MatrixXd r2 = random_matrix(30, 3, rng);
  const Eigen::MatrixXd rc = random_matrix(25, 3, rng);
  const FitResult f = constant_fit(Eigen::Vector3d::Zero(), 0, 1);
  const ConformalModel base = calibrate_residuals(f, r2, rc, 0.1);

  SUBCASE("rescaling one outcome leaves the scores unchanged") {
    Eigen::MatrixXd r2s = r2, rcs = rc;
    r2s.col(1) *= 7.5;
    rcs.col(1) *= 7.5;
    const ConformalModel scaled = calibrate_residuals(f, r2s, rcs, 0.1);
    CHECK(scaled.q_hat == doctest::Approx(base.q_hat).epsilon(1e-12));
    CHECK(scaled.s[1] == doctest::Approx(7.5 * base.s[1]).epsilon(1e-12));
  }
  SUBCASE("calibration order does not matter") {
    Eigen::MatrixXd rcp = rc.colwise().reverse();
    rcp.row(0).swap(rcp.row(10));
    CHECK(calibrate_residuals(f, r2, rcp, 0.1).q_hat == base.q_hat);
  }
}

TEST_CASE("finite-sample coverage of the constant predictor") {
  // Exchangeable Gaussian outcomes; the predictor ignores the inputs.
  const double alpha = 0.1;
  const int reps = 500;
  std::vector<double> coverage;
  for (int rep = 0; rep < reps; ++rep) {
    const auto seed = static_cast<std::uint64_t>(1000 + 3 * rep);
    const Dataset train2 = random_dataset(50, 2, 0, 1, 1, seed);
    const Dataset cal = random_dataset(50, 2, 0, 1, 1, seed + 1);
    const Dataset test = random_dataset(100, 2, 0, 1, 1, seed + 2);
    const ConformalModel cm = calibrate(constant_fit(Eigen::Vector2d(0.1, -0.1), 0, 1), train2, cal, alpha);
    coverage.push_back(empirical_coverage(cm, test));
  }
  double mean = 0.0;
  for (double c : coverage) mean += c;
  mean /= reps;
  double var = 0.0;
  for (double c : coverage) var += (c - mean) * (c - mean);
  const double se = std::sqrt(var / (reps - 1) / reps);
  CHECK(mean >= 1.0 - alpha - 2.0 * se);
  CHECK(mean <= 1.0 - alpha + 1.0 / 51.0 + 2.0 * se);
}
