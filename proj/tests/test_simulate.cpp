#include "msomdr/simulate.hpp"
#include "msomdr/tuning.hpp"

#include <doctest.h>

#include <cmath>
#include <set>

using namespace msomdr;

namespace {

std::set<std::string> ids_of(const Dataset& d) {
  std::set<std::string> out;
  for (const auto& s : d.subjects) out.insert(s.id);
  return out;
}

double sample_mean(const Eigen::VectorXd& v) { return v.mean(); }

double sample_cov(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return ((a.array() - a.mean()) * (b.array() - b.mean())).sum() / static_cast<double>(a.size() - 1);
}

}  // namespace

TEST_CASE("true surfaces at hand points") {
  CHECK(true_beta(0, 0.0, 0.0) == 0.0);
  CHECK(true_beta(1, 0.0, 0.0) == 0.0);
  CHECK(true_beta(0, 1.0, 1.0) == doctest::Approx(1.0));
  CHECK(true_beta(1, 1.0, 1.0) == doctest::Approx(7.0 / 3.0));
  CHECK(true_beta(0, -2.0, 0.0) == doctest::Approx(2.0));
  CHECK_THROWS_AS(true_beta(2, 0.0, 0.0), std::out_of_range);
}

TEST_CASE("A1 shapes and the noiseless identity") {
  ScenarioConfig cfg;
  cfg.n = 50;
  cfg.m = 7;
  cfg.seed = 3;
  cfg.noise = false;
  const ScenarioA1 sc = gen_scenario_a1(cfg);
  CHECK(sc.data.size() == 50);
  CHECK(sc.data.dims == Dims{2, 2, 2});
  CHECK(sc.test.size() == 10);
  CHECK(sc.train.size() == 40);
  CHECK_NOTHROW(validate(sc.data));
  for (const auto& s : sc.data.subjects) {
    CHECK(s.z.rows() == 7);
    const Eigen::VectorXd sig = sc.truth.signal.at(s.id);
    // empirical average of the true surfaces over this subject's own draws
    for (std::size_t k = 0; k < 2; ++k) {
      double acc = 0.0;
      for (Eigen::Index l = 0; l < s.z.rows(); ++l) acc += true_beta(k, s.z(l, 0), s.z(l, 1));
      CHECK(sig[static_cast<Eigen::Index>(k)] == doctest::Approx(acc / 7.0).epsilon(1e-13));
    }
    const Eigen::VectorXd expected = sc.truth.gamma.transpose() * s.x + sig;
    CHECK((s.y - expected).cwiseAbs().maxCoeff() < 1e-12);
  }
  CHECK(sc.truth.gamma(0, 0) == 1.0);
  CHECK(sc.truth.gamma(1, 0) == 3.0);
  CHECK(sc.truth.gamma(0, 1) == 2.0);
  CHECK(sc.truth.gamma(1, 1) == 4.0);
}

TEST_CASE("A1 moments over many subjects") {
  ScenarioConfig cfg;
  cfg.n = 100000;
  cfg.m = 1;
  cfg.seed = 11;
  const ScenarioA1 sc = gen_scenario_a1(cfg);
  const auto n = static_cast<Eigen::Index>(cfg.n);
  Eigen::VectorXd x1(n), x2(n), mu1(n), mu2(n), c(n), eps(n), dz1(n), dz2(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& s = sc.data.subjects[static_cast<std::size_t>(i)];
    const SubjectLatent& lat = sc.truth.latent.at(s.id);
    x1[i] = s.x[0];
    x2[i] = s.x[1];
    mu1[i] = lat.mu[0];
    mu2[i] = lat.mu[1];
    c[i] = lat.c;
    eps[i] = s.y[0] - sc.truth.gamma.col(0).dot(s.x) - sc.truth.signal.at(s.id)[0];
    dz1[i] = s.z(0, 0) - lat.mu[0];
    dz2[i] = s.z(0, 1) - lat.mu[1];
  }
  const double rn = std::sqrt(static_cast<double>(n));
  CHECK(std::abs(sample_cov(x1, x2) - 0.5) < 3.0 * std::sqrt(1.25) / rn);
  CHECK(std::abs(sample_cov(x1, x1) - 1.0) < 3.0 * std::sqrt(2.0) / rn);
  CHECK(std::abs(sample_mean(mu1)) < 3.0 / rn);
  CHECK(std::abs(sample_cov(mu1, mu2)) < 3.0 / rn);
  CHECK(std::abs(sample_cov(mu2, mu2) - 1.0) < 3.0 * std::sqrt(2.0) / rn);
  CHECK(std::abs(sample_mean(c) - 2.0) < 3.0 * std::sqrt(1.0 / 3.0) / rn);
  CHECK(std::abs(sample_cov(c, c) - 1.0 / 3.0) < 0.01);
  CHECK(c.minCoeff() >= 1.0);
  CHECK(c.maxCoeff() <= 3.0);
  CHECK(std::abs(sample_mean(eps)) < 3.0 / rn);
  CHECK(std::abs(sample_cov(eps, eps) - 1.0) < 3.0 * std::sqrt(2.0) / rn);
  // Z - mu has covariance E[C] Sigma0 = 2 Sigma0.
  CHECK(std::abs(sample_cov(dz1, dz1) - 2.0) < 0.05);
  CHECK(std::abs(sample_cov(dz1, dz2) - 0.6) < 0.04);
}

TEST_CASE("draws for a fixed subject have covariance c Sigma0") {
  std::mt19937_64 rng(5);
  const Eigen::Vector2d mu(1.0, -2.0);
  const Eigen::MatrixXd z = draw_subject_z(mu, 2.5, 200000, rng);
  const Eigen::VectorXd a = z.col(0), b = z.col(1);
  CHECK(std::abs(a.mean() - 1.0) < 0.02);
  CHECK(std::abs(b.mean() + 2.0) < 0.02);
  CHECK(std::abs(sample_cov(a, a) - 2.5) < 0.03);
  CHECK(std::abs(sample_cov(b, b) - 2.5) < 0.03);
  CHECK(std::abs(sample_cov(a, b) - 0.75) < 0.03);
}

TEST_CASE("closed-form surface means") {
  const Eigen::Vector2d mu(0.4, -1.3);
  const double c = 1.7;
  // E[u^2 + v^2] = |mu|^2 + 2c; E[uv] = mu1 mu2 + 0.3 c
  CHECK(analytic_beta_mean(0, mu, c) == doctest::Approx(0.5 * (0.16 + 1.69 + 3.4)));
  CHECK(analytic_beta_mean(1, mu, c) == doctest::Approx((0.4 - 5.2 + 2.0 * (-0.52 + 0.51)) / 3.0));

  std::mt19937_64 rng(6);
  const Eigen::MatrixXd z = draw_subject_z(mu, c, 400000, rng);
  for (std::size_t k = 0; k < 2; ++k) {
    double acc = 0.0;
    for (Eigen::Index l = 0; l < z.rows(); ++l) acc += true_beta(k, z(l, 0), z(l, 1));
    CHECK(std::abs(acc / static_cast<double>(z.rows()) - analytic_beta_mean(k, mu, c)) < 0.02);
  }
}

TEST_CASE("analytic signal option") {
  ScenarioConfig cfg;
  cfg.n = 20;
  cfg.m = 5;
  cfg.analytic_signal = true;
  cfg.noise = false;
  const ScenarioA1 sc = gen_scenario_a1(cfg);
  CHECK(sc.truth.analytic_signal);
  for (const auto& s : sc.data.subjects) {
    const SubjectLatent& lat = sc.truth.latent.at(s.id);
    CHECK(sc.truth.signal.at(s.id)[1] == doctest::Approx(analytic_beta_mean(1, lat.mu, lat.c)));
  }
}

TEST_CASE("A2 partitions the subjects") {
  ScenarioConfig cfg;
  cfg.n = 500;
  cfg.m = 3;
  cfg.seed = 9;
  const ScenarioA2 sc = gen_scenario_a2(cfg);
  CHECK(sc.test.size() == 100);
  CHECK(sc.train1.size() + sc.train2.size() + sc.calibration.size() == 400);
  std::set<std::string> all;
  for (const Dataset* part : {&sc.train1, &sc.train2, &sc.calibration, &sc.test}) {
    for (const auto& id : ids_of(*part)) CHECK(all.insert(id).second);
  }
  CHECK(all.size() == 500);
}

TEST_CASE("generation is a deterministic function of the seed") {
  ScenarioConfig cfg;
  cfg.n = 30;
  cfg.m = 4;
  cfg.seed = 21;
  const ScenarioA1 a = gen_scenario_a1(cfg);
  const ScenarioA1 b = gen_scenario_a1(cfg);
  CHECK(a.data.outcome_matrix() == b.data.outcome_matrix());
  for (std::size_t i = 0; i < a.data.size(); ++i) CHECK(a.data.subjects[i].z == b.data.subjects[i].z);
  CHECK(ids_of(a.test) == ids_of(b.test));
  cfg.seed = 22;
  CHECK(gen_scenario_a1(cfg).data.outcome_matrix() != a.data.outcome_matrix());
}

TEST_CASE("scenario validation") {
  ScenarioConfig cfg;
  cfg.n = 5;
  CHECK_THROWS_AS(gen_scenario_a1(cfg), std::invalid_argument);
  cfg.n = 50;
  cfg.train_fraction = 1.0;
  CHECK_THROWS_AS(gen_scenario_a1(cfg), std::invalid_argument);
}

TEST_CASE("noiseless data: the scalar effects are recovered") {
  ScenarioConfig cfg;
  cfg.n = 300;
  cfg.m = 200;
  cfg.seed = 4;
  cfg.noise = false;
  const ScenarioA1 sc = gen_scenario_a1(cfg);
  const FitResult f = fit_fixed(sc.train, {6, 6}, McpSpec{1e-4, 3.0});
  CHECK((f.gamma - sc.truth.gamma).cwiseAbs().maxCoeff() < 0.05);
}
