#include "msomdr/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>
#include <tuple>

namespace msomdr {

namespace {

const Eigen::Matrix2d& x_cov_chol() {
  static const Eigen::Matrix2d L = [] {
    Eigen::Matrix2d s;
    s << 1.0, 0.5, 0.5, 1.0;
    return Eigen::Matrix2d(s.llt().matrixL());
  }();
  return L;
}

const Eigen::Matrix2d& z_cov_chol() {
  static const Eigen::Matrix2d L = [] {
    Eigen::Matrix2d s;
    s << 1.0, 0.3, 0.3, 1.0;
    return Eigen::Matrix2d(s.llt().matrixL());
  }();
  return L;
}

std::string subject_id(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "s%06zu", i + 1);
  return buf;
}

std::uint64_t derived_seed(std::uint64_t seed, std::uint64_t tag) {
  std::mt19937_64 rng = subject_rng(seed, ~tag);
  return rng();
}

}  // namespace

void validate(const ScenarioConfig& cfg) {
  if (cfg.n < 10) throw std::invalid_argument("scenario needs n >= 10");
  if (cfg.m < 1) throw std::invalid_argument("scenario needs m >= 1");
  if (!(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0)) throw std::invalid_argument("train_fraction must lie in (0, 1)");
}

double true_beta(std::size_t k, double u, double v) {
  switch (k) {
    case 0:
      return 0.5 * (u * u + v * v);
    case 1:
      return (u + 4.0 * v + 2.0 * u * v) / 3.0;
    default:
      throw std::out_of_range("scenario outcome index must be 0 or 1");
  }
}

double analytic_beta_mean(std::size_t k, const Eigen::Vector2d& mu, double c) {
  switch (k) {
    case 0:
      return 0.5 * (mu.squaredNorm() + 2.0 * c);
    case 1:
      return (mu[0] + 4.0 * mu[1] + 2.0 * (mu[0] * mu[1] + 0.3 * c)) / 3.0;
    default:
      throw std::out_of_range("scenario outcome index must be 0 or 1");
  }
}

std::mt19937_64 subject_rng(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

Eigen::MatrixXd draw_subject_z(const Eigen::Vector2d& mu, double c, std::size_t m, std::mt19937_64& rng) {
  std::normal_distribution<double> norm(0.0, 1.0);
  const Eigen::Matrix2d L = std::sqrt(c) * z_cov_chol();
  Eigen::MatrixXd z(static_cast<Eigen::Index>(m), 2);
  for (Eigen::Index l = 0; l < z.rows(); ++l) {
    Eigen::Vector2d e;
    e[0] = norm(rng);
    e[1] = norm(rng);
    z.row(l) = (mu + L * e).transpose();
  }
  return z;
}

ScenarioA1 gen_scenario_a1(const ScenarioConfig& cfg) {
  validate(cfg);
  Eigen::MatrixXd gamma(2, 2);
  gamma << 1.0, 2.0, 3.0, 4.0;  // column k holds gamma_k
  if (cfg.zero_gamma) gamma.setZero();

  std::vector<SubjectRecord> subjects(cfg.n);
  std::vector<SubjectLatent> latent(cfg.n);
  std::vector<Eigen::VectorXd> signal(cfg.n);

#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(cfg.n); ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    std::mt19937_64 rng = subject_rng(cfg.seed, i);
    std::normal_distribution<double> norm(0.0, 1.0);
    std::uniform_real_distribution<double> unif(1.0, 3.0);

    Eigen::Vector2d e;
    e[0] = norm(rng);
    e[1] = norm(rng);
    const Eigen::Vector2d x = x_cov_chol() * e;
    Eigen::Vector2d mu;
    mu[0] = norm(rng);
    mu[1] = norm(rng);
    const double c = unif(rng);
    Eigen::MatrixXd z = draw_subject_z(mu, c, cfg.m, rng);

    Eigen::VectorXd sig(2);
    for (std::size_t k = 0; k < 2; ++k) {
      if (cfg.analytic_signal) {
        sig[static_cast<Eigen::Index>(k)] = analytic_beta_mean(k, mu, c);
      } else {
        double acc = 0.0;
        for (Eigen::Index l = 0; l < z.rows(); ++l) acc += true_beta(k, z(l, 0), z(l, 1));
        sig[static_cast<Eigen::Index>(k)] = acc / static_cast<double>(z.rows());
      }
    }
    Eigen::VectorXd y = gamma.transpose() * x + sig;
    if (cfg.noise) {
      for (Eigen::Index k = 0; k < 2; ++k) y[k] += norm(rng);
    }

    subjects[i] = SubjectRecord{subject_id(i), std::move(y), x, std::move(z)};
    latent[i] = SubjectLatent{mu, c};
    signal[i] = std::move(sig);
  }

  ScenarioA1 out;
  out.data.dims = Dims{2, 2, 2};
  out.data.subjects = std::move(subjects);
  out.truth.gamma = gamma;
  out.truth.analytic_signal = cfg.analytic_signal;
  for (std::size_t i = 0; i < cfg.n; ++i) {
    out.truth.signal.emplace(out.data.subjects[i].id, std::move(signal[i]));
    out.truth.latent.emplace(out.data.subjects[i].id, latent[i]);
  }
  std::tie(out.train, out.test) = train_test_split(out.data, cfg.train_fraction, derived_seed(cfg.seed, 1));
  return out;
}

std::pair<Dataset, Dataset> train_test_split(const Dataset& data, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw std::invalid_argument("train_fraction must lie in (0, 1)");
  std::vector<std::size_t> perm(data.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  const auto n_test = static_cast<std::size_t>(std::llround(static_cast<double>(data.size()) * (1.0 - train_fraction)));
  std::vector<std::size_t> test(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_test));
  std::vector<std::size_t> train(perm.begin() + static_cast<std::ptrdiff_t>(n_test), perm.end());
  std::sort(test.begin(), test.end());
  std::sort(train.begin(), train.end());
  return {data.subset(train), data.subset(test)};
}

ScenarioA2 gen_scenario_a2(const ScenarioConfig& cfg) {
  ScenarioA1 base = gen_scenario_a1(cfg);
  auto parts = split(base.train, SplitPlan{{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}, derived_seed(cfg.seed, 2)});
  ScenarioA2 out;
  out.train1 = std::move(parts[0]);
  out.train2 = std::move(parts[1]);
  out.calibration = std::move(parts[2]);
  out.test = std::move(base.test);
  out.truth = std::move(base.truth);
  return out;
}

}  // namespace msomdr
