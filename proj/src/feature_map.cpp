#include "msomdr/feature_map.hpp"

#include <exception>

namespace msomdr {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

std::size_t feature_count(const FeatureSpec& spec) {
  return std::visit(overloaded{[](const TensorBasis& tb) { return tb.n0(); },
                               [](const auto& m) { return m.size(); }},
                    spec);
}

bool rows_sum_to_one(const FeatureSpec& spec) { return std::holds_alternative<TensorBasis>(spec); }

Eigen::VectorXd raw_features(const FeatureSpec& spec, const Eigen::MatrixXd& z) {
  return std::visit(overloaded{[&](const TensorBasis& tb) { return subject_features(tb, z); },
                               [&](const auto& m) { return m.features(z); }},
                    spec);
}

Eigen::MatrixXd feature_matrix(const FeatureSpec& spec, const Dataset& data) {
  const auto n = static_cast<Eigen::Index>(data.size());
  Eigen::MatrixXd W(n, static_cast<Eigen::Index>(feature_count(spec)));
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic, 8)
  for (Eigen::Index i = 0; i < n; ++i) {
    try {
      W.row(i) = raw_features(spec, data.subjects[static_cast<std::size_t>(i)].z).transpose();
    } catch (...) {
#pragma omp critical(msomdr_feature_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return W;
}

Eigen::MatrixXd feature_matrix_serial(const FeatureSpec& spec, const Dataset& data) {
  const auto n = static_cast<Eigen::Index>(data.size());
  Eigen::MatrixXd W(n, static_cast<Eigen::Index>(feature_count(spec)));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& z = data.subjects[static_cast<std::size_t>(i)].z;
    if (const auto* tb = std::get_if<TensorBasis>(&spec)) {
      W.row(i) = subject_features_reference(*tb, z).transpose();
    } else {
      W.row(i) = raw_features(spec, z).transpose();
    }
  }
  return W;
}

}  // namespace msomdr
