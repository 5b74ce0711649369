#pragma once

#include "msomdr/conformal.hpp"
#include "msomdr/core.hpp"
#include "msomdr/metrics.hpp"
#include "msomdr/simulate.hpp"
#include "msomdr/solver.hpp"

#include <json.hpp>

#include <iosfwd>
#include <optional>
#include <string>

namespace msomdr::io {

// Two-file long format:
//   covariates.csv  subject_id,x1..xq,y1..yK   (one row per subject)
//   draws.csv       subject_id,z1..zd          (one row per draw)
// Errors are DataError messages of the form "<file>:<line>: <problem>".

/// Reads both files. When `require_outcomes` is false the y columns may be
/// absent (prediction inputs); K is then 0.
Dataset read_dataset(const std::string& covariates_path, const std::string& draws_path, bool require_outcomes = true);
Dataset read_dataset(std::istream& covariates, std::istream& draws, bool require_outcomes = true,
                     const std::string& covariates_name = "covariates.csv", const std::string& draws_name = "draws.csv");

void write_covariates(std::ostream& os, const Dataset& data);
void write_draws(std::ostream& os, const Dataset& data);
/// Writes <prefix>_covariates.csv and <prefix>_draws.csv.
void write_dataset(const std::string& prefix, const Dataset& data);
Dataset read_dataset_prefix(const std::string& prefix, bool require_outcomes = true);

inline constexpr int kModelVersion = 1;

/// Versioned JSON model document. Non-finite q_hat is stored as the string "inf".
nlohmann::json model_to_json(const FitResult& fit, const std::optional<ConformalModel>& conformal = std::nullopt);

struct LoadedModel {
  FitResult fit;
  std::optional<ConformalModel> conformal;
  nlohmann::json extra;  // free-form metadata (selection, method)
};

LoadedModel model_from_json(const nlohmann::json& doc);

void save_model(const std::string& path, const FitResult& fit, const std::optional<ConformalModel>& conformal = std::nullopt,
                const nlohmann::json& extra = nlohmann::json::object());
LoadedModel load_model(const std::string& path);

/// Ground-truth sidecar written next to simulated data.
nlohmann::json truth_to_json(const GroundTruth& truth, const std::string& scenario);

/// subject_id, then center_k, lo_k, hi_k per outcome; infinite bounds as inf / -inf.
void write_regions(std::ostream& os, const std::vector<std::string>& ids, const std::vector<PredictionRegion>& regions);

/// subject_id,yhat1..yhatK
void write_predictions(std::ostream& os, const std::vector<std::string>& ids, const Eigen::MatrixXd& predictions);

nlohmann::json report_to_json(const EvalReport& report);

/// Decimal text that round-trips (17 significant digits), with inf / -inf / nan spelled out.
std::string format_double(double v);

}  // namespace msomdr::io
