#include "msomdr/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_map>

namespace msomdr::io {

using nlohmann::json;

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

[[noreturn]] void fail_at(const std::string& file, std::size_t line, const std::string& what) {
  throw DataError(file + ":" + std::to_string(line) + ": " + what);
}

double parse_number(std::string_view field, const std::string& file, std::size_t line) {
  field = trim(field);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size() || field.empty()) {
    fail_at(file, line, "cannot parse number '" + std::string(field) + "'");
  }
  if (!std::isfinite(v)) fail_at(file, line, "non-finite value '" + std::string(field) + "'");
  return v;
}

/// Positions of columns named <prefix>1, <prefix>2, ... in header order.
std::vector<std::size_t> numbered_columns(const std::vector<std::string_view>& header, char prefix,
                                          const std::string& file) {
  std::vector<std::size_t> cols;
  for (std::size_t c = 1; c < header.size(); ++c) {
    const std::string_view name = trim(header[c]);
    if (!name.empty() && name.front() == prefix) {
      const std::string expected = std::string(1, prefix) + std::to_string(cols.size() + 1);
      if (name != expected) fail_at(file, 1, "expected column '" + expected + "', found '" + std::string(name) + "'");
      cols.push_back(c);
    }
  }
  return cols;
}

std::vector<std::string_view> read_header(std::istream& is, std::string& line, const std::string& file) {
  if (!std::getline(is, line)) fail_at(file, 1, "missing header");
  auto header = split_fields(line);
  if (trim(header[0]) != "subject_id") fail_at(file, 1, "first column must be subject_id");
  return header;
}

}  // namespace

Dataset read_dataset(std::istream& covariates, std::istream& draws, bool require_outcomes,
                     const std::string& covariates_name, const std::string& draws_name) {
  Dataset data;
  std::unordered_map<std::string, std::size_t> index;

  std::string header_line;
  const auto cov_header = read_header(covariates, header_line, covariates_name);
  const auto x_cols = numbered_columns(cov_header, 'x', covariates_name);
  const auto y_cols = numbered_columns(cov_header, 'y', covariates_name);
  if (x_cols.size() + y_cols.size() + 1 != cov_header.size()) {
    fail_at(covariates_name, 1, "unexpected columns; header must be subject_id, x1..xq, y1..yK");
  }
  if (require_outcomes && y_cols.empty()) fail_at(covariates_name, 1, "no outcome columns y1..yK");
  data.dims.q = x_cols.size();
  data.dims.K = y_cols.size();

  std::string line;
  std::size_t lineno = 1;
  while (std::getline(covariates, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != cov_header.size()) {
      fail_at(covariates_name, lineno,
              "expected " + std::to_string(cov_header.size()) + " fields, found " + std::to_string(fields.size()));
    }
    SubjectRecord s;
    s.id = std::string(trim(fields[0]));
    if (s.id.empty()) fail_at(covariates_name, lineno, "empty subject_id");
    if (!index.emplace(s.id, data.subjects.size()).second) fail_at(covariates_name, lineno, "duplicate subject_id '" + s.id + "'");
    s.x.resize(static_cast<Eigen::Index>(x_cols.size()));
    for (std::size_t j = 0; j < x_cols.size(); ++j) s.x[static_cast<Eigen::Index>(j)] = parse_number(fields[x_cols[j]], covariates_name, lineno);
    s.y.resize(static_cast<Eigen::Index>(y_cols.size()));
    for (std::size_t k = 0; k < y_cols.size(); ++k) s.y[static_cast<Eigen::Index>(k)] = parse_number(fields[y_cols[k]], covariates_name, lineno);
    data.subjects.push_back(std::move(s));
  }
  if (data.subjects.empty()) fail_at(covariates_name, lineno, "no subjects");

  const auto draw_header = read_header(draws, header_line, draws_name);
  const auto z_cols = numbered_columns(draw_header, 'z', draws_name);
  if (z_cols.empty() || z_cols.size() + 1 != draw_header.size()) {
    fail_at(draws_name, 1, "header must be subject_id, z1..zd");
  }
  const std::size_t d = z_cols.size();
  data.dims.d = d;

  std::vector<std::vector<double>> buffers(data.subjects.size());
  lineno = 1;
  while (std::getline(draws, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != d + 1) {
      fail_at(draws_name, lineno, "expected " + std::to_string(d + 1) + " fields, found " + std::to_string(fields.size()));
    }
    const auto it = index.find(std::string(trim(fields[0])));
    if (it == index.end()) fail_at(draws_name, lineno, "unknown subject_id '" + std::string(trim(fields[0])) + "'");
    auto& buf = buffers[it->second];
    for (std::size_t c = 0; c < d; ++c) buf.push_back(parse_number(fields[c + 1], draws_name, lineno));
  }
  for (std::size_t i = 0; i < data.subjects.size(); ++i) {
    const auto& buf = buffers[i];
    if (buf.empty()) throw DataError(draws_name + ": subject '" + data.subjects[i].id + "' has no draws");
    const auto m = static_cast<Eigen::Index>(buf.size() / d);
    data.subjects[i].z = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        buf.data(), m, static_cast<Eigen::Index>(d));
  }
  validate(data);
  return data;
}

Dataset read_dataset(const std::string& covariates_path, const std::string& draws_path, bool require_outcomes) {
  std::ifstream cov(covariates_path);
  if (!cov) throw DataError("cannot open " + covariates_path);
  std::ifstream dr(draws_path);
  if (!dr) throw DataError("cannot open " + draws_path);
  return read_dataset(cov, dr, require_outcomes, covariates_path, draws_path);
}

void write_covariates(std::ostream& os, const Dataset& data) {
  os << "subject_id";
  for (std::size_t j = 0; j < data.dims.q; ++j) os << ",x" << (j + 1);
  for (std::size_t k = 0; k < data.dims.K; ++k) os << ",y" << (k + 1);
  os << '\n';
  for (const auto& s : data.subjects) {
    os << s.id;
    for (Eigen::Index j = 0; j < s.x.size(); ++j) os << ',' << format_double(s.x[j]);
    for (Eigen::Index k = 0; k < s.y.size(); ++k) os << ',' << format_double(s.y[k]);
    os << '\n';
  }
}

void write_draws(std::ostream& os, const Dataset& data) {
  os << "subject_id";
  for (std::size_t c = 0; c < data.dims.d; ++c) os << ",z" << (c + 1);
  os << '\n';
  for (const auto& s : data.subjects) {
    for (Eigen::Index l = 0; l < s.z.rows(); ++l) {
      os << s.id;
      for (Eigen::Index c = 0; c < s.z.cols(); ++c) os << ',' << format_double(s.z(l, c));
      os << '\n';
    }
  }
}

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot write " + path);
  return os;
}

}  // namespace

void write_dataset(const std::string& prefix, const Dataset& data) {
  auto cov = open_out(prefix + "_covariates.csv");
  write_covariates(cov, data);
  auto dr = open_out(prefix + "_draws.csv");
  write_draws(dr, data);
  if (!cov || !dr) throw DataError("failed writing dataset " + prefix);
}

Dataset read_dataset_prefix(const std::string& prefix, bool require_outcomes) {
  return read_dataset(prefix + "_covariates.csv", prefix + "_draws.csv", require_outcomes);
}

// ---------------------------------------------------------------------------
// Model documents

namespace {

json vec_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json mat_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(vec_json(m.row(r).transpose()));
  return rows;
}

Eigen::VectorXd json_vec(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Eigen::MatrixXd json_mat(const json& j, Eigen::Index cols) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(j.size()), cols);
  for (std::size_t r = 0; r < j.size(); ++r) {
    const Eigen::VectorXd row = json_vec(j[r]);
    if (row.size() != cols) throw DataError("model file: matrix row has wrong length");
    m.row(static_cast<Eigen::Index>(r)) = row.transpose();
  }
  return m;
}

json basis_json(const BSplineBasis& b) {
  return {{"degree", b.degree()}, {"n_basis", b.size()}, {"knots", b.knots()}};
}

BSplineBasis json_basis(const json& j) {
  BSplineBasis b(j.at("knots").get<std::vector<double>>(), j.at("degree").get<int>());
  if (b.size() != j.at("n_basis").get<std::size_t>()) throw DataError("model file: n_basis does not match knot vector");
  return b;
}

json features_json(const FeatureSpec& spec) {
  return std::visit(
      [](const auto& f) -> json {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, TensorBasis>) {
          json bases = json::array();
          for (const auto& b : f.bases) bases.push_back(basis_json(b));
          return {{"type", "tensor"}, {"bases", bases}};
        } else if constexpr (std::is_same_v<T, QuantileFeatureMap>) {
          json bases = json::array();
          for (const auto& b : f.bases()) bases.push_back(basis_json(b));
          return {{"type", "quantile"}, {"levels", f.levels()}, {"bases", bases}};
        } else {
          return {{"type", "mean"}, {"d", f.d}};
        }
      },
      spec);
}

FeatureSpec json_features(const json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "tensor") {
    TensorBasis tb;
    for (const auto& b : j.at("bases")) tb.bases.push_back(json_basis(b));
    return tb;
  }
  if (type == "quantile") {
    std::vector<BSplineBasis> bases;
    for (const auto& b : j.at("bases")) bases.push_back(json_basis(b));
    return QuantileFeatureMap(j.at("levels").get<std::vector<double>>(), std::move(bases));
  }
  if (type == "mean") return MeanFeatureMap{j.at("d").get<std::size_t>()};
  throw DataError("model file: unknown feature type '" + type + "'");
}

json number_or_inf(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double json_number_or_inf(const json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw DataError("model file: bad number '" + s + "'");
  }
  return j.get<double>();
}

std::size_t feature_dim(const FeatureSpec& spec) {
  return std::visit(
      [](const auto& f) -> std::size_t {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, MeanFeatureMap>) {
          return f.d;
        } else {
          return f.dim();
        }
      },
      spec);
}

}  // namespace

json model_to_json(const FitResult& fit, const std::optional<ConformalModel>& conformal) {
  const Standardization& s = fit.scaling;
  json doc;
  doc["format"] = "msomdr-model";
  doc["version"] = kModelVersion;
  doc["dims"] = {{"K", fit.intercept.size()}, {"q", fit.gamma.rows()}, {"d", feature_dim(fit.features)}};
  doc["features"] = features_json(fit.features);
  doc["standardization"] = {{"y_center", vec_json(s.y_center)}, {"x_center", vec_json(s.x_center)},
                            {"x_scale", vec_json(s.x_scale)},   {"w_center", vec_json(s.w_center)},
                            {"w_scale", vec_json(s.w_scale)},   {"x_active", s.x_active},
                            {"w_active", s.w_active}};
  doc["gamma"] = mat_json(fit.gamma);
  doc["intercept"] = vec_json(fit.intercept);
  doc["theta"] = mat_json(fit.theta);
  doc["gamma_std"] = mat_json(fit.gamma_std);
  doc["theta_std"] = mat_json(fit.theta_std);
  doc["mcp"] = {{"lambda", fit.mcp.lambda}, {"phi", fit.mcp.phi}};
  doc["active_groups"] = fit.active_groups;
  doc["objective"] = fit.objective;
  doc["iterations"] = fit.iterations;
  doc["converged"] = fit.converged;
  json window = json::array();
  for (const auto& [lo, hi] : fit.surface_window) window.push_back({lo, hi});
  doc["surface_window"] = window;
  if (conformal) {
    doc["conformal"] = {{"s", vec_json(conformal->s)},
                        {"scores", conformal->scores},
                        {"alpha", conformal->alpha},
                        {"q_hat", number_or_inf(conformal->q_hat)},
                        {"n_cal", conformal->n_cal},
                        {"finite_sample_correction", conformal->finite_sample_correction}};
  }
  return doc;
}

LoadedModel model_from_json(const json& doc) {
  try {
    if (doc.at("format").get<std::string>() != "msomdr-model") throw DataError("not a model document");
    const int version = doc.at("version").get<int>();
    if (version != kModelVersion) throw DataError("unsupported model version " + std::to_string(version));
    const auto K = doc.at("dims").at("K").get<Eigen::Index>();
    const auto q = doc.at("dims").at("q").get<Eigen::Index>();

    LoadedModel out;
    FitResult& f = out.fit;
    f.features = json_features(doc.at("features"));
    const auto p = static_cast<Eigen::Index>(feature_count(f.features));
    const json& s = doc.at("standardization");
    f.scaling.y_center = json_vec(s.at("y_center"));
    f.scaling.x_center = json_vec(s.at("x_center"));
    f.scaling.x_scale = json_vec(s.at("x_scale"));
    f.scaling.w_center = json_vec(s.at("w_center"));
    f.scaling.w_scale = json_vec(s.at("w_scale"));
    f.scaling.x_active = s.at("x_active").get<std::vector<bool>>();
    f.scaling.w_active = s.at("w_active").get<std::vector<bool>>();
    f.gamma = json_mat(doc.at("gamma"), K);
    f.intercept = json_vec(doc.at("intercept"));
    f.theta = json_mat(doc.at("theta"), K);
    f.gamma_std = json_mat(doc.at("gamma_std"), K);
    f.theta_std = json_mat(doc.at("theta_std"), K);
    if (f.gamma.rows() != q || f.theta.rows() != p || f.intercept.size() != K) {
      throw DataError("model file: coefficient shapes do not match dims and features");
    }
    f.mcp = McpSpec{doc.at("mcp").at("lambda").get<double>(), doc.at("mcp").at("phi").get<double>()};
    f.active_groups = doc.at("active_groups").get<std::vector<std::size_t>>();
    f.objective = doc.at("objective").get<double>();
    f.iterations = doc.at("iterations").get<int>();
    f.converged = doc.at("converged").get<bool>();
    for (const auto& w : doc.at("surface_window")) f.surface_window.emplace_back(w.at(0).get<double>(), w.at(1).get<double>());

    if (doc.contains("conformal")) {
      const json& c = doc.at("conformal");
      ConformalModel cm;
      cm.fit = f;
      cm.s = json_vec(c.at("s"));
      cm.scores = c.at("scores").get<std::vector<double>>();
      cm.alpha = c.at("alpha").get<double>();
      cm.q_hat = json_number_or_inf(c.at("q_hat"));
      cm.n_cal = c.at("n_cal").get<std::size_t>();
      cm.finite_sample_correction = c.at("finite_sample_correction").get<bool>();
      out.conformal = std::move(cm);
    }
    if (doc.contains("metadata")) out.extra = doc.at("metadata");
    return out;
  } catch (const json::exception& e) {
    throw DataError(std::string("model file: ") + e.what());
  }
}

void save_model(const std::string& path, const FitResult& fit, const std::optional<ConformalModel>& conformal,
                const json& extra) {
  json doc = model_to_json(fit, conformal);
  if (!extra.empty()) doc["metadata"] = extra;
  auto os = open_out(path);
  os << doc.dump(1) << '\n';
  if (!os) throw DataError("failed writing " + path);
}

LoadedModel load_model(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open model file " + path);
  json doc;
  try {
    doc = json::parse(is);
  } catch (const json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
  return model_from_json(doc);
}

json truth_to_json(const GroundTruth& truth, const std::string& scenario) {
  json signal = json::object();
  for (const auto& [id, v] : truth.signal) signal[id] = vec_json(v);
  return {{"scenario", scenario},
          {"gamma", mat_json(truth.gamma)},
          {"analytic_signal", truth.analytic_signal},
          {"signal", signal}};
}

void write_regions(std::ostream& os, const std::vector<std::string>& ids, const std::vector<PredictionRegion>& regions) {
  const Eigen::Index K = regions.empty() ? 0 : regions.front().center.size();
  os << "subject_id";
  for (Eigen::Index k = 1; k <= K; ++k) os << ",center_" << k << ",lo_" << k << ",hi_" << k;
  os << '\n';
  for (std::size_t i = 0; i < regions.size(); ++i) {
    os << ids[i];
    const auto lo = regions[i].lower();
    const auto hi = regions[i].upper();
    for (Eigen::Index k = 0; k < K; ++k) {
      os << ',' << format_double(regions[i].center[k]) << ',' << format_double(lo[k]) << ',' << format_double(hi[k]);
    }
    os << '\n';
  }
}

void write_predictions(std::ostream& os, const std::vector<std::string>& ids, const Eigen::MatrixXd& predictions) {
  os << "subject_id";
  for (Eigen::Index k = 1; k <= predictions.cols(); ++k) os << ",yhat" << k;
  os << '\n';
  for (Eigen::Index i = 0; i < predictions.rows(); ++i) {
    os << ids[static_cast<std::size_t>(i)];
    for (Eigen::Index k = 0; k < predictions.cols(); ++k) os << ',' << format_double(predictions(i, k));
    os << '\n';
  }
}

json report_to_json(const EvalReport& report) {
  json preds = json::array();
  for (std::size_t i = 0; i < report.ids.size(); ++i) {
    preds.push_back({{"subject_id", report.ids[i]}, {"yhat", vec_json(report.predictions.row(static_cast<Eigen::Index>(i)).transpose())}});
  }
  json doc = {{"r2", vec_json(report.r2)}, {"predictions", preds}};
  if (report.surface_l2) doc["surface_l2"] = vec_json(*report.surface_l2);
  if (report.coverage) doc["coverage"] = *report.coverage;
  return doc;
}

}  // namespace msomdr::io
