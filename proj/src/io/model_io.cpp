#include "io/model_io.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "common/error.hpp"

namespace phaseseg {

namespace {

using Json = nlohmann::ordered_json;

Json mat_to_json(const Mat& m) {
  Json rows = Json::array();
  for (int i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Mat mat_from_json(const Json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) fail(ErrorCode::io, what + ": expected a nested array");
  const int rows = static_cast<int>(j.size());
  const int cols = static_cast<int>(j[0].size());
  Mat m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    if (!j[i].is_array() || static_cast<int>(j[i].size()) != cols)
      fail(ErrorCode::io, what + ": ragged rows");
    for (int k = 0; k < cols; ++k) {
      if (!j[i][k].is_number()) fail(ErrorCode::io, what + ": non-numeric entry");
      m(i, k) = j[i][k].get<double>();
    }
  }
  return m;
}

HmmModel model_from_parsed(const Json& j) {
  if (!j.contains("format_version") || !j["format_version"].is_number_integer() ||
      j["format_version"].get<int>() != 1)
    fail(ErrorCode::io, "unsupported model format version");
  for (const char* key : {"n_phases", "state_dim", "feature_dim", "dynamics", "weights"})
    if (!j.contains(key)) fail(ErrorCode::io, std::string("model JSON missing '") + key + "'");
  if (j.contains("feature_fn") && j["feature_fn"].get<std::string>() != "identity")
    fail(ErrorCode::io, "unsupported feature_fn");

  const int N = j["n_phases"].get<int>();
  const int m = j["state_dim"].get<int>();
  const int d = j["feature_dim"].get<int>();
  FeatureSource source = FeatureSource::wrench;
  if (j.contains("feature_source")) {
    const std::string s = j["feature_source"].get<std::string>();
    if (s == "state")
      source = FeatureSource::state;
    else if (s != "wrench")
      fail(ErrorCode::io, "unsupported feature_source '" + s + "'");
  }

  if (!j["dynamics"].is_array() || static_cast<int>(j["dynamics"].size()) != N)
    fail(ErrorCode::io, "dynamics array must have n_phases entries");
  std::vector<PhaseDynamics> dynamics;
  for (int i = 0; i < N; ++i) {
    const auto& entry = j["dynamics"][i];
    const std::string tag = "dynamics[" + std::to_string(i) + "]";
    for (const char* key : {"A", "B", "Sigma"})
      if (!entry.contains(key)) fail(ErrorCode::io, tag + " is missing '" + key + "'");
    PhaseDynamics dyn;
    dyn.A = mat_from_json(entry["A"], tag + ".A");
    dyn.B = mat_from_json(entry["B"], tag + ".B");
    dyn.Sigma = mat_from_json(entry["Sigma"], tag + ".Sigma");
    dynamics.push_back(std::move(dyn));
  }
  if (!j["weights"].contains("w0"))
    fail(ErrorCode::io, "model JSON missing 'weights.w0'");
  TransitionWeights weights;
  weights.w0 = mat_from_json(j["weights"]["w0"], "weights.w0");
  if (!j["weights"].contains("w") || !j["weights"]["w"].is_array() ||
      static_cast<int>(j["weights"]["w"].size()) != N)
    fail(ErrorCode::io, "weights.w must have n_phases entries");
  for (int i = 0; i < N; ++i)
    weights.w.push_back(
        mat_from_json(j["weights"]["w"][i], "weights.w[" + std::to_string(i) + "]"));

  try {
    return make_model(N, m, d, std::move(dynamics), std::move(weights), source);
  } catch (const Error& e) {
    fail(ErrorCode::io, std::string("model JSON invalid: ") + e.what());
  }
}

}  // namespace

std::string model_to_json(const HmmModel& model) {
  validate_model(model);
  Json j;
  j["format_version"] = 1;
  j["n_phases"] = model.n_phases;
  j["state_dim"] = model.m;
  j["feature_dim"] = model.d;
  j["feature_fn"] = "identity";
  j["feature_source"] = model.feature_source == FeatureSource::wrench ? "wrench" : "state";
  Json dynamics = Json::array();
  for (const auto& dyn : model.dynamics) {
    Json entry;
    entry["A"] = mat_to_json(dyn.A);
    entry["B"] = mat_to_json(dyn.B);
    entry["Sigma"] = mat_to_json(dyn.Sigma);
    dynamics.push_back(std::move(entry));
  }
  j["dynamics"] = std::move(dynamics);
  Json weights;
  weights["w0"] = mat_to_json(model.weights.w0);
  Json w = Json::array();
  for (const auto& wi : model.weights.w) w.push_back(mat_to_json(wi));
  weights["w"] = std::move(w);
  j["weights"] = std::move(weights);
  return j.dump(2) + "\n";
}

HmmModel model_from_json(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::io, std::string("model JSON parse error: ") + e.what());
  }
  if (!j.is_object()) fail(ErrorCode::io, "model JSON must be an object");
  try {
    return model_from_parsed(j);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::io, std::string("model JSON invalid: ") + e.what());
  }
}

void save_model(const HmmModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::io, "cannot open " + path + " for writing");
  out << model_to_json(model);
  if (!out) fail(ErrorCode::io, "write failed for " + path);
}

HmmModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return model_from_json(text);
}

}  // namespace phaseseg
