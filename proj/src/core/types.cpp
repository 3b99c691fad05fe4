#include "core/types.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <sstream>

#include "common/error.hpp"

namespace phaseseg {

Vec feature(const Vec& a_raw) {
  if (!a_raw.allFinite()) fail(ErrorCode::validation, "feature: non-finite wrench value");
  Vec out(a_raw.size() + 1);
  out.head(a_raw.size()) = a_raw;
  out[a_raw.size()] = 1.0;
  return out;
}

Vec interaction(const Demonstration& demo, int t) {
  return feature(demo.points.at(static_cast<size_t>(t)).a_raw);
}

std::vector<std::string> validate_demo(const Demonstration& demo) {
  std::vector<std::string> out;
  const int T = demo.length();
  if (T < 2) {
    out.push_back("too short: " + std::to_string(T) + " samples, need at least 2");
    return out;
  }
  if (!(demo.dt > 0.0)) out.push_back("sample period dt must be positive");
  const int m = demo.state_dim();
  const int dw = demo.wrench_dim();
  if (m < 1) out.push_back("state dimension must be at least 1");
  if (dw < 1) out.push_back("wrench dimension must be at least 1");
  for (int i = 0; i < T; ++i) {
    const TrajectoryPoint& p = demo.points[i];
    if (static_cast<int>(p.s.size()) != m)
      out.push_back("state dimension changes at index " + std::to_string(i));
    if (static_cast<int>(p.a_raw.size()) != dw)
      out.push_back("wrench dimension changes at index " + std::to_string(i));
    if (!p.s.allFinite() || !p.a_raw.allFinite() || !std::isfinite(p.t))
      out.push_back("non-finite value at index " + std::to_string(i));
  }
  if (demo.dt > 0.0) {
    for (int i = 1; i < T; ++i) {
      const double step = demo.points[i].t - demo.points[i - 1].t;
      if (!(step > 0.0)) {
        out.push_back("timestamps not strictly increasing at index " + std::to_string(i));
      } else if (std::abs(step - demo.dt) > 0.1 * demo.dt) {
        std::ostringstream os;
        os << "sample spacing " << step << " outside dt +/- 10% at index " << i;
        out.push_back(os.str());
      }
    }
  }
  if (!demo.regime_labels.empty() && static_cast<int>(demo.regime_labels.size()) != T)
    out.push_back("regime label count does not match sample count");
  return out;
}

TransitionWeights zero_weights(int n_phases, int feature_dim) {
  TransitionWeights w;
  w.w0 = Mat::Zero(n_phases, feature_dim);
  w.w.assign(static_cast<size_t>(n_phases), Mat::Zero(n_phases, feature_dim));
  return w;
}

void validate_model(const HmmModel& model) {
  const int N = model.n_phases;
  if (N < 1) fail(ErrorCode::invalid_argument, "model needs at least one phase");
  if (model.m < 1 || model.d < 1) fail(ErrorCode::invalid_argument, "model dimensions must be positive");
  if (static_cast<int>(model.dynamics.size()) != N)
    fail(ErrorCode::invalid_argument, "dynamics count does not match n_phases");
  for (int j = 0; j < N; ++j) {
    const PhaseDynamics& dyn = model.dynamics[j];
    const std::string tag = "phase " + std::to_string(j);
    if (dyn.A.rows() != model.m || dyn.A.cols() != model.m)
      fail(ErrorCode::invalid_argument, tag + ": A must be m x m");
    if (dyn.B.rows() != model.m || dyn.B.cols() != model.d)
      fail(ErrorCode::invalid_argument, tag + ": B must be m x d");
    if (dyn.Sigma.rows() != model.m || dyn.Sigma.cols() != model.m)
      fail(ErrorCode::invalid_argument, tag + ": Sigma must be m x m");
    if (!dyn.A.allFinite() || !dyn.B.allFinite() || !dyn.Sigma.allFinite())
      fail(ErrorCode::invalid_argument, tag + ": non-finite dynamics parameter");
    const double scale = std::max(1.0, dyn.Sigma.cwiseAbs().maxCoeff());
    if ((dyn.Sigma - dyn.Sigma.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale)
      fail(ErrorCode::invalid_argument, tag + ": Sigma is not symmetric");
    Eigen::SelfAdjointEigenSolver<Mat> es(dyn.Sigma);
    if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() < 0.999999 * kSigmaFloor)
      fail(ErrorCode::invalid_argument, tag + ": Sigma eigenvalues below the floor");
  }
  if (model.weights.n_phases() != N || model.weights.feature_dim() != model.d)
    fail(ErrorCode::invalid_argument, "initial weight matrix must be N x d");
  if (static_cast<int>(model.weights.w.size()) != N)
    fail(ErrorCode::invalid_argument, "transition weight count does not match n_phases");
  if (!model.weights.w0.allFinite())
    fail(ErrorCode::invalid_argument, "non-finite initial weights");
  for (int i = 0; i < N; ++i) {
    if (model.weights.w[i].rows() != N || model.weights.w[i].cols() != model.d)
      fail(ErrorCode::invalid_argument, "transition weights for phase " + std::to_string(i) +
                                            " must be N x d");
    if (!model.weights.w[i].allFinite())
      fail(ErrorCode::invalid_argument, "non-finite transition weights for phase " + std::to_string(i));
  }
}

HmmModel make_model(int n_phases, int m, int d, std::vector<PhaseDynamics> dynamics,
                    TransitionWeights weights, FeatureSource source) {
  HmmModel model;
  model.n_phases = n_phases;
  model.m = m;
  model.d = d;
  model.dynamics = std::move(dynamics);
  model.weights = std::move(weights);
  model.feature_source = source;
  validate_model(model);
  return model;
}

Demonstration to_state_feature_demo(const Demonstration& demo) {
  if (demo.points.empty()) fail(ErrorCode::invalid_argument, "empty demonstration");
  Demonstration out = demo;
  const Vec goal = demo.points.back().s;
  for (auto& p : out.points) p.a_raw = p.s - goal;
  return out;
}

}  // namespace phaseseg
