#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace phaseseg {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Eigenvalue floor applied to every covariance estimate (squared state units).
inline constexpr double kSigmaFloor = 1e-9;

struct TrajectoryPoint {
  double t = 0.0;  // seconds
  Vec s;           // state: position [m] plus optional rotation-vector part [rad]
  Vec a_raw;       // measured wrench: force [N] plus optional torque [N*m]
};

struct Demonstration {
  std::vector<TrajectoryPoint> points;
  double dt = 0.0;  // nominal sample period [s]
  std::string label;
  // Ground-truth contact regimes from the generator, 0-based, one per sample.
  // Empty for recorded data without annotation.
  std::vector<int> regime_labels;

  int length() const { return static_cast<int>(points.size()); }
  int state_dim() const { return points.empty() ? 0 : static_cast<int>(points.front().s.size()); }
  int wrench_dim() const {
    return points.empty() ? 0 : static_cast<int>(points.front().a_raw.size());
  }
};

// [a_raw; 1]: the raw wrench with the constant bias slot appended.
Vec feature(const Vec& a_raw);

// Interaction vector of sample t, i.e. feature(points[t].a_raw).
Vec interaction(const Demonstration& demo, int t);

// Returns a list of human-readable violations; empty means the demo is usable.
std::vector<std::string> validate_demo(const Demonstration& demo);

struct PhaseDynamics {
  Mat A;      // m x m
  Mat B;      // m x d
  Mat Sigma;  // m x m, symmetric with eigenvalues >= kSigmaFloor
};

struct TransitionWeights {
  Mat w0;              // N x d logits for the initial phase
  std::vector<Mat> w;  // N entries, each N x d; w[i].row(j) scores the move i -> j

  int n_phases() const { return static_cast<int>(w0.rows()); }
  int feature_dim() const { return static_cast<int>(w0.cols()); }
};

TransitionWeights zero_weights(int n_phases, int feature_dim);

enum class FeatureFn { identity };

// What the interaction channel carries: the measured wrench, or the state
// relative to the demo's final sample (the position-based baseline).
enum class FeatureSource { wrench, state };

struct HmmModel {
  int n_phases = 0;
  int m = 0;  // state dimension
  int d = 0;  // interaction feature dimension (wrench dim + 1)
  std::vector<PhaseDynamics> dynamics;
  TransitionWeights weights;
  FeatureFn feature_fn = FeatureFn::identity;
  FeatureSource feature_source = FeatureSource::wrench;
};

// Throws Error(invalid_argument) on any dimensional inconsistency, non-finite
// parameter, or a Sigma below the eigenvalue floor.
void validate_model(const HmmModel& model);

HmmModel make_model(int n_phases, int m, int d, std::vector<PhaseDynamics> dynamics,
                    TransitionWeights weights,
                    FeatureSource source = FeatureSource::wrench);

struct PosteriorMarginals {
  Mat gamma;              // (T-1) x N, rows sum to 1
  std::vector<Mat> zeta;  // T-2 slices, each N x N summing to 1
  double loglik = 0.0;
};

// Copy of the demo whose wrench channel is replaced by s_t minus the final
// state, so the usual machinery runs on position features instead.
Demonstration to_state_feature_demo(const Demonstration& demo);

}  // namespace phaseseg
