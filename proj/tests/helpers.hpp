#pragma once

// Shared test utilities: random model/demo builders, a brute-force
// forward-backward reference that enumerates phase paths directly from the
// density definitions, and a synthetic three-regime recovery setup.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "core/types.hpp"
#include "inference/inference.hpp"

namespace testutil {

using phaseseg::Demonstration;
using phaseseg::HmmModel;
using phaseseg::Mat;
using phaseseg::PhaseDynamics;
using phaseseg::TrajectoryPoint;
using phaseseg::TransitionWeights;
using phaseseg::Vec;

inline Vec randn_vec(std::mt19937_64& rng, int n, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, 1.0);
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = scale * g(rng);
  return v;
}

inline Mat randn_mat(std::mt19937_64& rng, int r, int c, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, 1.0);
  Mat m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = scale * g(rng);
  return m;
}

inline HmmModel random_model(std::mt19937_64& rng, int N, int m, int dw) {
  const int d = dw + 1;
  std::vector<PhaseDynamics> dyn(static_cast<size_t>(N));
  for (int j = 0; j < N; ++j) {
    dyn[j].A = randn_mat(rng, m, m, 0.4 / m);
    dyn[j].B = randn_mat(rng, m, d, 0.4);
    Mat M = randn_mat(rng, m, m, 1.0);
    dyn[j].Sigma = M * M.transpose() / m + 0.05 * Mat::Identity(m, m);
  }
  TransitionWeights w = phaseseg::zero_weights(N, d);
  w.w0 = randn_mat(rng, N, d, 1.0);
  for (int i = 0; i < N; ++i) w.w[i] = randn_mat(rng, N, d, 1.0);
  return phaseseg::make_model(N, m, d, std::move(dyn), std::move(w));
}

inline Demonstration random_demo(std::mt19937_64& rng, int m, int dw, int T, double dt = 0.1) {
  Demonstration demo;
  demo.dt = dt;
  demo.label = "random";
  for (int t = 0; t < T; ++t) {
    TrajectoryPoint p;
    p.t = t * dt;
    p.s = randn_vec(rng, m);
    p.a_raw = randn_vec(rng, dw);
    demo.points.push_back(std::move(p));
  }
  return demo;
}

inline int sample_categorical(std::mt19937_64& rng, const Vec& probs) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double r = u(rng);
  for (int i = 0; i < probs.size(); ++i) {
    r -= probs[i];
    if (r <= 0.0) return i;
  }
  return static_cast<int>(probs.size()) - 1;
}

// Draws a state trajectory and phase path from the model given a raw wrench
// stream (one wrench per sample; the last one is carried but unused).
inline Demonstration sample_from_model(std::mt19937_64& rng, const HmmModel& model,
                                       const std::vector<Vec>& wrench_stream, const Vec& s0,
                                       double dt, std::vector<int>* path_out = nullptr) {
  const int T = static_cast<int>(wrench_stream.size());
  Demonstration demo;
  demo.dt = dt;
  demo.label = "sampled";
  std::vector<Eigen::LLT<Mat>> chol;
  for (const auto& dyn : model.dynamics) chol.emplace_back(dyn.Sigma);

  demo.points.resize(static_cast<size_t>(T));
  demo.points[0].t = 0.0;
  demo.points[0].s = s0;
  demo.points[0].a_raw = wrench_stream[0];
  int phase = 0;
  if (path_out) path_out->clear();
  for (int t = 0; t + 1 < T; ++t) {
    const Vec iv = phaseseg::feature(wrench_stream[t]);
    if (t == 0)
      phase = sample_categorical(rng, phaseseg::initial_distribution(model.weights, iv));
    else
      phase = sample_categorical(
          rng, phaseseg::transition_matrix(model.weights, iv).row(phase).transpose());
    if (path_out) path_out->push_back(phase);
    const auto& dyn = model.dynamics[static_cast<size_t>(phase)];
    Vec noise = chol[static_cast<size_t>(phase)].matrixL() * randn_vec(rng, model.m);
    demo.points[t + 1].t = (t + 1) * dt;
    demo.points[t + 1].s = dyn.A * demo.points[t].s + dyn.B * iv + noise;
    demo.points[t + 1].a_raw = wrench_stream[t + 1];
  }
  return demo;
}

struct BruteForceResult {
  Mat gamma;
  std::vector<Mat> zeta;
  double loglik = 0.0;
};

// Path enumeration straight from the factored joint density. Gaussian terms
// use explicit inverse and determinant, softmax terms plain exponentials, so
// nothing is shared with the production implementation.
inline BruteForceResult brute_force_posteriors(const HmmModel& model, const Demonstration& demo) {
  const int T = demo.length();
  const int Tr = T - 1;
  const int N = model.n_phases;

  std::vector<Vec> iv(static_cast<size_t>(Tr));
  for (int t = 0; t < Tr; ++t) iv[t] = phaseseg::feature(demo.points[t].a_raw);

  auto gauss = [&](int j, int t) {
    const auto& dyn = model.dynamics[static_cast<size_t>(j)];
    Vec r = demo.points[t + 1].s - dyn.A * demo.points[t].s - dyn.B * iv[t];
    const double quad = r.dot(dyn.Sigma.inverse() * r);
    const double det = dyn.Sigma.determinant();
    return std::pow(2.0 * M_PI, -0.5 * model.m) / std::sqrt(det) * std::exp(-0.5 * quad);
  };
  auto softmax_at = [&](const Mat& block, const Vec& a) {
    Vec e = (block * a).array().exp();
    return Vec(e / e.sum());
  };

  BruteForceResult out;
  out.gamma = Mat::Zero(Tr, N);
  out.zeta.assign(static_cast<size_t>(std::max(0, Tr - 1)), Mat::Zero(N, N));

  long paths = 1;
  for (int t = 0; t < Tr; ++t) paths *= N;
  double total = 0.0;
  std::vector<int> path(static_cast<size_t>(Tr));
  for (long code = 0; code < paths; ++code) {
    long rest = code;
    for (int t = 0; t < Tr; ++t) {
      path[t] = static_cast<int>(rest % N);
      rest /= N;
    }
    double p = softmax_at(model.weights.w0, iv[0])[path[0]] * gauss(path[0], 0);
    for (int t = 1; t < Tr; ++t) {
      p *= softmax_at(model.weights.w[static_cast<size_t>(path[t - 1])], iv[t])[path[t]];
      p *= gauss(path[t], t);
    }
    total += p;
    for (int t = 0; t < Tr; ++t) out.gamma(t, path[t]) += p;
    for (int t = 0; t + 1 < Tr; ++t) out.zeta[t](path[t], path[t + 1]) += p;
  }
  out.gamma /= total;
  for (auto& z : out.zeta) z /= total;
  out.loglik = std::log(total);
  return out;
}

// Best label permutation accuracy; labels must lie in [0, n_labels).
inline double permuted_accuracy(const std::vector<std::vector<int>>& pred,
                                const std::vector<std::vector<int>>& truth, int n_labels) {
  std::vector<int> perm(static_cast<size_t>(n_labels));
  std::iota(perm.begin(), perm.end(), 0);
  long best = -1, total = 0;
  do {
    long correct = 0;
    total = 0;
    for (size_t d = 0; d < pred.size(); ++d)
      for (size_t t = 0; t < pred[d].size(); ++t) {
        if (perm[pred[d][t]] == truth[d][t]) ++correct;
        ++total;
      }
    best = std::max(best, correct);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return static_cast<double>(best) / static_cast<double>(total);
}

struct RecoverySetup {
  HmmModel model;
  std::vector<Demonstration> demos;
  std::vector<std::vector<int>> truth;  // sampled phase per chain position
};

// Three sticky phases driven by three separable wrench regimes; the ground
// truth is the sampled phase path, which tracks the regime schedule closely.
inline RecoverySetup make_recovery_setup(std::mt19937_64& rng, int n_demos, int block_len) {
  const int m = 2, dw = 2, d = 3, N = 3;
  std::vector<PhaseDynamics> dyn(3);
  dyn[0].A = (Mat(2, 2) << 0.9, 0.0, 0.0, 0.85).finished();
  dyn[0].B = (Mat(2, 3) << 0.02, 0.0, 0.01, 0.0, 0.02, -0.01).finished();
  dyn[1].A = (Mat(2, 2) << 0.7, 0.1, 0.0, 0.8).finished();
  dyn[1].B = (Mat(2, 3) << 0.05, 0.01, 0.03, 0.01, 0.04, 0.02).finished();
  dyn[2].A = (Mat(2, 2) << 0.95, -0.05, 0.05, 0.9).finished();
  dyn[2].B = (Mat(2, 3) << -0.03, 0.02, 0.02, 0.02, -0.05, 0.01).finished();
  for (auto& dj : dyn) dj.Sigma = 1e-6 * Mat::Identity(2, 2);

  TransitionWeights w = phaseseg::zero_weights(N, d);
  w.w0.row(0) << 0.0, 0.0, 1.0;
  w.w0.row(1) << 0.6, 0.0, -2.0;
  w.w0.row(2) << 0.0, 0.6, -2.0;
  for (int i = 0; i < N; ++i) {
    w.w[i].row(0) << -0.4, -0.4, 0.0;
    w.w[i].row(1) << 1.0, 0.0, -3.0;
    w.w[i].row(2) << 0.0, 1.0, -3.0;
    w.w[i].row(i).setZero();
    w.w[i](i, d - 1) = 3.0;  // sticky self weight
  }

  RecoverySetup setup;
  setup.model = phaseseg::make_model(N, m, d, std::move(dyn), std::move(w));

  const Vec means[3] = {(Vec(2) << 0.0, 0.0).finished(), (Vec(2) << 8.0, 0.0).finished(),
                        (Vec(2) << 0.0, 8.0).finished()};
  for (int di = 0; di < n_demos; ++di) {
    std::vector<Vec> wrench;
    const int T = 3 * block_len + 1;
    for (int t = 0; t < T; ++t) {
      const int regime = std::min(2, t / block_len);
      wrench.push_back(means[regime] + randn_vec(rng, dw, 0.5));
    }
    std::vector<int> path;
    setup.demos.push_back(
        sample_from_model(rng, setup.model, wrench, randn_vec(rng, m, 0.1), 0.05, &path));
    setup.truth.push_back(std::move(path));
  }
  return setup;
}

}  // namespace testutil
