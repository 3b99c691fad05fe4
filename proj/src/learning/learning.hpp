#pragma once

#include <cstdint>
#include <utility>

#include "core/types.hpp"

namespace phaseseg {

struct EmConfig {
  int max_iters = 100;
  double loglik_tol = 1e-4;
  double lr_lambda = 1e-3;  // logistic gradient step size
  int lr_iters = 50;        // logistic gradient steps per M-step
  double ridge = 1e-8;      // scaled by the mean squared regressor entry
  std::uint64_t seed = 0;
};

struct EmReport {
  std::vector<double> loglik_trace;
  int iterations_run = 0;
  bool converged = false;
};

// Deterministic k-means++ on the interaction vectors, per-cluster least-squares
// dynamics, zero transition weights except a +2 self-bias on the constant slot.
HmmModel kmeans_init(const std::vector<Demonstration>& demos, int n_phases, std::uint64_t seed);

std::vector<PosteriorMarginals> e_step(const HmmModel& model,
                                       const std::vector<Demonstration>& demos);

// Weighted least squares for phase j over all demos. `ridge` is relative: the
// actual Tikhonov term is ridge times the mean squared regressor entry, which
// does not depend on the posteriors.
PhaseDynamics m_step_dynamics(const std::vector<Demonstration>& demos,
                              const std::vector<PosteriorMarginals>& posteriors, int j,
                              double ridge);

// Gradient descent on the expected transition log-likelihood, one weight block
// at a time. Throws Error(numeric) when the loss rises 5 steps in a row.
TransitionWeights m_step_weights(const std::vector<Demonstration>& demos,
                                 const std::vector<PosteriorMarginals>& posteriors,
                                 const TransitionWeights& weights, double lr_lambda,
                                 int lr_iters);

// Analytic gradient of the weighted logistic loss for source phase i; i == -1
// addresses the initial-distribution block w0. Exposed for gradient checks.
Mat weight_gradient(const std::vector<Demonstration>& demos,
                    const std::vector<PosteriorMarginals>& posteriors,
                    const TransitionWeights& weights, int i);

double weight_loss(const std::vector<Demonstration>& demos,
                   const std::vector<PosteriorMarginals>& posteriors,
                   const TransitionWeights& weights, int i);

// Full EM loop. Returns the model with the best observed log-likelihood,
// relabeled by order of first dominance in the first demonstration.
std::pair<HmmModel, EmReport> em_fit(const std::vector<Demonstration>& demos, int n_phases,
                                     const EmConfig& config,
                                     FeatureSource source = FeatureSource::wrench);

// Causal phase labels from the online filter, one per chain position. When
// forward_probs is non-null it receives the (T-1) x N normalized filter
// marginals.
std::vector<int> segment(const HmmModel& model, const Demonstration& demo,
                         Mat* forward_probs = nullptr);

}  // namespace phaseseg
