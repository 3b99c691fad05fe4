#pragma once

#include "core/types.hpp"

namespace phaseseg {

// Log density of s_next under phase j's linear-Gaussian dynamics given the
// current state and interaction vector.
double emission_loglik(const HmmModel& model, int j, const Vec& s_t, const Vec& a_t,
                       const Vec& s_next);

// Row-stochastic N x N matrix of softmax transition probabilities at the given
// interaction vector; entry (i, j) is p(phase j | phase i, a_t).
Mat transition_matrix(const TransitionWeights& weights, const Vec& a_t);

Vec initial_distribution(const TransitionWeights& weights, const Vec& a_1);

// Log-space variants shared with the learning module.
Vec log_transition_row(const TransitionWeights& weights, int i, const Vec& a_t);
Vec log_initial_distribution(const TransitionWeights& weights, const Vec& a_1);

// Smoothed posteriors over the phase chain of length T-1 plus the data
// log-likelihood, computed with per-step normalization in log space.
PosteriorMarginals forward_backward(const HmmModel& model, const Demonstration& demo);

struct ForwardState {
  Vec log_alpha;  // normalized so logsumexp(log_alpha) == 0
  int t = 0;      // number of transition steps consumed so far
  int phase_estimate = 0;
};

ForwardState filter_init(const HmmModel& model, const Vec& s_1, const Vec& a_1, const Vec& s_2);

ForwardState filter_step(const ForwardState& state, const HmmModel& model, const Vec& s_t,
                         const Vec& a_t, const Vec& s_next);

// One-step predictions A_j s_t + B_j a_t for every chain position.
std::vector<Vec> predict_states(const HmmModel& model, int j, const Demonstration& demo);

// Mean squared prediction error over aligned sample pairs.
double error_variance(const std::vector<Vec>& predicted, const std::vector<Vec>& actual);

}  // namespace phaseseg
