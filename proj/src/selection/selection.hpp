#pragma once

#include "learning/learning.hpp"

namespace phaseseg {

// Transition-structure parameter count N^2 + 2N - 1: the softmax weight blocks
// minus one redundant row each, which is what the criterion penalizes.
long long param_count(int n_phases);

// Alternative count that also charges for the per-phase dynamics (A, B and the
// covariance's free triangle).
long long param_count_full(int n_phases, int m, int d);

struct BicResult {
  int n_phases = 0;
  double loglik = 0.0;
  long long n_params = 0;
  long long n_obs = 0;
  double bic = 0.0;
  bool ok = false;
  std::string message;  // failure reason when !ok
};

struct BicSweepResult {
  std::vector<BicResult> results;
  int selected = 0;  // candidate with the lowest BIC; ties go to fewer phases
};

// Fits every candidate order with em_fit, seeding candidate N with
// config.seed + N. Failed fits are recorded and skipped in the selection.
BicSweepResult bic_sweep(const std::vector<Demonstration>& demos, int n_min, int n_max,
                         const EmConfig& config, bool full_count = false,
                         FeatureSource source = FeatureSource::wrench);

}  // namespace phaseseg
