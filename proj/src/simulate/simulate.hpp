#pragma once

#include <cstdint>

#include "learning/learning.hpp"
#include "simulate/world.hpp"

namespace phaseseg {

struct ScriptSegment {
  Vec v_dir;        // direction of setpoint motion, normalized at use
  double speed = 0.0;
  double duration = 0.0;  // seconds
};

// Runs a scripted kinesthetic demonstration through the quasi-static plant and
// records noisy samples plus ground-truth regime labels.
Demonstration generate_demo(const ContactWorld& world, const Vec& start,
                            const std::vector<ScriptSegment>& script, double dt,
                            std::uint64_t seed, const std::string& label);

// One impedance primitive per phase: normalized posterior-weighted mean
// displacement direction, posterior-weighted mean speed, default stiffness and
// damping. Phases with posterior mass below 10 samples come back flagged
// low_confidence.
std::vector<PhasePrimitive> extract_primitives(const HmmModel& model,
                                               const std::vector<Demonstration>& demos,
                                               const std::vector<PosteriorMarginals>& posteriors,
                                               double k_trans = 500.0, double k_rot = 10.0);

struct TraceStep {
  double t = 0.0;
  Vec x_star;
  Vec x;
  Vec wrench;
  int phase = 0;      // filtered phase estimate after this step's measurement
  int primitive = 0;  // primitive that produced this step
};

struct ReproductionTrace {
  std::vector<TraceStep> steps;
};

// Executes the primitives in closed loop with the online phase filter, ending
// once the final phase estimate persists for dwell_s or max_steps is hit.
ReproductionTrace reproduce(const HmmModel& model, const std::vector<PhasePrimitive>& primitives,
                            const ContactWorld& world, const Vec& start, double dt,
                            int max_steps, double dwell_s = 0.5, std::uint64_t seed = 0);

struct FeatureModeReport {
  double accuracy = 0.0;  // best-permutation per-sample agreement with ground truth
  int switches = 0;       // filtered label changes summed over demos
  int spurious = 0;       // switches beyond the ground-truth count
};

struct CompareReport {
  FeatureModeReport wrench;
  FeatureModeReport state;
  int true_switches = 0;
  int n_demos = 0;
};

// Fits one model on wrench features and one on goal-relative state features
// with identical settings, then scores both against the recorded regimes.
CompareReport compare_feature_modes(const std::vector<Demonstration>& demos, int n_phases,
                                    const EmConfig& config);

}  // namespace phaseseg
