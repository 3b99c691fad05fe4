#include "simulate/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "common/error.hpp"
#include "common/log.hpp"
#include "common/numeric.hpp"
#include "inference/inference.hpp"

namespace phaseseg {

namespace {

// Pose error behaves like sensor drift, not white jitter: consecutive samples
// share most of their offset. Modeled as an OU walk whose stationary standard
// deviation is the world's noise_pos and whose correlation time is fixed.
constexpr double kPoseDriftCorrTime = 0.3;  // [s]

class PoseDrift {
 public:
  PoseDrift(int dim, double sigma, double dt, std::mt19937_64& rng,
            std::normal_distribution<double>& gauss)
      : sigma_(sigma),
        alpha_(std::exp(-dt / kPoseDriftCorrTime)),
        renew_(std::sqrt(1.0 - std::exp(-2.0 * dt / kPoseDriftCorrTime))),
        drift_(Vec::Zero(dim)),
        rng_(rng),
        gauss_(gauss) {
    for (int i = 0; i < dim; ++i) drift_[i] = sigma_ * gauss_(rng_);
  }

  // Measurement at the current drift state; advances the walk by one step.
  Vec measure(const Vec& x) {
    Vec out = x + drift_;
    for (int i = 0; i < drift_.size(); ++i)
      drift_[i] = alpha_ * drift_[i] + renew_ * sigma_ * gauss_(rng_);
    return out;
  }

 private:
  double sigma_;
  double alpha_;
  double renew_;
  Vec drift_;
  std::mt19937_64& rng_;
  std::normal_distribution<double>& gauss_;
};

// A guiding hand never jumps between speeds, so the commanded velocity ramps
// linearly across segment boundaries. Each ramp is centered on its boundary,
// which leaves every segment's total displacement untouched.
constexpr double kBlendHalfWidth = 0.05;  // [s]

struct ProfilePiece {
  double t0 = 0.0;
  double t1 = 0.0;
  Vec v0;  // velocity at t0 [units/s]
  Vec v1;  // velocity at t1
};

std::vector<ProfilePiece> blended_profile(const std::vector<ScriptSegment>& script) {
  const size_t K = script.size();
  std::vector<double> ends(K);
  std::vector<Vec> u(K);
  double t = 0.0;
  for (size_t i = 0; i < K; ++i) {
    t += script[i].duration;
    ends[i] = t;
    u[i] = script[i].v_dir.normalized() * script[i].speed;
  }
  std::vector<ProfilePiece> pieces;
  pieces.reserve(2 * K);
  double cursor = 0.0;
  for (size_t i = 0; i < K; ++i) {
    const double w = i + 1 < K ? std::min({kBlendHalfWidth, 0.5 * script[i].duration,
                                           0.5 * script[i + 1].duration})
                               : 0.0;
    if (ends[i] - w > cursor) pieces.push_back({cursor, ends[i] - w, u[i], u[i]});
    if (w > 0.0) pieces.push_back({ends[i] - w, ends[i] + w, u[i], u[i + 1]});
    cursor = ends[i] + w;
  }
  return pieces;
}

// Integral of the profile over [a, b]. `hint` carries the piece cursor across
// consecutive calls with nondecreasing a.
Vec profile_delta(const std::vector<ProfilePiece>& pieces, size_t& hint, double a, double b) {
  Vec d = Vec::Zero(pieces[0].v0.size());
  while (hint + 1 < pieces.size() && pieces[hint].t1 <= a) ++hint;
  for (size_t i = hint; i < pieces.size() && pieces[i].t0 < b; ++i) {
    const ProfilePiece& p = pieces[i];
    const double lo = std::max(a, p.t0);
    const double hi = std::min(b, p.t1);
    if (hi <= lo) continue;
    const double span = p.t1 - p.t0;
    const double s = span > 0.0 ? (0.5 * (lo + hi) - p.t0) / span : 0.0;
    d += (hi - lo) * (p.v0 + s * (p.v1 - p.v0));
  }
  return d;
}

}  // namespace

Demonstration generate_demo(const ContactWorld& world, const Vec& start,
                            const std::vector<ScriptSegment>& script, double dt,
                            std::uint64_t seed, const std::string& label) {
  const int m = world.state_dim();
  if (start.size() != m) fail(ErrorCode::invalid_argument, "start dimension mismatch");
  if (!(dt > 0.0)) fail(ErrorCode::invalid_argument, "dt must be positive");
  if (script.empty()) fail(ErrorCode::invalid_argument, "script must have at least one segment");
  for (const auto& seg : script) {
    if (seg.v_dir.size() != m) fail(ErrorCode::invalid_argument, "segment direction mismatch");
    if (!(seg.v_dir.norm() > 0.0)) fail(ErrorCode::invalid_argument, "segment direction is zero");
    if (!(seg.duration > 0.0)) fail(ErrorCode::invalid_argument, "segment duration must be positive");
    if (seg.speed < 0.0) fail(ErrorCode::invalid_argument, "segment speed must be nonnegative");
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  PoseDrift drift(m, world.noise_pos, dt, rng, gauss);
  auto noisy = [&](const Vec& v, double sigma) {
    Vec out = v;
    for (int i = 0; i < out.size(); ++i) out[i] += sigma * gauss(rng);
    return out;
  };

  Demonstration demo;
  demo.dt = dt;
  demo.label = label;

  Vec x = start;
  Vec xs = start;
  auto record = [&](double t, const Vec& wrench) {
    TrajectoryPoint p;
    p.t = t;
    p.s = drift.measure(x);
    p.a_raw = noisy(wrench, world.noise_force);
    demo.points.push_back(std::move(p));
    demo.regime_labels.push_back(regime_label(world, x));
  };
  record(0.0, measure_wrench(world, x));

  double total = 0.0;
  for (const auto& seg : script) total += seg.duration;
  const std::vector<ProfilePiece> pieces = blended_profile(script);
  const long n_total = std::lround(total / dt);
  size_t hint = 0;
  for (long k = 0; k < n_total; ++k) {
    const Vec delta = profile_delta(pieces, hint, k * dt, (k + 1) * dt);
    const double dist = delta.norm();
    PhasePrimitive prim =
        default_primitive(world, dist > 0.0 ? Vec(delta / dist) : Vec(Vec::Unit(m, 0)), dist / dt);
    StepOutcome out = impedance_step(x, xs, prim, world, dt);
    x = out.x;
    xs = out.x_star;
    record(static_cast<double>(k + 1) * dt, out.wrench);
  }
  return demo;
}

std::vector<PhasePrimitive> extract_primitives(const HmmModel& model,
                                               const std::vector<Demonstration>& demos,
                                               const std::vector<PosteriorMarginals>& posts,
                                               double k_trans, double k_rot) {
  if (demos.empty()) fail(ErrorCode::invalid_argument, "no demonstrations given");
  if (posts.size() != demos.size())
    fail(ErrorCode::invalid_argument, "posterior count does not match demonstration count");
  const int m = model.m;
  const int N = model.n_phases;

  std::vector<PhasePrimitive> prims;
  prims.reserve(static_cast<size_t>(N));
  for (int j = 0; j < N; ++j) {
    Vec mean = Vec::Zero(m);
    double mass = 0.0;
    double speed_acc = 0.0;
    for (size_t di = 0; di < demos.size(); ++di) {
      const Demonstration& demo = demos[di];
      const Mat& gamma = posts[di].gamma;
      if (gamma.rows() != demo.length() - 1 || gamma.cols() != N)
        fail(ErrorCode::invalid_argument, "posterior shape does not match");
      for (int t = 0; t + 1 < demo.length(); ++t) {
        const double w = gamma(t, j);
        if (w == 0.0) continue;
        Vec delta = demo.points[t + 1].s - demo.points[t].s;
        mean += w * delta;
        speed_acc += w * delta.norm() / demo.dt;
        mass += w;
      }
    }

    PhasePrimitive prim;
    prim.low_confidence = mass < 10.0;
    if (prim.low_confidence)
      PS_LOG_WARN("phase %d has posterior mass %.3f (< 10 samples); primitive is low confidence",
                  j, mass);
    // The mean displacement is robust when one phase covers mirrored motions
    // (the per-demo components cancel, keeping the shared direction), where a
    // scatter eigenvector would tie-break on noise.
    if (mass <= 0.0 || mean.norm() == 0.0) {
      prim.v_dir = Vec::Unit(m, 0);
      prim.speed = 0.0;
    } else {
      prim.v_dir = mean.normalized();
      prim.speed = speed_acc / mass;
    }
    Vec k(m);
    k.head(3).setConstant(k_trans);
    if (m > 3) k.tail(m - 3).setConstant(k_rot);
    prim.stiffness = k.asDiagonal();
    prim.damping = 2.0 * std::sqrt(k_trans);
    prims.push_back(std::move(prim));
  }
  return prims;
}

ReproductionTrace reproduce(const HmmModel& model, const std::vector<PhasePrimitive>& prims,
                            const ContactWorld& world, const Vec& start, double dt,
                            int max_steps, double dwell_s, std::uint64_t seed) {
  const int m = world.state_dim();
  if (model.m != m || model.d != world.wrench_dim() + 1)
    fail(ErrorCode::invalid_argument, "model dimensions do not match the world");
  if (model.feature_source != FeatureSource::wrench)
    fail(ErrorCode::invalid_argument, "reproduction requires a wrench-feature model");
  if (static_cast<int>(prims.size()) != model.n_phases)
    fail(ErrorCode::invalid_argument, "primitive count does not match n_phases");
  for (size_t j = 0; j < prims.size(); ++j) {
    if (!(prims[j].speed > 0.0))
      fail(ErrorCode::invalid_argument, "primitive " + std::to_string(j) + " has no speed");
    if (std::abs(prims[j].v_dir.norm() - 1.0) > 1e-6)
      fail(ErrorCode::invalid_argument, "primitive " + std::to_string(j) + " direction is not unit");
  }
  if (start.size() != m) fail(ErrorCode::invalid_argument, "start dimension mismatch");
  if (!(dt > 0.0) || max_steps < 2)
    fail(ErrorCode::invalid_argument, "need dt > 0 and max_steps >= 2");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  PoseDrift drift(static_cast<int>(start.size()), world.noise_pos, dt, rng, gauss);
  auto noisy = [&](const Vec& v, double sigma) {
    Vec out = v;
    for (int i = 0; i < out.size(); ++i) out[i] += sigma * gauss(rng);
    return out;
  };

  const int N = model.n_phases;
  const int dwell_needed = std::max<long>(1, std::lround(dwell_s / dt));

  ReproductionTrace trace;
  Vec x = start;
  Vec xs = start;
  Vec wrench = measure_wrench(world, x);
  Vec s_meas = drift.measure(x);
  Vec a_meas = noisy(wrench, world.noise_force);

  int active = argmax_low(initial_distribution(model.weights, feature(a_meas)));
  trace.steps.push_back({0.0, xs, x, wrench, active, active});

  // First step runs on the prior-only phase guess; the filter needs two states.
  StepOutcome out = impedance_step(x, xs, prims[active], world, dt);
  x = out.x;
  xs = out.x_star;
  Vec s_next = drift.measure(x);
  ForwardState fs = filter_init(model, s_meas, feature(a_meas), s_next);
  trace.steps.push_back({dt, xs, x, out.wrench, fs.phase_estimate, active});
  s_meas = s_next;
  a_meas = noisy(out.wrench, world.noise_force);

  int dwell = fs.phase_estimate == N - 1 ? 1 : 0;
  for (int k = 2; k <= max_steps && dwell < dwell_needed; ++k) {
    active = fs.phase_estimate;
    out = impedance_step(x, xs, prims[active], world, dt);
    x = out.x;
    xs = out.x_star;
    s_next = drift.measure(x);
    fs = filter_step(fs, model, s_meas, feature(a_meas), s_next);
    trace.steps.push_back({k * dt, xs, x, out.wrench, fs.phase_estimate, active});
    s_meas = s_next;
    a_meas = noisy(out.wrench, world.noise_force);
    dwell = fs.phase_estimate == N - 1 ? dwell + 1 : 0;
  }
  return trace;
}

namespace {

struct ModeScore {
  double accuracy = 0.0;
  int switches = 0;
};

ModeScore score_mode(const HmmModel& model, const std::vector<Demonstration>& demos) {
  const int N = model.n_phases;
  int max_label = N - 1;
  std::vector<std::vector<int>> preds;
  for (const auto& demo : demos) {
    preds.push_back(segment(model, demo));
    for (int t = 0; t + 1 < demo.length(); ++t)
      max_label = std::max(max_label, demo.regime_labels[t]);
  }
  const int L = max_label + 1;
  if (L > 8) fail(ErrorCode::invalid_argument, "too many labels to align");

  // Joint best permutation of predicted phases onto ground-truth regimes.
  std::vector<int> perm(static_cast<size_t>(L));
  std::iota(perm.begin(), perm.end(), 0);
  int best_correct = -1;
  long total = 0;
  do {
    int correct = 0;
    total = 0;
    for (size_t di = 0; di < demos.size(); ++di) {
      for (int t = 0; t + 1 < demos[di].length(); ++t) {
        if (perm[preds[di][t]] == demos[di].regime_labels[t]) ++correct;
        ++total;
      }
    }
    best_correct = std::max(best_correct, correct);
  } while (std::next_permutation(perm.begin(), perm.end()));

  ModeScore score;
  score.accuracy = static_cast<double>(best_correct) / static_cast<double>(total);
  for (const auto& p : preds)
    for (size_t t = 1; t < p.size(); ++t)
      if (p[t] != p[t - 1]) ++score.switches;
  return score;
}

}  // namespace

CompareReport compare_feature_modes(const std::vector<Demonstration>& demos, int n_phases,
                                    const EmConfig& config) {
  if (demos.empty()) fail(ErrorCode::invalid_argument, "no demonstrations given");
  for (size_t i = 0; i < demos.size(); ++i)
    if (static_cast<int>(demos[i].regime_labels.size()) != demos[i].length())
      fail(ErrorCode::invalid_argument,
           "demonstration " + std::to_string(i) + " is missing ground-truth regime labels");

  CompareReport report;
  report.n_demos = static_cast<int>(demos.size());
  for (const auto& demo : demos)
    for (int t = 1; t + 1 < demo.length(); ++t)
      if (demo.regime_labels[t] != demo.regime_labels[t - 1]) ++report.true_switches;

  auto [wrench_model, wrench_rep] = em_fit(demos, n_phases, config, FeatureSource::wrench);
  auto [state_model, state_rep] = em_fit(demos, n_phases, config, FeatureSource::state);
  (void)wrench_rep;
  (void)state_rep;

  const ModeScore ws = score_mode(wrench_model, demos);
  const ModeScore ss = score_mode(state_model, demos);
  report.wrench.accuracy = ws.accuracy;
  report.wrench.switches = ws.switches;
  report.wrench.spurious = std::max(0, ws.switches - report.true_switches);
  report.state.accuracy = ss.accuracy;
  report.state.switches = ss.switches;
  report.state.spurious = std::max(0, ss.switches - report.true_switches);
  return report;
}

}  // namespace phaseseg
