#include "selection/selection.hpp"

#include <cmath>
#include <limits>

#include "common/error.hpp"
#include "common/log.hpp"

namespace phaseseg {

long long param_count(int n_phases) {
  if (n_phases < 1) fail(ErrorCode::invalid_argument, "n_phases must be at least 1");
  const long long N = n_phases;
  return N * N + 2 * N - 1;
}

long long param_count_full(int n_phases, int m, int d) {
  if (m < 1 || d < 1) fail(ErrorCode::invalid_argument, "model dimensions must be positive");
  const long long N = n_phases;
  const long long mm = m;
  const long long dd = d;
  return param_count(n_phases) + N * (mm * mm + mm * dd + mm * (mm + 1) / 2);
}

BicSweepResult bic_sweep(const std::vector<Demonstration>& demos, int n_min, int n_max,
                         const EmConfig& config, bool full_count, FeatureSource source) {
  if (n_min < 1 || n_max < n_min)
    fail(ErrorCode::invalid_argument, "need 1 <= n_min <= n_max");
  long long n_obs = 0;
  for (const auto& demo : demos) n_obs += demo.length();

  BicSweepResult sweep;
  for (int N = n_min; N <= n_max; ++N) {
    BicResult res;
    res.n_phases = N;
    res.n_obs = n_obs;
    EmConfig cand = config;
    cand.seed = config.seed + static_cast<std::uint64_t>(N);
    try {
      auto [model, report] = em_fit(demos, N, cand, source);
      double best = -std::numeric_limits<double>::infinity();
      for (double ll : report.loglik_trace) best = std::max(best, ll);
      res.loglik = best;
      res.n_params = full_count ? param_count_full(N, model.m, model.d) : param_count(N);
      res.bic = -2.0 * res.loglik +
                static_cast<double>(res.n_params) * std::log(static_cast<double>(n_obs));
      res.ok = true;
    } catch (const Error& e) {
      res.message = e.what();
      PS_LOG_WARN("bic sweep: candidate N = %d failed: %s", N, e.what());
    }
    sweep.results.push_back(std::move(res));
  }

  double best_bic = std::numeric_limits<double>::infinity();
  int best_n = 0;
  for (const auto& res : sweep.results) {
    if (res.ok && res.bic < best_bic) {
      best_bic = res.bic;
      best_n = res.n_phases;
    }
  }
  if (best_n == 0) fail(ErrorCode::numeric, "all candidate fits failed");
  sweep.selected = best_n;
  return sweep;
}

}  // namespace phaseseg
