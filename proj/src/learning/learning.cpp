#include "learning/learning.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "common/error.hpp"
#include "common/log.hpp"
#include "common/numeric.hpp"
#include "inference/inference.hpp"

namespace phaseseg {

namespace {

void check_demos(const std::vector<Demonstration>& demos) {
  if (demos.empty()) fail(ErrorCode::invalid_argument, "no demonstrations given");
  for (size_t i = 0; i < demos.size(); ++i) {
    auto violations = validate_demo(demos[i]);
    if (!violations.empty())
      fail(ErrorCode::validation,
           "demonstration " + std::to_string(i) + ": " + violations.front());
    if (demos[i].state_dim() != demos[0].state_dim() ||
        demos[i].wrench_dim() != demos[0].wrench_dim())
      fail(ErrorCode::invalid_argument,
           "demonstration " + std::to_string(i) + " has mismatched dimensions");
  }
}

void check_posteriors(const std::vector<Demonstration>& demos,
                      const std::vector<PosteriorMarginals>& posts) {
  if (posts.size() != demos.size())
    fail(ErrorCode::invalid_argument, "posterior count does not match demonstration count");
  for (size_t i = 0; i < demos.size(); ++i) {
    if (posts[i].gamma.rows() != demos[i].length() - 1)
      fail(ErrorCode::invalid_argument,
           "posterior length does not match demonstration " + std::to_string(i));
  }
}

}  // namespace

HmmModel kmeans_init(const std::vector<Demonstration>& demos, int n_phases, std::uint64_t seed) {
  check_demos(demos);
  if (n_phases < 1) fail(ErrorCode::invalid_argument, "n_phases must be at least 1");
  const int m = demos[0].state_dim();
  const int d = demos[0].wrench_dim() + 1;
  const int N = n_phases;

  std::vector<Vec> phi;
  for (const auto& demo : demos)
    for (int t = 0; t + 1 < demo.length(); ++t) phi.push_back(interaction(demo, t));
  const int total = static_cast<int>(phi.size());

  // Count distinct samples; fewer distinct points than clusters cannot work.
  {
    std::vector<int> idx(phi.size());
    std::iota(idx.begin(), idx.end(), 0);
    auto less = [&](int a, int b) {
      for (int k = 0; k < d; ++k) {
        if (phi[a][k] < phi[b][k]) return true;
        if (phi[a][k] > phi[b][k]) return false;
      }
      return false;
    };
    std::sort(idx.begin(), idx.end(), less);
    int distinct = total > 0 ? 1 : 0;
    for (int i = 1; i < total; ++i)
      if (phi[idx[i]] != phi[idx[i - 1]]) ++distinct;
    if (distinct < N)
      fail(ErrorCode::invalid_argument,
           "n_phases = " + std::to_string(N) + " exceeds the " + std::to_string(distinct) +
               " distinct interaction samples");
  }

  std::mt19937_64 rng(seed);
  std::vector<Vec> centers;
  centers.reserve(static_cast<size_t>(N));
  {
    std::uniform_int_distribution<int> first(0, total - 1);
    centers.push_back(phi[first(rng)]);
    std::vector<double> d2(phi.size());
    while (static_cast<int>(centers.size()) < N) {
      double sum = 0.0;
      for (int i = 0; i < total; ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& c : centers) best = std::min(best, (phi[i] - c).squaredNorm());
        d2[i] = best;
        sum += best;
      }
      int pick = -1;
      if (sum > 0.0) {
        std::uniform_real_distribution<double> u(0.0, sum);
        double r = u(rng);
        for (int i = 0; i < total; ++i) {
          r -= d2[i];
          if (r <= 0.0) {
            pick = i;
            break;
          }
        }
        if (pick < 0) pick = total - 1;
      } else {
        // All samples coincide with a center; take the first leftover distinct one.
        for (int i = 0; i < total && pick < 0; ++i)
          if (d2[i] > 0.0) pick = i;
        if (pick < 0) fail(ErrorCode::numeric, "k-means seeding ran out of distinct samples");
      }
      centers.push_back(phi[pick]);
    }
  }

  std::vector<int> assign(phi.size(), 0);
  for (int round = 0; round < 100; ++round) {
    bool changed = false;
    for (int i = 0; i < total; ++i) {
      int best = 0;
      double bd = (phi[i] - centers[0]).squaredNorm();
      for (int c = 1; c < N; ++c) {
        const double dd = (phi[i] - centers[c]).squaredNorm();
        if (dd < bd) {
          bd = dd;
          best = c;
        }
      }
      if (assign[i] != best) {
        assign[i] = best;
        changed = true;
      }
    }
    std::vector<Vec> mean(static_cast<size_t>(N), Vec::Zero(d));
    std::vector<int> count(static_cast<size_t>(N), 0);
    for (int i = 0; i < total; ++i) {
      mean[assign[i]] += phi[i];
      ++count[assign[i]];
    }
    for (int c = 0; c < N; ++c) {
      if (count[c] > 0) {
        centers[c] = mean[c] / count[c];
      } else {
        // Reseat an empty cluster on the sample farthest from its center.
        int far = 0;
        double fd = -1.0;
        for (int i = 0; i < total; ++i) {
          const double dd = (phi[i] - centers[assign[i]]).squaredNorm();
          if (dd > fd) {
            fd = dd;
            far = i;
          }
        }
        centers[c] = phi[far];
        assign[far] = c;
        changed = true;
      }
    }
    if (!changed) break;
  }

  // Hard-assignment posteriors reuse the weighted least-squares routine.
  std::vector<PosteriorMarginals> hard(demos.size());
  {
    int offset = 0;
    for (size_t di = 0; di < demos.size(); ++di) {
      const int Tr = demos[di].length() - 1;
      hard[di].gamma = Mat::Zero(Tr, N);
      for (int t = 0; t < Tr; ++t) hard[di].gamma(t, assign[offset + t]) = 1.0;
      offset += Tr;
    }
  }
  std::vector<PhaseDynamics> dyn(static_cast<size_t>(N));
  for (int j = 0; j < N; ++j) dyn[j] = m_step_dynamics(demos, hard, j, 1e-8);

  TransitionWeights weights = zero_weights(N, d);
  for (int i = 0; i < N; ++i) weights.w[i](i, d - 1) = 2.0;  // sticky self-bias

  return make_model(N, m, d, std::move(dyn), std::move(weights));
}

std::vector<PosteriorMarginals> e_step(const HmmModel& model,
                                       const std::vector<Demonstration>& demos) {
  check_demos(demos);
  std::vector<PosteriorMarginals> out;
  out.reserve(demos.size());
  for (const auto& demo : demos) out.push_back(forward_backward(model, demo));
  return out;
}

PhaseDynamics m_step_dynamics(const std::vector<Demonstration>& demos,
                              const std::vector<PosteriorMarginals>& posts, int j,
                              double ridge) {
  check_demos(demos);
  check_posteriors(demos, posts);
  if (ridge < 0.0) fail(ErrorCode::invalid_argument, "ridge must be nonnegative");
  const int N = static_cast<int>(posts[0].gamma.cols());
  if (j < 0 || j >= N) fail(ErrorCode::invalid_argument, "phase index out of range");
  const int m = demos[0].state_dim();
  const int d = demos[0].wrench_dim() + 1;
  const int p = m + d;

  Mat Sxx = Mat::Zero(p, p);
  Mat Syx = Mat::Zero(m, p);
  Mat S = Mat::Zero(m, m);
  double mass = 0.0;
  double scale = 0.0;
  long rows = 0;
  Vec x(p);
  for (size_t di = 0; di < demos.size(); ++di) {
    const Demonstration& demo = demos[di];
    const Mat& gamma = posts[di].gamma;
    for (int t = 0; t + 1 < demo.length(); ++t) {
      x.head(m) = demo.points[t].s;
      x.segment(m, d - 1) = demo.points[t].a_raw;
      x[p - 1] = 1.0;
      scale += x.squaredNorm();
      ++rows;
      const double w = gamma(t, j);
      if (w == 0.0) continue;
      Sxx.noalias() += w * x * x.transpose();
      Syx.noalias() += w * demo.points[t + 1].s * x.transpose();
      mass += w;
    }
  }
  const std::string tag = "phase " + std::to_string(j);
  if (mass <= 0.0) fail(ErrorCode::numeric, tag + ": no posterior mass");

  // The penalty scale comes from the unweighted data so it is identical for
  // every phase and every EM iteration; a posterior-weighted scale would move
  // the regularized objective between iterations and break EM monotonicity.
  const double lam = ridge * scale / (static_cast<double>(rows) * p);
  Mat reg = Sxx + lam * Mat::Identity(p, p);
  Eigen::LDLT<Mat> ldlt(reg);
  // LDLT solves rank-deficient systems with a pseudo-inverse, so detect
  // degeneracy from the pivot spectrum instead of the solve residual.
  bool ok = ldlt.info() == Eigen::Success;
  if (ok) {
    const Vec pivots = ldlt.vectorD();
    ok = pivots.minCoeff() > 1e-12 * pivots.maxCoeff() && pivots.maxCoeff() > 0.0;
  }
  Mat ABt;
  if (ok) {
    ABt = ldlt.solve(Syx.transpose());
    ok = ABt.allFinite();
  }
  if (!ok) fail(ErrorCode::numeric, tag + ": weighted regression matrix X W X^T is singular");
  Mat AB = ABt.transpose();

  for (size_t di = 0; di < demos.size(); ++di) {
    const Demonstration& demo = demos[di];
    const Mat& gamma = posts[di].gamma;
    for (int t = 0; t + 1 < demo.length(); ++t) {
      const double w = gamma(t, j);
      if (w == 0.0) continue;
      x.head(m) = demo.points[t].s;
      x.segment(m, d - 1) = demo.points[t].a_raw;
      x[p - 1] = 1.0;
      Vec r = demo.points[t + 1].s - AB * x;
      S.noalias() += w * r * r.transpose();
    }
  }
  S /= mass;

  // Floor the covariance spectrum so later Cholesky factorizations stay valid.
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (S + S.transpose()));
  if (es.info() != Eigen::Success) fail(ErrorCode::numeric, tag + ": covariance eigensolve failed");
  Vec ev = es.eigenvalues().cwiseMax(kSigmaFloor);
  Mat Sigma = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
  Sigma = 0.5 * (Sigma + Sigma.transpose());

  PhaseDynamics dyn;
  dyn.A = AB.leftCols(m);
  dyn.B = AB.rightCols(d);
  dyn.Sigma = Sigma;
  return dyn;
}

namespace {

// Shared walk over the weighted logistic samples of block i. For i >= 0 the
// samples are (iv_{t+1}, zeta_t row i); for i == -1 they are (iv_0, gamma_0).
template <typename F>
void for_each_weight_sample(const std::vector<Demonstration>& demos,
                            const std::vector<PosteriorMarginals>& posts, int i, F&& f) {
  for (size_t di = 0; di < demos.size(); ++di) {
    const Demonstration& demo = demos[di];
    const PosteriorMarginals& post = posts[di];
    if (i < 0) {
      f(interaction(demo, 0), Vec(post.gamma.row(0).transpose()));
    } else {
      for (size_t k = 0; k < post.zeta.size(); ++k)
        f(interaction(demo, static_cast<int>(k) + 1), Vec(post.zeta[k].row(i).transpose()));
    }
  }
}

Mat& weight_block(TransitionWeights& w, int i) {
  return i < 0 ? w.w0 : w.w[static_cast<size_t>(i)];
}

}  // namespace

double weight_loss(const std::vector<Demonstration>& demos,
                   const std::vector<PosteriorMarginals>& posts,
                   const TransitionWeights& weights, int i) {
  double loss = 0.0;
  const Mat& block = i < 0 ? weights.w0 : weights.w[static_cast<size_t>(i)];
  for_each_weight_sample(demos, posts, i, [&](const Vec& phi, const Vec& target) {
    Vec logits = block * phi;
    Vec logp = logits.array() - logsumexp(logits);
    loss -= target.dot(logp);
  });
  return loss;
}

Mat weight_gradient(const std::vector<Demonstration>& demos,
                    const std::vector<PosteriorMarginals>& posts,
                    const TransitionWeights& weights, int i) {
  const int N = weights.n_phases();
  const int d = weights.feature_dim();
  const Mat& block = i < 0 ? weights.w0 : weights.w[static_cast<size_t>(i)];
  Mat G = Mat::Zero(N, d);
  for_each_weight_sample(demos, posts, i, [&](const Vec& phi, const Vec& target) {
    Vec logits = block * phi;
    Vec p = (logits.array() - logsumexp(logits)).exp();
    // Predictions carry the sample's posterior mass so the gradient matches
    // the weighted loss exactly.
    G.noalias() += (target.sum() * p - target) * phi.transpose();
  });
  return G;
}

TransitionWeights m_step_weights(const std::vector<Demonstration>& demos,
                                 const std::vector<PosteriorMarginals>& posts,
                                 const TransitionWeights& weights, double lr_lambda,
                                 int lr_iters) {
  check_demos(demos);
  check_posteriors(demos, posts);
  if (!(lr_lambda > 0.0)) fail(ErrorCode::invalid_argument, "lr_lambda must be positive");
  if (lr_iters < 1) fail(ErrorCode::invalid_argument, "lr_iters must be at least 1");
  const int N = weights.n_phases();
  const int d = weights.feature_dim();

  // Flatten the weighted logistic samples once so the gradient loop runs on
  // dense matrices instead of revisiting every sample through a functor.
  const long n_demos = static_cast<long>(demos.size());
  long K = 0;
  for (const auto& post : posts) K += static_cast<long>(post.zeta.size());
  Mat phi0(d, n_demos), phi_t(d, K);
  {
    long col = 0;
    for (size_t di = 0; di < demos.size(); ++di) {
      phi0.col(static_cast<long>(di)) = interaction(demos[di], 0);
      for (size_t k = 0; k < posts[di].zeta.size(); ++k)
        phi_t.col(col++) = interaction(demos[di], static_cast<int>(k) + 1);
    }
  }

  TransitionWeights out = weights;
  for (int i = -1; i < N; ++i) {
    const Mat& phi = i < 0 ? phi0 : phi_t;
    Mat targets(N, phi.cols());
    long col = 0;
    for (size_t di = 0; di < demos.size(); ++di) {
      if (i < 0) {
        targets.col(col++) = posts[di].gamma.row(0).transpose();
      } else {
        for (const Mat& z : posts[di].zeta) targets.col(col++) = z.row(i).transpose();
      }
    }
    const Eigen::RowVectorXd mass = targets.colwise().sum();

    auto loss_of = [&](const Mat& W) {
      Mat logits = W * phi;
      Eigen::RowVectorXd mx = logits.colwise().maxCoeff();
      Eigen::RowVectorXd lse =
          mx + (logits.rowwise() - mx).array().exp().colwise().sum().log().matrix();
      return mass.cwiseProduct(lse).sum() - logits.cwiseProduct(targets).sum();
    };

    const std::string which = i < 0 ? "the initial distribution" : "phase " + std::to_string(i);
    auto diverged = [&]() {
      fail(ErrorCode::numeric,
           "logistic update for " + which + " is diverging; reduce lr_lambda");
    };

    Mat W = weight_block(out, i);
    double start = 0.0;
    double prev = 0.0;
    int rises = 0;
    // Oversized steps either blow up, oscillate, or end worse than they
    // started; a healthy step size does none of these. Each pass yields the
    // loss at the current iterate for free, so the checks ride along.
    auto check = [&](double cur, double ref) {
      if (!std::isfinite(cur)) diverged();
      if (cur > ref + 1e-12 * std::max(1.0, std::abs(ref)) && ++rises >= 5) diverged();
    };
    for (int k = 0; k < lr_iters; ++k) {
      Mat logits = W * phi;
      Eigen::RowVectorXd mx = logits.colwise().maxCoeff();
      Mat probs = (logits.rowwise() - mx).array().exp().matrix();
      Eigen::RowVectorXd denom = probs.colwise().sum();
      const double cur = (mass.array() * (mx.array() + denom.array().log())).sum() -
                         logits.cwiseProduct(targets).sum();
      if (k == 0) {
        if (!std::isfinite(cur)) diverged();
        start = cur;
      } else {
        check(cur, prev);
      }
      prev = cur;
      probs.array().rowwise() /= denom.array();
      Mat G = (probs * mass.asDiagonal() - targets) * phi.transpose();
      W -= lr_lambda * G;
    }
    const double fin = loss_of(W);
    check(fin, prev);
    if (fin > start + 1e-12 * std::max(1.0, std::abs(start))) diverged();
    weight_block(out, i) = W;
  }
  return out;
}

namespace {

// Reorder phases by when they first dominate the smoothed posterior of the
// given demo; phases that never dominate keep their relative order at the end.
void relabel_by_first_dominance(HmmModel& model, const Demonstration& demo) {
  const int N = model.n_phases;
  if (N < 2) return;
  PosteriorMarginals post = forward_backward(model, demo);
  std::vector<int> order;
  std::vector<bool> seen(static_cast<size_t>(N), false);
  for (int t = 0; t < post.gamma.rows(); ++t) {
    const int j = argmax_low(post.gamma.row(t).transpose());
    if (!seen[j]) {
      seen[j] = true;
      order.push_back(j);
    }
  }
  for (int j = 0; j < N; ++j)
    if (!seen[j]) order.push_back(j);
  bool identity = true;
  for (int k = 0; k < N; ++k)
    if (order[k] != k) identity = false;
  if (identity) return;

  HmmModel old = model;
  for (int k = 0; k < N; ++k) {
    model.dynamics[k] = old.dynamics[order[k]];
    model.weights.w0.row(k) = old.weights.w0.row(order[k]);
  }
  for (int a = 0; a < N; ++a)
    for (int b = 0; b < N; ++b)
      model.weights.w[a].row(b) = old.weights.w[order[a]].row(order[b]);
}

// Chain positions where the windowed interaction mean jumps the most, kept in
// time order with a minimum spacing. At most n_cuts positions are returned.
std::vector<int> interaction_cuts(const Demonstration& demo, int n_cuts) {
  const int Tr = demo.length() - 1;
  std::vector<int> cuts;
  if (n_cuts < 1) return cuts;
  const int w = std::max(2, std::min(25, Tr / 4));
  if (Tr < 2 * w + 2) return cuts;
  const int dw = demo.wrench_dim();

  Mat prefix = Mat::Zero(dw, Tr + 1);
  for (int t = 0; t < Tr; ++t) prefix.col(t + 1) = prefix.col(t) + demo.points[t].a_raw;
  std::vector<double> score(static_cast<size_t>(Tr), 0.0);
  for (int t = w; t + w <= Tr; ++t)
    score[t] = (prefix.col(t + w) + prefix.col(t - w) - 2 * prefix.col(t)).norm() / w;

  std::vector<int> order(score.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return score[a] > score[b]; });
  const int sep = std::max(w, Tr / (4 * (n_cuts + 1)));
  for (int t : order) {
    if (score[t] <= 0.0 || static_cast<int>(cuts.size()) == n_cuts) break;
    bool clear = true;
    for (int c : cuts)
      if (std::abs(c - t) < sep) clear = false;
    if (clear) cuts.push_back(t);
  }
  std::sort(cuts.begin(), cuts.end());
  return cuts;
}

// Alternative start that cuts every demo at its largest interaction shifts
// and assigns the resulting stretches to phases in time order. Feature
// clustering can split one phase whose interaction level varies, or lump two
// phases whose samples overlap; the cut-based slicing seeds the basin where
// phases follow each other in demo order, aligned across demos.
HmmModel changepoint_init(const std::vector<Demonstration>& demos, int n_phases) {
  const int m = demos[0].state_dim();
  const int d = demos[0].wrench_dim() + 1;
  const int N = n_phases;

  std::vector<PosteriorMarginals> hard(demos.size());
  for (size_t di = 0; di < demos.size(); ++di) {
    const int Tr = demos[di].length() - 1;
    std::vector<int> cuts = interaction_cuts(demos[di], N - 1);
    hard[di].gamma = Mat::Zero(Tr, N);
    int j = 0;
    for (int t = 0; t < Tr; ++t) {
      while (j < static_cast<int>(cuts.size()) && t >= cuts[j]) ++j;
      hard[di].gamma(t, j) = 1.0;
    }
  }
  std::vector<PhaseDynamics> dyn(static_cast<size_t>(N));
  for (int j = 0; j < N; ++j) dyn[j] = m_step_dynamics(demos, hard, j, 1e-8);

  TransitionWeights weights = zero_weights(N, d);
  for (int i = 0; i < N; ++i) weights.w[i](i, d - 1) = 2.0;  // sticky self-bias

  return make_model(N, m, d, std::move(dyn), std::move(weights));
}

}  // namespace

std::pair<HmmModel, EmReport> em_fit(const std::vector<Demonstration>& demos, int n_phases,
                                     const EmConfig& config, FeatureSource source) {
  check_demos(demos);
  if (config.max_iters < 1) fail(ErrorCode::invalid_argument, "max_iters must be at least 1");
  if (!(config.loglik_tol > 0.0)) fail(ErrorCode::invalid_argument, "loglik_tol must be positive");
  if (!(config.lr_lambda > 0.0)) fail(ErrorCode::invalid_argument, "lr_lambda must be positive");
  if (config.lr_iters < 1) fail(ErrorCode::invalid_argument, "lr_iters must be at least 1");
  if (!(config.ridge > 0.0)) fail(ErrorCode::invalid_argument, "ridge must be positive");

  std::vector<Demonstration> transformed;
  const std::vector<Demonstration>* eff = &demos;
  if (source == FeatureSource::state) {
    transformed.reserve(demos.size());
    for (const auto& demo : demos) transformed.push_back(to_state_feature_demo(demo));
    eff = &transformed;
  }

  struct Run {
    HmmModel model;
    HmmModel best;
    double best_ll = -std::numeric_limits<double>::infinity();
    double prev_ll = 0.0;
    EmReport report;
  };
  auto start_run = [&](HmmModel init) {
    init.feature_source = source;
    Run run;
    run.best = init;
    run.model = std::move(init);
    return run;
  };

  // Symmetric or repeated demonstrations carve the likelihood into basins the
  // clustering start does not always hit, so EM also runs from a change-point
  // start and the climb that ends higher wins.
  std::vector<Run> runs;
  runs.push_back(start_run(kmeans_init(*eff, n_phases, config.seed)));
  try {
    runs.push_back(start_run(changepoint_init(*eff, n_phases)));
  } catch (const Error&) {
    // A degenerate slicing loses the extra start, not the fit.
  }

  for (auto& run : runs) {
    for (int it = 1; it <= config.max_iters; ++it) {
      auto posts = e_step(run.model, *eff);
      double ll = 0.0;
      for (const auto& p : posts) ll += p.loglik;
      run.report.loglik_trace.push_back(ll);
      PS_LOG_DEBUG("em iteration %d loglik %.6f", it, ll);
      if (ll > run.best_ll) {
        run.best_ll = ll;
        run.best = run.model;
      }
      if (it > 1 && ll - run.prev_ll < config.loglik_tol) {
        run.report.converged = true;
        break;
      }
      run.prev_ll = ll;
      if (it == config.max_iters) break;

      try {
        std::vector<PhaseDynamics> dyn(static_cast<size_t>(n_phases));
        for (int j = 0; j < n_phases; ++j)
          dyn[j] = m_step_dynamics(*eff, posts, j, config.ridge);
        TransitionWeights w =
            m_step_weights(*eff, posts, run.model.weights, config.lr_lambda, config.lr_iters);
        run.model.dynamics = std::move(dyn);
        run.model.weights = std::move(w);
      } catch (const Error& e) {
        fail(e.code(), "EM iteration " + std::to_string(it) + ": " + e.what());
      }
    }
  }

  Run* winner = &runs[0];
  for (auto& run : runs)
    if (run.best_ll > winner->best_ll) winner = &run;
  winner->report.iterations_run = static_cast<int>(winner->report.loglik_trace.size());

  relabel_by_first_dominance(winner->best, (*eff)[0]);
  return {std::move(winner->best), std::move(winner->report)};
}

std::vector<int> segment(const HmmModel& model, const Demonstration& demo, Mat* forward_probs) {
  const Demonstration* eff = &demo;
  Demonstration transformed;
  if (model.feature_source == FeatureSource::state) {
    transformed = to_state_feature_demo(demo);
    eff = &transformed;
  }
  const int T = eff->length();
  if (T < 2) fail(ErrorCode::invalid_argument, "demonstration needs at least 2 samples");
  const int Tr = T - 1;
  std::vector<int> labels(static_cast<size_t>(Tr));
  if (forward_probs) forward_probs->resize(Tr, model.n_phases);

  ForwardState st =
      filter_init(model, eff->points[0].s, interaction(*eff, 0), eff->points[1].s);
  labels[0] = st.phase_estimate;
  if (forward_probs) forward_probs->row(0) = st.log_alpha.array().exp().transpose();
  for (int t = 1; t < Tr; ++t) {
    st = filter_step(st, model, eff->points[t].s, interaction(*eff, t), eff->points[t + 1].s);
    labels[t] = st.phase_estimate;
    if (forward_probs) forward_probs->row(t) = st.log_alpha.array().exp().transpose();
  }
  return labels;
}

}  // namespace phaseseg
