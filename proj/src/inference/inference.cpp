#include "inference/inference.hpp"

#include <Eigen/Cholesky>
#include <cmath>

#include "common/error.hpp"
#include "common/numeric.hpp"

namespace phaseseg {

namespace {

// Cholesky factor and Gaussian normalizer of one phase, reused across a sweep.
struct EmissionModel {
  Eigen::LLT<Mat> llt;
  double log_norm = 0.0;
};

EmissionModel prepare_emission(const PhaseDynamics& dyn, int j) {
  EmissionModel em;
  em.llt.compute(dyn.Sigma);
  if (em.llt.info() != Eigen::Success)
    fail(ErrorCode::numeric, "Sigma is not positive definite for phase " + std::to_string(j));
  double logdet = 0.0;
  const auto& L = em.llt.matrixLLT();
  for (int i = 0; i < L.rows(); ++i) logdet += std::log(L(i, i));
  logdet *= 2.0;
  em.log_norm =
      -0.5 * (static_cast<double>(dyn.Sigma.rows()) * std::log(2.0 * M_PI) + logdet);
  return em;
}

double emission_with(const EmissionModel& em, const PhaseDynamics& dyn, const Vec& s_t,
                     const Vec& a_t, const Vec& s_next) {
  Vec r = s_next - dyn.A * s_t - dyn.B * a_t;
  em.llt.matrixL().solveInPlace(r);
  return em.log_norm - 0.5 * r.squaredNorm();
}

void check_chain_inputs(const HmmModel& model, const Demonstration& demo) {
  if (demo.length() < 2)
    fail(ErrorCode::invalid_argument, "demonstration needs at least 2 samples");
  if (demo.state_dim() != model.m)
    fail(ErrorCode::invalid_argument, "state dimension does not match the model");
  if (demo.wrench_dim() + 1 != model.d)
    fail(ErrorCode::invalid_argument, "wrench dimension does not match the model");
}

void check_interaction(const TransitionWeights& weights, const Vec& a) {
  if (static_cast<int>(a.size()) != weights.feature_dim())
    fail(ErrorCode::invalid_argument, "interaction vector length does not match the model");
  if (!a.allFinite()) fail(ErrorCode::invalid_argument, "non-finite interaction vector");
}

}  // namespace

double emission_loglik(const HmmModel& model, int j, const Vec& s_t, const Vec& a_t,
                       const Vec& s_next) {
  if (j < 0 || j >= model.n_phases) fail(ErrorCode::invalid_argument, "phase index out of range");
  if (s_t.size() != model.m || s_next.size() != model.m)
    fail(ErrorCode::invalid_argument, "state dimension does not match the model");
  if (static_cast<int>(a_t.size()) != model.d)
    fail(ErrorCode::invalid_argument, "interaction vector length does not match the model");
  EmissionModel em = prepare_emission(model.dynamics[j], j);
  return emission_with(em, model.dynamics[j], s_t, a_t, s_next);
}

Vec log_transition_row(const TransitionWeights& weights, int i, const Vec& a_t) {
  Vec logits = weights.w[static_cast<size_t>(i)] * a_t;
  const double z = logsumexp(logits);
  return logits.array() - z;
}

Vec log_initial_distribution(const TransitionWeights& weights, const Vec& a_1) {
  Vec logits = weights.w0 * a_1;
  const double z = logsumexp(logits);
  return logits.array() - z;
}

Mat transition_matrix(const TransitionWeights& weights, const Vec& a_t) {
  check_interaction(weights, a_t);
  const int N = weights.n_phases();
  Mat P(N, N);
  for (int i = 0; i < N; ++i) P.row(i) = log_transition_row(weights, i, a_t).array().exp();
  return P;
}

Vec initial_distribution(const TransitionWeights& weights, const Vec& a_1) {
  check_interaction(weights, a_1);
  return log_initial_distribution(weights, a_1).array().exp();
}

PosteriorMarginals forward_backward(const HmmModel& model, const Demonstration& demo) {
  check_chain_inputs(model, demo);
  const int T = demo.length();
  const int Tr = T - 1;
  const int N = model.n_phases;

  Mat Phi(model.d, Tr), Scur(model.m, Tr), Snext(model.m, Tr);
  for (int t = 0; t < Tr; ++t) {
    Phi.col(t) = interaction(demo, t);
    Scur.col(t) = demo.points[t].s;
    Snext.col(t) = demo.points[t + 1].s;
  }

  Mat logE(Tr, N);
  for (int j = 0; j < N; ++j) {
    const PhaseDynamics& dyn = model.dynamics[j];
    const EmissionModel em = prepare_emission(dyn, j);
    Mat R = Snext - dyn.A * Scur - dyn.B * Phi;
    em.llt.matrixL().solveInPlace(R);
    logE.col(j) = (em.log_norm - 0.5 * R.colwise().squaredNorm().array()).transpose();
  }

  // Transition into chain position t is conditioned on the interaction at t;
  // each block's logits over all positions normalize in one columnwise pass.
  std::vector<Mat> logP(static_cast<size_t>(std::max(0, Tr - 1)));
  for (int i = 0; i < N; ++i) {
    Mat L = model.weights.w[static_cast<size_t>(i)] * Phi;
    Eigen::RowVectorXd mx = L.colwise().maxCoeff();
    Eigen::RowVectorXd lse =
        mx.array() + (L.rowwise() - mx).array().exp().colwise().sum().log();
    L.rowwise() -= lse;
    for (int k = 0; k + 1 < Tr; ++k) {
      if (i == 0) logP[k].resize(N, N);
      logP[k].row(i) = L.col(k + 1).transpose();
    }
  }

  Mat la(Tr, N);
  double loglik = 0.0;
  {
    Vec cur = log_initial_distribution(model.weights, Phi.col(0)) + logE.row(0).transpose();
    const double c = logsumexp(cur);
    loglik += c;
    la.row(0) = (cur.array() - c).transpose();
  }
  for (int k = 1; k < Tr; ++k) {
    Vec nxt(N);
    for (int j = 0; j < N; ++j)
      nxt[j] = logsumexp(la.row(k - 1).transpose() + logP[k - 1].col(j)) + logE(k, j);
    const double c = logsumexp(nxt);
    loglik += c;
    la.row(k) = (nxt.array() - c).transpose();
  }

  Mat lb(Tr, N);
  lb.row(Tr - 1).setZero();
  for (int k = Tr - 2; k >= 0; --k) {
    for (int i = 0; i < N; ++i)
      lb(k, i) =
          logsumexp(logP[k].row(i).transpose() + logE.row(k + 1).transpose() + lb.row(k + 1).transpose());
    lb.row(k).array() -= logsumexp(lb.row(k).transpose());
  }

  PosteriorMarginals out;
  out.loglik = loglik;
  out.gamma.resize(Tr, N);
  for (int k = 0; k < Tr; ++k) {
    Vec g = la.row(k).transpose() + lb.row(k).transpose();
    out.gamma.row(k) = (g.array() - logsumexp(g)).exp().transpose();
  }
  out.zeta.resize(static_cast<size_t>(std::max(0, Tr - 1)));
  for (int k = 0; k + 1 < Tr; ++k) {
    Mat S(N, N);
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j)
        S(i, j) = la(k, i) + logP[k](i, j) + logE(k + 1, j) + lb(k + 1, j);
    Eigen::Map<Vec> flat(S.data(), S.size());
    const double z = logsumexp(flat);
    out.zeta[k] = (S.array() - z).exp();
  }
  return out;
}

ForwardState filter_init(const HmmModel& model, const Vec& s_1, const Vec& a_1, const Vec& s_2) {
  if (s_1.size() != model.m || s_2.size() != model.m)
    fail(ErrorCode::invalid_argument, "state dimension does not match the model");
  check_interaction(model.weights, a_1);
  const int N = model.n_phases;
  Vec la = log_initial_distribution(model.weights, a_1);
  for (int j = 0; j < N; ++j) {
    EmissionModel em = prepare_emission(model.dynamics[j], j);
    la[j] += emission_with(em, model.dynamics[j], s_1, a_1, s_2);
  }
  la.array() -= logsumexp(la);
  ForwardState st;
  st.log_alpha = la;
  st.t = 1;
  st.phase_estimate = argmax_low(la);
  return st;
}

ForwardState filter_step(const ForwardState& state, const HmmModel& model, const Vec& s_t,
                         const Vec& a_t, const Vec& s_next) {
  if (s_t.size() != model.m || s_next.size() != model.m)
    fail(ErrorCode::invalid_argument, "state dimension does not match the model");
  check_interaction(model.weights, a_t);
  const int N = model.n_phases;
  if (static_cast<int>(state.log_alpha.size()) != N)
    fail(ErrorCode::invalid_argument, "forward state does not match the model");
  Mat logP(N, N);
  for (int i = 0; i < N; ++i) logP.row(i) = log_transition_row(model.weights, i, a_t);
  Vec la(N);
  for (int j = 0; j < N; ++j) {
    EmissionModel em = prepare_emission(model.dynamics[j], j);
    la[j] = logsumexp(state.log_alpha + logP.col(j)) +
            emission_with(em, model.dynamics[j], s_t, a_t, s_next);
  }
  la.array() -= logsumexp(la);
  ForwardState st;
  st.log_alpha = la;
  st.t = state.t + 1;
  st.phase_estimate = argmax_low(la);
  return st;
}

std::vector<Vec> predict_states(const HmmModel& model, int j, const Demonstration& demo) {
  if (j < 0 || j >= model.n_phases) fail(ErrorCode::invalid_argument, "phase index out of range");
  check_chain_inputs(model, demo);
  const PhaseDynamics& dyn = model.dynamics[j];
  std::vector<Vec> out;
  out.reserve(static_cast<size_t>(demo.length() - 1));
  for (int t = 0; t + 1 < demo.length(); ++t)
    out.push_back(dyn.A * demo.points[t].s + dyn.B * interaction(demo, t));
  return out;
}

double error_variance(const std::vector<Vec>& predicted, const std::vector<Vec>& actual) {
  if (predicted.size() != actual.size())
    fail(ErrorCode::invalid_argument, "prediction and reference counts differ");
  if (predicted.empty()) fail(ErrorCode::invalid_argument, "no sample pairs");
  double acc = 0.0;
  for (size_t i = 0; i < predicted.size(); ++i) {
    if (predicted[i].size() != actual[i].size())
      fail(ErrorCode::invalid_argument, "state dimension mismatch in error_variance");
    acc += (predicted[i] - actual[i]).squaredNorm();
  }
  return acc / static_cast<double>(predicted.size());
}

}  // namespace phaseseg
