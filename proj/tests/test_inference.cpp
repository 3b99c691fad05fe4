#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "common/error.hpp"
#include "common/numeric.hpp"
#include "helpers.hpp"
#include "inference/inference.hpp"
#include "learning/learning.hpp"

using namespace phaseseg;

TEST_CASE("emission log-density matches hand values") {
  std::vector<PhaseDynamics> dyn(1);
  dyn[0].A = Mat::Identity(1, 1);
  dyn[0].B = Mat::Zero(1, 2);
  dyn[0].Sigma = Mat::Identity(1, 1);
  HmmModel model = make_model(1, 1, 2, dyn, zero_weights(1, 2));

  Vec s0 = Vec::Zero(1), iv = (Vec(2) << 0.0, 1.0).finished();
  CHECK(emission_loglik(model, 0, s0, iv, Vec::Zero(1)) ==
        doctest::Approx(-0.91893853320467267).epsilon(1e-12));
  CHECK(emission_loglik(model, 0, s0, iv, Vec::Ones(1)) ==
        doctest::Approx(-1.4189385332046727).epsilon(1e-12));

  std::vector<PhaseDynamics> dyn2(1);
  dyn2[0].A = Mat::Identity(2, 2);
  dyn2[0].B = Mat::Zero(2, 2);
  dyn2[0].Sigma = 0.01 * Mat::Identity(2, 2);
  HmmModel model2 = make_model(1, 2, 2, dyn2, zero_weights(1, 2));
  Vec s = (Vec(2) << 0.3, -0.7).finished();
  CHECK(emission_loglik(model2, 0, s, iv, s) ==
        doctest::Approx(2.7672931195787453).epsilon(1e-12));
}

TEST_CASE("transition matrix matches hand softmax") {
  TransitionWeights w = zero_weights(2, 2);
  w.w[0].row(1) << 1.0, 0.0;
  Vec a = (Vec(2) << std::log(3.0), 1.0).finished();
  Mat P = transition_matrix(w, a);
  CHECK(P(0, 0) == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(P(0, 1) == doctest::Approx(0.75).epsilon(1e-14));
  CHECK(P(1, 0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(P(1, 1) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("transition matrix rows are stochastic and shift invariant") {
  std::mt19937_64 rng(11);
  TransitionWeights w = zero_weights(3, 4);
  w.w0 = testutil::randn_mat(rng, 3, 4);
  for (auto& wi : w.w) wi = testutil::randn_mat(rng, 3, 4, 2.0);
  Vec a = testutil::randn_vec(rng, 4);

  Mat P = transition_matrix(w, a);
  for (int i = 0; i < 3; ++i) CHECK(P.row(i).sum() == doctest::Approx(1.0).epsilon(1e-12));

  TransitionWeights shifted = w;
  Vec c = testutil::randn_vec(rng, 4);
  for (int j = 0; j < 3; ++j) shifted.w[1].row(j) += c.transpose();
  Mat P2 = transition_matrix(shifted, a);
  CHECK((P - P2).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("initial distribution matches hand softmax") {
  TransitionWeights w = zero_weights(3, 2);
  w.w0(0, 0) = 5.0;
  Vec a = (Vec(2) << 1.0, 0.0).finished();
  Vec pi = initial_distribution(w, a);
  const double z = std::exp(5.0) + 2.0;
  CHECK(pi[0] == doctest::Approx(std::exp(5.0) / z).epsilon(1e-14));
  CHECK(pi[1] == doctest::Approx(1.0 / z).epsilon(1e-14));
  CHECK(pi.sum() == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("forward-backward matches brute-force path enumeration") {
  std::mt19937_64 rng(42);
  std::uniform_int_distribution<int> pick_n(1, 3), pick_m(1, 2), pick_t(2, 6);
  for (int trial = 0; trial < 20; ++trial) {
    const int N = pick_n(rng), m = pick_m(rng), T = pick_t(rng);
    HmmModel model = testutil::random_model(rng, N, m, 2);
    Demonstration demo = testutil::random_demo(rng, m, 2, T);
    PosteriorMarginals post = forward_backward(model, demo);
    testutil::BruteForceResult ref = testutil::brute_force_posteriors(model, demo);

    CHECK(std::abs(post.loglik - ref.loglik) < 1e-10 * std::max(1.0, std::abs(ref.loglik)));
    CHECK((post.gamma - ref.gamma).cwiseAbs().maxCoeff() < 1e-10);
    REQUIRE(post.zeta.size() == ref.zeta.size());
    for (size_t k = 0; k < post.zeta.size(); ++k)
      CHECK((post.zeta[k] - ref.zeta[k]).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("posterior consistency properties") {
  std::mt19937_64 rng(43);
  HmmModel model = testutil::random_model(rng, 3, 2, 2);
  Demonstration demo = testutil::random_demo(rng, 2, 2, 15);
  PosteriorMarginals post = forward_backward(model, demo);

  for (int t = 0; t < post.gamma.rows(); ++t)
    CHECK(post.gamma.row(t).sum() == doctest::Approx(1.0).epsilon(1e-12));
  for (size_t k = 0; k < post.zeta.size(); ++k) {
    CHECK(post.zeta[k].sum() == doctest::Approx(1.0).epsilon(1e-12));
    // row marginal of zeta_k is gamma_k, column marginal is gamma_{k+1}
    for (int i = 0; i < 3; ++i) {
      CHECK(post.zeta[k].row(i).sum() ==
            doctest::Approx(post.gamma(static_cast<int>(k), i)).epsilon(1e-10));
      CHECK(post.zeta[k].col(i).sum() ==
            doctest::Approx(post.gamma(static_cast<int>(k) + 1, i)).epsilon(1e-10));
    }
  }
}

TEST_CASE("single-phase posteriors are degenerate") {
  std::mt19937_64 rng(44);
  HmmModel model = testutil::random_model(rng, 1, 2, 2);
  Demonstration demo = testutil::random_demo(rng, 2, 2, 10);
  PosteriorMarginals post = forward_backward(model, demo);
  CHECK((post.gamma.array() == 1.0).all());

  double ll = 0.0;
  for (int t = 0; t + 1 < demo.length(); ++t)
    ll += emission_loglik(model, 0, demo.points[t].s, interaction(demo, t),
                          demo.points[t + 1].s);
  CHECK(post.loglik == doctest::Approx(ll).epsilon(1e-12));
}

TEST_CASE("causal filter agrees with the forward pass") {
  std::mt19937_64 rng(45);
  HmmModel model = testutil::random_model(rng, 3, 2, 2);
  Demonstration demo = testutil::random_demo(rng, 2, 2, 12);
  PosteriorMarginals post = forward_backward(model, demo);

  ForwardState fs =
      filter_init(model, demo.points[0].s, interaction(demo, 0), demo.points[1].s);
  for (int t = 1; t + 1 < demo.length(); ++t)
    fs = filter_step(fs, model, demo.points[t].s, interaction(demo, t), demo.points[t + 1].s);

  // the smoothed marginal at the last chain position equals the filtered one
  Vec alpha = fs.log_alpha.array().exp();
  const int last = static_cast<int>(post.gamma.rows()) - 1;
  CHECK((alpha.transpose() - post.gamma.row(last)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(fs.t == demo.length() - 1);
}

TEST_CASE("segment labels match incremental filtering") {
  std::mt19937_64 rng(46);
  HmmModel model = testutil::random_model(rng, 2, 2, 3);
  Demonstration demo = testutil::random_demo(rng, 2, 3, 10);
  Mat probs;
  std::vector<int> labels = segment(model, demo, &probs);
  REQUIRE(static_cast<int>(labels.size()) == demo.length() - 1);
  REQUIRE(probs.rows() == demo.length() - 1);

  ForwardState fs =
      filter_init(model, demo.points[0].s, interaction(demo, 0), demo.points[1].s);
  CHECK(labels[0] == fs.phase_estimate);
  for (int t = 1; t + 1 < demo.length(); ++t) {
    fs = filter_step(fs, model, demo.points[t].s, interaction(demo, t), demo.points[t + 1].s);
    CHECK(labels[static_cast<size_t>(t)] == fs.phase_estimate);
  }
  for (int t = 0; t < probs.rows(); ++t)
    CHECK(probs.row(t).sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("predict_states applies the phase dynamics") {
  std::vector<PhaseDynamics> dyn(1);
  dyn[0].A = Mat::Identity(2, 2);
  dyn[0].B = Mat::Zero(2, 3);
  dyn[0].Sigma = Mat::Identity(2, 2);
  HmmModel model = make_model(1, 2, 3, dyn, zero_weights(1, 3));
  std::mt19937_64 rng(47);
  Demonstration demo = testutil::random_demo(rng, 2, 2, 6);
  std::vector<Vec> pred = predict_states(model, 0, demo);
  REQUIRE(static_cast<int>(pred.size()) == demo.length() - 1);
  for (int t = 0; t + 1 < demo.length(); ++t)
    CHECK((pred[static_cast<size_t>(t)] - demo.points[t].s).norm() == 0.0);
}

TEST_CASE("error_variance is mean squared prediction error") {
  std::vector<Vec> pred, actual;
  const double delta = 0.25;
  std::mt19937_64 rng(48);
  for (int t = 0; t < 11; ++t) {
    Vec v = testutil::randn_vec(rng, 3);
    pred.push_back(v);
    actual.push_back(v.array() + delta);
  }
  CHECK(error_variance(pred, actual) == doctest::Approx(3 * delta * delta).epsilon(1e-12));
  CHECK(error_variance(pred, pred) == 0.0);
  pred.pop_back();
  CHECK_THROWS_AS(error_variance(pred, actual), Error);
}

TEST_CASE("dimension mismatches are rejected") {
  std::mt19937_64 rng(49);
  HmmModel model = testutil::random_model(rng, 2, 2, 3);
  Demonstration wrong = testutil::random_demo(rng, 3, 3, 6);
  CHECK_THROWS_AS(forward_backward(model, wrong), Error);
  Demonstration tiny = testutil::random_demo(rng, 2, 3, 1);
  CHECK_THROWS_AS(forward_backward(model, tiny), Error);
  CHECK_THROWS_AS(transition_matrix(model.weights, Vec::Zero(2)), Error);
}
