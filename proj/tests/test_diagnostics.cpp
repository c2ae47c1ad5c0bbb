#include "fgts/diagnostics.hpp"

#include <gtest/gtest.h>

using namespace fgts;

TEST(RegretDecomposition, RealizableTruth) {
  const FiniteInstance inst = counterexample_env(10);
  for (double b : {1.0, 2.0, kInfinity}) {
    const auto d = regret_decomposition(inst.model, Param(std::size_t{0}), 0, inst.env, FiniteActions{2}, b);
    EXPECT_EQ(d.bellman_error, d.feel_good);
    EXPECT_EQ(d.regret, 0.0);
  }
}

TEST(RegretDecomposition, DecoyHandValues) {
  const FiniteInstance inst = counterexample_env(10);
  for (std::size_t j = 1; j < 10; ++j) {
    const auto d = regret_decomposition(inst.model, Param(j), 0, inst.env, FiniteActions{2}, 1.0);
    EXPECT_DOUBLE_EQ(d.bellman_error, 0.0);
    EXPECT_DOUBLE_EQ(d.feel_good, -0.5);
    EXPECT_DOUBLE_EQ(d.regret, 0.5);
    EXPECT_EQ(d.gap(), 0.0);
  }
}

TEST(CounterexampleBound, Values) {
  EXPECT_EQ(prop1_lower_bound(1, 7), 0.0);
  EXPECT_DOUBLE_EQ(prop1_lower_bound(2, 1), 0.25);
  EXPECT_NEAR(prop1_lower_bound(20, 20), 10.0 * std::pow(0.95, 20), 1e-15);
  EXPECT_NEAR(prop1_lower_bound(20, 20), 3.585, 5e-4);
  EXPECT_THROW(prop1_lower_bound(0, 3), InvalidInput);
}

TEST(MuGrid, Geometric) {
  const MuParameter mu = MuParameter::geometric();
  ASSERT_EQ(mu.grid.size(), 61u);
  EXPECT_NEAR(mu.grid.front(), 1e-3, 1e-15);
  EXPECT_NEAR(mu.grid.back(), 1e3, 1e-9);
  for (std::size_t i = 1; i < mu.grid.size(); ++i) EXPECT_GT(mu.grid[i], mu.grid[i - 1]);
  EXPECT_THROW(MuParameter::geometric(0.0, 1.0, 5), InvalidInput);
}

TEST(DcEstimate, PointMassOnTruth) {
  const FiniteInstance inst = counterexample_env(6);
  Vector q = Vector::Zero(6);
  q[0] = 1.0;
  const auto rep = dc_estimate(q, 0, inst.model, inst.env, 1.0, MuParameter::geometric(), 2.0);
  EXPECT_EQ(rep.lhs, 0.0);
  EXPECT_EQ(rep.lower_bound, 0.0);
}

TEST(DcEstimate, HandComputedTwoMembers) {
  // Member 0 picks action 0 with residuals (0.2, -0.1); member 1 picks
  // action 1 with residuals (0.3, 0.4). q = (0.25, 0.75).
  TabularModel t;
  t.table = {{{0.7, 0.4}}, {{0.8, 0.9}}};
  TabularModel truth;
  truth.table = {{{0.5, 0.5}}};
  const BanditEnv env(truth, Param(std::size_t{0}), {FiniteActions{2}}, RewardNoise{});
  Vector q(2);
  q << 0.25, 0.75;
  const auto rep = dc_estimate(q, 0, t, env, 1.0, MuParameter::geometric(), 2.0);
  const double lhs = 0.25 * 0.2 + 0.75 * 0.4;
  const double a = 0.25 * (0.25 * 0.04 + 0.75 * 0.09) + 0.75 * (0.25 * 0.01 + 0.75 * 0.16);
  EXPECT_NEAR(rep.lhs, lhs, 1e-15);
  EXPECT_NEAR(rep.decoupled_error, a, 1e-15);
  EXPECT_NEAR(rep.lower_bound, lhs * lhs / a, 1e-14);
  EXPECT_NEAR(rep.optimal_rhs, std::sqrt(2.0 * a), 1e-15);
  EXPECT_NEAR(rep.optimal_mu, std::sqrt(2.0 / (4.0 * a)), 1e-14);
  EXPECT_GE(rep.grid_rhs, rep.optimal_rhs - 1e-15);
  EXPECT_LE(rep.grid_rhs, 1.01 * rep.optimal_rhs);
  EXPECT_LE(rep.lower_bound, 2.0);
}

TEST(DcEstimate, ZeroErrorWithPositiveLhsIsContradiction) {
  // A signed q (outside the simplex) is the only way to reach this branch.
  Vector q(2);
  q << 1.0, -1.0;
  Matrix residuals(2, 2);
  residuals << 0.0, 1.0, 0.0, 1.0;
  EXPECT_THROW(decoupling_terms(q, {1, 0}, residuals, 2.0, MuParameter::geometric()), Contradiction);
}

TEST(DcEstimate, SmallDecouplingSweeps) {
  Rng rng(1);
  const MuParameter mu = MuParameter::geometric();
  for (int i = 0; i < 30; ++i) {
    const std::size_t k = 1 + static_cast<std::size_t>(i % 5);
    const FiniteInstance inst = random_tabular_instance(rng, 6, k);
    const auto linear = random_linear_embed_instance(rng, k, k + 3, 6);
    for (int j = 0; j < 20; ++j) {
      const Vector q = random_simplex(rng, 6, 0.3);
      EXPECT_LE(dc_estimate(q, 0, inst.model, inst.env, 1.0, mu, double(k)).lower_bound, double(k) + 1e-9);
      EXPECT_LE(dc_estimate(q, 0, linear.model, linear.env, 1.0, mu, double(k)).lower_bound, double(k) + 1e-9);
    }
  }
}

TEST(EigenIdentity, PointMassSingleArm) {
  LinearEmbedModel m;
  Matrix phi(1, 2);
  phi << 0.3, 0.8;
  m.features = {phi};
  Vector w(2);
  w << 0.5, -0.2;
  m.weights = {{w}};
  LinearEmbedModel truth;
  truth.features = {phi};
  Vector ws(2);
  ws << 0.1, 0.4;
  truth.weights = {{ws}};
  const BanditEnv env(truth, Param(std::size_t{0}), {FiniteActions{1}}, RewardNoise{});
  const auto rep = appendix_b_identity_check(Vector::Ones(1), 0, m, env);
  const double res = phi.row(0).dot(w - ws);
  EXPECT_NEAR(rep.lhs, res * res, 1e-15);
  EXPECT_NEAR(rep.rhs, res * res, 1e-14);
  EXPECT_EQ(rep.rank, 1u);
}

TEST(EigenIdentity, ZeroResidualWeights) {
  Rng rng(2);
  auto inst = random_linear_embed_instance(rng, 3, 4, 5);
  const Vector ws = std::get<LinearEmbedModel>(inst.env.truth_model()).weights[0][0];
  for (auto& w : inst.model.weights) w[0] = ws;
  const auto rep = appendix_b_identity_check(random_simplex(rng, 5), 0, inst.model, inst.env);
  EXPECT_EQ(rep.lhs, 0.0);
  EXPECT_NEAR(rep.rhs, 0.0, 1e-30);
}

TEST(EigenIdentity, RandomInstancesAgree) {
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    const auto inst = random_linear_embed_instance(rng, 3, 4, 5);
    const auto rep = appendix_b_identity_check(random_simplex(rng, 5, 0.3), 0, inst.model, inst.env);
    EXPECT_TRUE(rep.eigen_ok);
    EXPECT_LE(rep.gap, 1e-10);
  }
}

TEST(EigenIdentity, RankDeficientCovariance) {
  // Every member picks the same arm, so Sigma has rank one.
  LinearEmbedModel m;
  Matrix phi(3, 3);
  phi << 1, 0, 0, 0, 0.1, 0, 0, 0, 0.1;
  m.features = {phi};
  m.weights = {{Vector::Constant(3, 0.9)}, {(Vector(3) << 0.8, 0.1, 0.1).finished()}};
  LinearEmbedModel truth;
  truth.features = {phi};
  truth.weights = {{Vector::Constant(3, 0.2)}};
  const BanditEnv env(truth, Param(std::size_t{0}), {FiniteActions{3}}, RewardNoise{});
  Vector q(2);
  q << 0.4, 0.6;
  const auto rep = appendix_b_identity_check(q, 0, m, env);
  EXPECT_EQ(rep.rank, 1u);
  EXPECT_LE(rep.gap, 1e-12);
}

TEST(BellmanError, OptimalQIsZero) {
  Rng rng(4);
  const MdpSpec spec = random_mdp(rng, 3, 4, 3);
  const QFunction q = optimal_q(spec);
  for (std::size_t h = 0; h < 3; ++h)
    for (std::size_t x = 0; x < 4; ++x)
      for (std::size_t a = 0; a < 3; ++a) EXPECT_NEAR(bellman_error(spec, q, h, x, a), 0.0, 1e-15);
}

TEST(BellmanError, SingleLevel) {
  Rng rng(5);
  const MdpSpec spec = random_mdp(rng, 1, 2, 3);
  const QFunction f = random_q_function(rng, spec);
  for (std::size_t x = 0; x < 2; ++x)
    for (std::size_t a = 0; a < 3; ++a)
      EXPECT_DOUBLE_EQ(bellman_error(spec, f, 0, x, a), f.value(0, x, a) - spec.step(0, x, a).mean_reward);
  EXPECT_THROW(bellman_error(spec, f, 1, 0, 0), InvalidInput);
}

TEST(BellmanError, CounterexampleDecoy) {
  // N = 10, H = 2, decoy index 3: tilt 0.16.
  const MdpInstance inst = counterexample_mdp(2, 10);
  const QFunction& f = inst.family.members[3];
  EXPECT_NEAR(bellman_error(inst.spec, f, 0, 0, 0), 1.0 - (0.5 + 0.5), 1e-15);
  EXPECT_NEAR(bellman_error(inst.spec, f, 0, 0, 1), 0.66 - (1.0 + 0.5), 1e-15);
  EXPECT_NEAR(bellman_error(inst.spec, f, 1, 0, 0), 0.5 - 0.5, 1e-15);
  EXPECT_NEAR(bellman_error(inst.spec, f, 1, 0, 1), 0.16 - 1.0, 1e-15);
  EXPECT_NEAR(bellman_error(inst.spec, f, 1, 1, 0), 0.5 - 1.0, 1e-15);
}

TEST(MdpDecomposition, OptimalAllZero) {
  const MdpInstance inst = counterexample_mdp(4, 5);
  const auto d = mdp_regret_decomposition_check(inst.spec, inst.family.members[0], 0);
  EXPECT_EQ(d.regret, 0.0);
  EXPECT_EQ(d.sum_bellman_error, 0.0);
  EXPECT_EQ(d.feel_good, 0.0);
}

TEST(MdpDecomposition, SingleLevelIsBanditIdentity) {
  const MdpInstance mdp = counterexample_mdp(1, 8);
  const FiniteInstance bandit = counterexample_env(8);
  for (std::size_t j = 0; j < 8; ++j) {
    const auto d = mdp_regret_decomposition_check(mdp.spec, mdp.family.members[j], 0);
    const auto e = regret_decomposition(bandit.model, Param(j), 0, bandit.env, FiniteActions{2}, kInfinity);
    EXPECT_DOUBLE_EQ(d.regret, e.regret);
    EXPECT_DOUBLE_EQ(d.sum_bellman_error, e.bellman_error);
    EXPECT_DOUBLE_EQ(d.feel_good, e.feel_good);
  }
}

TEST(MdpDecomposition, RandomMdps) {
  Rng rng(6);
  for (int i = 0; i < 100; ++i) {
    const MdpSpec spec = random_mdp(rng, 3, 4, 3);
    const QFunction f = random_q_function(rng, spec);
    EXPECT_LE(mdp_regret_decomposition_check(spec, f, static_cast<std::size_t>(i % 4)).gap, 1e-10);
  }
}

TEST(MdpDcEstimate, DefaultClaimIsTabularDimension) {
  const MdpInstance inst = counterexample_mdp(3, 4);
  const auto rep0 = mdp_dc_estimate(Vector::Constant(4, 0.25), inst.spec, inst.family, 0, 0, MuParameter::geometric());
  EXPECT_EQ(rep0.claimed_k, 2.0);
  const auto rep1 = mdp_dc_estimate(Vector::Constant(4, 0.25), inst.spec, inst.family, 0, 1, MuParameter::geometric());
  EXPECT_EQ(rep1.claimed_k, 4.0);
  EXPECT_THROW(mdp_dc_estimate(Vector::Constant(4, 0.25), inst.spec, inst.family, 0, 3, MuParameter::geometric()),
               InvalidInput);
}

TEST(BayesianRegret, SingletonPriorMatchesFrequentist) {
  Rng rng(7);
  FiniteInstance inst = random_tabular_instance(rng, 4, 3);
  inst.prior = Vector::Zero(4);
  inst.prior[2] = 1.0;
  const LossSpec spec{0.25, 0.0, 1.0};
  const RegretCurve bayes = bayesian_regret_experiment(inst, spec, 30, 5, 1);
  const RegretCurve freq = frequentist_regret_curve(inst, Param(std::size_t{2}), spec, 30, 5, 1);
  for (std::size_t r : bayes.truths) EXPECT_EQ(r, 2u);
  EXPECT_EQ(bayes.mean_cumulative, freq.mean_cumulative);
}

TEST(BayesianRegret, CurvesNonnegativeNondecreasing) {
  const FiniteInstance inst = counterexample_env(10);
  const RegretCurve c = bayesian_regret_experiment(inst, LossSpec{0.25, 0.0, 1.0}, 60, 40, 3);
  double prev = 0.0;
  for (double v : c.mean_cumulative) {
    EXPECT_GE(v, prev);
    prev = v;
  }
  EXPECT_EQ(c.runs, 40u);
  EXPECT_EQ(c.truths.size(), 40u);
}

TEST(LogPartition, EmptyHistoryIsZero) {
  const FiniteInstance inst = counterexample_env(7);
  EXPECT_NEAR(log_partition({}, LossSpec{}, inst.model, inst.prior, inst.env), 0.0, 1e-15);
  const std::vector<HistoryEntry> h{{0, Action(std::size_t{1}), 1.0}, {0, Action(std::size_t{0}), 0.0}};
  EXPECT_TRUE(std::isfinite(log_partition(h, LossSpec{0.25, 0.1, 1.0}, inst.model, inst.prior, inst.env)));
}

TEST(Seeding, SplitMixReference) {
  // First output of the SplitMix64 reference generator seeded with 0.
  EXPECT_EQ(splitmix64(0), 0xe220a8397b1dcdafULL);
  EXPECT_NE(derive_seed(1, 0, 0), derive_seed(1, 1, 0));
  EXPECT_NE(derive_seed(1, 0, 0), derive_seed(1, 0, 1));
  EXPECT_EQ(derive_seed(5, 2, 3), derive_seed(5, 2, 3));
}
