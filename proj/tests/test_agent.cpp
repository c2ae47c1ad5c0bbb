#include "fgts/diagnostics.hpp"

#include <gtest/gtest.h>

using namespace fgts;

TEST(TsBanditStep, PointMassIsDeterministic) {
  const FiniteInstance inst = counterexample_env(5);
  Vector prior = Vector::Zero(5);
  prior[2] = 1.0;
  ThompsonAgent agent(DiscretePosterior(inst.model, prior, LossSpec{}));
  Rng rng(1);
  for (int i = 0; i < 50; ++i) EXPECT_EQ(ts_bandit_step(agent, inst.env, 0, rng).action, Action(std::size_t{0}));
}

TEST(TsBanditStep, ActionMarginalIsPosteriorMixture) {
  const FiniteInstance inst = counterexample_env(10);
  Rng rng(2);
  const int trials = 100000;
  int second = 0;
  for (int i = 0; i < trials; ++i) {
    ThompsonAgent agent(DiscretePosterior(inst.model, inst.prior, LossSpec{}));
    if (ts_bandit_step(agent, inst.env, 0, rng).action == Action(std::size_t{1})) ++second;
  }
  const double p = 0.1, se = std::sqrt(p * (1 - p) / trials);
  EXPECT_LE(std::abs(second / static_cast<double>(trials) - p), 3.0 * se);
}

TEST(TsBanditStep, MarginalMatchesMixtureAtLaterRound) {
  // After a fixed history, P(a) = sum over members choosing a of their weight.
  Rng rng(3);
  const FiniteInstance inst = random_tabular_instance(rng, 6, 3);
  DiscretePosterior base(inst.model, inst.prior, LossSpec{1.0, 0.2, 1.0});
  for (int s = 0; s < 10; ++s) {
    const Action a(static_cast<std::size_t>(s % 3));
    base.observe({0, a, sample_reward(inst.env, 0, a, rng)});
  }
  const Vector w = base.weights();
  Vector pi = Vector::Zero(3);
  for (std::size_t j = 0; j < 6; ++j)
    pi[static_cast<Eigen::Index>(greedy_action(inst.model, Param(j), 0, FiniteActions{3}).index())] += w[static_cast<Eigen::Index>(j)];
  const int trials = 20000;
  Vector counts = Vector::Zero(3);
  for (int i = 0; i < trials; ++i) {
    ThompsonAgent agent(base);
    counts[static_cast<Eigen::Index>(ts_bandit_step(agent, inst.env, 0, rng).action.index())] += 1.0;
  }
  for (Eigen::Index a = 0; a < 3; ++a) {
    const double se = std::sqrt(pi[a] * (1 - pi[a]) / trials);
    EXPECT_LE(std::abs(counts[a] / trials - pi[a]), 3.0 * se + 1e-12);
  }
}

TEST(RunBandit, TruthWeightGrowsOnceDrawn) {
  const FiniteInstance inst = counterexample_env(20);
  Rng rng(4);
  ThompsonAgent agent(DiscretePosterior(inst.model, inst.prior, LossSpec{0.25, 0.0, 1.0}));
  bool found = false;
  double last = 0.0;
  for (std::size_t t = 1; t <= 400; ++t) {
    const StepOutcome step = ts_bandit_step(agent, inst.env, 0, rng);
    const double w0 = agent.posterior().weights()[0];
    if (found && step.action == Action(std::size_t{1})) EXPECT_GT(w0, last);
    if (step.action == Action(std::size_t{1})) found = true;
    last = w0;
  }
  EXPECT_TRUE(found);
  EXPECT_GT(last, 0.99);
}

TEST(RunBandit, SingleActionAndSingletonClassHaveNoRegret) {
  TabularModel t;
  t.table = {{{0.3}}, {{0.8}}};
  const BanditEnv env(t, Param(std::size_t{0}), {FiniteActions{1}}, RewardNoise{NoiseKind::Bernoulli, 0.0});
  ThompsonAgent agent(DiscretePosterior(t, Vector::Constant(2, 0.5), LossSpec{}));
  Rng rng(5);
  for (const auto& r : run_bandit(env, agent, 30, rng)) EXPECT_EQ(r.regret, 0.0);

  const FiniteInstance single = counterexample_env(1);
  ThompsonAgent agent1(DiscretePosterior(single.model, single.prior, LossSpec{}));
  for (const auto& r : run_bandit(single.env, agent1, 30, rng)) EXPECT_EQ(r.cumulative, 0.0);
}

TEST(RunBandit, RecordsArePrefixSumsAndDeterministic) {
  const FiniteInstance inst = counterexample_env(8);
  auto run = [&] {
    ThompsonAgent agent(DiscretePosterior(inst.model, inst.prior, LossSpec{0.25, 0.1, 1.0}));
    Rng rng(6);
    return run_bandit(inst.env, agent, 100, rng, RunLabel{3, 0.1, 6});
  };
  const auto a = run(), b = run();
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sum += a[i].regret;
    EXPECT_EQ(a[i].cumulative, sum);
    EXPECT_GE(a[i].regret, 0.0);
    EXPECT_EQ(a[i].t, i + 1);
    EXPECT_EQ(a[i].run_id, 3u);
    EXPECT_EQ(a[i].regret, b[i].regret);
  }
  EXPECT_THROW(([&] {
                 ThompsonAgent agent(DiscretePosterior(inst.model, inst.prior, LossSpec{}));
                 Rng rng(1);
                 run_bandit(inst.env, agent, 0, rng);
               }()),
               InvalidInput);
}

TEST(RunBandit, StandardAgentMatchesSquaredLossPosterior) {
  // Reference posterior written directly from the squared-error likelihood.
  Rng rng(7);
  const FiniteInstance inst = random_tabular_instance(rng, 6, 4);
  const double eta = 0.4;
  ThompsonAgent agent(DiscretePosterior(inst.model, inst.prior, LossSpec{eta, 0.0, 1.0}));
  run_bandit(inst.env, agent, 60, rng);
  const auto& table = std::get<TabularModel>(inst.model).table;
  Vector log_w(6);
  for (std::size_t j = 0; j < 6; ++j) {
    double s = 0.0;
    for (const auto& e : agent.history()) {
      const double res = table[j][e.context][e.action.index()] - e.reward;
      s += eta * res * res;
    }
    log_w[static_cast<Eigen::Index>(j)] = std::log(1.0 / 6.0) - s;
  }
  const double mx = log_w.maxCoeff();
  Vector w = (log_w.array() - mx).exp();
  w /= w.sum();
  EXPECT_LE((agent.posterior().weights() - w).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(InstantaneousRegret, Examples) {
  const FiniteInstance inst = counterexample_env(5);
  EXPECT_EQ(instantaneous_regret(inst.env, 0, Action(std::size_t{1})), 0.0);
  EXPECT_EQ(instantaneous_regret(inst.env, 0, Action(std::size_t{0})), 0.5);
  EXPECT_THROW(instantaneous_regret(inst.env, 0, Action(std::size_t{2})), InvalidInput);
  LinearPaperOptions opt;
  opt.arm_seed = 1;
  const LinearInstance lin = linear_env_paper(opt);
  const auto& arms = std::get<ArmList>(lin.env.action_set(0)).arms;
  const Vector a = arms.row(4).transpose();
  EXPECT_NEAR(instantaneous_regret(lin.env, 0, Action(a)), 1.0 - a[1], 1e-15);
}

TEST(RecommendedLambda, Examples) {
  // ln N = 16, K = 2, T = 100.
  EXPECT_NEAR(recommended_lambda_finite(static_cast<std::size_t>(std::llround(std::exp(16.0))), 2, 100.0), 0.1, 1e-6);
  EXPECT_DOUBLE_EQ(recommended_lambda_finite(1, 3, 50.0, 0.0, 0.7), 0.7 / std::sqrt(5.0));
  const double a = recommended_lambda_finite(50, 2, 100.0);
  const double b = recommended_lambda_finite(50, 2, 200.0);
  EXPECT_NEAR(a / b, std::sqrt(2.0), 1e-12);
  EXPECT_THROW(recommended_lambda_finite(5, 2, 0.0), InvalidInput);
  EXPECT_THROW(recommended_lambda_finite(5, 0, 10.0), InvalidInput);
}

TEST(MdpAgent, SingletonTrueFamilyHasNoRegret) {
  MdpInstance inst = counterexample_mdp(3, 4);
  QFunctionFamily fam;
  fam.members = {inst.family.members[0]};
  fam.prior = Vector::Ones(1);
  MdpAgent agent(fam, EpisodeLossSpec{default_mdp_eta(3, 1.0), 0.0});
  Rng rng(8);
  for (const auto& r : run_mdp(inst.spec, agent, 25, rng)) EXPECT_EQ(r.regret, 0.0);
}

TEST(MdpAgent, SingleLevelLossIsBanditLoss) {
  const MdpInstance mdp = counterexample_mdp(1, 6);
  const FiniteInstance bandit = counterexample_env(6);
  Rng rng(9);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t j = static_cast<std::size_t>(trial % 6);
    const std::size_t a = static_cast<std::size_t>(trial % 2);
    const double r = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    Trajectory traj;
    traj.steps.push_back({0, a, r, mdp.spec.step(0, 0, a).mean_reward});
    const EpisodeLossSpec es{0.25, 0.3};
    const double episode = episode_loss(es, mdp.spec, mdp.family.members[j], traj);
    const double b = feelgood_loss(LossSpec{0.25, 0.3, kInfinity}, bandit.model, Param(j), 0, FiniteActions{2}, Action(a), r);
    EXPECT_NEAR(episode, b, 1e-15);
  }
}

TEST(MdpAgent, DecoyPathKeepsUniformPosteriorWithoutFeelGood) {
  const MdpInstance inst = counterexample_mdp(2, 10);
  Rng rng(10);
  MdpAgent plain(inst.family, EpisodeLossSpec{0.25, 0.0});
  MdpAgent feelgood(inst.family, EpisodeLossSpec{0.25, 0.2});
  for (int ep = 0; ep < 30; ++ep) {
    const Trajectory traj = mdp_rollout(inst.spec, inst.family.members[3], 0, rng);
    plain.observe(inst.spec, traj);
    feelgood.observe(inst.spec, traj);
  }
  const Vector w = plain.weights();
  for (Eigen::Index j = 0; j < 10; ++j) EXPECT_NEAR(w[j], 0.1, 1e-14);
  const Vector fg = feelgood.weights();
  for (Eigen::Index j = 1; j < 10; ++j) EXPECT_GT(fg[0], fg[j]);
  EXPECT_GT(fg[0], 0.5);
}

TEST(MdpAgent, DefaultEta) {
  EXPECT_DOUBLE_EQ(default_mdp_eta(2, 1.0), 0.25);
  EXPECT_DOUBLE_EQ(default_mdp_eta(8, 1.0), 0.125);
  EXPECT_DOUBLE_EQ(default_mdp_eta(1, 2.0), 0.25);
}

TEST(MdpAgent, RegretRecordsNonnegative) {
  const MdpInstance inst = counterexample_mdp(3, 8);
  MdpAgent agent(inst.family, EpisodeLossSpec{default_mdp_eta(3, 1.0), 0.1});
  Rng rng(11);
  double prev = 0.0;
  for (const auto& r : run_mdp(inst.spec, agent, 50, rng)) {
    EXPECT_GE(r.regret, 0.0);
    EXPECT_GE(r.cumulative, prev);
    prev = r.cumulative;
  }
}
