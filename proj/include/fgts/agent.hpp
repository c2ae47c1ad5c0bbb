#pragma once

#include "fgts/mdp.hpp"
#include "fgts/posterior.hpp"

#include <cmath>
#include <cstdint>
#include <vector>

namespace fgts {

/// One row of a regret series. Regret uses true means, never samples.
struct RegretRecord {
  std::size_t run_id = 0;
  std::size_t t = 0;
  double regret = 0.0;
  double cumulative = 0.0;
  double lambda = 0.0;
  std::uint64_t seed = 0;
};

struct RunLabel {
  std::size_t run_id = 0;
  double lambda = 0.0;
  std::uint64_t seed = 0;
};

/// f*(x) - f*(x, a).
inline double instantaneous_regret(const BanditEnv& env, Context x, const Action& a) {
  if (!contains(env.action_set(x), a)) throw InvalidInput("action: not offered in this context");
  return env.optimal_value(x) - env.mean(x, a);
}

/// Thompson Sampling over a posterior representation (exact discrete or SGLD).
template <class P>
class ThompsonAgent {
 public:
  explicit ThompsonAgent(P posterior) : posterior_(std::move(posterior)) {}

  [[nodiscard]] P& posterior() { return posterior_; }
  [[nodiscard]] const P& posterior() const { return posterior_; }
  [[nodiscard]] const std::vector<HistoryEntry>& history() const { return history_; }

  void record(const HistoryEntry& e) {
    history_.push_back(e);
    posterior_.observe(e);
  }

 private:
  P posterior_;
  std::vector<HistoryEntry> history_;
};

struct StepOutcome {
  Param theta;
  Action action;
  double reward = 0.0;
};

/// Draw theta_t, act greedily, observe, update.
template <class P, class Rng>
StepOutcome ts_bandit_step(ThompsonAgent<P>& agent, const BanditEnv& env, Context x, Rng& rng) {
  Param theta = sample_posterior(agent.posterior(), rng, std::optional<Context>(x));
  Action a = greedy_action(agent.posterior().model(), theta, x, env.action_set(x));
  const double r = sample_reward(env, x, a, rng);
  agent.record(HistoryEntry{x, a, r});
  return {std::move(theta), std::move(a), r};
}

template <class P, class Rng>
std::vector<RegretRecord> run_bandit(const BanditEnv& env, ThompsonAgent<P>& agent, std::size_t rounds, Rng& rng,
                                     const RunLabel& label = {}) {
  if (rounds < 1) throw InvalidInput("T: must be at least 1");
  std::vector<RegretRecord> out;
  out.reserve(rounds);
  double cumulative = 0.0;
  for (std::size_t t = 1; t <= rounds; ++t) {
    const Context x = env.contexts().next(t, agent.history(), rng);
    const StepOutcome step = ts_bandit_step(agent, env, x, rng);
    const double regret = instantaneous_regret(env, x, step.action);
    cumulative += regret;
    out.push_back({label.run_id, t, regret, cumulative, label.lambda, label.seed});
  }
  return out;
}

/// lambda = delta' / sqrt(K + 2) + sqrt(ln N / (4 (K + 2) T)) for a finite class
/// of N members, at most K actions per context, b = 1 and eta = 0.25.
/// `delta` (misspecification level) is validated but does not enter the value.
inline double recommended_lambda_finite(std::size_t n, std::size_t k, double horizon, double delta = 0.0,
                                        double delta_prime = 0.0) {
  if (n < 1) throw InvalidInput("N: must be at least 1");
  if (k < 1) throw InvalidInput("K: must be at least 1");
  if (!(horizon > 0.0)) throw InvalidInput("T: must be positive");
  if (delta < 0.0 || delta > 0.5) throw InvalidInput("delta: must lie in [0, 0.5]");
  if (delta_prime < 0.0) throw InvalidInput("delta_prime: must be nonnegative");
  const double k2 = static_cast<double>(k) + 2.0;
  return delta_prime / std::sqrt(k2) + std::sqrt(std::log(static_cast<double>(n)) / (4.0 * k2 * horizon));
}

// ---------------------------------------------------------------------------
// Contextual MDP
// ---------------------------------------------------------------------------

/// eta for MDP runs: min(0.25, 1 / (H b^2)).
inline double default_mdp_eta(std::size_t horizon, double b) {
  return std::min(0.25, 1.0 / (static_cast<double>(horizon) * b * b));
}

struct EpisodeLossSpec {
  double eta = 0.25;
  double lambda = 0.0;
};

/// Squared temporal-difference loss of f at level h of a trajectory:
/// eta (f^h(x^h, a^h) - r^h - f^{h+1}(x^{h+1}))^2.
inline double stage_loss(const EpisodeLossSpec& spec, const MdpSpec& mdp, const QFunction& f, const Trajectory& traj,
                         std::size_t h) {
  const auto& st = traj.steps.at(h);
  const std::size_t next = mdp.step(h, st.state, st.action).next;
  const double target = st.reward + f.state_value(h + 1, next);
  const double diff = f.value(h, st.state, st.action) - target;
  return spec.eta * diff * diff;
}

/// Feel-Good stage: -lambda f^1(x^1).
inline double feelgood_stage_loss(const EpisodeLossSpec& spec, const QFunction& f, std::size_t x1) {
  return -spec.lambda * f.state_value(0, x1);
}

inline double episode_loss(const EpisodeLossSpec& spec, const MdpSpec& mdp, const QFunction& f,
                           const Trajectory& traj) {
  if (traj.steps.empty()) throw InvalidInput("trajectory: empty");
  double total = feelgood_stage_loss(spec, f, traj.steps.front().state);
  for (std::size_t h = 0; h < traj.steps.size(); ++h) total += stage_loss(spec, mdp, f, traj, h);
  return total;
}

/// Exact posterior over a finite Q-function family.
class MdpAgent {
 public:
  MdpAgent(QFunctionFamily family, EpisodeLossSpec spec) : family_(std::move(family)), spec_(spec) {
    if (family_.members.empty()) throw InvalidInput("family: empty");
    if (static_cast<std::size_t>(family_.prior.size()) != family_.members.size())
      throw InvalidInput("family: prior size does not match member count");
    if (!(spec_.eta > 0.0) || spec_.lambda < 0.0) throw InvalidInput("episode loss: need eta > 0, lambda >= 0");
    log_prior_ = detail::checked_log_prior(family_.prior);
    cumulative_loss_ = Vector::Zero(log_prior_.size());
  }

  [[nodiscard]] Vector log_weights() const { return detail::normalize_log_weights(log_prior_ - cumulative_loss_); }
  [[nodiscard]] Vector weights() const { return exp_exact(log_weights()); }

  template <class Rng>
  std::size_t sample(Rng& rng) const {
    return sample_categorical(weights(), rng);
  }

  void observe(const MdpSpec& mdp, const Trajectory& traj) {
    for (std::size_t j = 0; j < family_.members.size(); ++j)
      cumulative_loss_[static_cast<Eigen::Index>(j)] += episode_loss(spec_, mdp, family_.members[j], traj);
    ++episodes_;
  }

  [[nodiscard]] const QFunctionFamily& family() const { return family_; }
  [[nodiscard]] const EpisodeLossSpec& spec() const { return spec_; }
  [[nodiscard]] const Vector& cumulative_loss() const { return cumulative_loss_; }
  [[nodiscard]] std::size_t episodes() const { return episodes_; }

 private:
  QFunctionFamily family_;
  EpisodeLossSpec spec_;
  Vector log_prior_;
  Vector cumulative_loss_;
  std::size_t episodes_ = 0;
};

struct EpisodeOutcome {
  std::size_t member = 0;
  Trajectory trajectory;
};

template <class Rng>
EpisodeOutcome ts_mdp_episode(MdpAgent& agent, const MdpSpec& mdp, std::size_t x1, Rng& rng) {
  const std::size_t j = agent.sample(rng);
  Trajectory traj = mdp_rollout(mdp, agent.family().members[j], x1, rng);
  agent.observe(mdp, traj);
  return {j, std::move(traj)};
}

/// Episodic regret V^1(x^1) - sum_h m^h along each played trajectory.
template <class Rng>
std::vector<RegretRecord> run_mdp(const MdpSpec& mdp, MdpAgent& agent, std::size_t episodes, Rng& rng,
                                  const RunLabel& label = {}) {
  if (episodes < 1) throw InvalidInput("T: must be at least 1");
  const QFunction q = optimal_q(mdp);
  std::vector<RegretRecord> out;
  out.reserve(episodes);
  std::vector<HistoryEntry> no_history;
  double cumulative = 0.0;
  for (std::size_t t = 1; t <= episodes; ++t) {
    const std::size_t x1 = mdp.initial.next(t, no_history, rng);
    const EpisodeOutcome ep = ts_mdp_episode(agent, mdp, x1, rng);
    const double regret = q.state_value(0, x1) - ep.trajectory.mean_return();
    cumulative += regret;
    out.push_back({label.run_id, t, regret, cumulative, label.lambda, label.seed});
  }
  return out;
}

}  // namespace fgts
