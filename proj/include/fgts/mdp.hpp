#pragma once

#include "fgts/environment.hpp"

#include <optional>
#include <vector>

namespace fgts {

/// Episodic MDP with deterministic transitions. Levels are 0-based
/// (level h here is stage h+1 in the usual 1-based notation); states are
/// indexed per level and actions per state. A transition out of the last
/// level has no successor.
struct MdpSpec {
  struct Transition {
    std::size_t next = 0;
    double mean_reward = 0.0;
  };

  std::size_t horizon = 0;
  std::vector<std::vector<std::vector<Transition>>> transitions;  // [h][x][a]
  RewardNoise noise{NoiseKind::Bernoulli, 0.0};
  ContextSchedule initial;

  [[nodiscard]] std::size_t num_states(std::size_t h) const { return transitions.at(h).size(); }
  [[nodiscard]] std::size_t num_actions(std::size_t h, std::size_t x) const { return transitions.at(h).at(x).size(); }

  [[nodiscard]] const Transition& step(std::size_t h, std::size_t x, std::size_t a) const {
    if (h >= horizon) throw InvalidInput("level: " + std::to_string(h) + " beyond horizon");
    if (x >= transitions[h].size()) throw InvalidInput("state: index out of range at level " + std::to_string(h));
    if (a >= transitions[h][x].size()) throw InvalidInput("action: not valid in this state");
    return transitions[h][x][a];
  }

  /// Structural checks: shape, reward range, successor validity.
  void validate() const {
    if (horizon == 0 || transitions.size() != horizon) throw InvalidEnvironment("mdp: transition levels != horizon");
    for (std::size_t h = 0; h < horizon; ++h) {
      if (transitions[h].empty()) throw InvalidEnvironment("mdp: level without states");
      for (const auto& state : transitions[h])
        for (const auto& tr : state) {
          if (tr.mean_reward < 0.0 || tr.mean_reward > 1.0) throw InvalidEnvironment("mdp: mean reward outside [0, 1]");
          if (h + 1 < horizon && tr.next >= transitions[h + 1].size())
            throw InvalidEnvironment("mdp: successor state out of range");
        }
    }
  }
};

/// Stage-indexed value table f[h][x][a]; the value after the last level is 0.
struct QFunction {
  std::vector<std::vector<std::vector<double>>> values;

  [[nodiscard]] double value(std::size_t h, std::size_t x, std::size_t a) const { return values.at(h).at(x).at(a); }

  /// max_a f^h(x, a); zero past the horizon.
  [[nodiscard]] double state_value(std::size_t h, std::size_t x) const {
    if (h >= values.size()) return 0.0;
    const auto& row = values[h].at(x);
    if (row.empty()) throw InvalidEnvironment("state without valid actions");
    double best = row[0];
    for (double v : row) best = std::max(best, v);
    return best;
  }

  /// Tie-broken greedy action (lowest index).
  [[nodiscard]] std::size_t greedy(std::size_t h, std::size_t x) const {
    const auto& row = values.at(h).at(x);
    if (row.empty()) throw InvalidEnvironment("state without valid actions");
    std::size_t best = 0;
    for (std::size_t a = 1; a < row.size(); ++a)
      if (row[a] > row[best]) best = a;
    return best;
  }
};

struct QFunctionFamily {
  std::vector<QFunction> members;
  Vector prior;
  /// Index of the true Q when the family is realizable.
  std::optional<std::size_t> true_member;
  /// Range constant: |f^h - [T f]^h| <= b for every member.
  double b = 1.0;
};

/// Q via backward induction on the known means.
inline QFunction optimal_q(const MdpSpec& spec) {
  QFunction q;
  q.values.resize(spec.horizon);
  for (std::size_t h = spec.horizon; h-- > 0;) {
    q.values[h].resize(spec.num_states(h));
    for (std::size_t x = 0; x < spec.num_states(h); ++x) {
      const auto& state = spec.transitions[h][x];
      q.values[h][x].resize(state.size());
      for (std::size_t a = 0; a < state.size(); ++a) {
        const double future = h + 1 < spec.horizon ? q.state_value(h + 1, state[a].next) : 0.0;
        q.values[h][x][a] = state[a].mean_reward + future;
      }
    }
  }
  return q;
}

struct TrajectoryStep {
  std::size_t state = 0;
  std::size_t action = 0;
  double reward = 0.0;
  double mean_reward = 0.0;
};

struct Trajectory {
  std::vector<TrajectoryStep> steps;
  [[nodiscard]] double mean_return() const {
    double s = 0.0;
    for (const auto& st : steps) s += st.mean_reward;
    return s;
  }
};

/// One episode of the greedy policy of f from x1.
template <class Rng>
Trajectory mdp_rollout(const MdpSpec& spec, const QFunction& f, std::size_t x1, Rng& rng) {
  if (spec.horizon == 0 || x1 >= spec.num_states(0)) throw InvalidInput("x1: not a first-level state");
  Trajectory traj;
  traj.steps.reserve(spec.horizon);
  std::size_t x = x1;
  for (std::size_t h = 0; h < spec.horizon; ++h) {
    if (spec.num_actions(h, x) == 0) throw InvalidEnvironment("state without valid actions");
    const std::size_t a = f.greedy(h, x);
    const auto& tr = spec.step(h, x, a);
    traj.steps.push_back({x, a, spec.noise.sample(tr.mean_reward, rng), tr.mean_reward});
    x = tr.next;
  }
  return traj;
}

struct MdpInstance {
  MdpSpec spec;
  QFunctionFamily family;
};

/// A two-track chain. Level 0 has one state; later levels have a "safe"
/// state 0 and a "good" state 1. From the safe state action 0 pays 0.5 and
/// stays safe, action 1 pays 1 and moves to the good track where every
/// action pays 1. Member 0 of the family is the true Q. Decoy j >= 1 is
/// Bellman-consistent along the all-safe path and values action 1 at
/// 0.4 (j+1)/N + 0.5 (H-h-1), so its greedy policy never leaves the safe
/// track. With H = 1 this is the two-action bandit counterexample.
inline MdpInstance counterexample_mdp(std::size_t horizon, std::size_t n) {
  if (horizon < 1) throw InvalidInput("H: must be at least 1");
  if (n < 2) throw InvalidInput("N: must be at least 2");
  MdpInstance inst;
  auto& spec = inst.spec;
  spec.horizon = horizon;
  spec.transitions.resize(horizon);
  for (std::size_t h = 0; h < horizon; ++h) {
    const std::size_t states = h == 0 ? 1 : 2;
    spec.transitions[h].resize(states);
    spec.transitions[h][0] = {{0, 0.5}, {1, 1.0}};
    if (states == 2) spec.transitions[h][1] = {{1, 1.0}, {1, 1.0}};
  }
  spec.noise = RewardNoise{NoiseKind::Bernoulli, 0.0};
  spec.validate();

  auto& fam = inst.family;
  fam.members.push_back(optimal_q(spec));
  const auto H = static_cast<double>(horizon);
  for (std::size_t j = 1; j < n; ++j) {
    const double tilt = 0.4 * static_cast<double>(j + 1) / static_cast<double>(n);
    QFunction f;
    f.values.resize(horizon);
    for (std::size_t h = 0; h < horizon; ++h) {
      const double remaining = H - static_cast<double>(h);  // steps left including this one
      f.values[h].resize(spec.num_states(h));
      f.values[h][0] = {0.5 * remaining, tilt + 0.5 * (remaining - 1.0)};
      if (spec.num_states(h) == 2) f.values[h][1] = {0.5 * remaining, 0.5 * remaining};
    }
    fam.members.push_back(std::move(f));
  }
  fam.prior = Vector::Constant(static_cast<Eigen::Index>(n), 1.0 / static_cast<double>(n));
  fam.true_member = 0;
  fam.b = 1.0;
  return inst;
}

}  // namespace fgts
