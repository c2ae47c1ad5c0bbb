#pragma once

#include "fgts/model.hpp"

#include <functional>
#include <random>
#include <vector>

namespace fgts {

enum class NoiseKind {
  None,       ///< reward equals the mean
  Uniform,    ///< mean + U(-scale, scale)
  Bernoulli,  ///< reward in {0, 1} with P(1) = mean; requires mean in [0, 1]
  Gaussian,   ///< mean + N(0, scale^2); sub-Gaussian as required when scale <= 0.5
};

struct RewardNoise {
  NoiseKind kind = NoiseKind::None;
  double scale = 0.0;

  template <class Rng>
  double sample(double mean, Rng& rng) const {
    switch (kind) {
      case NoiseKind::None:
        return mean;
      case NoiseKind::Uniform:
        return mean + std::uniform_real_distribution<double>(-scale, scale)(rng);
      case NoiseKind::Bernoulli: {
        if (mean < 0.0 || mean > 1.0) throw InvalidEnvironment("Bernoulli reward mean outside [0, 1]");
        return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < mean ? 1.0 : 0.0;
      }
      case NoiseKind::Gaussian:
        return mean + std::normal_distribution<double>(0.0, scale)(rng);
    }
    return mean;
  }
};

/// How the adversary chooses x_t: a fixed cycled sequence, i.i.d. draws, or a
/// callback that sees the full history.
class ContextSchedule {
 public:
  using Adversary = std::function<Context(std::size_t t, const std::vector<HistoryEntry>& history)>;

  ContextSchedule() : sequence_{0} {}

  static ContextSchedule fixed(std::vector<Context> sequence) {
    if (sequence.empty()) throw InvalidInput("context schedule: empty sequence");
    ContextSchedule s;
    s.sequence_ = std::move(sequence);
    return s;
  }
  static ContextSchedule iid(std::vector<double> probabilities) {
    if (probabilities.empty()) throw InvalidInput("context schedule: empty distribution");
    ContextSchedule s;
    s.sequence_.clear();
    s.probabilities_ = std::move(probabilities);
    return s;
  }
  static ContextSchedule adversary(Adversary fn) {
    ContextSchedule s;
    s.sequence_.clear();
    s.adversary_ = std::move(fn);
    return s;
  }

  /// Context for round t (1-based).
  template <class Rng>
  Context next(std::size_t t, const std::vector<HistoryEntry>& history, Rng& rng) const {
    if (adversary_) return adversary_(t, history);
    if (!probabilities_.empty()) {
      std::discrete_distribution<std::size_t> dist(probabilities_.begin(), probabilities_.end());
      return dist(rng);
    }
    return sequence_[(t - 1) % sequence_.size()];
  }

 private:
  std::vector<Context> sequence_;
  std::vector<double> probabilities_;
  Adversary adversary_;
};

/// Ground truth for a contextual bandit: f*(x, a) = f(truth, x, a) under
/// `truth_model`, one action set per context.
class BanditEnv {
 public:
  BanditEnv(ValueModel truth_model, Param truth, std::vector<ActionSet> action_sets, RewardNoise noise,
            ContextSchedule contexts = {}, bool theory_regime = true)
      : truth_model_(std::move(truth_model)),
        truth_(std::move(truth)),
        action_sets_(std::move(action_sets)),
        noise_(noise),
        contexts_(std::move(contexts)),
        theory_regime_(theory_regime) {
    if (action_sets_.empty()) throw InvalidInput("bandit environment needs at least one context");
    refresh_optimal();
  }

  [[nodiscard]] std::size_t num_contexts() const { return action_sets_.size(); }
  [[nodiscard]] const ActionSet& action_set(Context x) const {
    if (x >= action_sets_.size()) throw InvalidInput("context: index out of range");
    return action_sets_[x];
  }
  [[nodiscard]] double mean(Context x, const Action& a) const {
    return eval_value(truth_model_, truth_, x, a);
  }
  /// f*(x) = max_a f*(x, a), cached per context.
  [[nodiscard]] double optimal_value(Context x) const { return optimal_.at(x); }
  [[nodiscard]] Action optimal_action(Context x) const {
    return greedy_action(truth_model_, truth_, x, action_set(x));
  }
  [[nodiscard]] const ValueModel& truth_model() const { return truth_model_; }
  [[nodiscard]] const Param& truth() const { return truth_; }
  [[nodiscard]] const RewardNoise& noise() const { return noise_; }
  [[nodiscard]] const ContextSchedule& contexts() const { return contexts_; }
  /// False for environments whose means are allowed outside [0, 1].
  [[nodiscard]] bool theory_regime() const { return theory_regime_; }

  /// The same environment with f* replaced by f(truth, ., .).
  [[nodiscard]] BanditEnv with_truth(Param truth) const {
    BanditEnv copy = *this;
    copy.truth_ = std::move(truth);
    copy.refresh_optimal();
    return copy;
  }

  /// The same contexts, actions and noise with f* = f(truth, ., .) under `model`.
  [[nodiscard]] BanditEnv with_truth_model(ValueModel model, Param truth) const {
    BanditEnv copy = *this;
    copy.truth_model_ = std::move(model);
    copy.truth_ = std::move(truth);
    copy.refresh_optimal();
    return copy;
  }

 private:
  void refresh_optimal() {
    optimal_.resize(action_sets_.size());
    for (Context x = 0; x < action_sets_.size(); ++x)
      optimal_[x] = max_value(truth_model_, truth_, x, action_sets_[x]);
  }

  ValueModel truth_model_;
  Param truth_;
  std::vector<ActionSet> action_sets_;
  RewardNoise noise_;
  ContextSchedule contexts_;
  bool theory_regime_ = true;
  std::vector<double> optimal_;
};

template <class Rng>
double sample_reward(const BanditEnv& env, Context x, const Action& a, Rng& rng) {
  if (!contains(env.action_set(x), a)) throw InvalidInput("action: not offered in this context");
  return env.noise().sample(env.mean(x, a), rng);
}

/// Isotropic Gaussian prior p0(theta) ~ exp(-precision ||theta||^2 / 2).
struct GaussianPrior {
  double precision = 100.0;
  std::size_t dim = 0;

  [[nodiscard]] Vector grad_log_density(const Vector& theta) const { return -precision * theta; }

  template <class Rng>
  Vector sample(Rng& rng) const {
    std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(precision));
    Vector v(static_cast<Eigen::Index>(dim));
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = normal(rng);
    return v;
  }
};

// ---------------------------------------------------------------------------
// Shipped instances
// ---------------------------------------------------------------------------

struct FiniteInstance {
  BanditEnv env;
  ValueModel model;
  Vector prior;
};

/// Two actions (index 0 pays 0.5, index 1 pays 1 under the truth) and N
/// candidate models. Member 0 is the truth; member j >= 1 predicts
/// 0.4 (j+1)/N for action index 1 and 0.5 for index 0. Uniform prior,
/// Bernoulli rewards.
inline FiniteInstance counterexample_env(std::size_t n) {
  if (n < 1) throw InvalidInput("N: must be at least 1");
  TabularModel model;
  model.table.resize(n);
  model.table[0] = {{0.5, 1.0}};
  for (std::size_t j = 1; j < n; ++j) {
    const double one_based = static_cast<double>(j + 1);
    model.table[j] = {{0.5, 0.4 * one_based / static_cast<double>(n)}};
  }
  ValueModel vm = model;
  BanditEnv env(vm, Param(std::size_t{0}), {FiniteActions{2}}, RewardNoise{NoiseKind::Bernoulli, 0.0});
  return {std::move(env), std::move(vm), Vector::Constant(static_cast<Eigen::Index>(n), 1.0 / static_cast<double>(n))};
}

struct LinearPaperOptions {
  std::size_t dim = 100;
  /// Number of sampled sphere arms; 0 means the exact continuum sphere.
  std::size_t arms = 50;
  double radius = 0.2;
  std::uint64_t arm_seed = 0;
  double prior_precision = 100.0;
  double noise_half_width = 0.5;
};

struct LinearInstance {
  BanditEnv env;
  ValueModel model;
  GaussianPrior prior;
};

/// Non-contextual linear bandit: theta* = (1, 1, 0, ...), optimal arm
/// e_1, suboptimal arms (0, a') with ||a'|| = radius, uniform reward noise.
inline LinearInstance linear_env_paper(const LinearPaperOptions& opt = {}) {
  if (opt.dim < 2) throw InvalidInput("dim: must be at least 2");
  const auto d = static_cast<Eigen::Index>(opt.dim);
  Vector theta_star = Vector::Zero(d);
  theta_star[0] = 1.0;
  theta_star[1] = 1.0;
  Vector anchor = Vector::Zero(d);
  anchor[0] = 1.0;

  ActionSet arms;
  if (opt.arms == 0) {
    arms = SphereArms{anchor, 1, opt.radius};
  } else {
    std::mt19937_64 gen(opt.arm_seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix rows = Matrix::Zero(static_cast<Eigen::Index>(opt.arms) + 1, d);
    rows.row(0) = anchor.transpose();
    for (Eigen::Index i = 1; i < rows.rows(); ++i) {
      Vector g(d - 1);
      for (Eigen::Index k = 0; k < g.size(); ++k) g[k] = normal(gen);
      rows.row(i).tail(d - 1) = (opt.radius / g.norm()) * g.transpose();
    }
    arms = ArmList{std::move(rows)};
  }
  ValueModel model = PureLinearModel{opt.dim};
  BanditEnv env(model, Param(theta_star), {std::move(arms)}, RewardNoise{NoiseKind::Uniform, opt.noise_half_width},
                ContextSchedule{}, /*theory_regime=*/false);
  return {std::move(env), std::move(model), GaussianPrior{opt.prior_precision, opt.dim}};
}

}  // namespace fgts
