#pragma once

#include "fgts/environment.hpp"

#include <concepts>
#include <optional>
#include <random>
#include <span>
#include <vector>

namespace fgts {

/// Restriction of the posterior to Omega_t = {theta : f(theta, x_s, a) >= -b
/// for every seen context x_s and every a in A(x_s)}. Off by default.
struct OmegaFilter {
  double b = kInfinity;
  bool enforce = false;

  [[nodiscard]] bool active() const { return enforce && std::isfinite(b); }
};

inline bool omega_filter_pass(const ValueModel& model, const Param& theta, std::span<const Context> contexts,
                              std::span<const ActionSet> action_sets, double b) {
  if (std::isinf(b)) return true;
  if (contexts.size() != action_sets.size()) throw InvalidInput("omega filter: contexts and action sets misaligned");
  for (std::size_t s = 0; s < contexts.size(); ++s) {
    const auto* finite = std::get_if<FiniteActions>(&action_sets[s]);
    if (finite == nullptr) throw UnsupportedOperation("omega filter: only finite action sets can be enumerated");
    for (std::size_t a = 0; a < finite->count; ++a)
      if (eval_value(model, theta, contexts[s], Action(a)) < -b) return false;
  }
  return true;
}

template <class Rng>
std::size_t sample_categorical(const Vector& weights, Rng& rng) {
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  double cum = 0.0;
  std::size_t last_positive = 0;
  for (Eigen::Index j = 0; j < weights.size(); ++j) {
    if (weights[j] <= 0.0) continue;
    cum += weights[j];
    last_positive = static_cast<std::size_t>(j);
    if (u < cum) return last_positive;
  }
  return last_positive;  // rounding: u landed past the accumulated total
}

namespace detail {

inline Vector checked_log_prior(const Vector& prior) {
  if (prior.size() == 0) throw InvalidInput("prior: empty");
  if ((prior.array() < 0.0).any()) throw InvalidInput("prior: negative weight");
  if (std::abs(prior.sum() - 1.0) > 1e-9) throw InvalidInput("prior: weights do not sum to 1");
  return prior.array().log();
}

inline Vector normalize_log_weights(Vector log_w) {
  const double z = log_sum_exp(log_w);
  if (z == -kInfinity) throw EmptyPosterior("posterior: no parameter has positive mass (empty Omega_t)");
  return log_w.array() - z;
}

}  // namespace detail

/// Exact posterior over a finite parameter set, recomputed from the full
/// history: w_j ~ prior_j exp(-sum_s L(theta_j, x_s, a_s, r_s)) restricted to
/// parameters passing the filter on every history context.
inline Vector discrete_posterior_weights(const std::vector<HistoryEntry>& history, const LossSpec& spec,
                                         const ValueModel& model, const Vector& prior,
                                         const OmegaFilter& filter = {}) {
  const std::size_t n = num_params(model);
  if (n == 0 || static_cast<std::size_t>(prior.size()) != n)
    throw InvalidInput("prior: size does not match the finite parameter set");
  Vector log_w = detail::checked_log_prior(prior);
  std::vector<Context> contexts;
  std::vector<ActionSet> sets;
  for (const auto& e : history) {
    contexts.push_back(e.context);
    sets.push_back(model_actions(model, e.context));
  }
  for (std::size_t j = 0; j < n; ++j) {
    const Param theta(j);
    if (filter.active() && !omega_filter_pass(model, theta, contexts, sets, filter.b)) {
      log_w[static_cast<Eigen::Index>(j)] = -kInfinity;
      continue;
    }
    double total = 0.0;
    for (std::size_t s = 0; s < history.size(); ++s)
      total += feelgood_loss(spec, model, theta, history[s].context, sets[s], history[s].action, history[s].reward);
    log_w[static_cast<Eigen::Index>(j)] -= total;
  }
  return exp_exact(detail::normalize_log_weights(std::move(log_w)));
}

/// Incrementally maintained exact posterior over a finite parameter set.
class DiscretePosterior {
 public:
  DiscretePosterior(ValueModel model, const Vector& prior, LossSpec spec, OmegaFilter filter = {})
      : model_(std::move(model)), spec_(spec), filter_(filter) {
    const std::size_t n = num_params(model_);
    if (n == 0) throw InvalidInput("discrete posterior: model has no finite parameter set");
    if (static_cast<std::size_t>(prior.size()) != n) throw InvalidInput("prior: size does not match model");
    log_prior_ = detail::checked_log_prior(prior);
    cumulative_loss_ = Vector::Zero(prior.size());
    admissible_.assign(n, 1);
    spec_.validate();
  }

  void observe(const HistoryEntry& e) {
    const ActionSet actions = model_actions(model_, e.context);
    for (std::size_t j = 0; j < admissible_.size(); ++j) {
      const Param theta(j);
      cumulative_loss_[static_cast<Eigen::Index>(j)] +=
          feelgood_loss(spec_, model_, theta, e.context, actions, e.action, e.reward);
      if (filter_.active() && admissible_[j] && !passes(j, e.context)) admissible_[j] = 0;
    }
    ++observations_;
  }

  /// Normalized log-weights. When `current` is given and the filter is on,
  /// the current context also restricts the support.
  [[nodiscard]] Vector log_weights(std::optional<Context> current = std::nullopt) const {
    Vector log_w = log_prior_ - cumulative_loss_;
    if (filter_.active()) {
      for (std::size_t j = 0; j < admissible_.size(); ++j) {
        const bool ok = admissible_[j] && (!current || passes(j, *current));
        if (!ok) log_w[static_cast<Eigen::Index>(j)] = -kInfinity;
      }
    }
    return detail::normalize_log_weights(std::move(log_w));
  }

  [[nodiscard]] Vector weights(std::optional<Context> current = std::nullopt) const {
    return exp_exact(log_weights(current));
  }

  template <class Rng>
  Param sample(Rng& rng, std::optional<Context> current = std::nullopt) const {
    return Param(sample_categorical(weights(current), rng));
  }

  [[nodiscard]] const Vector& cumulative_loss() const { return cumulative_loss_; }
  [[nodiscard]] const ValueModel& model() const { return model_; }
  [[nodiscard]] const LossSpec& spec() const { return spec_; }
  [[nodiscard]] std::size_t observations() const { return observations_; }

 private:
  [[nodiscard]] bool passes(std::size_t j, Context x) const {
    const Context ctx[] = {x};
    const ActionSet sets[] = {model_actions(model_, x)};
    return omega_filter_pass(model_, Param(j), ctx, sets, filter_.b);
  }

  ValueModel model_;
  LossSpec spec_;
  OmegaFilter filter_;
  Vector log_prior_;
  Vector cumulative_loss_;
  std::vector<char> admissible_;
  std::size_t observations_ = 0;
};

// ---------------------------------------------------------------------------
// Stochastic-gradient Langevin dynamics
// ---------------------------------------------------------------------------

struct SgldOptions {
  double step_size = 0.01;
  /// Scales the injected Gaussian noise; 1 is the Langevin sampler, 0 turns
  /// it into plain stochastic gradient descent.
  double noise_multiplier = 1.0;
};

/// theta - step [grad_loss - grad_log_prior / t] + sqrt(2 step / t) eps.
template <class Rng>
Vector sgld_update(const Vector& theta, const Vector& grad_loss, const Vector& grad_log_prior, std::size_t t,
                   const SgldOptions& opt, Rng& rng) {
  const double inv_t = 1.0 / static_cast<double>(t);
  Vector next = theta - opt.step_size * (grad_loss - inv_t * grad_log_prior);
  if (opt.noise_multiplier != 0.0) {
    const double scale = opt.noise_multiplier * std::sqrt(2.0 * opt.step_size * inv_t);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Eigen::Index i = 0; i < next.size(); ++i) next[i] += scale * normal(rng);
  }
  return next;
}

/// `t` updates from `particle`, each on one history entry drawn uniformly.
/// Callers pass t = history.size(), so the noise scale is sqrt(2 step / t).
template <class PriorGrad, class Rng>
Vector sgld_round(Vector particle, const std::vector<HistoryEntry>& history, const LossSpec& spec,
                  const ValueModel& model, const std::vector<ActionSet>& action_sets, PriorGrad&& grad_log_prior,
                  std::size_t t, const SgldOptions& opt, Rng& rng) {
  if (history.empty()) throw InvalidInput("sgld: empty history (draw from the prior instead)");
  if (t == 0) throw InvalidInput("sgld: t must be positive");
  std::uniform_int_distribution<std::size_t> pick(0, history.size() - 1);
  for (std::size_t k = 0; k < t; ++k) {
    const HistoryEntry& datum = history[pick(rng)];
    const Vector grad = loss_gradient(spec, model, Param(particle), datum, action_sets.at(datum.context));
    particle = sgld_update(particle, grad, grad_log_prior(particle), t, opt, rng);
  }
  return particle;
}

/// One persistent SGLD chain delivering a single particle per round. The
/// first draw (empty history) comes straight from the prior.
class SgldPosterior {
 public:
  SgldPosterior(ValueModel model, std::vector<ActionSet> action_sets, GaussianPrior prior, LossSpec spec,
                SgldOptions options = {})
      : model_(std::move(model)),
        action_sets_(std::move(action_sets)),
        prior_(prior),
        spec_(spec),
        options_(options) {
    if (kind(model_) == ModelKind::TabularFinite) throw UnsupportedOperation("sgld: model is not differentiable");
    spec_.validate();
  }

  void observe(const HistoryEntry& e) { history_.push_back(e); }

  template <class Rng>
  Param sample(Rng& rng, std::optional<Context> = std::nullopt) {
    if (history_.empty() || !particle_) {
      particle_ = prior_.sample(rng);
      if (history_.empty()) return Param(*particle_);
    }
    particle_ = sgld_round(
        std::move(*particle_), history_, spec_, model_, action_sets_,
        [this](const Vector& th) { return prior_.grad_log_density(th); }, history_.size(), options_, rng);
    return Param(*particle_);
  }

  [[nodiscard]] const ValueModel& model() const { return model_; }
  [[nodiscard]] const std::optional<Vector>& particle() const { return particle_; }
  [[nodiscard]] const std::vector<HistoryEntry>& history() const { return history_; }

 private:
  ValueModel model_;
  std::vector<ActionSet> action_sets_;
  GaussianPrior prior_;
  LossSpec spec_;
  SgldOptions options_;
  std::vector<HistoryEntry> history_;
  std::optional<Vector> particle_;
};

template <class P, class Rng>
concept Posterior = requires(P p, const HistoryEntry& e, Rng& rng) {
  p.observe(e);
  { p.sample(rng, std::optional<Context>{}) } -> std::same_as<Param>;
  { p.model() } -> std::convertible_to<const ValueModel&>;
};

template <class P, class Rng>
  requires Posterior<P, Rng>
Param sample_posterior(P& state, Rng& rng, std::optional<Context> current = std::nullopt) {
  return state.sample(rng, current);
}

}  // namespace fgts
