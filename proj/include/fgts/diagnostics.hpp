#pragma once

#include "fgts/agent.hpp"
#include "fgts/seeding.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <vector>

namespace fgts {

// ---------------------------------------------------------------------------
// Bandit regret decomposition
// ---------------------------------------------------------------------------

struct RegretDecomposition {
  double bellman_error = 0.0;  ///< f_b(theta, x, a(theta, x)) - f*(x, a(theta, x))
  double feel_good = 0.0;      ///< f_b(theta, x) - f*(x)
  double regret = 0.0;         ///< f*(x) - f*(x, a(theta, x))
  [[nodiscard]] double gap() const { return std::abs(bellman_error - feel_good - regret); }
};

inline RegretDecomposition regret_decomposition(const ValueModel& model, const Param& theta, Context x,
                                                const BanditEnv& env, const ActionSet& actions, double b) {
  const GreedyChoice choice = greedy_choice(model, theta, x, actions);
  const double fb = truncate_value(choice.value, b);
  const double truth_at_choice = env.mean(x, choice.action);
  return {fb - truth_at_choice, fb - env.optimal_value(x), env.optimal_value(x) - truth_at_choice};
}

/// Regret floor for standard Thompson Sampling on the two-action
/// counterexample: 0.5 T (1 - 1/N)^T.
inline double prop1_lower_bound(std::size_t n, std::size_t horizon) {
  if (n < 1 || horizon < 1) throw InvalidInput("prop1_lower_bound: need N >= 1 and T >= 1");
  const double t = static_cast<double>(horizon);
  return 0.5 * t * std::pow(1.0 - 1.0 / static_cast<double>(n), t);
}

// ---------------------------------------------------------------------------
// Decoupling coefficient
// ---------------------------------------------------------------------------

/// Grid of mu values used to display the decoupling inequality directly.
struct MuParameter {
  std::vector<double> grid;

  static MuParameter geometric(double lo = 1e-3, double hi = 1e3, std::size_t points = 61) {
    if (!(lo > 0.0) || !(hi > lo) || points < 2) throw InvalidInput("mu grid: need 0 < lo < hi and >= 2 points");
    MuParameter m;
    const double step = std::log(hi / lo) / static_cast<double>(points - 1);
    for (std::size_t i = 0; i < points; ++i) m.grid.push_back(lo * std::exp(step * static_cast<double>(i)));
    return m;
  }
};

struct DecoupleReport {
  Context context = 0;
  double lhs = 0.0;               ///< E_q[decoupled Bellman error at the chosen action]
  double decoupled_error = 0.0;   ///< A = E_{a~pi_q} E_q (residual)^2
  double lower_bound = 0.0;       ///< max(0, lhs)^2 / A: smallest K consistent with q
  double claimed_k = 0.0;
  double grid_rhs = 0.0;          ///< min over the mu grid of mu A + K / (4 mu)
  double optimal_mu = kInfinity;  ///< sqrt(K / (4 A))
  double optimal_rhs = 0.0;       ///< sqrt(K A)
  [[nodiscard]] bool violated(double tol = 1e-9) const { return lower_bound > claimed_k + tol; }
};

/// Decoupling terms for a distribution q over candidates, where candidate i
/// picks "arm" chosen[i] and residuals(i, k) is its error on arm k.
inline DecoupleReport decoupling_terms(const Vector& q, const std::vector<std::size_t>& chosen,
                                       const Matrix& residuals, double claimed_k, const MuParameter& mu) {
  const auto n = q.size();
  if (static_cast<std::size_t>(n) != chosen.size() || residuals.rows() != n)
    throw InvalidInput("decoupling: q, chosen and residuals disagree in size");
  Vector pi = Vector::Zero(residuals.cols());
  double lhs = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto k = static_cast<Eigen::Index>(chosen[static_cast<std::size_t>(i)]);
    pi[k] += q[i];
    lhs += q[i] * residuals(i, k);
  }
  double a_term = 0.0;
  for (Eigen::Index k = 0; k < residuals.cols(); ++k) {
    if (pi[k] == 0.0) continue;
    double inner = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) inner += q[i] * residuals(i, k) * residuals(i, k);
    a_term += pi[k] * inner;
  }
  DecoupleReport rep;
  rep.lhs = lhs;
  rep.decoupled_error = a_term;
  rep.claimed_k = claimed_k;
  const double pos = std::max(0.0, lhs);
  if (a_term == 0.0) {
    if (pos > 0.0) throw Contradiction("decoupling: positive error with zero decoupled squared error");
    rep.lower_bound = 0.0;
  } else {
    rep.lower_bound = pos * pos / a_term;
  }
  rep.grid_rhs = kInfinity;
  for (double m : mu.grid) rep.grid_rhs = std::min(rep.grid_rhs, m * a_term + claimed_k / (4.0 * m));
  rep.optimal_mu = a_term > 0.0 ? std::sqrt(claimed_k / (4.0 * a_term)) : kInfinity;
  rep.optimal_rhs = std::sqrt(claimed_k * a_term);
  return rep;
}

/// Per-q lower bound on the decoupling coefficient at context x by exact
/// enumeration of a finite parameter set and finite action set.
inline DecoupleReport dc_estimate(const Vector& q, Context x, const ValueModel& model, const BanditEnv& env, double b,
                                  const MuParameter& mu, double claimed_k) {
  const std::size_t n = num_params(model);
  if (n == 0 || static_cast<std::size_t>(q.size()) != n) throw InvalidInput("q: size does not match parameter set");
  const ActionSet actions = model_actions(model, x);
  const std::size_t k = std::get<FiniteActions>(actions).count;
  Matrix residuals(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
  std::vector<std::size_t> chosen(n);
  for (std::size_t j = 0; j < n; ++j) {
    const Param theta(j);
    chosen[j] = greedy_action(model, theta, x, actions).index();
    for (std::size_t a = 0; a < k; ++a)
      residuals(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(a)) =
          truncate_value(eval_value(model, theta, x, Action(a)), b) - env.mean(x, Action(a));
  }
  DecoupleReport rep = decoupling_terms(q, chosen, residuals, claimed_k, mu);
  rep.context = x;
  return rep;
}

struct EigenIdentityReport {
  double lhs = 0.0;
  double rhs = 0.0;
  double gap = 0.0;
  std::size_t rank = 0;
  bool eigen_ok = true;
};

/// Checks E_{a~pi_q} E_q (f - f*)^2 = sum_j q_j E_q (phi(x, a(theta, x))^T xi_j)^2
/// with xi_j the eigenvectors of Sigma = E_{a~pi_q} phi phi^T and
/// q_j = E_q ((w(theta, x) - w*(x))^T xi_j)^2. The truth must be a linear
/// embedding over the same features.
inline EigenIdentityReport appendix_b_identity_check(const Vector& q, Context x, const LinearEmbedModel& model,
                                                     const BanditEnv& env) {
  const auto* truth = std::get_if<LinearEmbedModel>(&env.truth_model());
  if (truth == nullptr) throw InvalidInput("env: truth must be a linear embedding");
  if (!model.finite()) throw InvalidInput("model: needs a finite parameter set");
  const std::size_t n = model.weights.size();
  if (static_cast<std::size_t>(q.size()) != n) throw InvalidInput("q: size does not match parameter set");
  const Matrix& phi = model.features.at(x);
  if (truth->features.at(x) != phi) throw InvalidInput("env: truth features differ from model features");
  const Vector w_star = truth->weight(env.truth(), x);
  const ValueModel vm = model;
  const ActionSet actions = FiniteActions{static_cast<std::size_t>(phi.rows())};

  std::vector<std::size_t> chosen(n);
  Vector pi = Vector::Zero(phi.rows());
  for (std::size_t j = 0; j < n; ++j) {
    chosen[j] = greedy_action(vm, Param(j), x, actions).index();
    pi[static_cast<Eigen::Index>(chosen[j])] += q[static_cast<Eigen::Index>(j)];
  }

  EigenIdentityReport rep;
  // Left side: direct enumeration of squared residuals.
  for (Eigen::Index a = 0; a < phi.rows(); ++a) {
    if (pi[a] == 0.0) continue;
    double inner = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double res = phi.row(a).dot(model.weights[j].at(x) - w_star);
      inner += q[static_cast<Eigen::Index>(j)] * res * res;
    }
    rep.lhs += pi[a] * inner;
  }

  // Right side: through the eigenbasis of Sigma.
  Matrix sigma = Matrix::Zero(phi.cols(), phi.cols());
  for (Eigen::Index a = 0; a < phi.rows(); ++a)
    if (pi[a] > 0.0) sigma += pi[a] * phi.row(a).transpose() * phi.row(a);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sigma);
  if (eig.info() != Eigen::Success) {
    rep.eigen_ok = false;
    rep.rhs = kInfinity;
    rep.gap = kInfinity;
    return rep;
  }
  const Vector& values = eig.eigenvalues();
  const double tol = 1e-14 * std::max(1.0, values.cwiseAbs().maxCoeff());
  for (Eigen::Index jdx = 0; jdx < values.size(); ++jdx) {
    if (values[jdx] <= tol) continue;  // null directions contribute nothing
    ++rep.rank;
    const Vector xi = eig.eigenvectors().col(jdx);
    double qj = 0.0;
    double spread = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double wq = (model.weights[j].at(x) - w_star).dot(xi);
      const double pq = phi.row(static_cast<Eigen::Index>(chosen[j])).dot(xi);
      qj += q[static_cast<Eigen::Index>(j)] * wq * wq;
      spread += q[static_cast<Eigen::Index>(j)] * pq * pq;
    }
    rep.rhs += qj * spread;
  }
  rep.gap = std::abs(rep.lhs - rep.rhs);
  return rep;
}

// ---------------------------------------------------------------------------
// MDP diagnostics
// ---------------------------------------------------------------------------

/// f^h(x, a) - (m^h(x, a) + f^{h+1}(next(x, a))).
inline double bellman_error(const MdpSpec& spec, const QFunction& f, std::size_t h, std::size_t x, std::size_t a) {
  const auto& tr = spec.step(h, x, a);
  if (f.values.size() != spec.horizon) throw InvalidInput("f: stage count does not match horizon");
  return f.value(h, x, a) - (tr.mean_reward + f.state_value(h + 1, tr.next));
}

struct MdpDecomposition {
  double regret = 0.0;
  double sum_bellman_error = 0.0;
  double feel_good = 0.0;  ///< f^1(x^1) - V^1(x^1)
  double gap = 0.0;
};

/// Exact value-error decomposition along the greedy trajectory of f.
inline MdpDecomposition mdp_regret_decomposition_check(const MdpSpec& spec, const QFunction& f, std::size_t x1) {
  const QFunction q = optimal_q(spec);
  MdpDecomposition d;
  std::size_t x = x1;
  double mean_return = 0.0;
  for (std::size_t h = 0; h < spec.horizon; ++h) {
    const std::size_t a = f.greedy(h, x);
    const auto& tr = spec.step(h, x, a);
    d.sum_bellman_error += bellman_error(spec, f, h, x, a);
    mean_return += tr.mean_reward;
    x = tr.next;
  }
  const double v1 = q.state_value(0, x1);
  d.regret = v1 - mean_return;
  d.feel_good = f.state_value(0, x1) - v1;
  d.gap = std::abs(d.regret - (d.sum_bellman_error - d.feel_good));
  return d;
}

/// Stage-wise decoupling check for an MDP family: q is a distribution over
/// members, each member's greedy trajectory picks one (state, action) pair at
/// level h, residuals are Bellman errors of every member at every visited
/// pair. `claimed_k` defaults to the tabular embedding dimension
/// |S^h| x max |A(x)|.
inline DecoupleReport mdp_dc_estimate(const Vector& q, const MdpSpec& spec, const QFunctionFamily& family,
                                      std::size_t x1, std::size_t h, const MuParameter& mu,
                                      std::optional<double> claimed_k = std::nullopt) {
  const std::size_t n = family.members.size();
  if (static_cast<std::size_t>(q.size()) != n) throw InvalidInput("q: size does not match family");
  if (h >= spec.horizon) throw InvalidInput("level: beyond horizon");
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> pair_index;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::vector<std::size_t> chosen(n);
  for (std::size_t j = 0; j < n; ++j) {
    std::size_t x = x1;
    for (std::size_t l = 0; l < h; ++l) x = spec.step(l, x, family.members[j].greedy(l, x)).next;
    const auto key = std::make_pair(x, family.members[j].greedy(h, x));
    auto [it, inserted] = pair_index.emplace(key, pairs.size());
    if (inserted) pairs.push_back(key);
    chosen[j] = it->second;
  }
  Matrix residuals(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(pairs.size()));
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t p = 0; p < pairs.size(); ++p)
      residuals(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(p)) =
          bellman_error(spec, family.members[j], h, pairs[p].first, pairs[p].second);
  double k = 0.0;
  if (claimed_k) {
    k = *claimed_k;
  } else {
    std::size_t max_actions = 0;
    for (std::size_t x = 0; x < spec.num_states(h); ++x) max_actions = std::max(max_actions, spec.num_actions(h, x));
    k = static_cast<double>(spec.num_states(h) * max_actions);
  }
  DecoupleReport rep = decoupling_terms(q, chosen, residuals, k, mu);
  rep.context = x1;
  return rep;
}

// ---------------------------------------------------------------------------
// Bayesian regret
// ---------------------------------------------------------------------------

struct RegretCurve {
  std::vector<double> mean_cumulative;  ///< indexed by t - 1
  std::vector<double> standard_error;
  std::size_t runs = 0;
  std::vector<std::size_t> truths;  ///< drawn truth index per run (Bayesian runs)

  [[nodiscard]] double final_mean() const { return mean_cumulative.back(); }
  [[nodiscard]] double final_se() const { return standard_error.back(); }
};

namespace detail {

inline RegretCurve summarize(const std::vector<std::vector<double>>& cumulative) {
  RegretCurve curve;
  curve.runs = cumulative.size();
  const std::size_t horizon = cumulative.front().size();
  curve.mean_cumulative.assign(horizon, 0.0);
  curve.standard_error.assign(horizon, 0.0);
  const auto runs = static_cast<double>(curve.runs);
  for (std::size_t t = 0; t < horizon; ++t) {
    double mean = 0.0;
    for (const auto& run : cumulative) mean += run[t];
    mean /= runs;
    double ss = 0.0;
    for (const auto& run : cumulative) ss += (run[t] - mean) * (run[t] - mean);
    curve.mean_cumulative[t] = mean;
    curve.standard_error[t] = curve.runs > 1 ? std::sqrt(ss / (runs - 1.0)) / std::sqrt(runs) : 0.0;
  }
  return curve;
}

inline std::vector<double> run_discrete(const BanditEnv& env, const FiniteInstance& inst, const LossSpec& spec,
                                        std::size_t horizon, Rng& rng) {
  ThompsonAgent agent(DiscretePosterior(inst.model, inst.prior, spec));
  const auto records = run_bandit(env, agent, horizon, rng);
  std::vector<double> cum;
  cum.reserve(records.size());
  for (const auto& r : records) cum.push_back(r.cumulative);
  return cum;
}

}  // namespace detail

/// Average regret when the truth itself is drawn from the prior: each run
/// draws theta* ~ p0, sets f* = f(theta*, ., .) and runs Thompson Sampling.
inline RegretCurve bayesian_regret_experiment(const FiniteInstance& inst, const LossSpec& spec, std::size_t horizon,
                                              std::size_t runs, std::uint64_t seed) {
  if (runs < 1 || horizon < 1) throw InvalidInput("bayesian regret: need runs >= 1 and T >= 1");
  std::vector<std::vector<double>> cumulative;
  std::vector<std::size_t> truths;
  for (std::size_t r = 0; r < runs; ++r) {
    Rng rng(derive_seed(seed, 0, r));
    const std::size_t truth = sample_categorical(inst.prior, rng);
    truths.push_back(truth);
    const BanditEnv env = inst.env.with_truth_model(inst.model, Param(truth));
    cumulative.push_back(detail::run_discrete(env, inst, spec, horizon, rng));
  }
  RegretCurve curve = detail::summarize(cumulative);
  curve.truths = std::move(truths);
  return curve;
}

/// Frequentist regret with the truth held fixed at class member `truth`.
inline RegretCurve frequentist_regret_curve(const FiniteInstance& inst, const Param& truth, const LossSpec& spec,
                                            std::size_t horizon, std::size_t runs, std::uint64_t seed) {
  if (runs < 1 || horizon < 1) throw InvalidInput("frequentist regret: need runs >= 1 and T >= 1");
  const BanditEnv env = inst.env.with_truth_model(inst.model, truth);
  std::vector<std::vector<double>> cumulative;
  for (std::size_t r = 0; r < runs; ++r) {
    Rng rng(derive_seed(seed, 1, r));
    cumulative.push_back(detail::run_discrete(env, inst, spec, horizon, rng));
  }
  return detail::summarize(cumulative);
}

/// ln E_{theta ~ p0} exp(-sum_s dL(theta, x_s, a_s, r_s)) for a finite class,
/// with dL the loss excess over the truth. Trace only.
inline double log_partition(const std::vector<HistoryEntry>& history, const LossSpec& spec, const ValueModel& model,
                            const Vector& prior, const BanditEnv& env) {
  const std::size_t n = num_params(model);
  if (static_cast<std::size_t>(prior.size()) != n) throw InvalidInput("prior: size does not match model");
  Vector terms = detail::checked_log_prior(prior);
  for (std::size_t j = 0; j < n; ++j) {
    double excess = 0.0;
    for (const auto& e : history) {
      const ActionSet actions = model_actions(model, e.context);
      const double f = eval_value(model, Param(j), e.context, e.action);
      const double fs = env.mean(e.context, e.action);
      excess += spec.eta * ((f - e.reward) * (f - e.reward) - (fs - e.reward) * (fs - e.reward));
      excess -= spec.lambda * (std::min(spec.b, max_value(model, Param(j), e.context, actions)) -
                               env.optimal_value(e.context));
    }
    terms[static_cast<Eigen::Index>(j)] -= excess;
  }
  return log_sum_exp(terms);
}

// ---------------------------------------------------------------------------
// Random instances (values in [0, 1] unless stated)
// ---------------------------------------------------------------------------

inline double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

/// Tabular model with `params` members over `contexts` contexts and `actions`
/// actions, plus a bandit env whose truth is an independent random table.
inline FiniteInstance random_tabular_instance(Rng& rng, std::size_t params, std::size_t actions,
                                              std::size_t contexts = 1) {
  TabularModel model;
  model.table.assign(params, std::vector<std::vector<double>>(contexts, std::vector<double>(actions)));
  for (auto& member : model.table)
    for (auto& row : member)
      for (double& v : row) v = uniform01(rng);
  TabularModel truth;
  truth.table.assign(1, std::vector<std::vector<double>>(contexts, std::vector<double>(actions)));
  for (auto& row : truth.table[0])
    for (double& v : row) v = uniform01(rng);
  std::vector<ActionSet> sets(contexts, FiniteActions{actions});
  BanditEnv env(truth, Param(std::size_t{0}), sets, RewardNoise{NoiseKind::Bernoulli, 0.0});
  return {std::move(env), model, Vector::Constant(static_cast<Eigen::Index>(params), 1.0 / static_cast<double>(params))};
}

/// Random probability vector (normalized exponentials), optionally sparse.
inline Vector random_simplex(Rng& rng, std::size_t n, double zero_prob = 0.0) {
  Vector q(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < q.size(); ++i) q[i] = uniform01(rng) < zero_prob ? 0.0 : -std::log(1.0 - uniform01(rng));
  if (q.sum() == 0.0) q[static_cast<Eigen::Index>(std::uniform_int_distribution<std::size_t>(0, n - 1)(rng))] = 1.0;
  return q / q.sum();
}

struct LinearEmbedInstance {
  LinearEmbedModel model;
  BanditEnv env;
};

/// One-context linear embedding with `dim`-dimensional features in [0, 1],
/// `arms` arms, `params` candidate weights in [weight_lo, weight_hi] / dim and
/// a truth with weights in [0, 1] / dim (so f* lies in [0, 1]).
inline LinearEmbedInstance random_linear_embed_instance(Rng& rng, std::size_t dim, std::size_t arms, std::size_t params,
                                                        double weight_lo = -1.0, double weight_hi = 1.0) {
  const auto k = static_cast<Eigen::Index>(dim);
  Matrix phi(static_cast<Eigen::Index>(arms), k);
  for (Eigen::Index i = 0; i < phi.size(); ++i) phi.data()[i] = uniform01(rng);
  const double scale = 1.0 / static_cast<double>(dim);
  LinearEmbedModel model;
  model.features = {phi};
  for (std::size_t j = 0; j < params; ++j) {
    Vector w(k);
    for (Eigen::Index i = 0; i < k; ++i) w[i] = scale * (weight_lo + (weight_hi - weight_lo) * uniform01(rng));
    model.weights.push_back({w});
  }
  LinearEmbedModel truth;
  truth.features = {phi};
  Vector w_star(k);
  for (Eigen::Index i = 0; i < k; ++i) w_star[i] = scale * uniform01(rng);
  truth.weights = {{w_star}};
  BanditEnv env(truth, Param(std::size_t{0}), {FiniteActions{arms}}, RewardNoise{NoiseKind::Bernoulli, 0.0});
  return {std::move(model), std::move(env)};
}

/// Random deterministic MDP with `states` states per level, `actions` actions
/// per state and mean rewards in [0, 1].
inline MdpSpec random_mdp(Rng& rng, std::size_t horizon, std::size_t states, std::size_t actions) {
  MdpSpec spec;
  spec.horizon = horizon;
  spec.transitions.assign(horizon, std::vector<std::vector<MdpSpec::Transition>>(
                                       states, std::vector<MdpSpec::Transition>(actions)));
  std::uniform_int_distribution<std::size_t> next_state(0, states - 1);
  for (auto& level : spec.transitions)
    for (auto& state : level)
      for (auto& tr : state) tr = {next_state(rng), uniform01(rng)};
  spec.validate();
  return spec;
}

/// Random Q-table shaped like `spec` with entries in [0, H].
inline QFunction random_q_function(Rng& rng, const MdpSpec& spec) {
  QFunction f;
  f.values.resize(spec.horizon);
  for (std::size_t h = 0; h < spec.horizon; ++h) {
    f.values[h].resize(spec.num_states(h));
    for (std::size_t x = 0; x < spec.num_states(h); ++x) {
      f.values[h][x].resize(spec.num_actions(h, x));
      for (double& v : f.values[h][x]) v = static_cast<double>(spec.horizon) * uniform01(rng);
    }
  }
  return f;
}

}  // namespace fgts
