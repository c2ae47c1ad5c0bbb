#pragma once

#include "fgts/harness.hpp"

#include <cfloat>
#include <chrono>
#include <string>
#include <vector>

namespace fgts {

/// Outcome of one diagnostic measurement.
struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

namespace detail {

inline std::string fmt(const char* pattern, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

template <class F>
CheckResult timed(std::string name, F&& body) {
  const auto start = std::chrono::steady_clock::now();
  CheckResult r = body();
  r.name = std::move(name);
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

inline double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double se_of(const std::vector<double>& v) {
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  const auto n = static_cast<double>(v.size());
  return std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
}

/// Final cumulative regret of each run of standard or Feel-Good TS on the
/// counterexample.
inline std::vector<double> counterexample_finals(std::size_t n, std::size_t horizon, std::size_t runs, double lambda,
                                                 std::uint64_t seed, std::uint64_t stream) {
  const FiniteInstance inst = counterexample_env(n);
  std::vector<double> finals;
  finals.reserve(runs);
  for (std::size_t r = 0; r < runs; ++r) {
    Rng rng(derive_seed(seed, stream, r));
    ThompsonAgent agent(DiscretePosterior(inst.model, inst.prior, LossSpec{0.25, lambda, 1.0}));
    finals.push_back(run_bandit(inst.env, agent, horizon, rng).back().cumulative);
  }
  return finals;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Monte-Carlo reproductions
// ---------------------------------------------------------------------------

/// Standard TS (lambda = 0) on counterexample(N): mean cumulative regret at T
/// against 0.5 T (1 - 1/N)^T - 3 SE.
inline CheckResult check_counterexample_bound(std::size_t n = 20, std::size_t horizon = 20, std::size_t runs = 500,
                               std::uint64_t seed = 1) {
  return detail::timed("prop1_lower_bound", [&] {
    const auto finals = detail::counterexample_finals(n, horizon, runs, 0.0, seed, 0);
    const double mean = detail::mean_of(finals);
    const double se = detail::se_of(finals);
    const double bound = prop1_lower_bound(n, horizon);
    CheckResult r;
    r.passed = mean >= bound - 3.0 * se;
    r.detail = detail::fmt("mean %.4f (SE %.4f) vs bound %.4f over %zu runs", mean, se, bound, runs);
    return r;
  });
}

/// Same environment and seeds with lambda = 1/sqrt(T): the Feel-Good mean must
/// be below half the lambda = 0 mean with disjoint 3 SE intervals.
inline CheckResult check_feelgood_remedy(std::size_t n = 20, std::size_t horizon = 20, std::size_t runs = 500,
                                         std::uint64_t seed = 1) {
  return detail::timed("feelgood_remedy", [&] {
    const double lambda = 1.0 / std::sqrt(static_cast<double>(horizon));
    const auto base = detail::counterexample_finals(n, horizon, runs, 0.0, seed, 0);
    const auto fg = detail::counterexample_finals(n, horizon, runs, lambda, seed, 0);
    const double m0 = detail::mean_of(base), s0 = detail::se_of(base);
    const double m1 = detail::mean_of(fg), s1 = detail::se_of(fg);
    CheckResult r;
    r.passed = m1 < 0.5 * m0 && m1 + 3.0 * s1 < m0 - 3.0 * s0;
    r.detail = detail::fmt("lambda=0: %.4f (SE %.4f); lambda=%.4f: %.4f (SE %.4f); need < %.4f", m0, s0, lambda, m1,
                           s1, 0.5 * m0);
    return r;
  });
}

/// Desk linear sweep: lambda = 0.1 must end below lambda = 0 with disjoint
/// 2 SE intervals, and all four curves must be present.
inline CheckResult check_linear_sweep_ordering(const ExperimentConfig& config = preset_fig1(Scale::Desk),
                                       ExperimentResult* keep = nullptr) {
  return detail::timed("linear_sweep_ordering", [&] {
    ExperimentResult res = run_experiment(config);
    std::map<double, AggregateRow> final_rows;
    for (const auto& row : res.aggregate)
      if (row.t == config.horizon) final_rows[row.lambda] = row;
    CheckResult r;
    std::string curves;
    for (const auto& [lambda, row] : final_rows)
      curves += detail::fmt(" lambda=%g: %.3f (SE %.3f);", lambda, row.mean_cum_regret, row.se);
    const bool all_four = final_rows.size() == config.agent.lambdas.size() && final_rows.size() == 4;
    if (all_four && final_rows.contains(0.0) && final_rows.contains(0.1)) {
      const auto& a = final_rows.at(0.1);
      const auto& z = final_rows.at(0.0);
      r.passed = a.mean_cum_regret + 2.0 * a.se < z.mean_cum_regret - 2.0 * z.se;
    }
    r.detail = detail::fmt("T=%zu runs=%zu", config.horizon, config.runs) + curves;
    if (keep) *keep = std::move(res);
    return r;
  });
}

/// Bayesian regret (truth drawn from the uniform prior) at T must stay below
/// 0.25 T; the fixed-truth slice at the optimal member must meet the
/// lower bound at T = N and end above the Bayesian average by 3 combined SE.
inline CheckResult check_bayes_gap(std::size_t n = 20, std::size_t horizon = 200, std::size_t runs = 500,
                                   std::uint64_t seed = 1) {
  return detail::timed("bayesian_vs_frequentist", [&] {
    const FiniteInstance inst = counterexample_env(n);
    const LossSpec spec{0.25, 0.0, 1.0};
    const RegretCurve bayes = bayesian_regret_experiment(inst, spec, horizon, runs, seed);
    const RegretCurve slice = frequentist_regret_curve(inst, Param(std::size_t{0}), spec, horizon, runs, seed);
    const std::size_t at_n = std::min(n, horizon);
    const double bound = prop1_lower_bound(n, at_n);
    const double slice_n = slice.mean_cumulative[at_n - 1];
    const double slice_end = slice.final_mean();
    const double gap_se = std::sqrt(slice.final_se() * slice.final_se() + bayes.final_se() * bayes.final_se());
    CheckResult r;
    const bool sublinear = bayes.final_mean() < 0.25 * static_cast<double>(horizon);
    const bool meets_bound = slice_n >= bound - 3.0 * slice.standard_error[at_n - 1];
    const bool gap = slice_end - bayes.final_mean() > 3.0 * gap_se;
    r.passed = sublinear && meets_bound && gap;
    r.detail = detail::fmt(
        "Bayesian R(%zu)=%.3f (SE %.3f, limit %.1f); slice R(%zu)=%.3f vs bound %.3f; slice R(%zu)=%.3f (SE %.3f)",
        horizon, bayes.final_mean(), bayes.final_se(), 0.25 * static_cast<double>(horizon), at_n, slice_n, bound,
        horizon, slice_end, slice.final_se());
    return r;
  });
}

// ---------------------------------------------------------------------------
// Exact identities
// ---------------------------------------------------------------------------

/// BE - FG = regret on random tables in [-2, 2], b in {1, infinity}. The
/// tolerance is a few ulps of the largest term.
inline CheckResult check_decomposition_identity(std::size_t trials = 1000, std::uint64_t seed = 7) {
  return detail::timed("regret_decomposition_identity", [&] {
    Rng rng(derive_seed(seed, 0, 0));
    std::uniform_real_distribution<double> value(-2.0, 2.0);
    double worst = 0.0;
    bool ok = true;
    for (std::size_t i = 0; i < trials; ++i) {
      const std::size_t params = 1 + i % 6, actions = 2 + i % 4, contexts = 1 + i % 3;
      TabularModel model;
      model.table.assign(params, std::vector<std::vector<double>>(contexts, std::vector<double>(actions)));
      for (auto& m : model.table)
        for (auto& row : m)
          for (double& v : row) v = value(rng);
      TabularModel truth;
      truth.table.assign(1, std::vector<std::vector<double>>(contexts, std::vector<double>(actions)));
      for (auto& row : truth.table[0])
        for (double& v : row) v = value(rng);
      const BanditEnv env(truth, Param(std::size_t{0}), std::vector<ActionSet>(contexts, FiniteActions{actions}),
                          RewardNoise{}, ContextSchedule{}, false);
      const Param theta(std::uniform_int_distribution<std::size_t>(0, params - 1)(rng));
      const Context x = std::uniform_int_distribution<std::size_t>(0, contexts - 1)(rng);
      const double b = i % 2 == 0 ? 1.0 : kInfinity;
      const auto d = regret_decomposition(model, theta, x, env, env.action_set(x), b);
      const double scale = std::max({1.0, std::abs(d.bellman_error), std::abs(d.feel_good), std::abs(d.regret)});
      worst = std::max(worst, d.gap());
      if (d.gap() > 8.0 * DBL_EPSILON * scale) ok = false;
    }
    CheckResult r;
    r.passed = ok;
    r.detail = detail::fmt("max gap %.3g over %zu draws", worst, trials);
    return r;
  });
}

/// regret = sum BE - (f^1(x^1) - V^1(x^1)) on random deterministic MDPs.
inline CheckResult check_mdp_identity(std::size_t mdps = 100, std::size_t functions = 10, std::uint64_t seed = 17) {
  return detail::timed("mdp_decomposition_identity", [&] {
    Rng rng(derive_seed(seed, 0, 0));
    double worst = 0.0;
    for (std::size_t i = 0; i < mdps; ++i) {
      const MdpSpec spec = random_mdp(rng, 3, 4, 3);
      const std::size_t x1 = std::uniform_int_distribution<std::size_t>(0, 3)(rng);
      for (std::size_t k = 0; k < functions; ++k)
        worst = std::max(worst, mdp_regret_decomposition_check(spec, random_q_function(rng, spec), x1).gap);
      worst = std::max(worst, mdp_regret_decomposition_check(spec, optimal_q(spec), x1).gap);
    }
    CheckResult r;
    r.passed = worst <= 1e-10;
    r.detail = detail::fmt("max gap %.3g over %zu MDPs x %zu functions", worst, mdps, functions);
    return r;
  });
}

/// Eigenbasis identity on random linear embeddings (K in 2..5, up to 8
/// members, up to K + 4 arms).
inline CheckResult check_eigen_identity(std::size_t instances = 100, std::uint64_t seed = 27) {
  return detail::timed("eigen_identity", [&] {
    Rng rng(derive_seed(seed, 0, 0));
    double worst = 0.0;
    bool eigen_ok = true;
    for (std::size_t i = 0; i < instances; ++i) {
      const std::size_t k = 2 + i % 4, arms = 2 + i % (k + 3), params = 2 + i % 7;
      const auto inst = random_linear_embed_instance(rng, k, arms, params);
      const Vector q = random_simplex(rng, params, 0.2);
      const auto rep = appendix_b_identity_check(q, 0, inst.model, inst.env);
      eigen_ok = eigen_ok && rep.eigen_ok;
      worst = std::max(worst, rep.gap);
    }
    CheckResult r;
    r.passed = eigen_ok && worst <= 1e-10;
    r.detail = detail::fmt("max gap %.3g over %zu instances", worst, instances);
    return r;
  });
}

// ---------------------------------------------------------------------------
// Decoupling sweeps
// ---------------------------------------------------------------------------

/// Finite actions: per-q lower bound never exceeds the action count.
inline CheckResult check_decoupling_finite(std::size_t instances = 200, std::size_t qs = 50, std::uint64_t seed = 37) {
  return detail::timed("decoupling_finite_actions", [&] {
    Rng rng(derive_seed(seed, 0, 0));
    const MuParameter mu = MuParameter::geometric();
    double worst_ratio = 0.0;
    bool ok = true;
    for (std::size_t i = 0; i < instances; ++i) {
      const std::size_t k = 1 + i % 5, params = 1 + (i / 5) % 8;
      const FiniteInstance inst = random_tabular_instance(rng, params, k);
      for (std::size_t j = 0; j < qs; ++j) {
        const Vector q = random_simplex(rng, params, j % 2 == 0 ? 0.0 : 0.4);
        const auto rep = dc_estimate(q, 0, inst.model, inst.env, 1.0, mu, static_cast<double>(k));
        worst_ratio = std::max(worst_ratio, rep.lower_bound / static_cast<double>(k));
        if (rep.lower_bound > static_cast<double>(k) + 1e-9) ok = false;
      }
    }
    CheckResult r;
    r.passed = ok;
    r.detail = detail::fmt("max lb/K %.4f over %zu x %zu", worst_ratio, instances, qs);
    return r;
  });
}

/// Linear embeddings with more arms than dimensions and f >= -b: the bound is
/// the dimension, not the arm count.
inline CheckResult check_decoupling_linear(std::size_t instances = 200, std::size_t qs = 50, std::uint64_t seed = 47) {
  return detail::timed("decoupling_linear_embedding", [&] {
    Rng rng(derive_seed(seed, 0, 0));
    const MuParameter mu = MuParameter::geometric();
    const double b = 1.0;
    double worst_ratio = 0.0;
    bool ok = true;
    for (std::size_t i = 0; i < instances; ++i) {
      const std::size_t k = 1 + i % 5, arms = k + 1 + (i / 5) % 6, params = 1 + (i / 3) % 8;
      const auto inst = random_linear_embed_instance(rng, k, arms, params);
      const ValueModel vm = inst.model;
      for (std::size_t j = 0; j < params; ++j)
        for (std::size_t a = 0; a < arms; ++a)
          if (eval_value(vm, Param(j), 0, Action(a)) < -b) throw Contradiction("linear decoupling sweep: f < -b");
      for (std::size_t j = 0; j < qs; ++j) {
        const Vector q = random_simplex(rng, params, j % 2 == 0 ? 0.0 : 0.4);
        const auto rep = dc_estimate(q, 0, vm, inst.env, b, mu, static_cast<double>(k));
        worst_ratio = std::max(worst_ratio, rep.lower_bound / static_cast<double>(k));
        if (rep.lower_bound > static_cast<double>(k) + 1e-9) ok = false;
      }
    }
    CheckResult r;
    r.passed = ok;
    r.detail = detail::fmt("max lb/K %.4f over %zu x %zu", worst_ratio, instances, qs);
    return r;
  });
}

/// Stage-wise decoupling at every level, with the tabular dimension
/// |S^h| x max |A| as the claimed constant. The counterexample family is
/// Bellman-consistent along its own greedy paths (lower bound 0), so each
/// family is padded with random Q-tables; random MDPs are swept as well.
inline CheckResult check_decoupling_mdp(std::size_t qs = 100, std::uint64_t seed = 57) {
  return detail::timed("decoupling_mdp_stagewise", [&] {
    Rng rng(derive_seed(seed, 0, 0));
    const MuParameter mu = MuParameter::geometric();
    double worst_ratio = 0.0;
    bool ok = true;
    std::size_t evaluated = 0;
    auto sweep = [&](const MdpSpec& spec, const QFunctionFamily& family) {
      const std::size_t n = family.members.size();
      for (std::size_t j = 0; j < qs; ++j) {
        const Vector q = random_simplex(rng, n, j % 2 == 0 ? 0.0 : 0.4);
        for (std::size_t h = 0; h < spec.horizon; ++h) {
          const auto rep = mdp_dc_estimate(q, spec, family, 0, h, mu);
          worst_ratio = std::max(worst_ratio, rep.lower_bound / rep.claimed_k);
          if (rep.lower_bound > rep.claimed_k + 1e-9) ok = false;
          ++evaluated;
        }
      }
    };
    for (std::size_t horizon : {1, 2, 3, 5})
      for (std::size_t n : {2, 5, 10, 20}) {
        MdpInstance inst = counterexample_mdp(horizon, n);
        sweep(inst.spec, inst.family);
        for (std::size_t extra = 0; extra < 6; ++extra) inst.family.members.push_back(random_q_function(rng, inst.spec));
        sweep(inst.spec, inst.family);
      }
    for (std::size_t i = 0; i < 40; ++i) {
      QFunctionFamily family;
      const MdpSpec spec = random_mdp(rng, 3, 1 + i % 4, 2 + i % 3);
      for (std::size_t j = 0; j < 2 + i % 7; ++j) family.members.push_back(random_q_function(rng, spec));
      sweep(spec, family);
    }
    CheckResult r;
    r.passed = ok;
    r.detail = detail::fmt("max lb/K %.4f over %zu (q, level) pairs", worst_ratio, evaluated);
    return r;
  });
}

/// The diagnostics suite behind `check`.
inline std::vector<CheckResult> run_diagnostics() {
  return {check_decomposition_identity(), check_mdp_identity(), check_eigen_identity(), check_decoupling_finite(),
          check_decoupling_linear(),       check_decoupling_mdp(),       check_counterexample_bound()};
}

}  // namespace fgts
