// Acceptance suite: one PASS/FAIL line per criterion. `--criterion k` runs
// only criterion k; exit status is nonzero when any selected criterion fails.

#include "fgts/checks.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <functional>
#include <iostream>

using namespace fgts;

namespace {

struct Criterion {
  int id;
  const char* title;
  double budget_seconds;
  std::function<CheckResult()> run;
};

CheckResult combine(std::vector<CheckResult> parts) {
  CheckResult r;
  r.passed = true;
  for (const auto& p : parts) {
    r.passed = r.passed && p.passed;
    if (!r.detail.empty()) r.detail += "; ";
    r.detail += (p.passed ? "" : "[FAIL] ") + p.name + ": " + p.detail;
  }
  return r;
}

// ---- criterion 6 ---------------------------------------------------------

// Central differences written only against eval_value.
Vector fd_gradient(const LossSpec& spec, const ValueModel& m, const Vector& th, const HistoryEntry& e,
                   const std::vector<Action>& arms) {
  auto loss = [&](const Vector& v) {
    const double res = eval_value(m, Param(v), e.context, e.action) - e.reward;
    double best = -kInfinity;
    for (const auto& a : arms) best = std::max(best, eval_value(m, Param(v), e.context, a));
    return spec.eta * res * res - spec.lambda * std::min(spec.b, best);
  };
  Vector g(th.size());
  for (Eigen::Index i = 0; i < th.size(); ++i) {
    Vector p = th, q = th;
    p[i] += 1e-5;
    q[i] -= 1e-5;
    g[i] = (loss(p) - loss(q)) / 2e-5;
  }
  return g;
}

CheckResult sgld_gradient() {
  Rng rng(derive_seed(606, 0, 0));
  std::normal_distribution<double> normal;
  const std::size_t d = 6, k = 5;
  const ValueModel m = PureLinearModel{d};
  double worst = 0.0;
  int points = 0;
  while (points < 100) {
    Matrix rows(k, d);
    for (Eigen::Index i = 0; i < rows.size(); ++i) rows.data()[i] = normal(rng);
    Vector th(d);
    for (Eigen::Index i = 0; i < th.size(); ++i) th[i] = normal(rng);
    const LossSpec spec{points % 2 == 0 ? 1.0 : 0.25, 0.1 * (points % 4), points % 3 == 0 ? 2.0 : kInfinity};
    Vector values = rows * th;
    std::vector<double> v(values.data(), values.data() + values.size());
    std::sort(v.begin(), v.end());
    if (v[k - 1] - v[k - 2] < 1e-3 || std::abs(v[k - 1] - spec.b) < 1e-3) continue;  // away from kinks
    std::vector<Action> arms;
    for (Eigen::Index i = 0; i < rows.rows(); ++i) arms.emplace_back(Vector(rows.row(i).transpose()));
    const HistoryEntry e{0, arms[static_cast<std::size_t>(points) % k], normal(rng)};
    const Vector g = loss_gradient(spec, m, Param(th), e, ArmList{rows});
    const Vector fd = fd_gradient(spec, m, th, e, arms);
    worst = std::max(worst, (g - fd).norm() / std::max(1.0, fd.norm()));
    ++points;
  }
  CheckResult r;
  r.name = "gradient";
  r.passed = worst <= 1e-5;
  r.detail = detail::fmt("max relative error %.3g over %d points", worst, points);
  return r;
}

CheckResult sgld_noise() {
  Rng rng(derive_seed(606, 1, 0));
  const std::size_t t = 40;
  const double delta = 0.01;
  const int draws = 100000;
  double ss = 0.0;
  for (int i = 0; i < draws; ++i) {
    const Vector out = sgld_update(Vector::Zero(1), Vector::Zero(1), Vector::Zero(1), t, SgldOptions{delta, 1.0}, rng);
    ss += out[0] * out[0];
  }
  const double expected = std::sqrt(2.0 * delta / static_cast<double>(t));
  const double got = std::sqrt(ss / draws);
  CheckResult r;
  r.name = "noise scale";
  r.passed = std::abs(got / expected - 1.0) <= 0.02;
  r.detail = detail::fmt("empirical %.6f vs %.6f at t=%zu", got, expected, t);
  return r;
}

CheckResult sgld_determinism() {
  ExperimentConfig c = preset_fig1(Scale::Desk);
  c.env.dim = 20;
  c.horizon = 60;
  c.runs = 2;
  c.threads = 2;
  const std::string a = raw_csv(run_experiment(c).raw);
  c.threads = 1;
  const std::string b = raw_csv(run_experiment(c).raw);
  CheckResult r;
  r.name = "determinism";
  r.passed = a == b;
  r.detail = detail::fmt("%zu bytes, %s", a.size(), a == b ? "identical" : "different");
  return r;
}

// ---- criterion 7 ---------------------------------------------------------

CheckResult posterior_incremental() {
  Rng rng(derive_seed(707, 0, 0));
  double worst = 0.0;
  for (int trial = 0; trial < 40; ++trial) {
    const FiniteInstance inst = random_tabular_instance(rng, 3 + trial % 6, 2 + trial % 3, 1 + trial % 2);
    const LossSpec spec{0.25 + 0.25 * (trial % 4), 0.1 * (trial % 3), trial % 2 == 0 ? 1.0 : kInfinity};
    DiscretePosterior post(inst.model, inst.prior, spec);
    std::vector<HistoryEntry> history;
    for (int s = 0; s < 400; ++s) {
      const Context x = std::uniform_int_distribution<std::size_t>(0, inst.env.num_contexts() - 1)(rng);
      const std::size_t k = std::get<FiniteActions>(inst.env.action_set(x)).count;
      const Action a(std::uniform_int_distribution<std::size_t>(0, k - 1)(rng));
      const HistoryEntry e{x, a, sample_reward(inst.env, x, a, rng)};
      post.observe(e);
      history.push_back(e);
      if (s % 40 == 39) {
        const Vector scratch = discrete_posterior_weights(history, spec, inst.model, inst.prior).array().log();
        worst = std::max(worst, (post.log_weights() - scratch).cwiseAbs().maxCoeff());
      }
    }
  }
  CheckResult r;
  r.name = "incremental vs scratch";
  r.passed = worst <= 1e-10;
  r.detail = detail::fmt("max log-weight difference %.3g", worst);
  return r;
}

CheckResult posterior_flat() {
  Rng rng(derive_seed(707, 1, 0));
  bool identical = true;
  double worst_prior = 0.0;
  for (std::size_t n : {2, 5, 20, 50}) {
    const FiniteInstance inst = counterexample_env(n);
    DiscretePosterior post(inst.model, inst.prior, LossSpec{0.25, 0.0, 1.0});
    for (int s = 0; s < 300; ++s) {
      post.observe({0, Action(std::size_t{0}), sample_reward(inst.env, 0, Action(std::size_t{0}), rng)});
      const Vector lw = post.log_weights();
      for (Eigen::Index j = 1; j < lw.size(); ++j) identical = identical && lw[j] == lw[0];
      const Vector w = post.weights();
      worst_prior = std::max(worst_prior, (w - inst.prior).cwiseAbs().maxCoeff());
    }
  }
  CheckResult r;
  r.name = "flat posterior";
  r.passed = identical && worst_prior <= 4.0 * DBL_EPSILON;
  r.detail = detail::fmt("log-weights %s across members; max |w - prior| %.3g",
                         identical ? "bitwise equal" : "NOT equal", worst_prior);
  return r;
}

std::vector<Criterion> criteria() {
  return {
      {1, "counterexample lower bound (N=20, T=20, 500 seeds)", 30.0, [] { return check_counterexample_bound(20, 20, 500, 1); }},
      {2, "Feel-Good remedy (lambda = 1/sqrt(T))", 30.0, [] { return check_feelgood_remedy(20, 20, 500, 1); }},
      {3, "linear sweep ordering (desk preset, 20 runs)", 600.0, [] { return check_linear_sweep_ordering(); }},
      {4, "identity suite", 60.0,
       [] { return combine({check_decomposition_identity(1000), check_mdp_identity(100), check_eigen_identity(100)}); }},
      {5, "decoupling sweeps", 120.0, [] { return combine({check_decoupling_finite(200, 50), check_decoupling_linear(), check_decoupling_mdp()}); }},
      {6, "SGLD correctness", kInfinity, [] { return combine({sgld_gradient(), sgld_noise(), sgld_determinism()}); }},
      {7, "posterior correctness", kInfinity, [] { return combine({posterior_incremental(), posterior_flat()}); }},
      {8, "Bayesian vs fixed-truth regret (T=200)", kInfinity, [] { return check_bayes_gap(20, 200, 500, 1); }},
  };
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  int only = 0;
  app.add_option("--criterion", only, "run a single criterion (1-8)")->check(CLI::Range(1, 8));
  CLI11_PARSE(app, argc, argv);

  bool all_passed = true;
  for (const auto& c : criteria()) {
    if (only != 0 && c.id != only) continue;
    CheckResult r;
    try {
      r = detail::timed(c.title, c.run);
    } catch (const std::exception& e) {
      r.passed = false;
      r.detail = std::string("exception: ") + e.what();
    }
    const bool in_budget = r.seconds <= c.budget_seconds;
    const bool ok = r.passed && in_budget;
    all_passed = all_passed && ok;
    std::printf("%s criterion %d: %s: %s [%.2fs%s]\n", ok ? "PASS" : "FAIL", c.id, c.title, r.detail.c_str(),
                r.seconds, in_budget ? "" : ", over budget");
    std::fflush(stdout);
  }
  return all_passed ? 0 : 1;
}
