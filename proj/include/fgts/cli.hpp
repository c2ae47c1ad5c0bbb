#pragma once

#include "fgts/checks.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <ostream>
#include <string>

namespace fgts {

namespace detail {

inline void print_final_rows(const ExperimentConfig& c, const ExperimentResult& res, std::ostream& out) {
  for (const auto& row : res.aggregate)
    if (row.t == c.horizon)
      out << fmt("lambda=%-8g T=%zu mean_cum_regret=%.4f se=%.4f runs=%zu\n", row.lambda, row.t, row.mean_cum_regret,
                 row.se, row.runs);
}

inline ExperimentResult run_and_emit(const ExperimentConfig& c, std::ostream& out) {
  ExperimentResult res = run_experiment(c);
  const auto dir = output_directory(c);
  emit_plot_data(res, dir);
  detail::write_file(dir / "config.json", to_json(c).dump(2) + "\n");
  print_final_rows(c, res, out);
  out << "wrote " << dir.string() << "\n";
  return res;
}

inline int cmd_bayes(const ExperimentConfig& c, std::ostream& out) {
  if (c.env.kind != EnvKind::Counterexample)
    throw ConfigError("env.kind", "the Bayesian-regret experiment needs a finite bandit class (counterexample)");
  const FiniteInstance inst = counterexample_env(c.env.n);
  const auto dir = output_directory(c);
  std::filesystem::create_directories(dir);
  std::string csv = "lambda,t,bayes_mean,bayes_se,slice_mean,slice_se\n";
  for (double lambda : c.agent.lambdas) {
    const LossSpec spec{resolved_eta(c), lambda, resolved_b(c)};
    const RegretCurve bayes = bayesian_regret_experiment(inst, spec, c.horizon, c.runs, c.seed);
    const RegretCurve slice = frequentist_regret_curve(inst, Param(std::size_t{0}), spec, c.horizon, c.runs, c.seed);
    for (std::size_t t = 0; t < c.horizon; ++t)
      csv += fmt_real(lambda) + "," + std::to_string(t + 1) + "," + fmt_real(bayes.mean_cumulative[t]) + "," +
             fmt_real(bayes.standard_error[t]) + "," + fmt_real(slice.mean_cumulative[t]) + "," +
             fmt_real(slice.standard_error[t]) + "\n";
    out << fmt("lambda=%-8g T=%zu bayesian=%.4f (se %.4f) fixed-truth=%.4f (se %.4f)\n", lambda, c.horizon,
               bayes.final_mean(), bayes.final_se(), slice.final_mean(), slice.final_se());
  }
  write_file(dir / "bayes.csv", csv);
  write_file(dir / "config.json", to_json(c).dump(2) + "\n");
  out << "wrote " << dir.string() << "\n";
  return 0;
}

}  // namespace detail

/// Entry point for the `fgts` tool. Returns 0 on success, 1 on invalid
/// input or configuration, 2 when a diagnostic check fails.
inline int cli_main(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Thompson Sampling and Feel-Good Thompson Sampling experiments", "fgts"};
  app.require_subcommand(1);

  std::string config_path;
  auto* run = app.add_subcommand("run", "run the experiment described by a JSON config");
  run->add_option("config", config_path, "config file")->required();

  std::string scale = "desk";
  auto* fig1 = app.add_subcommand("fig1", "linear-bandit lambda sweep (desk or paper preset)");
  fig1->add_option("--scale", scale, "paper or desk")->check(CLI::IsMember({"paper", "desk"}));

  std::size_t n = 20, horizon = 20, runs = 500;
  auto* counter = app.add_subcommand("counterexample", "two-action counterexample, lambda in {0, 1/sqrt(T)}");
  counter->add_option("--N", n, "class size")->check(CLI::Range(std::size_t{2}, std::size_t{1} << 20));
  counter->add_option("--T", horizon, "rounds")->check(CLI::Range(std::size_t{1}, std::size_t{1} << 24));
  counter->add_option("--runs", runs, "replications")->check(CLI::Range(std::size_t{1}, std::size_t{1} << 24));

  auto* mdp = app.add_subcommand("mdp", "episodic MDP experiment from a JSON config");
  mdp->add_option("config", config_path, "config file")->required();

  auto* check = app.add_subcommand("check", "identity, decoupling and lower-bound diagnostics");

  auto* bayes = app.add_subcommand("bayes", "Bayesian regret vs fixed-truth regret from a JSON config");
  bayes->add_option("config", config_path, "config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*run) {
      detail::run_and_emit(load_config(config_path), out);
      return 0;
    }
    if (*fig1) {
      detail::run_and_emit(preset_fig1(scale == "paper" ? Scale::Paper : Scale::Desk), out);
      return 0;
    }
    if (*counter) {
      const ExperimentConfig c = preset_counterexample(n, horizon, runs);
      const ExperimentResult res = detail::run_and_emit(c, out);
      for (const auto& row : res.aggregate)
        if (row.lambda == 0.0 && row.t == horizon) {
          const double bound = prop1_lower_bound(n, horizon);
          out << detail::fmt("lambda=0 mean %.4f (3 SE %.4f) vs lower bound %.4f: %s\n", row.mean_cum_regret,
                             3.0 * row.se, bound, row.mean_cum_regret >= bound - 3.0 * row.se ? "consistent" : "BELOW");
        }
      return 0;
    }
    if (*mdp) {
      const ExperimentConfig c = load_config(config_path);
      if (c.env.kind != EnvKind::MdpCounterexample)
        throw ConfigError("env.kind", "the mdp command needs kind 'mdp_counterexample'");
      detail::run_and_emit(c, out);
      return 0;
    }
    if (*bayes) return detail::cmd_bayes(load_config(config_path), out);
    if (*check) {
      bool ok = true;
      for (const auto& r : run_diagnostics()) {
        out << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << detail::fmt(" [%.2fs]\n", r.seconds);
        ok = ok && r.passed;
      }
      return ok ? 0 : 2;
    }
  } catch (const ConfigError& e) {
    err << "config error at " << e.what() << "\n";
    return 1;
  } catch (const InvalidInput& e) {
    err << "invalid input: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace fgts
