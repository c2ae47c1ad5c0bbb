#pragma once

#include "fgts/diagnostics.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace fgts {

using json = nlohmann::json;

/// Validation failure in an experiment config; `path` names the offending key.
struct ConfigError : std::runtime_error {
  ConfigError(std::string key_path, const std::string& message)
      : std::runtime_error(key_path + ": " + message), path(std::move(key_path)) {}
  std::string path;
};

enum class EnvKind { Counterexample, LinearPaper, MdpCounterexample };
enum class PosteriorKind { Discrete, Sgld };

struct EnvConfig {
  EnvKind kind = EnvKind::Counterexample;
  std::size_t n = 20;                // counterexample, mdp_counterexample
  std::size_t horizon = 2;           // mdp_counterexample
  std::size_t dim = 100;             // linear_paper
  std::size_t arms = 50;             // linear_paper; 0 = exact sphere
  double radius = 0.2;               // linear_paper
  double prior_precision = 100.0;    // linear_paper
};

struct SgldConfig {
  double step_size = 0.01;
  std::string steps_per_round = "t";  // the only rule: t updates at round t
};

struct AgentConfig {
  std::optional<double> eta;  ///< unset: 0.25 bandit, 1 linear_paper, min(0.25, 1/(H b^2)) MDP
  std::vector<double> lambdas{0.0};
  std::optional<double> b;    ///< unset: 1 for finite classes, infinity for linear_paper
  PosteriorKind posterior = PosteriorKind::Discrete;
  SgldConfig sgld;
  bool omega_filter = false;
};

struct ExperimentConfig {
  EnvConfig env;
  AgentConfig agent;
  std::size_t horizon = 100;  ///< "T"
  std::size_t runs = 10;
  std::uint64_t seed = 0;
  std::string output = "out";
  std::size_t threads = 0;   ///< 0: hardware concurrency
  bool prop1_reference = false;
};

inline double resolved_eta(const ExperimentConfig& c) {
  if (c.agent.eta) return *c.agent.eta;
  switch (c.env.kind) {
    case EnvKind::LinearPaper:
      return 1.0;
    case EnvKind::MdpCounterexample:
      return default_mdp_eta(c.env.horizon, 1.0);
    case EnvKind::Counterexample:
      break;
  }
  return 0.25;
}

inline double resolved_b(const ExperimentConfig& c) {
  if (c.agent.b) return *c.agent.b;
  return c.env.kind == EnvKind::LinearPaper ? kInfinity : 1.0;
}

// ---------------------------------------------------------------------------
// Config (de)serialization
// ---------------------------------------------------------------------------

namespace detail {

inline void reject_unknown(const json& obj, const std::string& path, const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw ConfigError(path.empty() ? "<root>" : path, "expected an object");
  for (const auto& [key, _] : obj.items())
    if (!allowed.contains(key)) throw ConfigError(path.empty() ? key : path + "." + key, "unknown key");
}

inline std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

inline double get_real(const json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError(path, "expected a number");
  return v.get<double>();
}

inline double get_real_or_inf(const json& v, const std::string& path) {
  if (v.is_string() && (v.get<std::string>() == "inf" || v.get<std::string>() == "infinity")) return kInfinity;
  return get_real(v, path);
}

inline std::size_t get_count(const json& v, const std::string& path, std::size_t min_value) {
  if (!v.is_number_integer() || v.get<long long>() < static_cast<long long>(min_value))
    throw ConfigError(path, "expected an integer >= " + std::to_string(min_value));
  return v.get<std::size_t>();
}

inline json real_or_inf(double v) { return std::isinf(v) ? json("inf") : json(v); }

}  // namespace detail

/// Strict parse: unknown keys, wrong types and out-of-range values raise
/// ConfigError naming the key path.
inline ExperimentConfig parse_config(const json& root) {
  using detail::join;
  detail::reject_unknown(root, "", {"env", "agent", "T", "runs", "seed", "output", "threads", "reference"});
  ExperimentConfig c;
  if (root.contains("env")) {
    const json& e = root["env"];
    if (!e.is_object()) throw ConfigError("env", "expected an object");
    const std::string kind = e.value("kind", std::string("counterexample"));
    if (kind == "counterexample") {
      c.env.kind = EnvKind::Counterexample;
      detail::reject_unknown(e, "env", {"kind", "N"});
    } else if (kind == "linear_paper") {
      c.env.kind = EnvKind::LinearPaper;
      detail::reject_unknown(e, "env", {"kind", "dim", "arms", "radius", "prior_precision"});
    } else if (kind == "mdp_counterexample") {
      c.env.kind = EnvKind::MdpCounterexample;
      detail::reject_unknown(e, "env", {"kind", "N", "H"});
    } else {
      throw ConfigError("env.kind", "unknown environment '" + kind + "'");
    }
    if (e.contains("N")) c.env.n = detail::get_count(e["N"], "env.N", c.env.kind == EnvKind::Counterexample ? 1 : 2);
    if (e.contains("H")) c.env.horizon = detail::get_count(e["H"], "env.H", 1);
    if (e.contains("dim")) c.env.dim = detail::get_count(e["dim"], "env.dim", 2);
    if (e.contains("arms")) c.env.arms = detail::get_count(e["arms"], "env.arms", 0);
    if (e.contains("radius")) {
      c.env.radius = detail::get_real(e["radius"], "env.radius");
      if (!(c.env.radius > 0.0)) throw ConfigError("env.radius", "must be positive");
    }
    if (e.contains("prior_precision")) {
      c.env.prior_precision = detail::get_real(e["prior_precision"], "env.prior_precision");
      if (!(c.env.prior_precision > 0.0)) throw ConfigError("env.prior_precision", "must be positive");
    }
  }
  if (c.env.kind == EnvKind::LinearPaper) c.agent.posterior = PosteriorKind::Sgld;

  if (root.contains("agent")) {
    const json& a = root["agent"];
    detail::reject_unknown(a, "agent", {"eta", "lambdas", "b", "posterior", "sgld", "omega_filter"});
    if (a.contains("eta") && !(a["eta"].is_string() && a["eta"].get<std::string>() == "auto")) {
      c.agent.eta = detail::get_real(a["eta"], "agent.eta");
      if (!(*c.agent.eta > 0.0)) throw ConfigError("agent.eta", "must be positive");
    }
    if (a.contains("lambdas")) {
      const json& l = a["lambdas"];
      if (!l.is_array() || l.empty()) throw ConfigError("agent.lambdas", "expected a nonempty array");
      c.agent.lambdas.clear();
      for (std::size_t i = 0; i < l.size(); ++i) {
        const std::string p = "agent.lambdas[" + std::to_string(i) + "]";
        const double v = detail::get_real(l[i], p);
        if (!(v >= 0.0)) throw ConfigError(p, "must be nonnegative");
        c.agent.lambdas.push_back(v);
      }
    }
    if (a.contains("b") && !(a["b"].is_string() && a["b"].get<std::string>() == "auto")) {
      c.agent.b = detail::get_real_or_inf(a["b"], "agent.b");
      if (!(*c.agent.b > 0.0)) throw ConfigError("agent.b", "must be positive");
    }
    if (a.contains("posterior")) {
      if (!a["posterior"].is_string()) throw ConfigError("agent.posterior", "expected a string");
      const auto p = a["posterior"].get<std::string>();
      if (p == "discrete") c.agent.posterior = PosteriorKind::Discrete;
      else if (p == "sgld") c.agent.posterior = PosteriorKind::Sgld;
      else throw ConfigError("agent.posterior", "expected 'discrete' or 'sgld'");
    }
    if (a.contains("sgld")) {
      const json& s = a["sgld"];
      detail::reject_unknown(s, "agent.sgld", {"step_size", "steps_per_round"});
      if (s.contains("step_size")) {
        c.agent.sgld.step_size = detail::get_real(s["step_size"], "agent.sgld.step_size");
        if (!(c.agent.sgld.step_size > 0.0)) throw ConfigError("agent.sgld.step_size", "must be positive");
      }
      if (s.contains("steps_per_round")) {
        if (!s["steps_per_round"].is_string() || s["steps_per_round"].get<std::string>() != "t")
          throw ConfigError("agent.sgld.steps_per_round", "only the rule \"t\" is supported");
      }
    }
    if (a.contains("omega_filter")) {
      if (!a["omega_filter"].is_boolean()) throw ConfigError("agent.omega_filter", "expected a boolean");
      c.agent.omega_filter = a["omega_filter"].get<bool>();
    }
  }
  const bool finite_env = c.env.kind != EnvKind::LinearPaper;
  if (finite_env && c.agent.posterior != PosteriorKind::Discrete)
    throw ConfigError("agent.posterior", "finite classes use the exact discrete posterior");
  if (!finite_env && c.agent.posterior != PosteriorKind::Sgld)
    throw ConfigError("agent.posterior", "linear_paper requires the sgld posterior");
  if (c.agent.omega_filter && c.env.kind != EnvKind::Counterexample)
    throw ConfigError("agent.omega_filter", "only available for finite bandit classes");

  if (root.contains("T")) c.horizon = detail::get_count(root["T"], "T", 1);
  if (root.contains("runs")) c.runs = detail::get_count(root["runs"], "runs", 1);
  if (root.contains("seed")) {
    if (!root["seed"].is_number_unsigned() && !(root["seed"].is_number_integer() && root["seed"].get<long long>() >= 0))
      throw ConfigError("seed", "expected a nonnegative integer");
    c.seed = root["seed"].get<std::uint64_t>();
  }
  if (root.contains("output")) {
    if (!root["output"].is_string()) throw ConfigError("output", "expected a string");
    c.output = root["output"].get<std::string>();
  }
  if (root.contains("threads")) c.threads = detail::get_count(root["threads"], "threads", 0);
  if (root.contains("reference")) {
    if (!root["reference"].is_string()) throw ConfigError("reference", "expected a string");
    const auto r = root["reference"].get<std::string>();
    if (r == "prop1") c.prop1_reference = true;
    else if (r != "none") throw ConfigError("reference", "expected 'none' or 'prop1'");
    if (c.prop1_reference && c.env.kind != EnvKind::Counterexample)
      throw ConfigError("reference", "the lower-bound line applies to the counterexample only");
  }
  return c;
}

inline ExperimentConfig parse_config_text(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("<root>", std::string("malformed JSON: ") + e.what());
  }
  return parse_config(root);
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

inline json to_json(const ExperimentConfig& c) {
  json env;
  switch (c.env.kind) {
    case EnvKind::Counterexample:
      env = {{"kind", "counterexample"}, {"N", c.env.n}};
      break;
    case EnvKind::LinearPaper:
      env = {{"kind", "linear_paper"}, {"dim", c.env.dim}, {"arms", c.env.arms}, {"radius", c.env.radius},
             {"prior_precision", c.env.prior_precision}};
      break;
    case EnvKind::MdpCounterexample:
      env = {{"kind", "mdp_counterexample"}, {"N", c.env.n}, {"H", c.env.horizon}};
      break;
  }
  json agent = {{"eta", c.agent.eta ? json(*c.agent.eta) : json("auto")},
                {"lambdas", c.agent.lambdas},
                {"b", c.agent.b ? detail::real_or_inf(*c.agent.b) : json("auto")},
                {"posterior", c.agent.posterior == PosteriorKind::Sgld ? "sgld" : "discrete"},
                {"omega_filter", c.agent.omega_filter}};
  if (c.agent.posterior == PosteriorKind::Sgld)
    agent["sgld"] = {{"step_size", c.agent.sgld.step_size}, {"steps_per_round", c.agent.sgld.steps_per_round}};
  return {{"env", env},       {"agent", agent},         {"T", c.horizon},
          {"runs", c.runs},   {"seed", c.seed},         {"output", c.output},
          {"threads", c.threads}, {"reference", c.prop1_reference ? "prop1" : "none"}};
}

// ---------------------------------------------------------------------------
// Presets
// ---------------------------------------------------------------------------

enum class Scale { Paper, Desk };

/// The linear-bandit figure: d = 100, eta = 1, rho = 100, b = infinity,
/// lambda in {0, 0.01, 0.1, 1}, SGLD step 0.01 with t updates per round,
/// exact sphere of suboptimal arms. The horizon is not given by the source
/// and is a local choice. Desk scale changes only runs and T.
inline ExperimentConfig preset_fig1(Scale scale) {
  ExperimentConfig c;
  c.env.kind = EnvKind::LinearPaper;
  c.env.dim = 100;
  c.env.arms = 0;
  c.env.radius = 0.2;
  c.env.prior_precision = 100.0;
  c.agent.eta = 1.0;
  c.agent.lambdas = {0.0, 0.01, 0.1, 1.0};
  c.agent.b = kInfinity;
  c.agent.posterior = PosteriorKind::Sgld;
  c.agent.sgld.step_size = 0.01;
  c.seed = 1;
  if (scale == Scale::Paper) {
    c.runs = 100;
    c.horizon = 1000;
    c.output = "out/fig1_paper";
  } else {
    c.runs = 20;
    c.horizon = 500;
    c.output = "out/fig1_desk";
  }
  return c;
}

/// Two-action counterexample with the exact posterior, eta = 0.25, b = 1,
/// lambda in {0, 1/sqrt(T)} and the lower-bound reference line.
inline ExperimentConfig preset_counterexample(std::size_t n, std::size_t horizon, std::size_t runs) {
  if (n < 2) throw InvalidInput("N: must be at least 2");
  ExperimentConfig c;
  c.env.kind = EnvKind::Counterexample;
  c.env.n = n;
  c.agent.eta = 0.25;
  c.agent.b = 1.0;
  c.agent.lambdas = {0.0, 1.0 / std::sqrt(static_cast<double>(horizon))};
  c.agent.posterior = PosteriorKind::Discrete;
  c.horizon = horizon;
  c.runs = runs;
  c.seed = 1;
  c.output = "out/counterexample";
  c.prop1_reference = true;
  return c;
}

// ---------------------------------------------------------------------------
// Execution
// ---------------------------------------------------------------------------

struct AggregateRow {
  double lambda = 0.0;
  std::size_t t = 0;
  double mean_cum_regret = 0.0;
  double se = 0.0;
  std::size_t runs = 0;
};

struct ReferencePoint {
  std::size_t t = 0;
  double value = 0.0;
};

struct ExperimentResult {
  std::vector<RegretRecord> raw;        ///< sorted by (lambda index, run, t)
  std::vector<AggregateRow> aggregate;  ///< sorted by (lambda, t)
  std::vector<ReferencePoint> reference;
};

/// Mean and standard error (sample stddev / sqrt(runs)) of cumulative regret
/// per (lambda, t).
inline std::vector<AggregateRow> aggregate_records(const std::vector<RegretRecord>& raw) {
  std::map<std::pair<double, std::size_t>, std::vector<double>> groups;
  for (const auto& r : raw) groups[{r.lambda, r.t}].push_back(r.cumulative);
  std::vector<AggregateRow> rows;
  rows.reserve(groups.size());
  for (const auto& [key, values] : groups) {
    const auto n = static_cast<double>(values.size());
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= n;
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    const double se = values.size() > 1 ? std::sqrt(ss / (n - 1.0)) / std::sqrt(n) : 0.0;
    rows.push_back({key.first, key.second, mean, se, values.size()});
  }
  return rows;
}

/// Runs one (lambda, run) cell with its own generator.
inline std::vector<RegretRecord> run_cell(const ExperimentConfig& c, std::size_t lambda_index, std::size_t run) {
  const double lambda = c.agent.lambdas.at(lambda_index);
  const std::uint64_t seed = derive_seed(c.seed, lambda_index, run);
  Rng rng(seed);
  const RunLabel label{run, lambda, seed};
  const double eta = resolved_eta(c);
  const double b = resolved_b(c);
  switch (c.env.kind) {
    case EnvKind::Counterexample: {
      const FiniteInstance inst = counterexample_env(c.env.n);
      const OmegaFilter filter{b, c.agent.omega_filter};
      ThompsonAgent agent(DiscretePosterior(inst.model, inst.prior, LossSpec{eta, lambda, b}, filter));
      return run_bandit(inst.env, agent, c.horizon, rng, label);
    }
    case EnvKind::LinearPaper: {
      LinearPaperOptions opt;
      opt.dim = c.env.dim;
      opt.arms = c.env.arms;
      opt.radius = c.env.radius;
      opt.prior_precision = c.env.prior_precision;
      opt.arm_seed = splitmix64(seed);
      const LinearInstance inst = linear_env_paper(opt);
      SgldOptions sgld;
      sgld.step_size = c.agent.sgld.step_size;
      ThompsonAgent agent(SgldPosterior(inst.model, {inst.env.action_set(0)}, inst.prior, LossSpec{eta, lambda, b}, sgld));
      return run_bandit(inst.env, agent, c.horizon, rng, label);
    }
    case EnvKind::MdpCounterexample: {
      const MdpInstance inst = counterexample_mdp(c.env.horizon, c.env.n);
      MdpAgent agent(inst.family, EpisodeLossSpec{eta, lambda});
      return run_mdp(inst.spec, agent, c.horizon, rng, label);
    }
  }
  return {};
}

/// Executes every (lambda, run) cell on a worker pool, then aggregates on
/// the calling thread. Output is independent of the thread count.
inline ExperimentResult run_experiment(const ExperimentConfig& c) {
  if (c.agent.lambdas.empty()) throw ConfigError("agent.lambdas", "expected a nonempty array");
  const std::size_t cells = c.agent.lambdas.size() * c.runs;
  std::vector<std::vector<RegretRecord>> results(cells);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < cells; i = next++) {
      try {
        results[i] = run_cell(c, i / c.runs, i % c.runs);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::size_t threads = c.threads != 0 ? c.threads : std::max<std::size_t>(1, std::thread::hardware_concurrency());
  threads = std::min(threads, cells);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  ExperimentResult out;
  out.raw.reserve(cells * c.horizon);
  for (auto& cell : results) out.raw.insert(out.raw.end(), cell.begin(), cell.end());
  out.aggregate = aggregate_records(out.raw);
  if (c.prop1_reference)
    for (std::size_t t = 1; t <= c.horizon; ++t) out.reference.push_back({t, prop1_lower_bound(c.env.n, t)});
  return out;
}

// ---------------------------------------------------------------------------
// Output
// ---------------------------------------------------------------------------

namespace detail {

inline std::string fmt_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

inline double parse_real(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') throw InvalidInput("csv: not a number: '" + s + "'");
  return v;
}

inline std::size_t parse_count(const std::string& s) {
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0') throw InvalidInput("csv: not an integer: '" + s + "'");
  return static_cast<std::size_t>(v);
}

}  // namespace detail

inline constexpr const char* kRawHeader = "run_id,lambda,t,regret,cum_regret";
inline constexpr const char* kAggregateHeader = "lambda,t,mean_cum_regret,se,runs";

inline std::string raw_csv(const std::vector<RegretRecord>& raw) {
  std::string s = std::string(kRawHeader) + "\n";
  for (const auto& r : raw)
    s += std::to_string(r.run_id) + "," + detail::fmt_real(r.lambda) + "," + std::to_string(r.t) + "," +
         detail::fmt_real(r.regret) + "," + detail::fmt_real(r.cumulative) + "\n";
  return s;
}

inline std::string aggregate_csv(const std::vector<AggregateRow>& rows) {
  std::string s = std::string(kAggregateHeader) + "\n";
  for (const auto& r : rows)
    s += detail::fmt_real(r.lambda) + "," + std::to_string(r.t) + "," + detail::fmt_real(r.mean_cum_regret) + "," +
         detail::fmt_real(r.se) + "," + std::to_string(r.runs) + "\n";
  return s;
}

inline std::vector<RegretRecord> parse_raw_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kRawHeader) throw InvalidInput("csv: missing raw header");
  std::vector<RegretRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != 5) throw InvalidInput("csv: expected 5 columns");
    RegretRecord r;
    r.run_id = detail::parse_count(cells[0]);
    r.lambda = detail::parse_real(cells[1]);
    r.t = detail::parse_count(cells[2]);
    r.regret = detail::parse_real(cells[3]);
    r.cumulative = detail::parse_real(cells[4]);
    out.push_back(r);
  }
  return out;
}

inline std::vector<AggregateRow> parse_aggregate_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kAggregateHeader) throw InvalidInput("csv: missing aggregate header");
  std::vector<AggregateRow> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != 5) throw InvalidInput("csv: expected 5 columns");
    out.push_back({detail::parse_real(cells[0]), detail::parse_count(cells[1]), detail::parse_real(cells[2]),
                   detail::parse_real(cells[3]), detail::parse_count(cells[4])});
  }
  return out;
}

/// SVG line plot of mean cumulative regret per lambda with a one-SE band.
inline std::string regret_svg(const std::vector<AggregateRow>& rows, const std::vector<ReferencePoint>& reference = {}) {
  if (rows.empty()) throw InvalidInput("plot: no curves");
  std::map<double, std::vector<AggregateRow>> curves;
  for (const auto& r : rows) curves[r.lambda].push_back(r);
  std::size_t t_max = 1;
  double y_max = 0.0;
  for (const auto& r : rows) {
    t_max = std::max(t_max, r.t);
    y_max = std::max(y_max, r.mean_cum_regret + r.se);
  }
  for (const auto& p : reference) y_max = std::max(y_max, p.value);
  if (y_max <= 0.0) y_max = 1.0;

  constexpr double width = 720, height = 440, left = 70, right = 170, top = 20, bottom = 50;
  const double plot_w = width - left - right;
  const double plot_h = height - top - bottom;
  auto px = [&](double t) { return left + plot_w * (t_max > 1 ? (t - 1.0) / static_cast<double>(t_max - 1) : 0.5); };
  auto py = [&](double y) { return top + plot_h * (1.0 - y / y_max); };
  auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return std::string(buf);
  };
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};

  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width) + "\" height=\"" + num(height) +
       "\" viewBox=\"0 0 " + num(width) + " " + num(height) + "\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<g stroke=\"black\" stroke-width=\"1\">\n";
  s += "<line x1=\"" + num(left) + "\" y1=\"" + num(top + plot_h) + "\" x2=\"" + num(left + plot_w) + "\" y2=\"" +
       num(top + plot_h) + "\"/>\n";
  s += "<line x1=\"" + num(left) + "\" y1=\"" + num(top) + "\" x2=\"" + num(left) + "\" y2=\"" + num(top + plot_h) +
       "\"/>\n</g>\n";
  for (int i = 0; i <= 4; ++i) {
    const double y = y_max * i / 4.0;
    const double t = 1.0 + static_cast<double>(t_max - 1) * i / 4.0;
    s += "<text x=\"" + num(left - 6) + "\" y=\"" + num(py(y) + 4) +
         "\" font-size=\"11\" text-anchor=\"end\">" + num(y) + "</text>\n";
    s += "<text x=\"" + num(px(t)) + "\" y=\"" + num(top + plot_h + 16) +
         "\" font-size=\"11\" text-anchor=\"middle\">" + std::to_string(static_cast<long>(std::lround(t))) +
         "</text>\n";
  }
  s += "<text x=\"" + num(left + plot_w / 2) + "\" y=\"" + num(height - 10) +
       "\" font-size=\"12\" text-anchor=\"middle\">t</text>\n";
  s += "<text x=\"16\" y=\"" + num(top + plot_h / 2) + "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
       num(top + plot_h / 2) + ")\">average cumulative regret</text>\n";

  std::size_t idx = 0;
  for (const auto& [lambda, pts] : curves) {
    const char* color = palette[idx % std::size(palette)];
    std::string band, line;
    for (const auto& p : pts) band += num(px(static_cast<double>(p.t))) + "," + num(py(p.mean_cum_regret + p.se)) + " ";
    for (auto it = pts.rbegin(); it != pts.rend(); ++it)
      band += num(px(static_cast<double>(it->t))) + "," + num(py(std::max(0.0, it->mean_cum_regret - it->se))) + " ";
    for (const auto& p : pts) line += num(px(static_cast<double>(p.t))) + "," + num(py(p.mean_cum_regret)) + " ";
    s += "<polygon class=\"band\" points=\"" + band + "\" fill=\"" + color + "\" fill-opacity=\"0.2\" stroke=\"none\"/>\n";
    s += "<polyline class=\"curve\" points=\"" + line + "\" fill=\"none\" stroke=\"" + color + "\" stroke-width=\"1.5\"/>\n";
    char label[64];
    std::snprintf(label, sizeof label, "FG-TS-%g", lambda);
    const double ly = top + 16.0 + 18.0 * static_cast<double>(idx);
    s += "<line x1=\"" + num(left + plot_w + 12) + "\" y1=\"" + num(ly - 4) + "\" x2=\"" + num(left + plot_w + 32) +
         "\" y2=\"" + num(ly - 4) + "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
    s += "<text class=\"label\" x=\"" + num(left + plot_w + 38) + "\" y=\"" + num(ly) + "\" font-size=\"12\">" + label +
         "</text>\n";
    ++idx;
  }
  if (!reference.empty()) {
    std::string line;
    for (const auto& p : reference) line += num(px(static_cast<double>(p.t))) + "," + num(py(p.value)) + " ";
    s += "<polyline class=\"reference\" points=\"" + line +
         "\" fill=\"none\" stroke=\"black\" stroke-dasharray=\"5,4\" stroke-width=\"1\"/>\n";
    const double ly = top + 16.0 + 18.0 * static_cast<double>(idx);
    s += "<text class=\"label\" x=\"" + num(left + plot_w + 12) + "\" y=\"" + num(ly) +
         "\" font-size=\"12\">lower bound</text>\n";
  }
  s += "</svg>\n";
  return s;
}

/// Output directory: FGTS_OUTPUT_DIR when set, else the config's `output`.
inline std::filesystem::path output_directory(const ExperimentConfig& c) {
  if (const char* env = std::getenv("FGTS_OUTPUT_DIR"); env != nullptr && *env != '\0') return env;
  return c.output;
}

namespace detail {
inline void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << content;
  if (!out) throw std::runtime_error("write failed for " + p.string());
}
}  // namespace detail

/// Writes raw.csv, aggregate.csv, regret.svg (and reference.csv when a
/// reference line exists) into `dir`.
inline void emit_plot_data(const ExperimentResult& result, const std::filesystem::path& dir) {
  if (result.aggregate.empty()) throw InvalidInput("plot: no curves");
  std::filesystem::create_directories(dir);
  detail::write_file(dir / "raw.csv", raw_csv(result.raw));
  detail::write_file(dir / "aggregate.csv", aggregate_csv(result.aggregate));
  detail::write_file(dir / "regret.svg", regret_svg(result.aggregate, result.reference));
  if (!result.reference.empty()) {
    std::string s = "t,value\n";
    for (const auto& p : result.reference) s += std::to_string(p.t) + "," + detail::fmt_real(p.value) + "\n";
    detail::write_file(dir / "reference.csv", s);
  }
}

}  // namespace fgts
