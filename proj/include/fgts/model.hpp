#pragma once

#include "fgts/types.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

namespace fgts {

// ---------------------------------------------------------------------------
// Action sets
// ---------------------------------------------------------------------------

/// Actions 0..count-1, identified by index.
struct FiniteActions {
  std::size_t count = 0;
};

/// A finite list of arm vectors (one per row). Greedy selection returns the
/// arm vector itself.
struct ArmList {
  Matrix arms;
};

/// {anchor} union {v : v[0..offset) = 0, ||v[offset..dim)|| = radius}.
/// The continuum part is handled analytically by greedy selection.
struct SphereArms {
  Vector anchor;
  std::size_t offset = 1;
  double radius = 0.2;
};

using ActionSet = std::variant<FiniteActions, ArmList, SphereArms>;

inline bool action_set_empty(const ActionSet& set) {
  return std::visit(Overloaded{[](const FiniteActions& s) { return s.count == 0; },
                               [](const ArmList& s) { return s.arms.rows() == 0; },
                               [](const SphereArms&) { return false; }},
                    set);
}

inline bool contains(const ActionSet& set, const Action& a) {
  return std::visit(
      Overloaded{
          [&](const FiniteActions& s) { return a.is_index() && a.index() < s.count; },
          [&](const ArmList& s) {
            if (!a.is_vector() || a.vector().size() != s.arms.cols()) return false;
            for (Eigen::Index i = 0; i < s.arms.rows(); ++i)
              if (s.arms.row(i).transpose() == a.vector()) return true;
            return false;
          },
          [&](const SphereArms& s) {
            if (!a.is_vector() || a.vector().size() != s.anchor.size()) return false;
            const Vector& v = a.vector();
            if ((v - s.anchor).norm() <= 1e-12) return true;
            const auto off = static_cast<Eigen::Index>(s.offset);
            if (v.head(off).cwiseAbs().maxCoeff() > 0.0) return false;
            const double n = v.tail(v.size() - off).norm();
            return std::abs(n - s.radius) <= 1e-9 * std::max(1.0, s.radius);
          }},
      set);
}

// ---------------------------------------------------------------------------
// Value models
// ---------------------------------------------------------------------------

/// f(theta, x, a) stored as table[theta][x][a].
struct TabularModel {
  std::vector<std::vector<std::vector<double>>> table;

  [[nodiscard]] std::size_t num_params() const { return table.size(); }
  [[nodiscard]] std::size_t num_contexts() const { return table.empty() ? 0 : table.front().size(); }
  [[nodiscard]] std::size_t num_actions(Context x) const { return table.front().at(x).size(); }
};

/// f(theta, x, a) = w(theta, x)^T phi(x, a).
///
/// Features are given per context as a matrix whose rows are phi(x, a).
/// Weights come either from a finite table (index parameters) or from a
/// differentiable map with its Jacobian (vector parameters).
struct LinearEmbedModel {
  std::vector<Matrix> features;
  std::vector<std::vector<Vector>> weights;  // [theta][x], finite parameter set
  std::function<Vector(const Vector&, Context)> weight_map;
  std::function<Matrix(const Vector&, Context)> weight_jacobian;  // K x d

  [[nodiscard]] std::size_t dim() const {
    return features.empty() ? 0 : static_cast<std::size_t>(features.front().cols());
  }
  [[nodiscard]] std::size_t num_contexts() const { return features.size(); }
  [[nodiscard]] std::size_t num_actions(Context x) const {
    return static_cast<std::size_t>(features.at(x).rows());
  }
  [[nodiscard]] bool finite() const { return !weights.empty(); }
  [[nodiscard]] bool differentiable() const {
    return static_cast<bool>(weight_map) && static_cast<bool>(weight_jacobian);
  }

  [[nodiscard]] Vector weight(const Param& theta, Context x) const {
    if (theta.is_index()) {
      if (theta.index() >= weights.size())
        throw InvalidInput("theta: index " + std::to_string(theta.index()) + " out of range");
      return weights[theta.index()].at(x);
    }
    if (!weight_map) throw InvalidInput("theta: vector parameter given but the model has no weight map");
    return weight_map(theta.vector(), x);
  }
};

/// f(theta, x, a) = theta^T a with actions given as vectors in R^dim.
struct PureLinearModel {
  std::size_t dim = 0;
};

using ValueModel = std::variant<TabularModel, LinearEmbedModel, PureLinearModel>;

enum class ModelKind { TabularFinite, LinearEmbed, PureLinear };

inline ModelKind kind(const ValueModel& m) {
  return std::visit(Overloaded{[](const TabularModel&) { return ModelKind::TabularFinite; },
                               [](const LinearEmbedModel&) { return ModelKind::LinearEmbed; },
                               [](const PureLinearModel&) { return ModelKind::PureLinear; }},
                    m);
}

/// Number of parameters for models over a finite parameter set; 0 otherwise.
inline std::size_t num_params(const ValueModel& m) {
  return std::visit(Overloaded{[](const TabularModel& t) { return t.num_params(); },
                               [](const LinearEmbedModel& l) { return l.weights.size(); },
                               [](const PureLinearModel&) { return std::size_t{0}; }},
                    m);
}

/// The action set a finite-action model defines for context `x`.
inline ActionSet model_actions(const ValueModel& m, Context x) {
  return std::visit(
      Overloaded{[&](const TabularModel& t) -> ActionSet {
                   if (x >= t.num_contexts()) throw InvalidInput("context: index out of range");
                   return FiniteActions{t.num_actions(x)};
                 },
                 [&](const LinearEmbedModel& l) -> ActionSet {
                   if (x >= l.num_contexts()) throw InvalidInput("context: index out of range");
                   return FiniteActions{l.num_actions(x)};
                 },
                 [](const PureLinearModel&) -> ActionSet {
                   throw UnsupportedOperation("pure linear models carry no action set");
                 }},
      m);
}

inline double eval_value(const ValueModel& model, const Param& theta, Context x, const Action& a) {
  return std::visit(
      Overloaded{
          [&](const TabularModel& t) {
            if (theta.index() >= t.num_params())
              throw InvalidInput("theta: index " + std::to_string(theta.index()) + " out of range");
            const auto& row = t.table[theta.index()];
            if (x >= row.size()) throw InvalidInput("context: index " + std::to_string(x) + " out of range");
            if (a.index() >= row[x].size())
              throw InvalidInput("action: index " + std::to_string(a.index()) + " out of range");
            return row[x][a.index()];
          },
          [&](const LinearEmbedModel& l) {
            if (x >= l.num_contexts()) throw InvalidInput("context: index " + std::to_string(x) + " out of range");
            if (a.index() >= l.num_actions(x))
              throw InvalidInput("action: index " + std::to_string(a.index()) + " out of range");
            const Vector w = l.weight(theta, x);
            if (static_cast<Eigen::Index>(w.size()) != l.features[x].cols())
              throw InvalidInput("theta: weight dimension does not match feature dimension");
            return l.features[x].row(static_cast<Eigen::Index>(a.index())).dot(w);
          },
          [&](const PureLinearModel& p) {
            const Vector& th = theta.vector();
            const Vector& av = a.vector();
            if (static_cast<std::size_t>(th.size()) != p.dim)
              throw InvalidInput("theta: dimension " + std::to_string(th.size()) + " != " + std::to_string(p.dim));
            if (static_cast<std::size_t>(av.size()) != p.dim)
              throw InvalidInput("action: dimension " + std::to_string(av.size()) + " != " + std::to_string(p.dim));
            return th.dot(av);
          }},
      model);
}

struct GreedyChoice {
  Action action;
  double value = 0.0;
};

/// argmax_a f(theta, x, a) together with the maximal value. Ties go to the
/// lowest index / first enumerated candidate (the anchor for sphere sets).
inline GreedyChoice greedy_choice(const ValueModel& model, const Param& theta, Context x,
                                  const ActionSet& actions) {
  if (action_set_empty(actions)) throw InvalidInput("action set is empty");
  return std::visit(
      Overloaded{
          [&](const FiniteActions& s) {
            if (kind(model) == ModelKind::PureLinear)
              throw InvalidInput("action set: index actions given to a pure linear model");
            GreedyChoice best{Action(std::size_t{0}), eval_value(model, theta, x, Action(std::size_t{0}))};
            for (std::size_t a = 1; a < s.count; ++a) {
              const double v = eval_value(model, theta, x, Action(a));
              if (v > best.value) best = GreedyChoice{Action(a), v};
            }
            return best;
          },
          [&](const ArmList& s) {
            if (kind(model) != ModelKind::PureLinear)
              throw InvalidInput("action set: vector arms require a pure linear model");
            const Vector& th = theta.vector();
            if (th.size() != s.arms.cols()) throw InvalidInput("theta: dimension does not match arm dimension");
            const Vector values = s.arms * th;
            Eigen::Index best = 0;
            for (Eigen::Index i = 1; i < values.size(); ++i)
              if (values[i] > values[best]) best = i;
            return GreedyChoice{Action(Vector(s.arms.row(best).transpose())), values[best]};
          },
          [&](const SphereArms& s) {
            if (kind(model) != ModelKind::PureLinear)
              throw InvalidInput("action set: vector arms require a pure linear model");
            const Vector& th = theta.vector();
            if (th.size() != s.anchor.size()) throw InvalidInput("theta: dimension does not match arm dimension");
            const auto off = static_cast<Eigen::Index>(s.offset);
            const double anchor_value = th.dot(s.anchor);
            const auto tail = th.tail(th.size() - off);
            const double tail_norm = tail.norm();
            const double sphere_value = s.radius * tail_norm;
            if (anchor_value >= sphere_value) return GreedyChoice{Action(s.anchor), anchor_value};
            Vector arm = Vector::Zero(th.size());
            arm.tail(th.size() - off) = (s.radius / tail_norm) * tail;
            return GreedyChoice{Action(std::move(arm)), sphere_value};
          }},
      actions);
}

inline Action greedy_action(const ValueModel& model, const Param& theta, Context x, const ActionSet& actions) {
  return greedy_choice(model, theta, x, actions).action;
}

/// max over actions of f(theta, x, a).
inline double max_value(const ValueModel& model, const Param& theta, Context x, const ActionSet& actions) {
  return greedy_choice(model, theta, x, actions).value;
}

inline double truncate_value(double v, double b) {
  if (std::isinf(b)) return v;
  return std::max(-b, std::min(b, v));
}

// ---------------------------------------------------------------------------
// Loss
// ---------------------------------------------------------------------------

/// Parameters of the Feel-Good loss
///   L = eta (f(theta,x,a) - r)^2 - lambda min(b, max_a' f(theta,x,a')).
/// lambda = 0 gives the plain squared-error likelihood.
struct LossSpec {
  double eta = 0.25;
  double lambda = 0.0;
  double b = 1.0;

  /// Throws on hard violations; returns warnings for soft ones.
  std::vector<std::string> validate() const {
    if (!(eta > 0.0) || std::isinf(eta)) throw InvalidInput("eta must be a positive finite real");
    if (!(lambda >= 0.0) || std::isinf(lambda)) throw InvalidInput("lambda must be a nonnegative finite real");
    if (!(b > 0.0)) throw InvalidInput("b must be positive (or infinite)");
    std::vector<std::string> warnings;
    if (std::isfinite(b) && b < 1.0) warnings.emplace_back("b < 1 is outside the regime covered by the regret bounds");
    return warnings;
  }
};

struct HistoryEntry {
  Context context = 0;
  Action action;
  double reward = 0.0;
};

inline double feelgood_loss(const LossSpec& spec, const ValueModel& model, const Param& theta, Context x,
                            const ActionSet& actions, const Action& a, double r) {
  if (!contains(actions, a)) throw InvalidInput("action: not a member of the offered action set");
  const double residual = eval_value(model, theta, x, a) - r;
  const double squared = spec.eta * residual * residual;
  if (spec.lambda == 0.0) return squared;
  return squared - spec.lambda * std::min(spec.b, max_value(model, theta, x, actions));
}

namespace detail {

/// Gradient of f(theta, x, a) with respect to a vector theta.
inline Vector value_gradient(const ValueModel& model, const Vector& theta, Context x, const Action& a) {
  return std::visit(
      Overloaded{[&](const TabularModel&) -> Vector {
                   throw UnsupportedOperation("tabular models are not differentiable in theta");
                 },
                 [&](const LinearEmbedModel& l) -> Vector {
                   if (!l.differentiable())
                     throw UnsupportedOperation("linear embedding without a differentiable weight map");
                   const Matrix jac = l.weight_jacobian(theta, x);
                   return jac.transpose() * l.features.at(x).row(static_cast<Eigen::Index>(a.index())).transpose();
                 },
                 [&](const PureLinearModel&) -> Vector { return a.vector(); }},
      model);
}

}  // namespace detail

/// Gradient of the Feel-Good loss in theta. The Feel-Good term differentiates
/// through the tie-broken greedy action and contributes nothing once the
/// maximal value exceeds b.
inline Vector loss_gradient(const LossSpec& spec, const ValueModel& model, const Param& theta,
                            const HistoryEntry& datum, const ActionSet& actions) {
  if (kind(model) == ModelKind::TabularFinite)
    throw UnsupportedOperation("loss_gradient: tabular models are not differentiable");
  if (!theta.is_vector()) throw UnsupportedOperation("loss_gradient: requires a vector parameter");
  const Vector& th = theta.vector();
  const double residual = eval_value(model, theta, datum.context, datum.action) - datum.reward;
  Vector grad = (2.0 * spec.eta * residual) * detail::value_gradient(model, th, datum.context, datum.action);
  if (spec.lambda > 0.0) {
    const GreedyChoice best = greedy_choice(model, theta, datum.context, actions);
    if (best.value <= spec.b) grad -= spec.lambda * detail::value_gradient(model, th, datum.context, best.action);
  }
  return grad;
}

}  // namespace fgts
