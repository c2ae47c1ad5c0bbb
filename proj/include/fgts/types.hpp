#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>

namespace fgts {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Contexts are identified by an index into the environment's context space.
using Context = std::size_t;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

struct InvalidInput : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct UnsupportedOperation : std::logic_error {
  using std::logic_error::logic_error;
};

/// Raised when truncation or filtering leaves no parameter with positive mass.
struct EmptyPosterior : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidEnvironment : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A premise of a decoupling inequality is violated (positive error with zero
/// decoupled squared error).
struct Contradiction : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Either an index into a finite set or a dense real vector. `Tag` keeps
/// parameters and actions from being mixed up.
template <class Tag>
class IndexOrVector {
 public:
  IndexOrVector() : value_(std::size_t{0}) {}
  explicit IndexOrVector(std::size_t index) : value_(index) {}
  explicit IndexOrVector(Vector v) : value_(std::move(v)) {}

  [[nodiscard]] bool is_index() const { return std::holds_alternative<std::size_t>(value_); }
  [[nodiscard]] bool is_vector() const { return std::holds_alternative<Vector>(value_); }

  [[nodiscard]] std::size_t index() const {
    if (!is_index()) throw InvalidInput(std::string(Tag::name) + ": expected an index, got a vector");
    return std::get<std::size_t>(value_);
  }
  [[nodiscard]] const Vector& vector() const {
    if (!is_vector()) throw InvalidInput(std::string(Tag::name) + ": expected a vector, got an index");
    return std::get<Vector>(value_);
  }

  friend bool operator==(const IndexOrVector& a, const IndexOrVector& b) {
    if (a.is_index() != b.is_index()) return false;
    if (a.is_index()) return a.index() == b.index();
    const auto& u = a.vector();
    const auto& v = b.vector();
    return u.size() == v.size() && u == v;
  }

 private:
  std::variant<std::size_t, Vector> value_;
};

struct ParamTag {
  static constexpr const char* name = "theta";
};
struct ActionTag {
  static constexpr const char* name = "action";
};

using Param = IndexOrVector<ParamTag>;
using Action = IndexOrVector<ActionTag>;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

/// Elementwise exp with exp(-inf) == 0 exactly (Eigen's vectorized exp
/// clamps very negative inputs to a denormal).
inline Vector exp_exact(const Vector& v) {
  return v.unaryExpr([](double x) { return std::exp(x); });
}

/// Numerically stable log(sum(exp(v))). Returns -inf when every entry is -inf.
inline double log_sum_exp(const Vector& v) {
  if (v.size() == 0) return -kInfinity;
  const double m = v.maxCoeff();
  if (m == -kInfinity) return -kInfinity;
  return m + std::log(exp_exact((v.array() - m).matrix()).sum());
}

}  // namespace fgts
