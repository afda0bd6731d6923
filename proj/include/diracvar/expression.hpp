#pragma once

// Arithmetic expressions over named coordinates, evaluable on double and
// Dual scalars and differentiable symbolically.
//
// Grammar: + - * / ^ (or **), unary minus, parentheses, numbers, the constant
// pi, named parameters and the functions sin cos tan exp log sqrt sinh cosh
// tanh atan abs.

#include <cmath>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "diracvar/dual.hpp"
#include "diracvar/errors.hpp"
#include "diracvar/smoothfield.hpp"

namespace diracvar {

class Expression {
 public:
  enum class Op { number, variable, neg, add, sub, mul, div, pow, call };
  enum class Fn { sin, cos, tan, exp, log, sqrt, sinh, cosh, tanh, atan, abs };

  struct Node {
    Op op = Op::number;
    double value = 0.0;
    int index = -1;
    Fn fn = Fn::sin;
    std::shared_ptr<const Node> a;
    std::shared_ptr<const Node> b;
  };
  using NodePtr = std::shared_ptr<const Node>;

  /// Throws ConfigError with the offending position on malformed input.
  static Expression parse(const std::string& text, const std::vector<std::string>& variables,
                          const std::map<std::string, double>& parameters = {});
  static Expression constant(double value, int variable_count);

  int variable_count() const { return nvars_; }
  const std::vector<std::string>& variables() const { return names_; }
  bool is_constant() const;
  /// True when the expression folds to the literal 0.
  bool is_zero() const;

  template <class T>
  T evaluate(const VecT<T>& x) const {
    return eval<T>(*root_, x);
  }
  double operator()(const Vec& x) const { return evaluate<double>(x); }

  Expression derivative(int variable) const;
  std::string to_string() const;

 private:
  Expression(NodePtr root, std::vector<std::string> names) : root_(std::move(root)), names_(std::move(names)) {
    nvars_ = static_cast<int>(names_.size());
  }

  template <class T>
  static T apply(Fn fn, const T& a) {
    using std::abs, std::atan, std::cos, std::cosh, std::exp, std::log, std::sin, std::sinh, std::sqrt, std::tan,
        std::tanh;
    switch (fn) {
      case Fn::sin: return sin(a);
      case Fn::cos: return cos(a);
      case Fn::tan: return tan(a);
      case Fn::exp: return exp(a);
      case Fn::log: return log(a);
      case Fn::sqrt: return sqrt(a);
      case Fn::sinh: return sinh(a);
      case Fn::cosh: return cosh(a);
      case Fn::tanh: return tanh(a);
      case Fn::atan: return atan(a);
      case Fn::abs: return abs(a);
    }
    return a;
  }

  template <class T>
  static T eval(const Node& n, const VecT<T>& x) {
    switch (n.op) {
      case Op::number: return T(n.value);
      case Op::variable: return x(n.index);
      case Op::neg: return -eval<T>(*n.a, x);
      case Op::add: return eval<T>(*n.a, x) + eval<T>(*n.b, x);
      case Op::sub: return eval<T>(*n.a, x) - eval<T>(*n.b, x);
      case Op::mul: return eval<T>(*n.a, x) * eval<T>(*n.b, x);
      case Op::div: return eval<T>(*n.a, x) / eval<T>(*n.b, x);
      case Op::pow: {
        const T base = eval<T>(*n.a, x);
        if (n.b->op == Op::number && n.b->value == std::round(n.b->value) && std::abs(n.b->value) <= 16) {
          const int p = static_cast<int>(n.b->value);
          T out(1.0);
          for (int i = 0; i < std::abs(p); ++i) out = out * base;
          return p < 0 ? T(1.0) / out : out;
        }
        using std::pow;
        return pow(base, eval<T>(*n.b, x));
      }
      case Op::call: return apply<T>(n.fn, eval<T>(*n.a, x));
    }
    return T(0.0);
  }

  NodePtr root_;
  std::vector<std::string> names_;
  int nvars_ = 0;
};

/// Scalar, vector and skew-matrix fields from expression strings on a chart
/// whose coordinate names are the expression variables.
ScalarField scalar_field_from(const Chart& chart, const Expression& e);
VecFn vecfn_from(int in_dim, const std::vector<Expression>& components);
VectorField vector_field_from(const Chart& chart, const std::vector<Expression>& components);
OneFormField one_form_from(const Chart& chart, const std::vector<Expression>& components);
/// Upper-triangular entries (i, j, expr) with i < j; the lower part is the negative.
struct SkewEntry {
  int i;
  int j;
  Expression value;
};
SkewMatrixField skew_field_from(const Chart& chart, Variance variance, const std::vector<SkewEntry>& entries);
/// Rows of the Jacobian of `components` by symbolic differentiation.
std::vector<OneFormField> differentials_from(const Chart& chart, const std::vector<Expression>& components);

}  // namespace diracvar
