#include "diracvar/expression.hpp"

#include <cctype>
#include <cstdlib>
#include <sstream>

namespace diracvar {

namespace {

using Node = Expression::Node;
using NodePtr = Expression::NodePtr;
using Op = Expression::Op;
using Fn = Expression::Fn;

const std::map<std::string, Fn>& function_table() {
  static const std::map<std::string, Fn> table{
      {"sin", Fn::sin},   {"cos", Fn::cos},   {"tan", Fn::tan},   {"exp", Fn::exp},
      {"log", Fn::log},   {"sqrt", Fn::sqrt}, {"sinh", Fn::sinh}, {"cosh", Fn::cosh},
      {"tanh", Fn::tanh}, {"atan", Fn::atan}, {"abs", Fn::abs}};
  return table;
}

const char* function_name(Fn fn) {
  for (const auto& [name, f] : function_table())
    if (f == fn) return name.c_str();
  return "?";
}

NodePtr number(double v) {
  auto n = std::make_shared<Node>();
  n->op = Op::number;
  n->value = v;
  return n;
}

NodePtr variable(int i) {
  auto n = std::make_shared<Node>();
  n->op = Op::variable;
  n->index = i;
  return n;
}

bool is_num(const NodePtr& n, double v) { return n->op == Op::number && n->value == v; }

NodePtr negate(NodePtr a);

NodePtr binary(Op op, NodePtr a, NodePtr b) {
  if (a->op == Op::number && b->op == Op::number) {
    switch (op) {
      case Op::add: return number(a->value + b->value);
      case Op::sub: return number(a->value - b->value);
      case Op::mul: return number(a->value * b->value);
      case Op::div:
        if (b->value != 0.0) return number(a->value / b->value);
        break;
      case Op::pow: return number(std::pow(a->value, b->value));
      default: break;
    }
  }
  switch (op) {
    case Op::add:
      if (is_num(a, 0)) return b;
      if (is_num(b, 0)) return a;
      break;
    case Op::sub:
      if (is_num(b, 0)) return a;
      if (is_num(a, 0)) return negate(b);
      break;
    case Op::mul:
      if (is_num(a, 0) || is_num(b, 0)) return number(0.0);
      if (is_num(a, 1)) return b;
      if (is_num(b, 1)) return a;
      break;
    case Op::div:
      if (is_num(a, 0)) return number(0.0);
      if (is_num(b, 1)) return a;
      break;
    case Op::pow:
      if (is_num(b, 0)) return number(1.0);
      if (is_num(b, 1)) return a;
      break;
    default: break;
  }
  auto n = std::make_shared<Node>();
  n->op = op;
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}

NodePtr negate(NodePtr a) {
  if (a->op == Op::number) return number(-a->value);
  if (a->op == Op::neg) return a->a;
  auto n = std::make_shared<Node>();
  n->op = Op::neg;
  n->a = std::move(a);
  return n;
}

double fold(Fn fn, double a) {
  switch (fn) {
    case Fn::sin: return std::sin(a);
    case Fn::cos: return std::cos(a);
    case Fn::tan: return std::tan(a);
    case Fn::exp: return std::exp(a);
    case Fn::log: return std::log(a);
    case Fn::sqrt: return std::sqrt(a);
    case Fn::sinh: return std::sinh(a);
    case Fn::cosh: return std::cosh(a);
    case Fn::tanh: return std::tanh(a);
    case Fn::atan: return std::atan(a);
    case Fn::abs: return std::abs(a);
  }
  return a;
}

NodePtr call(Fn fn, NodePtr a) {
  if (a->op == Op::number) return number(fold(fn, a->value));
  auto n = std::make_shared<Node>();
  n->op = Op::call;
  n->fn = fn;
  n->a = std::move(a);
  return n;
}

class Parser {
 public:
  Parser(const std::string& text, const std::vector<std::string>& vars, const std::map<std::string, double>& params)
      : s_(text), vars_(vars), params_(params) {}

  NodePtr parse() {
    NodePtr e = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    std::ostringstream os;
    os << "expression \"" << s_ << "\": " << msg << " at position " << pos_;
    throw ConfigError(os.str());
  }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool accept(const char* tok) {
    skip();
    const std::size_t len = std::char_traits<char>::length(tok);
    if (s_.compare(pos_, len, tok) == 0) {
      pos_ += len;
      return true;
    }
    return false;
  }

  NodePtr expr() {
    NodePtr lhs = term();
    for (;;) {
      if (accept("+")) {
        lhs = binary(Op::add, lhs, term());
      } else if (accept("-")) {
        lhs = binary(Op::sub, lhs, term());
      } else {
        return lhs;
      }
    }
  }

  NodePtr term() {
    NodePtr lhs = unary();
    for (;;) {
      skip();
      if (s_.compare(pos_, 2, "**") == 0) return lhs;
      if (accept("*")) {
        lhs = binary(Op::mul, lhs, unary());
      } else if (accept("/")) {
        lhs = binary(Op::div, lhs, unary());
      } else {
        return lhs;
      }
    }
  }

  NodePtr unary() {
    if (accept("-")) return negate(unary());
    if (accept("+")) return unary();
    return power();
  }

  NodePtr power() {
    NodePtr base = primary();
    if (accept("^") || accept("**")) return binary(Op::pow, base, unary());
    return base;
  }

  NodePtr primary() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end of input");
    const char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr e = expr();
      if (!accept(")")) fail("expected ')'");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* begin = s_.c_str() + pos_;
      char* end = nullptr;
      const double v = std::strtod(begin, &end);
      if (end == begin) fail("bad number");
      pos_ += static_cast<std::size_t>(end - begin);
      return number(v);
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = pos_;
      while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
      const std::string name = s_.substr(start, pos_ - start);
      const auto fn = function_table().find(name);
      if (fn != function_table().end()) {
        if (!accept("(")) fail("expected '(' after " + name);
        NodePtr arg = expr();
        if (!accept(")")) fail("expected ')'");
        return call(fn->second, arg);
      }
      for (std::size_t i = 0; i < vars_.size(); ++i)
        if (vars_[i] == name) return variable(static_cast<int>(i));
      const auto p = params_.find(name);
      if (p != params_.end()) return number(p->second);
      if (name == "pi") return number(M_PI);
      pos_ = start;
      fail("unknown identifier '" + name + "'");
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }

  const std::string& s_;
  const std::vector<std::string>& vars_;
  const std::map<std::string, double>& params_;
  std::size_t pos_ = 0;
};

NodePtr differentiate(const NodePtr& n, int var) {
  switch (n->op) {
    case Op::number: return number(0.0);
    case Op::variable: return number(n->index == var ? 1.0 : 0.0);
    case Op::neg: return negate(differentiate(n->a, var));
    case Op::add: return binary(Op::add, differentiate(n->a, var), differentiate(n->b, var));
    case Op::sub: return binary(Op::sub, differentiate(n->a, var), differentiate(n->b, var));
    case Op::mul:
      return binary(Op::add, binary(Op::mul, differentiate(n->a, var), n->b),
                    binary(Op::mul, n->a, differentiate(n->b, var)));
    case Op::div: {
      const NodePtr num = binary(Op::sub, binary(Op::mul, differentiate(n->a, var), n->b),
                                 binary(Op::mul, n->a, differentiate(n->b, var)));
      return binary(Op::div, num, binary(Op::pow, n->b, number(2.0)));
    }
    case Op::pow: {
      const NodePtr da = differentiate(n->a, var);
      if (n->b->op == Op::number) {
        const double p = n->b->value;
        return binary(Op::mul, binary(Op::mul, number(p), binary(Op::pow, n->a, number(p - 1.0))), da);
      }
      const NodePtr db = differentiate(n->b, var);
      const NodePtr inner = binary(Op::add, binary(Op::mul, db, call(Fn::log, n->a)),
                                   binary(Op::div, binary(Op::mul, n->b, da), n->a));
      return binary(Op::mul, n, inner);
    }
    case Op::call: {
      const NodePtr& a = n->a;
      const NodePtr da = differentiate(a, var);
      if (is_num(da, 0.0)) return number(0.0);
      NodePtr outer;
      switch (n->fn) {
        case Fn::sin: outer = call(Fn::cos, a); break;
        case Fn::cos: outer = negate(call(Fn::sin, a)); break;
        case Fn::tan: outer = binary(Op::add, number(1.0), binary(Op::pow, call(Fn::tan, a), number(2.0))); break;
        case Fn::exp: outer = n; break;
        case Fn::log: outer = binary(Op::div, number(1.0), a); break;
        case Fn::sqrt: outer = binary(Op::div, number(0.5), n); break;
        case Fn::sinh: outer = call(Fn::cosh, a); break;
        case Fn::cosh: outer = call(Fn::sinh, a); break;
        case Fn::tanh: outer = binary(Op::sub, number(1.0), binary(Op::pow, n, number(2.0))); break;
        case Fn::atan:
          outer = binary(Op::div, number(1.0), binary(Op::add, number(1.0), binary(Op::pow, a, number(2.0))));
          break;
        case Fn::abs: outer = binary(Op::div, a, n); break;
      }
      return binary(Op::mul, outer, da);
    }
  }
  return number(0.0);
}

int precedence(Op op) {
  switch (op) {
    case Op::add:
    case Op::sub: return 1;
    case Op::mul:
    case Op::div: return 2;
    case Op::neg: return 3;
    case Op::pow: return 4;
    default: return 5;
  }
}

// `parent` is the precedence of the enclosing operator; `tight` forces
// parentheses at equal precedence (right operand of - and /, left of ^).
void print(std::ostream& os, const Node& n, const std::vector<std::string>& names, int parent, bool tight) {
  const int p = precedence(n.op);
  const bool parens = p < parent || (p == parent && tight);
  if (parens) os << '(';
  switch (n.op) {
    case Op::number: {
      std::ostringstream num;
      num.precision(17);
      num << n.value;
      if (n.value < 0 && !parens) {
        os << '(' << num.str() << ')';
      } else {
        os << num.str();
      }
      break;
    }
    case Op::variable: os << names[n.index]; break;
    case Op::neg:
      os << '-';
      print(os, *n.a, names, p, true);
      break;
    case Op::call:
      os << function_name(n.fn) << '(';
      print(os, *n.a, names, 0, false);
      os << ')';
      break;
    default: {
      const char* sym = n.op == Op::add   ? " + "
                        : n.op == Op::sub ? " - "
                        : n.op == Op::mul ? "*"
                        : n.op == Op::div ? "/"
                                          : "^";
      print(os, *n.a, names, p, n.op == Op::pow);
      os << sym;
      print(os, *n.b, names, p, n.op == Op::sub || n.op == Op::div);
    }
  }
  if (parens) os << ')';
}

}  // namespace

Expression Expression::parse(const std::string& text, const std::vector<std::string>& variables,
                             const std::map<std::string, double>& parameters) {
  Parser parser(text, variables, parameters);
  return Expression(parser.parse(), variables);
}

Expression Expression::constant(double value, int variable_count) {
  std::vector<std::string> names;
  for (int i = 0; i < variable_count; ++i) names.push_back("x" + std::to_string(i));
  return Expression(number(value), std::move(names));
}

bool Expression::is_constant() const { return root_->op == Op::number; }
bool Expression::is_zero() const { return is_num(root_, 0.0); }

Expression Expression::derivative(int var) const {
  if (var < 0 || var >= nvars_) throw std::invalid_argument("Expression::derivative: variable index out of range");
  return Expression(differentiate(root_, var), names_);
}

std::string Expression::to_string() const {
  std::ostringstream os;
  print(os, *root_, names_, 0, false);
  return os.str();
}

VecFn vecfn_from(int in_dim, const std::vector<Expression>& components) {
  for (const auto& e : components)
    if (e.variable_count() != in_dim) throw ConfigError("expression has the wrong number of variables");
  const int m = static_cast<int>(components.size());
  return VecFn::generic(in_dim, m, [components, m](const auto& x) {
    using T = typename std::decay_t<decltype(x)>::Scalar;
    VecT<T> out(m);
    for (int i = 0; i < m; ++i) out(i) = components[i].template evaluate<T>(x);
    return out;
  });
}

ScalarField scalar_field_from(const Chart& chart, const Expression& e) {
  return ScalarField(chart, vecfn_from(chart.dim(), {e}));
}

VectorField vector_field_from(const Chart& chart, const std::vector<Expression>& components) {
  if (static_cast<int>(components.size()) != chart.dim())
    throw ConfigError("vector field needs " + std::to_string(chart.dim()) + " components");
  return VectorField(chart, vecfn_from(chart.dim(), components));
}

OneFormField one_form_from(const Chart& chart, const std::vector<Expression>& components) {
  if (static_cast<int>(components.size()) != chart.dim())
    throw ConfigError("one-form needs " + std::to_string(chart.dim()) + " components");
  return OneFormField(chart, vecfn_from(chart.dim(), components));
}

SkewMatrixField skew_field_from(const Chart& chart, Variance variance, const std::vector<SkewEntry>& entries) {
  const int n = chart.dim();
  for (const auto& e : entries) {
    if (e.i < 0 || e.j < 0 || e.i >= n || e.j >= n || e.i == e.j)
      throw ConfigError("skew entry index out of range: (" + std::to_string(e.i) + ", " + std::to_string(e.j) + ")");
    if (e.value.variable_count() != n) throw ConfigError("skew entry has the wrong number of variables");
  }
  const VecFn fn = VecFn::generic(n, n * n, [entries, n](const auto& x) {
    using T = typename std::decay_t<decltype(x)>::Scalar;
    VecT<T> flat = VecT<T>::Zero(n * n);
    for (const auto& e : entries) {
      const T v = e.value.template evaluate<T>(x);
      // Column-major (i, j) -> i + j n.
      flat(e.i + e.j * n) += v;
      flat(e.j + e.i * n) -= v;
    }
    return flat;
  });
  return SkewMatrixField(chart, fn, variance);
}

std::vector<OneFormField> differentials_from(const Chart& chart, const std::vector<Expression>& components) {
  std::vector<OneFormField> out;
  for (const auto& g : components) {
    std::vector<Expression> row;
    for (int k = 0; k < chart.dim(); ++k) row.push_back(g.derivative(k));
    out.push_back(one_form_from(chart, row));
  }
  return out;
}

}  // namespace diracvar
