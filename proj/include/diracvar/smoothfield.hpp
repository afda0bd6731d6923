#pragma once

// Coordinate charts, smooth fields, and the differentiation backend.
//
// Fields are black-box functions on a chart. Each one always carries a
// double evaluator and optionally a dual-number evaluator; the latter lets
// the forward-dual backend return exact first derivatives. Fields built with
// the make_* factories from a generic lambda get both evaluators.

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "diracvar/dual.hpp"
#include "diracvar/errors.hpp"

namespace diracvar {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
template <class T>
using VecT = Eigen::Matrix<T, Eigen::Dynamic, 1>;
template <class T>
using MatT = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
using DualVec = VecT<Dual>;

std::string format_point(const Vec& x);

class Chart {
 public:
  using DomainPredicate = std::function<bool(const Vec&)>;

  explicit Chart(int dim, std::vector<std::string> coordinate_names = {},
                 DomainPredicate domain_check = {});

  int dim() const { return dim_; }
  const std::vector<std::string>& coordinate_names() const { return names_; }
  bool has_domain_check() const { return static_cast<bool>(domain_check_); }

  bool contains(const Vec& x) const;
  /// Throws DomainError naming the point when it is outside the open set.
  void require(const Vec& x) const;

  /// Structural identity: same dimension and coordinate labels.
  bool same_as(const Chart& other) const;

  Chart with_domain(DomainPredicate domain_check) const;

 private:
  int dim_;
  std::vector<std::string> names_;
  DomainPredicate domain_check_;
};

/// Type-erased smooth map R^in -> R^out with an optional dual evaluator.
class VecFn {
 public:
  using DoubleFn = std::function<Vec(const Vec&)>;
  using DualFn = std::function<DualVec(const DualVec&)>;

  VecFn() = default;
  VecFn(int in_dim, int out_dim, DoubleFn f, DualFn fd = {});

  /// Wraps a generic callable `f(const VecT<T>&) -> VecT<T>` for T in {double, Dual}.
  template <class F>
  static VecFn generic(int in_dim, int out_dim, F f, bool with_dual = true) {
    DoubleFn fd = [f](const Vec& x) -> Vec { return f(x); };
    DualFn fdual;
    if (with_dual) fdual = [f](const DualVec& x) -> DualVec { return f(x); };
    return VecFn(in_dim, out_dim, std::move(fd), std::move(fdual));
  }

  int in_dim() const { return in_dim_; }
  int out_dim() const { return out_dim_; }
  bool has_dual() const { return static_cast<bool>(dual_); }
  explicit operator bool() const { return static_cast<bool>(f_); }

  Vec operator()(const Vec& x) const;
  DualVec operator()(const DualVec& x) const;

 private:
  int in_dim_ = 0;
  int out_dim_ = 0;
  DoubleFn f_;
  DualFn dual_;
};

enum class DiffMode { central_difference, forward_dual };

/// Immutable differentiation configuration.
struct DiffBackend {
  DiffMode mode = DiffMode::central_difference;
  /// Relative step for central differences: h_j = fd_step * max(1, |x_j|).
  double fd_step = std::cbrt(std::numeric_limits<double>::epsilon());

  static DiffBackend central(double step = std::cbrt(std::numeric_limits<double>::epsilon())) {
    return {DiffMode::central_difference, step};
  }
  static DiffBackend forward_dual() { return {DiffMode::forward_dual, std::cbrt(std::numeric_limits<double>::epsilon())}; }
};

/// J_ij = d f^i / d x^j. Forward-dual mode falls back to central differences
/// when the function has no dual evaluator.
Mat jacobian(const VecFn& f, const Vec& x, const DiffBackend& backend = {});

enum class Variance { covariant, contravariant };

class FieldBase {
 public:
  const Chart& chart() const { return chart_; }
  const VecFn& fn() const { return fn_; }
  bool has_dual() const { return fn_.has_dual(); }

 protected:
  FieldBase(Chart chart, VecFn fn, int expected_out, const char* what);
  Vec eval_checked(const Vec& x) const;

  Chart chart_;
  VecFn fn_;
};

class ScalarField : public FieldBase {
 public:
  ScalarField(Chart chart, VecFn fn);
  static ScalarField from_closure(Chart chart, std::function<double(const Vec&)> f);
  static ScalarField constant(Chart chart, double value);

  double operator()(const Vec& x) const { return eval_checked(x)(0); }
  template <class T>
  T eval(const VecT<T>& x) const {
    return fn_(x)(0);
  }
};

class VectorField : public FieldBase {
 public:
  VectorField(Chart chart, VecFn fn);
  static VectorField from_closure(Chart chart, std::function<Vec(const Vec&)> f);
  static VectorField zero(Chart chart);
  static VectorField coordinate(Chart chart, int index);

  Vec operator()(const Vec& x) const { return eval_checked(x); }
  template <class T>
  VecT<T> eval(const VecT<T>& x) const {
    return fn_(x);
  }
};

class OneFormField : public FieldBase {
 public:
  OneFormField(Chart chart, VecFn fn);
  static OneFormField from_closure(Chart chart, std::function<Vec(const Vec&)> f);
  static OneFormField zero(Chart chart);
  static OneFormField coordinate(Chart chart, int index);
  /// The exact form df.
  static OneFormField differential(const ScalarField& f, const DiffBackend& backend);

  Vec operator()(const Vec& x) const { return eval_checked(x); }
  template <class T>
  VecT<T> eval(const VecT<T>& x) const {
    return fn_(x);
  }
};

/// Two-forms (covariant) and bivectors (contravariant) share this value type.
/// Entries are stored column-major in the underlying VecFn.
class SkewMatrixField : public FieldBase {
 public:
  SkewMatrixField(Chart chart, VecFn fn, Variance variance);
  static SkewMatrixField zero(Chart chart, Variance variance);

  Variance variance() const { return variance_; }
  /// Evaluates and checks skew-symmetry to machine precision.
  Mat operator()(const Vec& x) const;
  template <class T>
  MatT<T> eval(const VecT<T>& x) const {
    const int n = chart_.dim();
    VecT<T> flat = fn_(x);
    return Eigen::Map<MatT<T>>(flat.data(), n, n);
  }

  void require_variance(Variance expected, const char* what) const;

 private:
  Variance variance_;
};

// Factories taking generic lambdas, e.g.
//   make_vector_field(chart, [](const auto& x) { using T = typename
//       std::decay_t<decltype(x)>::Scalar; VecT<T> v(2); v << x(1), -x(0); return v; });

template <class F>
ScalarField make_scalar_field(const Chart& chart, F f, bool with_dual = true) {
  auto wrapped = [f](const auto& x) {
    using T = typename std::decay_t<decltype(x)>::Scalar;
    VecT<T> out(1);
    out(0) = f(x);
    return out;
  };
  return ScalarField(chart, VecFn::generic(chart.dim(), 1, wrapped, with_dual));
}

template <class F>
VectorField make_vector_field(const Chart& chart, F f, bool with_dual = true) {
  return VectorField(chart, VecFn::generic(chart.dim(), chart.dim(), f, with_dual));
}

template <class F>
OneFormField make_one_form_field(const Chart& chart, F f, bool with_dual = true) {
  return OneFormField(chart, VecFn::generic(chart.dim(), chart.dim(), f, with_dual));
}

template <class F>
SkewMatrixField make_skew_field(const Chart& chart, Variance variance, F f,
                                bool with_dual = true) {
  const int n = chart.dim();
  auto wrapped = [f, n](const auto& x) {
    using T = typename std::decay_t<decltype(x)>::Scalar;
    MatT<T> m = f(x);
    return VecT<T>(Eigen::Map<VecT<T>>(m.data(), n * n));
  };
  return SkewMatrixField(chart, VecFn::generic(n, n * n, wrapped, with_dual), variance);
}

// Differential calculus at a point.

/// Jacobian of any field at x (domain-checked). For scalar fields: 1 x n.
Mat jacobian(const FieldBase& f, const Vec& x, const DiffBackend& backend = {});
/// The differential df at x as a covector.
Vec gradient(const ScalarField& f, const Vec& x, const DiffBackend& backend = {});
/// [X, Y](x) = (DY) X - (DX) Y.
Vec lie_bracket(const VectorField& X, const VectorField& Y, const Vec& x,
                const DiffBackend& backend = {});
/// (L_X a)_i = X^j d_j a_i + a_j d_i X^j.
Vec lie_derivative_oneform(const VectorField& X, const OneFormField& a, const Vec& x,
                           const DiffBackend& backend = {});
/// (da)_ij = d_i a_j - d_j a_i.
Mat exterior_d_oneform(const OneFormField& a, const Vec& x, const DiffBackend& backend = {});
/// (L_E pi)^ij = E^k d_k pi^ij - pi^kj d_k E^i - pi^ik d_k E^j.
Mat lie_derivative_bivector(const VectorField& E, const SkewMatrixField& pi, const Vec& x,
                            const DiffBackend& backend = {});
/// d_k A for k = 0..n-1, for a matrix-valued field.
std::vector<Mat> matrix_partials(const SkewMatrixField& field, const Vec& x,
                                 const DiffBackend& backend = {});

void require_same_chart(const Chart& a, const Chart& b, const char* operation);

}  // namespace diracvar
