#include "diracvar/smoothfield.hpp"

#include <algorithm>
#include <sstream>

namespace diracvar {

std::string format_point(const double* data, int size) {
  std::ostringstream os;
  os.precision(17);
  os << "(";
  for (int i = 0; i < size; ++i) {
    if (i) os << ", ";
    os << data[i];
  }
  os << ")";
  return os.str();
}

std::string format_point(const Vec& x) { return format_point(x.data(), static_cast<int>(x.size())); }

Chart::Chart(int dim, std::vector<std::string> coordinate_names, DomainPredicate domain_check)
    : dim_(dim), names_(std::move(coordinate_names)), domain_check_(std::move(domain_check)) {
  if (dim_ < 1) throw std::invalid_argument("Chart: dimension must be >= 1");
  if (names_.empty()) {
    for (int i = 0; i < dim_; ++i) names_.push_back("x" + std::to_string(i + 1));
  }
  if (static_cast<int>(names_.size()) != dim_)
    throw std::invalid_argument("Chart: coordinate_names size does not match dimension");
}

bool Chart::contains(const Vec& x) const {
  if (x.size() != dim_) return false;
  if (!x.allFinite()) return false;
  return !domain_check_ || domain_check_(x);
}

void Chart::require(const Vec& x) const {
  if (x.size() != dim_) {
    throw DomainError("point " + format_point(x) + " has dimension " + std::to_string(x.size()) +
                      ", chart has dimension " + std::to_string(dim_));
  }
  if (!contains(x)) throw DomainError("point " + format_point(x) + " is outside the chart domain");
}

bool Chart::same_as(const Chart& other) const {
  return dim_ == other.dim_ && names_ == other.names_;
}

Chart Chart::with_domain(DomainPredicate domain_check) const {
  return Chart(dim_, names_, std::move(domain_check));
}

VecFn::VecFn(int in_dim, int out_dim, DoubleFn f, DualFn fd)
    : in_dim_(in_dim), out_dim_(out_dim), f_(std::move(f)), dual_(std::move(fd)) {}

Vec VecFn::operator()(const Vec& x) const { return f_(x); }

DualVec VecFn::operator()(const DualVec& x) const {
  if (!dual_) throw std::logic_error("VecFn: no dual evaluator available");
  return dual_(x);
}

namespace {

Mat central_jacobian(const VecFn& f, const Vec& x, double rel_step) {
  const int n = static_cast<int>(x.size());
  Mat J(f.out_dim(), n);
  Vec xp = x;
  for (int j = 0; j < n; ++j) {
    const double h0 = rel_step * std::max(1.0, std::abs(x(j)));
    const double hi = x(j) + h0;
    const double lo = x(j) - h0;
    xp(j) = hi;
    const Vec fp = f(xp);
    xp(j) = lo;
    const Vec fm = f(xp);
    xp(j) = x(j);
    J.col(j) = (fp - fm) / (hi - lo);
  }
  return J;
}

Mat dual_jacobian(const VecFn& f, const Vec& x) {
  const int n = static_cast<int>(x.size());
  Mat J(f.out_dim(), n);
  DualVec xd(n);
  for (int i = 0; i < n; ++i) xd(i) = Dual(x(i), 0.0);
  for (int j = 0; j < n; ++j) {
    xd(j).d = 1.0;
    const DualVec out = f(xd);
    xd(j).d = 0.0;
    for (int i = 0; i < out.size(); ++i) J(i, j) = out(i).d;
  }
  return J;
}

}  // namespace

Mat jacobian(const VecFn& f, const Vec& x, const DiffBackend& backend) {
  if (!(backend.fd_step > 0.0)) throw std::invalid_argument("DiffBackend: fd_step must be > 0");
  Mat J = (backend.mode == DiffMode::forward_dual && f.has_dual())
              ? dual_jacobian(f, x)
              : central_jacobian(f, x, backend.fd_step);
  if (!J.allFinite()) throw NumericalError("non-finite derivative at " + format_point(x));
  return J;
}

FieldBase::FieldBase(Chart chart, VecFn fn, int expected_out, const char* what)
    : chart_(std::move(chart)), fn_(std::move(fn)) {
  if (!fn_) throw std::invalid_argument(std::string(what) + ": empty evaluator");
  if (fn_.in_dim() != chart_.dim() || fn_.out_dim() != expected_out) {
    throw std::invalid_argument(std::string(what) + ": evaluator shape does not match chart");
  }
}

Vec FieldBase::eval_checked(const Vec& x) const {
  chart_.require(x);
  Vec value = fn_(x);
  if (!value.allFinite()) throw NumericalError("non-finite field value at " + format_point(x));
  return value;
}

ScalarField::ScalarField(Chart chart, VecFn fn) : FieldBase(std::move(chart), std::move(fn), 1, "ScalarField") {}

ScalarField ScalarField::from_closure(Chart chart, std::function<double(const Vec&)> f) {
  const int n = chart.dim();
  return ScalarField(std::move(chart), VecFn(n, 1, [f](const Vec& x) { return Vec::Constant(1, f(x)); }));
}

ScalarField ScalarField::constant(Chart chart, double value) {
  return make_scalar_field(chart, [value](const auto& x) {
    using T = typename std::decay_t<decltype(x)>::Scalar;
    return T(value);
  });
}

VectorField::VectorField(Chart chart, VecFn fn)
    : FieldBase(chart, std::move(fn), chart.dim(), "VectorField") {}

VectorField VectorField::from_closure(Chart chart, std::function<Vec(const Vec&)> f) {
  const int n = chart.dim();
  return VectorField(std::move(chart), VecFn(n, n, std::move(f)));
}

VectorField VectorField::zero(Chart chart) {
  const int n = chart.dim();
  return make_vector_field(chart, [n](const auto& x) {
    using T = typename std::decay_t<decltype(x)>::Scalar;
    return VecT<T>(VecT<T>::Zero(n));
  });
}

VectorField VectorField::coordinate(Chart chart, int index) {
  const int n = chart.dim();
  return make_vector_field(chart, [n, index](const auto& x) {
    using T = typename std::decay_t<decltype(x)>::Scalar;
    VecT<T> v = VecT<T>::Zero(n);
    v(index) = T(1.0);
    return v;
  });
}

OneFormField::OneFormField(Chart chart, VecFn fn)
    : FieldBase(chart, std::move(fn), chart.dim(), "OneFormField") {}

OneFormField OneFormField::from_closure(Chart chart, std::function<Vec(const Vec&)> f) {
  const int n = chart.dim();
  return OneFormField(std::move(chart), VecFn(n, n, std::move(f)));
}

OneFormField OneFormField::zero(Chart chart) {
  const int n = chart.dim();
  return make_one_form_field(chart, [n](const auto& x) {
    using T = typename std::decay_t<decltype(x)>::Scalar;
    return VecT<T>(VecT<T>::Zero(n));
  });
}

OneFormField OneFormField::coordinate(Chart chart, int index) {
  const int n = chart.dim();
  return make_one_form_field(chart, [n, index](const auto& x) {
    using T = typename std::decay_t<decltype(x)>::Scalar;
    VecT<T> v = VecT<T>::Zero(n);
    v(index) = T(1.0);
    return v;
  });
}

OneFormField OneFormField::differential(const ScalarField& f, const DiffBackend& backend) {
  return from_closure(f.chart(), [f, backend](const Vec& x) { return gradient(f, x, backend); });
}

SkewMatrixField::SkewMatrixField(Chart chart, VecFn fn, Variance variance)
    : FieldBase(chart, std::move(fn), chart.dim() * chart.dim(), "SkewMatrixField"),
      variance_(variance) {}

SkewMatrixField SkewMatrixField::zero(Chart chart, Variance variance) {
  const int n = chart.dim();
  return make_skew_field(chart, variance, [n](const auto& x) {
    using T = typename std::decay_t<decltype(x)>::Scalar;
    return MatT<T>(MatT<T>::Zero(n, n));
  });
}

Mat SkewMatrixField::operator()(const Vec& x) const {
  const int n = chart_.dim();
  Vec flat = eval_checked(x);
  Mat m = Eigen::Map<Mat>(flat.data(), n, n);
  const double scale = 1.0 + m.cwiseAbs().maxCoeff();
  if ((m + m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw NumericalError("skew-matrix field is not skew at " + format_point(x));
  }
  return m;
}

void SkewMatrixField::require_variance(Variance expected, const char* what) const {
  if (variance_ != expected) {
    throw std::invalid_argument(std::string(what) + ": expected a " +
                                (expected == Variance::covariant ? "covariant 2-form"
                                                                 : "contravariant bivector"));
  }
}

void require_same_chart(const Chart& a, const Chart& b, const char* operation) {
  if (!a.same_as(b)) throw ChartMismatch(std::string(operation) + ": fields live on different charts");
}

Mat jacobian(const FieldBase& f, const Vec& x, const DiffBackend& backend) {
  f.chart().require(x);
  return jacobian(f.fn(), x, backend);
}

Vec gradient(const ScalarField& f, const Vec& x, const DiffBackend& backend) {
  return jacobian(f, x, backend).row(0).transpose();
}

Vec lie_bracket(const VectorField& X, const VectorField& Y, const Vec& x, const DiffBackend& backend) {
  require_same_chart(X.chart(), Y.chart(), "lie_bracket");
  return jacobian(Y, x, backend) * X(x) - jacobian(X, x, backend) * Y(x);
}

Vec lie_derivative_oneform(const VectorField& X, const OneFormField& a, const Vec& x,
                           const DiffBackend& backend) {
  require_same_chart(X.chart(), a.chart(), "lie_derivative_oneform");
  return jacobian(a, x, backend) * X(x) + jacobian(X, x, backend).transpose() * a(x);
}

Mat exterior_d_oneform(const OneFormField& a, const Vec& x, const DiffBackend& backend) {
  const Mat Da = jacobian(a, x, backend);  // Da(j, i) = d_i a_j
  return Da.transpose() - Da;
}

std::vector<Mat> matrix_partials(const SkewMatrixField& field, const Vec& x, const DiffBackend& backend) {
  const int n = field.chart().dim();
  const Mat J = jacobian(field, x, backend);
  std::vector<Mat> partials;
  partials.reserve(n);
  for (int k = 0; k < n; ++k) {
    Vec col = J.col(k);
    partials.emplace_back(Eigen::Map<Mat>(col.data(), n, n));
  }
  return partials;
}

Mat lie_derivative_bivector(const VectorField& E, const SkewMatrixField& pi, const Vec& x,
                            const DiffBackend& backend) {
  require_same_chart(E.chart(), pi.chart(), "lie_derivative_bivector");
  pi.require_variance(Variance::contravariant, "lie_derivative_bivector");
  const int n = pi.chart().dim();
  const Vec e = E(x);
  const Mat DE = jacobian(E, x, backend);  // DE(i, k) = d_k E^i
  const Mat P = pi(x);
  const std::vector<Mat> dP = matrix_partials(pi, x, backend);
  Mat out = Mat::Zero(n, n);
  for (int k = 0; k < n; ++k) out += e(k) * dP[k];
  out -= DE * P + P * DE.transpose();
  return out;
}

}  // namespace diracvar
