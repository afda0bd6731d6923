#include "diracvar/algebroid.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace diracvar {

namespace {

int ipow(int base, int exp) {
  int out = 1;
  for (int i = 0; i < exp; ++i) out *= base;
  return out;
}

// Decodes a flat row-major index into a multi-index of length `degree`.
void decode(int flat, int degree, int rank, std::vector<int>& index) {
  index.resize(degree);
  for (int a = degree - 1; a >= 0; --a) {
    index[a] = flat % rank;
    flat /= rank;
  }
}

bool has_repeat(const std::vector<int>& index) {
  for (std::size_t a = 0; a < index.size(); ++a)
    for (std::size_t b = a + 1; b < index.size(); ++b)
      if (index[a] == index[b]) return true;
  return false;
}

}  // namespace

FormArray::FormArray(int degree, int rank)
    : degree_(degree), rank_(rank), data_(Vec::Zero(ipow(rank, degree))) {}

FormArray::FormArray(int degree, int rank, Vec data)
    : degree_(degree), rank_(rank), data_(std::move(data)) {
  if (data_.size() != ipow(rank, degree)) throw std::invalid_argument("FormArray: size mismatch");
}

int FormArray::flat_index(std::span<const int> index) const {
  if (static_cast<int>(index.size()) != degree_) throw std::invalid_argument("FormArray: wrong index length");
  int flat = 0;
  for (int i : index) flat = flat * rank_ + i;
  return flat;
}

Mat FormArray::as_matrix() const {
  if (degree_ != 2) throw std::invalid_argument("FormArray::as_matrix: degree must be 2");
  Mat m(rank_, rank_);
  for (int i = 0; i < rank_; ++i)
    for (int j = 0; j < rank_; ++j) m(i, j) = data_(i * rank_ + j);
  return m;
}

FormArray FormArray::from_matrix(const Mat& m) {
  const int r = static_cast<int>(m.rows());
  FormArray out(2, r);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j) out.data_(i * r + j) = m(i, j);
  return out;
}

FormArray FormArray::contract_first(const Vec& v) const {
  if (degree_ == 0) throw std::invalid_argument("FormArray::contract_first: degree 0");
  FormArray out(degree_ - 1, rank_);
  const int block = ipow(rank_, degree_ - 1);
  for (int m = 0; m < rank_; ++m) out.data_ += v(m) * data_.segment(m * block, block);
  return out;
}

double FormArray::evaluate(const std::vector<Vec>& vectors) const {
  FormArray current = *this;
  for (const Vec& v : vectors) current = current.contract_first(v);
  return current.data_(0);
}

FrameAlgebroid::FrameAlgebroid(Chart chart, int rank, VecFn anchor, BracketTableFn brackets,
                               DiffBackend backend)
    : chart_(std::move(chart)),
      rank_(rank),
      anchor_(std::move(anchor)),
      brackets_(std::move(brackets)),
      backend_(backend) {
  if (rank_ < 1) throw std::invalid_argument("FrameAlgebroid: rank must be >= 1");
  if (anchor_.in_dim() != chart_.dim() || anchor_.out_dim() != chart_.dim() * rank_)
    throw std::invalid_argument("FrameAlgebroid: anchor shape mismatch");
}

FrameAlgebroid FrameAlgebroid::tangent(const Chart& chart, DiffBackend backend) {
  const int n = chart.dim();
  VecFn anchor = VecFn::generic(n, n * n, [n](const auto& x) {
    using T = typename std::decay_t<decltype(x)>::Scalar;
    MatT<T> id = MatT<T>::Identity(n, n);
    return VecT<T>(Eigen::Map<VecT<T>>(id.data(), n * n));
  });
  return FrameAlgebroid(chart, n, std::move(anchor), [n](const Vec&) { return Mat(Mat::Zero(n, n * n)); },
                        backend);
}

Mat FrameAlgebroid::anchor(const Vec& x) const {
  chart_.require(x);
  Vec flat = anchor_(x);
  return Eigen::Map<Mat>(flat.data(), dim(), rank_);
}

Mat FrameAlgebroid::bracket_table(const Vec& x) const {
  chart_.require(x);
  Mat table = brackets_(x);
  if (table.rows() != rank_ || table.cols() != rank_ * rank_)
    throw std::logic_error("FrameAlgebroid: bracket table has wrong shape");
  return table;
}

Vec FrameAlgebroid::frame_bracket(int i, int j, const Vec& x) const {
  return bracket_table(x).col(i * rank_ + j);
}

VectorField FrameAlgebroid::anchored_frame(int i) const {
  const int n = dim();
  const VecFn anchor = anchor_;
  auto column = [anchor, n, i](const auto& x) {
    using T = typename std::decay_t<decltype(x)>::Scalar;
    VecT<T> flat = anchor(x);
    return VecT<T>(flat.segment(i * n, n));
  };
  return VectorField(chart_, VecFn::generic(n, n, column, anchor_.has_dual()));
}

double FrameAlgebroid::anchor_compatibility_residual(const std::vector<Vec>& samples) const {
  double worst = 0.0;
  std::vector<VectorField> frame;
  for (int i = 0; i < rank_; ++i) frame.push_back(anchored_frame(i));
  for (const Vec& x : samples) {
    const Mat rho = anchor(x);
    const Mat table = bracket_table(x);
    for (int i = 0; i < rank_; ++i) {
      for (int j = i + 1; j < rank_; ++j) {
        const Vec lhs = rho * table.col(i * rank_ + j);
        const Vec rhs = lie_bracket(frame[i], frame[j], x, backend_);
        worst = std::max(worst, (lhs - rhs).cwiseAbs().maxCoeff());
      }
    }
  }
  return worst;
}

AlgebroidForm::AlgebroidForm(int degree, int rank, VecFn coefficients)
    : degree_(degree), rank_(rank), coefficients_(std::move(coefficients)) {
  if (degree_ < 0) throw std::invalid_argument("AlgebroidForm: negative degree");
  if (coefficients_.out_dim() != ipow(rank_, degree_))
    throw std::invalid_argument("AlgebroidForm: coefficient map has wrong size");
}

FormArray AlgebroidForm::operator()(const Vec& x) const {
  Vec data = coefficients_(x);
  if (!data.allFinite()) throw NumericalError("non-finite form coefficient at " + format_point(x));
  return FormArray(degree_, rank_, std::move(data));
}

Mat anchor_kernel(const FrameAlgebroid& algebroid, const Vec& x, double tol) {
  return linalg::kernel_basis(algebroid.anchor(x), tol);
}

FormArray lichnerowicz_d(const FrameAlgebroid& algebroid, const AlgebroidForm& eta, const Vec& x) {
  const int r = algebroid.rank();
  const int k = eta.degree();
  if (eta.rank() != r) throw std::invalid_argument("lichnerowicz_d: form rank does not match algebroid");
  if (k >= r) throw std::invalid_argument("lichnerowicz_d: degree must be < rank");

  const Mat rho = algebroid.anchor(x);
  const FormArray value = eta(x);
  // D(J, a) = rho(e_a)(eta_J): derivative of each coefficient along the anchored frame.
  const Mat D = jacobian(eta.coefficients(), x, algebroid.backend()) * rho;
  const Mat table = k > 0 ? algebroid.bracket_table(x) : Mat();

  FormArray out(k + 1, r);
  std::vector<int> index;
  std::vector<int> rest;
  std::vector<int> with_m;
  const int total = static_cast<int>(out.data().size());
  for (int flat = 0; flat < total; ++flat) {
    decode(flat, k + 1, r, index);
    if (has_repeat(index)) continue;
    double acc = 0.0;
    for (int a = 0; a <= k; ++a) {
      rest.clear();
      for (int c = 0; c <= k; ++c)
        if (c != a) rest.push_back(index[c]);
      const int rest_flat = k > 0 ? value.flat_index(rest) : 0;
      const double sign = (a % 2 == 0) ? 1.0 : -1.0;
      acc += sign * D(rest_flat, index[a]);
    }
    for (int a = 0; a <= k; ++a) {
      for (int b = a + 1; b <= k; ++b) {
        const double sign = ((a + b) % 2 == 0) ? 1.0 : -1.0;
        const auto coeffs = table.col(index[a] * r + index[b]);
        with_m.assign(1, 0);
        for (int c = 0; c <= k; ++c)
          if (c != a && c != b) with_m.push_back(index[c]);
        for (int m = 0; m < r; ++m) {
          if (coeffs(m) == 0.0) continue;
          with_m[0] = m;
          acc += sign * coeffs(m) * value(with_m);
        }
      }
    }
    out.data()(flat) = acc;
  }
  return out;
}

AlgebroidForm lichnerowicz_d_form(const FrameAlgebroid& algebroid, const AlgebroidForm& eta) {
  const int r = algebroid.rank();
  const int k = eta.degree();
  if (k >= r) throw std::invalid_argument("lichnerowicz_d: degree must be < rank");
  VecFn coefficients(algebroid.dim(), ipow(r, k + 1), [algebroid, eta](const Vec& x) {
    return lichnerowicz_d(algebroid, eta, x).data();
  });
  return AlgebroidForm(k + 1, r, std::move(coefficients));
}

HorizontalityReport horizontality_report(const FrameAlgebroid& algebroid, const AlgebroidForm& eta,
                                         const std::vector<Vec>& samples, double tol,
                                         double kernel_tol) {
  if (samples.empty()) throw std::invalid_argument("horizontality_report: empty sample list");
  HorizontalityReport report;
  const bool has_d = eta.degree() < algebroid.rank();
  for (const Vec& x : samples) {
    const Mat kernel = anchor_kernel(algebroid, x, kernel_tol);
    report.max_kernel_dim = std::max(report.max_kernel_dim, static_cast<int>(kernel.cols()));
    if (kernel.cols() == 0) continue;
    const FormArray value = eta(x);
    const FormArray dvalue = has_d ? lichnerowicz_d(algebroid, eta, x) : FormArray(0, algebroid.rank());
    for (int c = 0; c < kernel.cols(); ++c) {
      if (eta.degree() > 0) {
        const double res = value.contract_first(kernel.col(c)).max_abs();
        if (res > report.max_eta_residual || report.worst_eta_point.size() == 0) {
          if (res >= report.max_eta_residual) report.worst_eta_point = x;
          report.max_eta_residual = std::max(report.max_eta_residual, res);
        }
      }
      if (has_d) {
        const double res = dvalue.contract_first(kernel.col(c)).max_abs();
        if (res > report.max_d_eta_residual || report.worst_d_eta_point.size() == 0) {
          if (res >= report.max_d_eta_residual) report.worst_d_eta_point = x;
          report.max_d_eta_residual = std::max(report.max_d_eta_residual, res);
        }
      }
    }
  }
  report.eta_horizontal = report.max_eta_residual <= tol;
  report.d_eta_horizontal = report.max_d_eta_residual <= tol;
  return report;
}

Mat leaf_lifts(const FrameAlgebroid& algebroid, const VecFn& immersion, const Vec& leaf_point,
               double tol, double kernel_tol) {
  if (immersion.out_dim() != algebroid.dim())
    throw std::invalid_argument("leaf_restrict: immersion target dimension mismatch");
  const Vec x = immersion(leaf_point);
  const Mat tangent = jacobian(immersion, leaf_point, algebroid.backend());
  const Mat rho = algebroid.anchor(x);
  const Mat lifts = linalg::min_norm_solve(rho, tangent, kernel_tol);
  for (int j = 0; j < tangent.cols(); ++j) {
    const double res = (rho * lifts.col(j) - tangent.col(j)).norm();
    if (res > tol * (1.0 + tangent.col(j).norm())) {
      throw LeafMismatchError("leaf_restrict: tangent vector " + std::to_string(j) + " at " +
                              format_point(x) + " is not in the anchor image (residual " +
                              std::to_string(res) + ")");
    }
  }
  return lifts;
}

FormArray leaf_restrict(const FrameAlgebroid& algebroid, const AlgebroidForm& eta,
                        const VecFn& immersion, const Vec& leaf_point, double tol, double kernel_tol) {
  const Mat lifts = leaf_lifts(algebroid, immersion, leaf_point, tol, kernel_tol);
  const int d = static_cast<int>(lifts.cols());
  const int k = eta.degree();
  const FormArray value = eta(immersion(leaf_point));
  FormArray out(k, d);
  std::vector<int> index;
  std::vector<Vec> vectors;
  for (int flat = 0; flat < out.data().size(); ++flat) {
    decode(flat, k, d, index);
    vectors.clear();
    for (int j : index) vectors.push_back(lifts.col(j));
    out.data()(flat) = value.evaluate(vectors);
  }
  return out;
}

}  // namespace diracvar
