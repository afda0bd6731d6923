#include "diracvar/dirac.hpp"

#include <cmath>
#include <sstream>

#include "diracvar/linalg.hpp"

namespace diracvar {

namespace {

template <class T>
VecT<T> flatten(const MatT<T>& m) {
  return Eigen::Map<const VecT<T>>(m.data(), m.size());
}

template <class T>
MatT<T> unflatten(const VecT<T>& v, int rows, int cols) {
  return Eigen::Map<const MatT<T>>(v.data(), rows, cols);
}

template <class T>
using ScalarOf = typename std::decay_t<T>::Scalar;

bool all_dual(std::initializer_list<bool> flags) {
  for (bool f : flags)
    if (!f) return false;
  return true;
}

std::vector<Vec> samples_or_default(const BuildOptions& opts, const Chart& chart) {
  return opts.samples.empty() ? default_samples(chart) : opts.samples;
}

void verify_or_throw(const DiracStructure& D, const BuildOptions& opts, const std::vector<Vec>& samples) {
  if (!opts.verify) return;
  const StructureReport report = verify_structure(D, samples, opts.isotropy_tol, opts.involutivity_tol);
  if (!report.rank_ok) throw ConstructionError(std::string(to_string(D.kind())) + ": frame is rank deficient");
  if (!report.isotropy_ok) {
    throw ConstructionError(std::string(to_string(D.kind())) + ": frame is not isotropic (residual " +
                            std::to_string(report.isotropy_max) + ")");
  }
  if (!report.involutivity_ok && !D.almost_dirac()) {
    throw ConstructionError(std::string(to_string(D.kind())) + ": frame is not involutive (residual " +
                            std::to_string(report.involutivity_max) + " at " +
                            format_point(report.worst_involutivity_point) + ")");
  }
}

}  // namespace

CourantSection::CourantSection(VectorField x, OneFormField a) : X(std::move(x)), alpha(std::move(a)) {
  require_same_chart(X.chart(), alpha.chart(), "CourantSection");
}

double courant_pairing(const CourantSection& s1, const CourantSection& s2, const Vec& x) {
  require_same_chart(s1.chart(), s2.chart(), "courant_pairing");
  return s1.alpha(x).dot(s2.X(x)) + s2.alpha(x).dot(s1.X(x));
}

CourantValue courant_bracket_values(const Vec& X, const Mat& DX, const Vec& a, const Mat& Da,
                                    const Vec& Y, const Mat& DY, const Vec& b, const Mat& Db) {
  CourantValue out;
  out.v = DY * X - DX * Y;
  const Vec LXb = Db * X + DX.transpose() * b;
  const Vec LYa = Da * Y + DY.transpose() * a;
  // d(b(X)) and d(a(Y)).
  const Vec d_bX = Db.transpose() * X + DX.transpose() * b;
  const Vec d_aY = Da.transpose() * Y + DY.transpose() * a;
  out.a = LXb - LYa - 0.5 * (d_bX - d_aY);
  return out;
}

CourantValue courant_bracket(const CourantSection& s1, const CourantSection& s2, const Vec& x,
                             const DiffBackend& backend) {
  require_same_chart(s1.chart(), s2.chart(), "courant_bracket");
  return courant_bracket_values(s1.X(x), jacobian(s1.X, x, backend), s1.alpha(x),
                                jacobian(s1.alpha, x, backend), s2.X(x), jacobian(s2.X, x, backend),
                                s2.alpha(x), jacobian(s2.alpha, x, backend));
}

Vec PointFrame::pairing_with(const Vec& w, const Vec& b) const {
  const int n = dim();
  return B.topRows(n).transpose() * b + B.bottomRows(n).transpose() * w;
}

const char* to_string(DiracKind kind) {
  switch (kind) {
    case DiracKind::graph_form: return "graph_form";
    case DiracKind::graph_poisson: return "graph_poisson";
    case DiracKind::foliation_sum: return "foliation_sum";
    case DiracKind::distribution: return "distribution";
    case DiracKind::gauge: return "gauge";
    case DiracKind::cotangent_lift: return "cotangent_lift";
  }
  return "unknown";
}

DiracStructure::DiracStructure(Chart chart, DiracKind kind, VecFn frame, DiffBackend backend)
    : chart_(std::move(chart)), kind_(kind), frame_(std::move(frame)), backend_(backend) {
  const int n = chart_.dim();
  if (frame_.in_dim() != n || frame_.out_dim() != 2 * n * n)
    throw std::invalid_argument("DiracStructure: frame map has wrong shape");
}

Mat DiracStructure::frame_matrix(const Vec& x) const {
  chart_.require(x);
  const Vec flat = frame_(x);
  if (!flat.allFinite()) throw NumericalError("non-finite frame value at " + format_point(x));
  return unflatten<double>(flat, 2 * dim(), dim());
}

CourantSection DiracStructure::section(int i) const {
  const int n = dim();
  const VecFn frame = frame_;
  auto vec_part = [frame, n, i](const auto& x) {
    using T = ScalarOf<decltype(x)>;
    const VecT<T> flat = frame(x);
    return VecT<T>(flat.segment(i * 2 * n, n));
  };
  auto form_part = [frame, n, i](const auto& x) {
    using T = ScalarOf<decltype(x)>;
    const VecT<T> flat = frame(x);
    return VecT<T>(flat.segment(i * 2 * n + n, n));
  };
  return CourantSection(VectorField(chart_, VecFn::generic(n, n, vec_part, frame_.has_dual())),
                        OneFormField(chart_, VecFn::generic(n, n, form_part, frame_.has_dual())));
}

Mat DiracStructure::frame_courant_brackets(const Vec& x) const {
  const int n = dim();
  const Mat B = frame_matrix(x);
  const Mat J = jacobian(frame_, x, backend_);
  Mat out = Mat::Zero(2 * n, n * n);
  for (int i = 0; i < n; ++i) {
    const Mat DXi = J.block(i * 2 * n, 0, n, n);
    const Mat Dai = J.block(i * 2 * n + n, 0, n, n);
    for (int j = i + 1; j < n; ++j) {
      const Mat DXj = J.block(j * 2 * n, 0, n, n);
      const Mat Daj = J.block(j * 2 * n + n, 0, n, n);
      const CourantValue c = courant_bracket_values(B.col(i).head(n), DXi, B.col(i).tail(n), Dai,
                                                    B.col(j).head(n), DXj, B.col(j).tail(n), Daj);
      out.col(i * n + j) << c.v, c.a;
      out.col(j * n + i) = -out.col(i * n + j);
    }
  }
  return out;
}

Mat DiracStructure::bracket_table(const Vec& x) const {
  if (analytic_brackets_) {
    chart_.require(x);
    return analytic_brackets_(x);
  }
  return linalg::min_norm_solve(frame_matrix(x), frame_courant_brackets(x));
}

std::vector<Vec> default_samples(const Chart& chart, int count) {
  return halton_samples(Box::cube(chart.dim(), 1.5), count, 0, &chart);
}

DiracStructure build_from_frame(Chart chart, DiracKind kind, VecFn frame, const BuildOptions& opts) {
  DiracStructure D(std::move(chart), kind, std::move(frame), opts.backend);
  D.almost_dirac_ = opts.almost_dirac;
  verify_or_throw(D, opts, samples_or_default(opts, D.chart()));
  return D;
}

DiracStructure build_dirac_form(const SkewMatrixField& omega, const BuildOptions& opts) {
  omega.require_variance(Variance::covariant, "build_dirac_form");
  const Chart& chart = omega.chart();
  const int n = chart.dim();
  const auto samples = samples_or_default(opts, chart);
  if (opts.verify) {
    for (const Vec& x : samples) {
      const double r = closedness_residual(omega, x, opts.backend);
      if (r > opts.closedness_tol && !opts.almost_dirac) {
        throw ConstructionError("build_dirac_form: form is not closed at " + format_point(x) +
                                " (residual " + std::to_string(r) + ")");
      }
    }
  }
  const VecFn w = omega.fn();
  auto frame = [w, n](const auto& x) {
    using T = ScalarOf<decltype(x)>;
    const MatT<T> W = unflatten<T>(w(x), n, n);
    MatT<T> B(2 * n, n);
    B.topRows(n) = MatT<T>::Identity(n, n);
    B.bottomRows(n) = W.transpose();
    return flatten<T>(B);
  };
  DiracStructure D(chart, DiracKind::graph_form, VecFn::generic(n, 2 * n * n, frame, w.has_dual()),
                   opts.backend);
  D.almost_dirac_ = opts.almost_dirac;
  D.form_ = omega;
  if (closedness_residual(omega, samples.front(), opts.backend) <= opts.closedness_tol) {
    D.analytic_brackets_ = [n](const Vec&) { return Mat(Mat::Zero(n, n * n)); };
  }
  verify_or_throw(D, opts, samples);
  return D;
}

DiracStructure build_dirac_poisson(const SkewMatrixField& pi, const BuildOptions& opts) {
  pi.require_variance(Variance::contravariant, "build_dirac_poisson");
  const Chart& chart = pi.chart();
  const int n = chart.dim();
  const auto samples = samples_or_default(opts, chart);
  if (opts.verify) {
    for (const Vec& x : samples) {
      const double r = jacobi_residual(pi, x, opts.backend);
      if (r > opts.jacobi_tol && !opts.almost_dirac) {
        throw ConstructionError("build_dirac_poisson: Jacobi identity fails at " + format_point(x) +
                                " (residual " + std::to_string(r) + ")");
      }
    }
  }
  const VecFn p = pi.fn();
  auto frame = [p, n](const auto& x) {
    using T = ScalarOf<decltype(x)>;
    const MatT<T> P = unflatten<T>(p(x), n, n);
    MatT<T> B(2 * n, n);
    B.topRows(n) = P;
    B.bottomRows(n) = MatT<T>::Identity(n, n);
    return flatten<T>(B);
  };
  DiracStructure D(chart, DiracKind::graph_poisson, VecFn::generic(n, 2 * n * n, frame, p.has_dual()),
                   opts.backend);
  D.almost_dirac_ = opts.almost_dirac;
  D.poisson_ = pi;
  const DiffBackend backend = opts.backend;
  // [dx_i, dx_j]_pi = d pi^{ji}.
  D.analytic_brackets_ = [pi, n, backend](const Vec& x) {
    const std::vector<Mat> dP = matrix_partials(pi, x, backend);
    Mat table(n, n * n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) table(k, i * n + j) = dP[k](j, i);
    return table;
  };
  verify_or_throw(D, opts, samples);
  return D;
}

namespace {

void check_split_frame(const std::vector<VectorField>& fields, const std::function<Mat(const Vec&)>& annihilator,
                       const std::vector<Vec>& samples, const char* what, double tol) {
  const int m = static_cast<int>(fields.size());
  for (const Vec& x : samples) {
    Mat Y(x.size(), m);
    for (int a = 0; a < m; ++a) Y.col(a) = fields[a](x);
    const Mat A = annihilator(x);  // k x n, rows are covectors
    if (linalg::numerical_rank(Y, 1e-8) < m || (A.rows() > 0 && linalg::numerical_rank(A, 1e-8) < A.rows()))
      throw ConstructionError(std::string(what) + ": spanning data is rank deficient at " + format_point(x));
    if (A.rows() > 0 && m > 0) {
      const double r = (A * Y).cwiseAbs().maxCoeff();
      if (r > tol * (1.0 + Y.norm() * A.norm())) {
        throw ConstructionError(std::string(what) + ": fields are not annihilated at " + format_point(x) +
                                " (residual " + std::to_string(r) + ")");
      }
    }
  }
}

}  // namespace

DiracStructure build_dirac_foliation(const VecFn& submersion, const std::vector<VectorField>& fields,
                                     const BuildOptions& opts, const std::vector<OneFormField>* differentials) {
  if (fields.empty() && submersion.out_dim() == 0) throw std::invalid_argument("build_dirac_foliation: no data");
  const int k = submersion.out_dim();
  const int m = static_cast<int>(fields.size());
  const Chart chart = fields.empty() ? Chart(submersion.in_dim()) : fields.front().chart();
  const int n = chart.dim();
  if (submersion.in_dim() != n) throw ChartMismatch("build_dirac_foliation: submersion dimension mismatch");
  if (m + k != n) {
    throw ConstructionError("build_dirac_foliation: need n - k = " + std::to_string(n - k) +
                            " spanning fields, got " + std::to_string(m));
  }
  for (const auto& f : fields) require_same_chart(chart, f.chart(), "build_dirac_foliation");
  if (differentials && static_cast<int>(differentials->size()) != k)
    throw std::invalid_argument("build_dirac_foliation: one differential per submersion component required");

  const auto samples = samples_or_default(opts, chart);
  const DiffBackend backend = opts.backend;
  VecFn frame_fn;
  if (differentials) {
    bool dual = true;
    for (const auto& f : fields) dual = dual && f.has_dual();
    for (const auto& d : *differentials) dual = dual && d.has_dual();
    const std::vector<OneFormField> dg = *differentials;
    auto frame = [fields, dg, n, m, k](const auto& x) {
      using T = ScalarOf<decltype(x)>;
      MatT<T> B = MatT<T>::Zero(2 * n, n);
      for (int a = 0; a < m; ++a) B.col(a).head(n) = fields[a].fn()(x);
      for (int b = 0; b < k; ++b) B.col(m + b).tail(n) = dg[b].fn()(x);
      return flatten<T>(B);
    };
    frame_fn = VecFn::generic(n, 2 * n * n, frame, dual);
  } else {
    // Exact dg when the submersion has a dual evaluator, so that frame
    // derivatives are not nested finite differences.
    const DiffBackend inner = submersion.has_dual() ? DiffBackend::forward_dual() : backend;
    frame_fn = VecFn(n, 2 * n * n, [fields, submersion, inner, n, m, k](const Vec& x) {
      Mat B = Mat::Zero(2 * n, n);
      for (int a = 0; a < m; ++a) B.col(a).head(n) = fields[a].fn()(x);
      const Mat dg = jacobian(submersion, x, inner);
      for (int b = 0; b < k; ++b) B.col(m + b).tail(n) = dg.row(b).transpose();
      return flatten<double>(B);
    });
  }
  if (opts.verify) {
    auto annihilator = [&](const Vec& x) -> Mat {
      if (differentials) {
        Mat A(k, n);
        for (int b = 0; b < k; ++b) A.row(b) = (*differentials)[b](x).transpose();
        return A;
      }
      return jacobian(submersion, x, backend);
    };
    check_split_frame(fields, annihilator, samples, "build_dirac_foliation", 1e-6);
  }
  DiracStructure D(chart, DiracKind::foliation_sum, std::move(frame_fn), backend);
  D.almost_dirac_ = opts.almost_dirac;
  D.submersion_ = submersion;
  verify_or_throw(D, opts, samples);
  return D;
}

DiracStructure build_dirac_distribution(const std::vector<VectorField>& fields,
                                        const std::vector<OneFormField>& annihilator,
                                        const BuildOptions& opts) {
  if (fields.empty()) throw std::invalid_argument("build_dirac_distribution: no spanning fields");
  const Chart chart = fields.front().chart();
  const int n = chart.dim();
  const int m = static_cast<int>(fields.size());
  const int k = static_cast<int>(annihilator.size());
  if (m + k != n) throw ConstructionError("build_dirac_distribution: fields plus annihilators must number n");
  bool dual = true;
  for (const auto& f : fields) {
    require_same_chart(chart, f.chart(), "build_dirac_distribution");
    dual = dual && f.has_dual();
  }
  for (const auto& a : annihilator) {
    require_same_chart(chart, a.chart(), "build_dirac_distribution");
    dual = dual && a.has_dual();
  }
  const auto samples = samples_or_default(opts, chart);
  if (opts.verify) {
    check_split_frame(fields, [&](const Vec& x) {
      Mat A(k, n);
      for (int b = 0; b < k; ++b) A.row(b) = annihilator[b](x).transpose();
      return A;
    }, samples, "build_dirac_distribution", 1e-6);
  }
  auto frame = [fields, annihilator, n, m, k](const auto& x) {
    using T = ScalarOf<decltype(x)>;
    MatT<T> B = MatT<T>::Zero(2 * n, n);
    for (int a = 0; a < m; ++a) B.col(a).head(n) = fields[a].fn()(x);
    for (int b = 0; b < k; ++b) B.col(m + b).tail(n) = annihilator[b].fn()(x);
    return flatten<T>(B);
  };
  DiracStructure D(chart, DiracKind::distribution, VecFn::generic(n, 2 * n * n, frame, dual), opts.backend);
  D.almost_dirac_ = opts.almost_dirac;
  verify_or_throw(D, opts, samples);
  return D;
}

DiracStructure gauge_transform(const DiracStructure& D, const SkewMatrixField& omega, const BuildOptions& opts) {
  omega.require_variance(Variance::covariant, "gauge_transform");
  require_same_chart(D.chart(), omega.chart(), "gauge_transform");
  const int n = D.dim();
  const auto samples = opts.samples.empty() ? default_samples(D.chart()) : opts.samples;
  if (opts.verify) {
    for (const Vec& x : samples) {
      const double r = closedness_residual(omega, x, opts.backend);
      if (r > opts.closedness_tol) {
        throw ConstructionError("gauge_transform: form is not closed at " + format_point(x) + " (residual " +
                                std::to_string(r) + ")");
      }
    }
  }
  const VecFn base = D.frame_fn();
  const VecFn w = omega.fn();
  auto frame = [base, w, n](const auto& x) {
    using T = ScalarOf<decltype(x)>;
    MatT<T> B = unflatten<T>(base(x), 2 * n, n);
    const MatT<T> W = unflatten<T>(w(x), n, n);
    B.bottomRows(n) += W.transpose() * B.topRows(n);
    return flatten<T>(B);
  };
  DiracStructure G(D.chart(), DiracKind::gauge,
                   VecFn::generic(n, 2 * n * n, frame, base.has_dual() && w.has_dual()), opts.backend);
  G.almost_dirac_ = D.almost_dirac() || opts.almost_dirac;
  G.base_ = std::make_shared<const DiracStructure>(D);
  G.gauge_form_ = omega;
  verify_or_throw(G, opts, samples);
  return G;
}

Chart cotangent_chart(const Chart& base) {
  const int n = base.dim();
  std::vector<std::string> names = base.coordinate_names();
  for (int i = 0; i < n; ++i) names.push_back("p_" + base.coordinate_names()[i]);
  Chart::DomainPredicate domain;
  if (base.has_domain_check()) {
    domain = [base, n](const Vec& x) { return base.contains(x.head(n)); };
  }
  return Chart(2 * n, std::move(names), std::move(domain));
}

DiracStructure cotangent_lift(const DiracStructure& D, bool with_gauge, const BuildOptions& opts) {
  const int n = D.dim();
  const int N = 2 * n;
  const VecFn base = D.frame_fn();
  auto frame = [base, n, N, with_gauge](const auto& x) {
    using T = ScalarOf<decltype(x)>;
    const VecT<T> q = x.head(n);
    const MatT<T> Bq = unflatten<T>(base(q), 2 * n, n);
    MatT<T> B = MatT<T>::Zero(2 * N, N);
    for (int i = 0; i < n; ++i) {
      B.col(i).segment(0, n) = Bq.col(i).head(n);
      B.col(i).segment(N, n) = Bq.col(i).tail(n);
      if (with_gauge) B.col(i).segment(N + n, n) = Bq.col(i).head(n);
    }
    for (int j = 0; j < n; ++j) {
      B(n + j, n + j) = T(1.0);
      if (with_gauge) B(N + j, n + j) = T(-1.0);
    }
    return flatten<T>(B);
  };
  const Chart chart = cotangent_chart(D.chart());
  DiracStructure L(chart, DiracKind::cotangent_lift, VecFn::generic(N, 2 * N * N, frame, base.has_dual()),
                   opts.backend);
  L.almost_dirac_ = D.almost_dirac() || opts.almost_dirac;
  L.base_ = std::make_shared<const DiracStructure>(D);
  L.with_gauge_ = with_gauge;
  verify_or_throw(L, opts, opts.samples.empty() ? default_samples(chart) : opts.samples);
  return L;
}

PointFrame point_frame(const DiracStructure& D, const Vec& x) {
  PointFrame F{x, D.frame_matrix(x)};
  const int rank = linalg::numerical_rank(F.B);
  if (rank < D.dim()) {
    throw ConstructionError(std::string("point_frame: ") + to_string(D.kind()) + " frame has rank " +
                            std::to_string(rank) + " < " + std::to_string(D.dim()) + " at " + format_point(x));
  }
  return F;
}

StructureReport verify_structure(const DiracStructure& D, const std::vector<Vec>& samples,
                                 double isotropy_tol, double involutivity_tol) {
  if (samples.empty()) throw std::invalid_argument("verify_structure: empty sample list");
  const int n = D.dim();
  StructureReport report;
  report.samples = static_cast<int>(samples.size());
  for (const Vec& x : samples) {
    const Mat B = D.frame_matrix(x);
    const PointFrame F{x, B};
    if (linalg::numerical_rank(B) < n) report.rank_ok = false;
    const Mat iso = F.Bv().transpose() * F.Ba() + F.Ba().transpose() * F.Bv();
    const double scale = std::max(1.0, B.squaredNorm());
    report.isotropy_max = std::max(report.isotropy_max, iso.norm() / scale);

    const Mat C = D.frame_courant_brackets(x);
    // T(i,j,k) = <[e_i,e_j], e_k>, stored as rows k, columns i*n+j.
    const Mat T = F.Ba().transpose() * C.topRows(n) + F.Bv().transpose() * C.bottomRows(n);
    const double inv = T.size() ? T.cwiseAbs().maxCoeff() : 0.0;
    if (inv > report.involutivity_max || report.worst_involutivity_point.size() == 0) {
      if (inv >= report.involutivity_max) report.worst_involutivity_point = x;
      report.involutivity_max = std::max(report.involutivity_max, inv);
    }
  }
  report.isotropy_ok = report.isotropy_max <= isotropy_tol;
  report.involutivity_ok = report.involutivity_max <= involutivity_tol;
  return report;
}

double membership_residual(const PointFrame& F, const Vec& w, const Vec& b) {
  const double size = std::sqrt(w.squaredNorm() + b.squaredNorm());
  return F.pairing_with(w, b).norm() / (1.0 + size);
}

double subspace_distance(const PointFrame& F1, const PointFrame& F2) {
  const int n = F1.dim();
  double worst = 0.0;
  for (int i = 0; i < n; ++i) {
    worst = std::max(worst, membership_residual(F1, F2.B.col(i).head(n), F2.B.col(i).tail(n)));
    worst = std::max(worst, membership_residual(F2, F1.B.col(i).head(n), F1.B.col(i).tail(n)));
  }
  return worst;
}

Mat omega_D_matrix(const PointFrame& F) {
  const Mat Bv = F.Bv();
  const Mat Ba = F.Ba();
  return Ba.transpose() * Bv - Bv.transpose() * Ba;
}

FrameAlgebroid dirac_algebroid(const DiracStructure& D) {
  const int n = D.dim();
  const VecFn frame = D.frame_fn();
  auto anchor = [frame, n](const auto& x) {
    using T = ScalarOf<decltype(x)>;
    const MatT<T> B = unflatten<T>(frame(x), 2 * n, n);
    return flatten<T>(MatT<T>(B.topRows(n)));
  };
  return FrameAlgebroid(D.chart(), n, VecFn::generic(n, n * n, anchor, frame.has_dual()),
                        [D](const Vec& x) { return D.bracket_table(x); }, D.backend());
}

AlgebroidForm omega_D_form(const DiracStructure& D) {
  const int n = D.dim();
  const VecFn frame = D.frame_fn();
  auto coeffs = [frame, n](const auto& x) {
    using T = ScalarOf<decltype(x)>;
    const MatT<T> B = unflatten<T>(frame(x), 2 * n, n);
    const MatT<T> M = B.bottomRows(n).transpose() * B.topRows(n) - B.topRows(n).transpose() * B.bottomRows(n);
    VecT<T> out(n * n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) out(i * n + j) = M(i, j);
    return out;
  };
  return AlgebroidForm(2, n, VecFn::generic(n, n * n, coeffs, frame.has_dual()));
}

AlgebroidForm primitive_form(const DiracStructure& D, const CourantSection& tau) {
  require_same_chart(D.chart(), tau.chart(), "primitive_form");
  const int n = D.dim();
  const VecFn frame = D.frame_fn();
  const VecFn tx = tau.X.fn();
  const VecFn ta = tau.alpha.fn();
  auto coeffs = [frame, tx, ta, n](const auto& x) {
    using T = ScalarOf<decltype(x)>;
    const MatT<T> B = unflatten<T>(frame(x), 2 * n, n);
    const VecT<T> X = tx(x);
    const VecT<T> a = ta(x);
    return VecT<T>(B.topRows(n).transpose() * a + B.bottomRows(n).transpose() * X);
  };
  const bool dual = all_dual({frame.has_dual(), tx.has_dual(), ta.has_dual()});
  return AlgebroidForm(1, n, VecFn::generic(n, n, coeffs, dual));
}

PrimitiveReport check_primitive(const DiracStructure& D, const CourantSection& tau,
                                const std::vector<Vec>& samples, double tol) {
  const FrameAlgebroid A = dirac_algebroid(D);
  const AlgebroidForm theta = primitive_form(D, tau);
  const AlgebroidForm omega = omega_D_form(D);
  const HorizontalityReport h = horizontality_report(A, theta, samples, tol);
  PrimitiveReport report;
  report.max_horizontality_residual = std::max(h.max_eta_residual, h.max_d_eta_residual);
  report.horizontal = h.eta_horizontal && h.d_eta_horizontal;
  for (const Vec& x : samples) {
    const double r = (lichnerowicz_d(A, theta, x).data() - omega(x).data()).cwiseAbs().maxCoeff();
    if (r >= report.max_d_theta_residual) {
      report.max_d_theta_residual = r;
      report.worst_point = x;
    }
  }
  report.d_theta_equals_omega = report.max_d_theta_residual <= tol;
  return report;
}

PoissonPrimitiveReport check_poisson_primitive(const SkewMatrixField& pi, const VectorField& E,
                                               const std::vector<Vec>& samples, double tol,
                                               const DiffBackend& backend) {
  pi.require_variance(Variance::contravariant, "check_poisson_primitive");
  require_same_chart(pi.chart(), E.chart(), "check_poisson_primitive");
  PoissonPrimitiveReport report;
  for (const Vec& x : samples) {
    const Mat P = pi(x);
    const Mat lie = lie_derivative_bivector(E, pi, x, backend);
    report.max_lie_residual = std::max(report.max_lie_residual, (lie - P).cwiseAbs().maxCoeff());
    const Vec e = E(x);
    const Vec c = linalg::min_norm_solve(P, e);
    report.max_tangency_residual = std::max(report.max_tangency_residual, (P * c - e).norm());
    report.max_jacobi_residual = std::max(report.max_jacobi_residual, jacobi_residual(pi, x, backend));
  }
  report.lie_condition = report.max_lie_residual <= tol;
  report.tangency = report.max_tangency_residual <= tol;
  report.jacobi_ok = report.max_jacobi_residual <= tol;
  return report;
}

HamiltonianSolve hamiltonian_solve(const PointFrame& F, const Vec& dH, double tol) {
  if (dH.size() != F.dim()) throw std::invalid_argument("hamiltonian_solve: dH has wrong dimension");
  const Mat Ba = F.Ba();
  HamiltonianSolve out;
  out.coefficients = linalg::min_norm_solve(Ba, dH);
  out.v = F.Bv() * out.coefficients;
  out.kernel_dim = F.dim() - linalg::numerical_rank(Ba);
  out.residual = (Ba * out.coefficients - dH).norm() / (1.0 + dH.norm());
  out.attainable = out.residual <= tol;
  return out;
}

double jacobi_residual(const SkewMatrixField& pi, const Vec& x, const DiffBackend& backend) {
  pi.require_variance(Variance::contravariant, "jacobi_residual");
  const int n = pi.chart().dim();
  const Mat P = pi(x);
  const std::vector<Mat> dP = matrix_partials(pi, x, backend);
  double worst = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      for (int k = j + 1; k < n; ++k) {
        double J = 0.0;
        for (int l = 0; l < n; ++l)
          J += P(i, l) * dP[l](j, k) + P(j, l) * dP[l](k, i) + P(k, l) * dP[l](i, j);
        worst = std::max(worst, std::abs(J));
      }
  return worst;
}

double closedness_residual(const SkewMatrixField& omega, const Vec& x, const DiffBackend& backend) {
  omega.require_variance(Variance::covariant, "closedness_residual");
  const int n = omega.chart().dim();
  const std::vector<Mat> dW = matrix_partials(omega, x, backend);
  double worst = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      for (int k = j + 1; k < n; ++k)
        worst = std::max(worst, std::abs(dW[i](j, k) + dW[j](k, i) + dW[k](i, j)));
  return worst;
}

}  // namespace diracvar
