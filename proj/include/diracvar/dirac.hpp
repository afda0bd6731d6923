#pragma once

// Courant calculus on TM + T*M, Dirac structure constructors and the
// pointwise linear algebra of their frames.
//
// Conventions:
//   pairing      <(v,a),(w,b)> = a(w) + b(v)
//   bracket      ([X,Y], L_X b - L_Y a - 1/2 d(b(X) - a(Y)))
//   omega_D      omega_D((v,a),(w,b)) = a(w) - b(v)
//   2-forms      w(u,v) = u^T W v,  iota_v W = W^T v
//   bivectors    (pi# a)^i = pi^ij a_j
//   canonical    Omega = dq^i ^ dp_i, matrix [[0,I],[-I,0]] on (dq,dp)

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "diracvar/algebroid.hpp"
#include "diracvar/sampling.hpp"
#include "diracvar/smoothfield.hpp"

namespace diracvar {

struct CourantSection {
  VectorField X;
  OneFormField alpha;

  CourantSection(VectorField x, OneFormField a);
  const Chart& chart() const { return X.chart(); }
};

/// A value of TM + T*M at one point.
struct CourantValue {
  Vec v;
  Vec a;
};

double courant_pairing(const CourantSection& s1, const CourantSection& s2, const Vec& x);
CourantValue courant_bracket(const CourantSection& s1, const CourantSection& s2, const Vec& x,
                             const DiffBackend& backend = {});

/// Bracket from values and Jacobians: D* (i, k) = d_k (*)^i.
CourantValue courant_bracket_values(const Vec& X, const Mat& DX, const Vec& a, const Mat& Da,
                                    const Vec& Y, const Mat& DY, const Vec& b, const Mat& Db);

/// 2n x n frame matrix at a point: top block vector parts, bottom block covector parts.
struct PointFrame {
  Vec x;
  Mat B;

  int dim() const { return static_cast<int>(B.cols()); }
  Mat Bv() const { return B.topRows(dim()); }
  Mat Ba() const { return B.bottomRows(dim()); }
  /// B^T P [w; b] = Bv^T b + Ba^T w.
  Vec pairing_with(const Vec& w, const Vec& b) const;
};

enum class DiracKind { graph_form, graph_poisson, foliation_sum, distribution, gauge, cotangent_lift };
const char* to_string(DiracKind kind);

struct BuildOptions {
  /// Points used for the closedness / Jacobi / structure checks. Empty means
  /// 100 Halton points in [-1.5, 1.5]^n filtered by the chart domain.
  std::vector<Vec> samples;
  double closedness_tol = 1e-6;
  double jacobi_tol = 1e-6;
  double isotropy_tol = 1e-8;
  double involutivity_tol = 1e-6;
  /// Accept non-involutive data (reported, not rejected).
  bool almost_dirac = false;
  bool verify = true;
  DiffBackend backend = {};
};

class DiracStructure {
 public:
  const Chart& chart() const { return chart_; }
  int dim() const { return chart_.dim(); }
  DiracKind kind() const { return kind_; }
  bool almost_dirac() const { return almost_dirac_; }
  const DiffBackend& backend() const { return backend_; }

  /// x -> B flattened column-major (2n * n entries).
  const VecFn& frame_fn() const { return frame_; }
  Mat frame_matrix(const Vec& x) const;
  CourantSection section(int i) const;

  /// Frame coefficients of [e_i, e_j]; column i*n + j. Closed form for graphs,
  /// least-squares projection of the Courant bracket otherwise.
  Mat bracket_table(const Vec& x) const;
  bool has_analytic_brackets() const { return static_cast<bool>(analytic_brackets_); }
  /// Courant brackets of all frame pairs: returns 2n x (n*n), column i*n + j.
  Mat frame_courant_brackets(const Vec& x) const;

  // Retained construction data.
  const std::optional<SkewMatrixField>& form() const { return form_; }
  const std::optional<SkewMatrixField>& poisson() const { return poisson_; }
  const std::optional<VecFn>& submersion() const { return submersion_; }
  const std::shared_ptr<const DiracStructure>& base() const { return base_; }
  const std::optional<SkewMatrixField>& gauge_form() const { return gauge_form_; }
  bool with_gauge() const { return with_gauge_; }

 private:
  friend DiracStructure build_from_frame(Chart, DiracKind, VecFn, const BuildOptions&);
  friend DiracStructure build_dirac_form(const SkewMatrixField&, const BuildOptions&);
  friend DiracStructure build_dirac_poisson(const SkewMatrixField&, const BuildOptions&);
  friend DiracStructure build_dirac_foliation(const VecFn&, const std::vector<VectorField>&,
                                              const BuildOptions&, const std::vector<OneFormField>*);
  friend DiracStructure build_dirac_distribution(const std::vector<VectorField>&,
                                                 const std::vector<OneFormField>&, const BuildOptions&);
  friend DiracStructure gauge_transform(const DiracStructure&, const SkewMatrixField&, const BuildOptions&);
  friend DiracStructure cotangent_lift(const DiracStructure&, bool, const BuildOptions&);

  DiracStructure(Chart chart, DiracKind kind, VecFn frame, DiffBackend backend);

  Chart chart_;
  DiracKind kind_;
  VecFn frame_;
  DiffBackend backend_;
  bool almost_dirac_ = false;
  BracketTableFn analytic_brackets_;
  std::optional<SkewMatrixField> form_;
  std::optional<SkewMatrixField> poisson_;
  std::optional<VecFn> submersion_;
  std::shared_ptr<const DiracStructure> base_;
  std::optional<SkewMatrixField> gauge_form_;
  bool with_gauge_ = false;
};

std::vector<Vec> default_samples(const Chart& chart, int count = 100);

/// Frame-level constructor used by all the named constructors.
DiracStructure build_from_frame(Chart chart, DiracKind kind, VecFn frame, const BuildOptions& opts);

/// Gamma_omega: e_i = (d_i, iota_{d_i} omega). omega must be covariant and closed.
DiracStructure build_dirac_form(const SkewMatrixField& omega, const BuildOptions& opts = {});
/// Gamma_pi: e_i = (pi# dx_i, dx_i). pi must be contravariant and Poisson.
DiracStructure build_dirac_poisson(const SkewMatrixField& pi, const BuildOptions& opts = {});
/// F + F-annihilator for the leaves of a submersion g: R^n -> R^k, with n - k
/// fields spanning ker dg. `differentials`, when given, are the exact dg_j
/// (otherwise dg is differentiated numerically).
DiracStructure build_dirac_foliation(const VecFn& submersion, const std::vector<VectorField>& fields,
                                     const BuildOptions& opts = {},
                                     const std::vector<OneFormField>* differentials = nullptr);
/// F + F-annihilator for a distribution given by spanning fields and spanning
/// annihilator one-forms (need not be involutive when opts.almost_dirac).
DiracStructure build_dirac_distribution(const std::vector<VectorField>& fields,
                                        const std::vector<OneFormField>& annihilator,
                                        const BuildOptions& opts = {});

/// e^omega D = {(v, a + iota_v omega)}.
DiracStructure gauge_transform(const DiracStructure& D, const SkewMatrixField& omega,
                               const BuildOptions& opts = {});
/// pi^! D on T*Q with coordinates (q, p); with_gauge additionally applies e^Omega.
DiracStructure cotangent_lift(const DiracStructure& D, bool with_gauge, const BuildOptions& opts = {});

/// The chart (q_1..q_n, p_1..p_n) on T*Q.
Chart cotangent_chart(const Chart& base);

/// Throws ConstructionError naming the point when rank(B) < n.
PointFrame point_frame(const DiracStructure& D, const Vec& x);

struct StructureReport {
  double isotropy_max = 0.0;
  double involutivity_max = 0.0;
  bool rank_ok = true;
  bool isotropy_ok = true;
  bool involutivity_ok = true;
  Vec worst_involutivity_point;
  int samples = 0;
  bool passed() const { return rank_ok && isotropy_ok && involutivity_ok; }
};

/// Isotropy ||B^T P B|| / ||B||^2 and involutivity tensor <[e_i,e_j],e_k>.
StructureReport verify_structure(const DiracStructure& D, const std::vector<Vec>& samples,
                                 double isotropy_tol = 1e-8, double involutivity_tol = 1e-6);

/// ||B^T P [w; b]|| / (1 + ||(w, b)||).
double membership_residual(const PointFrame& F, const Vec& w, const Vec& b);
/// Largest membership residual of either frame's columns in the other.
double subspace_distance(const PointFrame& F1, const PointFrame& F2);

/// M_ij = omega_D(e_i, e_j) = Ba^T Bv - Bv^T Ba.
Mat omega_D_matrix(const PointFrame& F);

/// The Lie algebroid D -> TM in its frame.
FrameAlgebroid dirac_algebroid(const DiracStructure& D);
/// omega_D as a 2-form over the Dirac algebroid.
AlgebroidForm omega_D_form(const DiracStructure& D);
/// theta_i = <tau, e_i>.
AlgebroidForm primitive_form(const DiracStructure& D, const CourantSection& tau);

struct PrimitiveReport {
  bool horizontal = false;
  bool d_theta_equals_omega = false;
  double max_horizontality_residual = 0.0;
  double max_d_theta_residual = 0.0;
  Vec worst_point;
};

PrimitiveReport check_primitive(const DiracStructure& D, const CourantSection& tau,
                                const std::vector<Vec>& samples, double tol);

struct PoissonPrimitiveReport {
  bool lie_condition = false;
  bool tangency = false;
  bool jacobi_ok = false;
  double max_lie_residual = 0.0;
  double max_tangency_residual = 0.0;
  double max_jacobi_residual = 0.0;
};

PoissonPrimitiveReport check_poisson_primitive(const SkewMatrixField& pi, const VectorField& E,
                                               const std::vector<Vec>& samples, double tol,
                                               const DiffBackend& backend = {});

struct HamiltonianSolve {
  Vec v;
  Vec coefficients;
  int kernel_dim = 0;
  double residual = 0.0;
  bool attainable = false;
};

/// Min-norm least squares Ba c = dH, v = Bv c.
HamiltonianSolve hamiltonian_solve(const PointFrame& F, const Vec& dH, double tol = 1e-8);

/// max |J^{ijk}|, J^{ijk} = sum_l pi^il d_l pi^jk + cyclic.
double jacobi_residual(const SkewMatrixField& pi, const Vec& x, const DiffBackend& backend = {});
/// max |(d omega)_{ijk}|.
double closedness_residual(const SkewMatrixField& omega, const Vec& x, const DiffBackend& backend = {});

}  // namespace diracvar
