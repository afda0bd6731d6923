#pragma once

// Frame-presented Lie algebroids, the Lichnerowicz differential, pointwise
// horizontality, and restriction of horizontal forms to leaves.

#include <functional>
#include <span>
#include <vector>

#include "diracvar/linalg.hpp"
#include "diracvar/smoothfield.hpp"

namespace diracvar {

/// Fully antisymmetric k-array over r frame indices, stored flat in
/// row-major order: entry (i_1, ..., i_k) lives at sum_a i_a * r^(k-a).
class FormArray {
 public:
  FormArray(int degree, int rank);
  FormArray(int degree, int rank, Vec data);

  int degree() const { return degree_; }
  int rank() const { return rank_; }
  const Vec& data() const { return data_; }
  Vec& data() { return data_; }

  double operator()(std::span<const int> index) const { return data_(flat_index(index)); }
  double& operator()(std::span<const int> index) { return data_(flat_index(index)); }
  int flat_index(std::span<const int> index) const;

  double max_abs() const { return data_.size() ? data_.cwiseAbs().maxCoeff() : 0.0; }
  /// Degree-2 arrays as an r x r matrix.
  Mat as_matrix() const;
  static FormArray from_matrix(const Mat& m);

  /// iota_v: contraction of v into the first slot.
  FormArray contract_first(const Vec& v) const;
  /// Full evaluation on k vectors.
  double evaluate(const std::vector<Vec>& vectors) const;

 private:
  int degree_;
  int rank_;
  Vec data_;
};

/// Bracket table at a point: an r x (r*r) matrix whose column i*r + j holds
/// the frame coefficients of [e_i, e_j].
using BracketTableFn = std::function<Mat(const Vec&)>;

class FrameAlgebroid {
 public:
  /// `anchor` maps a point to the n x r anchor matrix, flattened column-major.
  FrameAlgebroid(Chart chart, int rank, VecFn anchor, BracketTableFn brackets,
                 DiffBackend backend = {});

  /// The tangent algebroid TM with the coordinate frame.
  static FrameAlgebroid tangent(const Chart& chart, DiffBackend backend = {});

  const Chart& chart() const { return chart_; }
  int dim() const { return chart_.dim(); }
  int rank() const { return rank_; }
  const DiffBackend& backend() const { return backend_; }
  const VecFn& anchor_fn() const { return anchor_; }

  Mat anchor(const Vec& x) const;
  Mat bracket_table(const Vec& x) const;
  Vec frame_bracket(int i, int j, const Vec& x) const;
  /// The vector field x -> rho(x) e_i.
  VectorField anchored_frame(int i) const;

  /// max over samples and pairs of |rho([e_i,e_j]) - [rho e_i, rho e_j]|.
  double anchor_compatibility_residual(const std::vector<Vec>& samples) const;

 private:
  Chart chart_;
  int rank_;
  VecFn anchor_;
  BracketTableFn brackets_;
  DiffBackend backend_;
};

/// A section of Lambda^k A^*, given by its coefficient array in the frame.
class AlgebroidForm {
 public:
  /// `coefficients` maps a point to the flattened r^k array.
  AlgebroidForm(int degree, int rank, VecFn coefficients);

  int degree() const { return degree_; }
  int rank() const { return rank_; }
  const VecFn& coefficients() const { return coefficients_; }

  FormArray operator()(const Vec& x) const;

 private:
  int degree_;
  int rank_;
  VecFn coefficients_;
};

/// Orthonormal basis (columns) of ker rho_x, using singular values <= tol * sigma_max.
Mat anchor_kernel(const FrameAlgebroid& algebroid, const Vec& x,
                  double tol = linalg::kDefaultRankTol);

/// (d_A eta)(x). Throws std::invalid_argument when degree >= rank.
FormArray lichnerowicz_d(const FrameAlgebroid& algebroid, const AlgebroidForm& eta, const Vec& x);

/// d_A eta as a form field (evaluated pointwise, double precision only).
AlgebroidForm lichnerowicz_d_form(const FrameAlgebroid& algebroid, const AlgebroidForm& eta);

struct HorizontalityReport {
  bool eta_horizontal = true;
  bool d_eta_horizontal = true;
  double max_eta_residual = 0.0;
  double max_d_eta_residual = 0.0;
  Vec worst_eta_point;
  Vec worst_d_eta_point;
  int max_kernel_dim = 0;
};

/// Contracts eta and d_A eta with every kernel vector at every sample.
HorizontalityReport horizontality_report(const FrameAlgebroid& algebroid, const AlgebroidForm& eta,
                                         const std::vector<Vec>& samples, double tol,
                                         double kernel_tol = linalg::kDefaultRankTol);

/// Least-squares lifts xi_u with rho(psi(xhat)) xi_u = psi_* u for the leaf
/// coordinate vectors u (one column each). Throws LeafMismatchError when
/// psi_* u is not in the range of rho.
Mat leaf_lifts(const FrameAlgebroid& algebroid, const VecFn& immersion, const Vec& leaf_point,
               double tol = 1e-8, double kernel_tol = linalg::kDefaultRankTol);

/// The form induced on a leaf by a horizontal eta, in leaf coordinates.
FormArray leaf_restrict(const FrameAlgebroid& algebroid, const AlgebroidForm& eta,
                        const VecFn& immersion, const Vec& leaf_point, double tol = 1e-8,
                        double kernel_tol = linalg::kDefaultRankTol);

}  // namespace diracvar
