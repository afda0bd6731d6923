#pragma once

// Rank-revealing helpers built on the SVD. Singular values at or below
// rel_tol * sigma_max count as zero.

#include "diracvar/smoothfield.hpp"

namespace diracvar::linalg {

inline constexpr double kDefaultRankTol = 1e-9;

int numerical_rank(const Mat& A, double rel_tol = kDefaultRankTol);

/// Orthonormal basis of ker A (columns). Empty (cols() == 0) when A is injective.
Mat kernel_basis(const Mat& A, double rel_tol = kDefaultRankTol);

/// Orthonormal basis of the column space of A.
Mat range_basis(const Mat& A, double rel_tol = kDefaultRankTol);

/// Minimum-norm least-squares solution X of A X = B.
Mat min_norm_solve(const Mat& A, const Mat& B, double rel_tol = kDefaultRankTol);

inline Vec min_norm_solve(const Mat& A, const Vec& b, double rel_tol = kDefaultRankTol) {
  return min_norm_solve(A, Mat(b), rel_tol).col(0);
}

}  // namespace diracvar::linalg
