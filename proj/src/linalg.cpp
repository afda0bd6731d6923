#include "diracvar/linalg.hpp"

#include <Eigen/SVD>

namespace diracvar::linalg {

namespace {

int rank_from(const Vec& sigma, double rel_tol) {
  if (sigma.size() == 0) return 0;
  const double smax = sigma(0);
  if (!(smax > 0.0)) return 0;
  int rank = 0;
  for (int i = 0; i < sigma.size(); ++i) {
    if (sigma(i) > rel_tol * smax) ++rank;
  }
  return rank;
}

}  // namespace

int numerical_rank(const Mat& A, double rel_tol) {
  if (A.size() == 0) return 0;
  Eigen::JacobiSVD<Mat> svd(A);
  return rank_from(svd.singularValues(), rel_tol);
}

Mat kernel_basis(const Mat& A, double rel_tol) {
  const int cols = static_cast<int>(A.cols());
  if (A.rows() == 0) return Mat::Identity(cols, cols);
  Eigen::JacobiSVD<Mat> svd(A, Eigen::ComputeFullV);
  const int rank = rank_from(svd.singularValues(), rel_tol);
  return svd.matrixV().rightCols(cols - rank);
}

Mat range_basis(const Mat& A, double rel_tol) {
  if (A.cols() == 0) return Mat(A.rows(), 0);
  Eigen::JacobiSVD<Mat> svd(A, Eigen::ComputeFullU);
  const int rank = rank_from(svd.singularValues(), rel_tol);
  return svd.matrixU().leftCols(rank);
}

Mat min_norm_solve(const Mat& A, const Mat& B, double rel_tol) {
  Eigen::JacobiSVD<Mat> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vec& sigma = svd.singularValues();
  const int rank = rank_from(sigma, rel_tol);
  Mat X = Mat::Zero(A.cols(), B.cols());
  if (rank == 0) return X;
  const Mat UtB = svd.matrixU().leftCols(rank).transpose() * B;
  const Vec inv = sigma.head(rank).cwiseInverse();
  X = svd.matrixV().leftCols(rank) * (inv.asDiagonal() * UtB);
  return X;
}

}  // namespace diracvar::linalg
