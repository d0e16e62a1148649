#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>

#include "routhlab/errors.hpp"

namespace routhlab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Reciprocal condition estimate below which an LU factorization is treated as singular.
inline constexpr double kSingularRcond = 1e-13;

/// Solves H a = b for a symmetric H. Cholesky is tried first (the strongly convex path);
/// otherwise LU with partial pivoting, rejecting numerically singular matrices.
template <class Err = SingularHessian>
Vec solve_symmetric(const Mat& H, const Vec& b, const std::string& what = "Hessian") {
  Eigen::LLT<Mat> llt(H);
  if (llt.info() == Eigen::Success) {
    Vec a = llt.solve(b);
    if (a.allFinite()) return a;
  }
  Eigen::PartialPivLU<Mat> lu(H);
  if (!(lu.rcond() > kSingularRcond)) throw Err(what + " is singular");
  Vec a = lu.solve(b);
  if (!a.allFinite()) throw Err(what + " solve produced non-finite values");
  return a;
}

inline double min_eigenvalue(const Mat& symmetric) {
  if (symmetric.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetric, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

inline bool is_positive_definite(const Mat& symmetric) {
  Eigen::LLT<Mat> llt(symmetric);
  return llt.info() == Eigen::Success;
}

inline double rel_diff(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace routhlab
