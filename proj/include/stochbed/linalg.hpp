#pragma once

#include <Eigen/Cholesky>

#include "stochbed/types.hpp"

namespace stochbed {

/// Cholesky with escalating diagonal jitter. `scale` sets the jitter unit
/// (typically the kernel amplitude squared); levels are scale * 1e-8,
/// 1e-7, ..., 1e-4. Throws ConditioningError once the ladder is exhausted.
inline Eigen::LLT<Matrix> jittered_llt(const Matrix& A, double scale) {
  Eigen::LLT<Matrix> llt(A);
  if (llt.info() == Eigen::Success) return llt;
  double jitter = 1e-8 * scale;
  for (int level = 0; level < 5; ++level, jitter *= 10.0) {
    Matrix Aj = A;
    Aj.diagonal().array() += jitter;
    llt.compute(Aj);
    if (llt.info() == Eigen::Success) return llt;
  }
  throw ConditioningError(
      "jittered_llt: matrix not positive definite after jitter up to " +
      std::to_string(1e-4 * scale));
}

/// log det(A) from its Cholesky factor.
inline double llt_log_det(const Eigen::LLT<Matrix>& llt) {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

}  // namespace stochbed
