#pragma once

#include "stochbed/types.hpp"

namespace stochbed {

/// Anisotropic RBF kernel parameters: k(x,x') = amplitude^2 *
/// exp(-1/2 sum_j (x_j - x'_j)^2 / lengthscales_j^2).
struct KernelParams {
  double amplitude = 1.0;
  Vector lengthscales;  // one per input dimension

  static KernelParams isotropic(double amplitude, double lengthscale,
                                Index dim) {
    KernelParams p;
    p.amplitude = amplitude;
    p.lengthscales = Vector::Constant(dim, lengthscale);
    return p;
  }
};

inline void check_kernel_params(const KernelParams& p) {
  if (!(p.amplitude > 0.0))
    throw std::invalid_argument("KernelParams: amplitude must be > 0");
  if (p.lengthscales.size() < 1 || !(p.lengthscales.array() > 0.0).all())
    throw std::invalid_argument("KernelParams: lengthscales must be > 0");
}

inline double rbf_kernel(const Vector& x, const Vector& x2,
                         const KernelParams& p) {
  if (x.size() != x2.size() || x.size() != p.lengthscales.size())
    throw std::invalid_argument("rbf_kernel: dimension mismatch");
  const double r2 =
      ((x - x2).array() / p.lengthscales.array()).square().sum();
  return p.amplitude * p.amplitude * std::exp(-0.5 * r2);
}

/// Cross-kernel matrix: entry (i,j) = k(X.row(i), X2.row(j)).
/// Points are rows.
inline Matrix kernel_matrix(const Matrix& X, const Matrix& X2,
                            const KernelParams& p) {
  if (X.rows() < 1 || X2.rows() < 1)
    throw std::invalid_argument("kernel_matrix: empty point list");
  if (X.cols() != X2.cols() || X.cols() != p.lengthscales.size())
    throw std::invalid_argument("kernel_matrix: dimension mismatch");
  // Scaled squared distances via the ||a-b||^2 = ||a||^2 + ||b||^2 - 2a.b
  // expansion, then one vectorized exp pass.
  Matrix A = X, B = X2;
  for (Index j = 0; j < X.cols(); ++j) {
    A.col(j) /= p.lengthscales[j];
    B.col(j) /= p.lengthscales[j];
  }
  Vector an = A.rowwise().squaredNorm();
  Vector bn = B.rowwise().squaredNorm();
  Matrix r2 = (-2.0 * A * B.transpose());
  r2.colwise() += an;
  r2.rowwise() += bn.transpose();
  const double tau2 = p.amplitude * p.amplitude;
  return tau2 * (r2.array().max(0.0) * -0.5).exp().matrix();
}

inline Matrix kernel_matrix(const Matrix& X, const KernelParams& p) {
  Matrix K = kernel_matrix(X, X, p);
  // Exact symmetry and unit-correlation diagonal against round-off.
  K = 0.5 * (K + K.transpose()).eval();
  K.diagonal().setConstant(p.amplitude * p.amplitude);
  return K;
}

}  // namespace stochbed
