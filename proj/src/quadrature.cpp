#include "stochbed/quadrature.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace stochbed {

void gauss_hermite(int n, Vector& nodes, Vector& weights) {
  if (n < 1) throw std::invalid_argument("gauss_hermite: need n >= 1");
  if (n == 1) {
    nodes = Vector::Zero(1);
    weights = Vector::Constant(1, std::sqrt(M_PI));
    return;
  }
  // Golub-Welsch: nodes are eigenvalues of the Jacobi matrix (zero
  // diagonal, off-diagonal sqrt(i/2)); weight_i = sqrt(pi) * v_{0,i}^2.
  Vector diag = Vector::Zero(n);
  Vector sub(n - 1);
  for (int i = 1; i < n; ++i) sub[i - 1] = std::sqrt(0.5 * i);
  Eigen::SelfAdjointEigenSolver<Matrix> es;
  es.computeFromTridiagonal(diag, sub);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("gauss_hermite: eigensolver failed");
  nodes = es.eigenvalues();
  weights = std::sqrt(M_PI) *
            es.eigenvectors().row(0).transpose().array().square().matrix();
}

Quadrature gaussian_quadrature(const Vector& mean, const Vector& sd, int n_1d,
                               double weight_cutoff) {
  const Index d = mean.size();
  if (d < 1 || sd.size() != d)
    throw std::invalid_argument("gaussian_quadrature: dimension mismatch");
  if (!(sd.array() > 0.0).all())
    throw std::invalid_argument("gaussian_quadrature: sd must be > 0");

  Vector t, w;
  gauss_hermite(n_1d, t, w);
  // Change of variables x = mean + sqrt(2) sd t turns the exp(-t^2) rule
  // into an expectation under N(mean, diag(sd^2)); each axis weight picks
  // up 1/sqrt(pi).
  w /= std::sqrt(M_PI);

  // Per-axis pre-cut: a 1d weight below cutoff^(1/d) cannot contribute a
  // surviving product node in the symmetric tensor grid's densest slice,
  // but cheap safety first: only drop 1d nodes below cutoff outright.
  std::vector<int> keep;
  for (int i = 0; i < n_1d; ++i)
    if (w[i] >= weight_cutoff) keep.push_back(i);
  const int m = static_cast<int>(keep.size());
  if (m == 0) throw std::invalid_argument("gaussian_quadrature: cutoff too high");

  std::vector<Vector> axis_nodes(d);
  std::vector<Vector> axis_weights(d);
  for (Index j = 0; j < d; ++j) {
    axis_nodes[j].resize(m);
    axis_weights[j].resize(m);
    for (int i = 0; i < m; ++i) {
      axis_nodes[j][i] = mean[j] + std::sqrt(2.0) * sd[j] * t[keep[i]];
      axis_weights[j][i] = w[keep[i]];
    }
  }

  // Enumerate the tensor grid, dropping product weights below cutoff.
  std::vector<int> idx(d, 0);
  std::vector<Vector> pts;
  std::vector<double> wts;
  while (true) {
    double pw = 1.0;
    for (Index j = 0; j < d; ++j) pw *= axis_weights[j][idx[j]];
    if (pw >= weight_cutoff) {
      Vector x(d);
      for (Index j = 0; j < d; ++j) x[j] = axis_nodes[j][idx[j]];
      pts.push_back(std::move(x));
      wts.push_back(pw);
    }
    Index j = 0;
    while (j < d && ++idx[j] == m) idx[j++] = 0;
    if (j == d) break;
  }

  Quadrature q;
  q.points.resize(static_cast<Index>(pts.size()), d);
  q.weights.resize(static_cast<Index>(wts.size()));
  for (Index i = 0; i < q.weights.size(); ++i) {
    q.points.row(i) = pts[static_cast<size_t>(i)].transpose();
    q.weights[i] = wts[static_cast<size_t>(i)];
  }
  return q;
}

}  // namespace stochbed
