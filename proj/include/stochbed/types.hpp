#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace stochbed {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Training data for the regressions: one input point per row of
/// `inputs`, the matching scalar response in `outputs`.
struct Dataset {
  Matrix inputs;   // n x d
  Vector outputs;  // n

  Index size() const { return inputs.rows(); }
  Index dim() const { return inputs.cols(); }

  void append(const Vector& x, double y) {
    if (inputs.rows() > 0 && x.size() != inputs.cols())
      throw std::invalid_argument("Dataset::append: dimension mismatch");
    inputs.conservativeResize(inputs.rows() + 1, x.size());
    inputs.row(inputs.rows() - 1) = x.transpose();
    outputs.conservativeResize(outputs.size() + 1);
    outputs(outputs.size() - 1) = y;
  }
};

inline void check_dataset(const Dataset& d) {
  if (d.inputs.rows() != d.outputs.size())
    throw std::invalid_argument("Dataset: |inputs| != |outputs|");
  if (d.inputs.rows() < 1) throw std::invalid_argument("Dataset: empty");
  if (!d.inputs.allFinite() || !d.outputs.allFinite())
    throw std::invalid_argument("Dataset: non-finite entries");
}

/// Joint posterior of the mean function f and the log-variance function g
/// at a single query point.
struct PointPosterior {
  double mu_f = 0.0;
  double var_f = 0.0;
  double mu_g = 0.0;
  double var_g = 0.0;
};

class ConditioningError : public std::runtime_error {
 public:
  explicit ConditioningError(const std::string& what)
      : std::runtime_error(what) {}
};

}  // namespace stochbed
