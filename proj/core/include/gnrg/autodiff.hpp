#pragma once

#include <functional>

#include "gnrg/mlp.hpp"

namespace gnrg {

/// One state per row.
using StateMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
/// Rows are samples, columns follow vectorize() order.
using Jacobian = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline std::span<const double> row_span(const StateMatrix& states, Eigen::Index i) {
  return {states.row(i).data(), static_cast<std::size_t>(states.cols())};
}

/// Gradient of f(W, s) with respect to vectorize(W), computed from a forward
/// trace by a single backward sweep. Writes into `out` (length N_net).
void sample_gradient(const MlpArchitecture& arch, const ParameterSet& params,
                     const ForwardTrace& trace, Eigen::Ref<Vector> out);
Vector sample_gradient(const MlpArchitecture& arch, const ParameterSet& params,
                       const ForwardTrace& trace);

/// G(W): row i is the transposed parameter gradient at states.row(i).
Jacobian batch_jacobian(const MlpArchitecture& arch, const ParameterSet& params,
                        const StateMatrix& states);

/// Network outputs F(W) and G(W) at once, sharing the forward passes.
struct BatchEvaluation {
  Vector values;
  Jacobian jacobian;
};
BatchEvaluation evaluate_batch(const MlpArchitecture& arch, const ParameterSet& params,
                               const StateMatrix& states, bool with_jacobian = true);

/// G(W) - gamma * G'(W).
Jacobian residual_jacobian(const MlpArchitecture& arch, const ParameterSet& params,
                           const StateMatrix& states, const StateMatrix& successors,
                           double gamma);

using ScalarObjective = std::function<double(const Vector&)>;

/// Central differences of `fn` at `at`, one coordinate at a time.
Vector fd_gradient_oracle(const ScalarObjective& fn, const Vector& at, double h = 1e-6);

/// max|a - b| / max(1, max|a|): the relative error used by every derivative check.
double relative_error(const Vector& analytic, const Vector& reference);

}  // namespace gnrg
