#include "gnrg/autodiff.hpp"

#include <cmath>
#include <stdexcept>

namespace gnrg {

void sample_gradient(const MlpArchitecture& arch, const ParameterSet& params,
                     const ForwardTrace& trace, Eigen::Ref<Vector> out) {
  const int depth = arch.num_layers();
  if (static_cast<int>(trace.outputs.size()) != depth + 1 ||
      static_cast<int>(trace.derivatives.size()) != depth || !params.matches(arch))
    throw std::invalid_argument("forward trace does not match parameters");
  if (out.size() != num_parameters(arch))
    throw std::invalid_argument("gradient buffer has wrong length");

  // Offsets of each layer block inside vec(W).
  std::vector<Eigen::Index> offsets(depth + 1, 0);
  for (int l = 1; l <= depth; ++l) offsets[l] = offsets[l - 1] + params.layers[l - 1].size();

  // psi holds Sigma_l * (dF / dphi_l) for the current layer.
  Vector psi = trace.derivatives[depth - 1];
  for (int l = depth; l >= 1; --l) {
    const Vector& input = trace.outputs[l - 1];
    const auto rows = input.size() + 1;
    // block = vec([phi_{l-1}; 1] psi^T)
    for (Eigen::Index j = 0; j < psi.size(); ++j) {
      auto col = out.segment(offsets[l - 1] + j * rows, rows);
      col.head(input.size()) = psi(j) * input;
      col(input.size()) = psi(j);
    }
    if (l > 1) {
      const Matrix& w = params.layers[l - 1];
      psi = (w.topRows(input.size()) * psi).cwiseProduct(trace.derivatives[l - 2]);
    }
  }
}

Vector sample_gradient(const MlpArchitecture& arch, const ParameterSet& params,
                       const ForwardTrace& trace) {
  Vector out(num_parameters(arch));
  sample_gradient(arch, params, trace, out);
  return out;
}

BatchEvaluation evaluate_batch(const MlpArchitecture& arch, const ParameterSet& params,
                               const StateMatrix& states, bool with_jacobian) {
  if (states.rows() == 0) throw std::invalid_argument("empty state list");
  if (states.cols() != arch.input_dim())
    throw std::invalid_argument("state dimension does not match architecture");
  BatchEvaluation result;
  result.values.resize(states.rows());
  if (with_jacobian) result.jacobian.resize(states.rows(), num_parameters(arch));
  Vector row(num_parameters(arch));
  for (Eigen::Index i = 0; i < states.rows(); ++i) {
    if (!with_jacobian) {
      result.values(i) = evaluate(arch, params, row_span(states, i));
      continue;
    }
    const ForwardTrace trace = forward(arch, params, row_span(states, i));
    result.values(i) = trace.value();
    sample_gradient(arch, params, trace, row);
    result.jacobian.row(i) = row.transpose();
  }
  return result;
}

Jacobian batch_jacobian(const MlpArchitecture& arch, const ParameterSet& params,
                        const StateMatrix& states) {
  return evaluate_batch(arch, params, states).jacobian;
}

Jacobian residual_jacobian(const MlpArchitecture& arch, const ParameterSet& params,
                           const StateMatrix& states, const StateMatrix& successors,
                           double gamma) {
  if (states.rows() != successors.rows())
    throw std::invalid_argument("states and successors differ in length");
  Jacobian g = batch_jacobian(arch, params, states);
  if (gamma != 0.0) g.noalias() -= gamma * batch_jacobian(arch, params, successors);
  return g;
}

Vector fd_gradient_oracle(const ScalarObjective& fn, const Vector& at, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("finite-difference step must be positive");
  Vector grad(at.size());
  Vector probe = at;
  for (Eigen::Index i = 0; i < at.size(); ++i) {
    probe(i) = at(i) + h;
    const double plus = fn(probe);
    probe(i) = at(i) - h;
    const double minus = fn(probe);
    probe(i) = at(i);
    if (!std::isfinite(plus) || !std::isfinite(minus))
      throw std::domain_error("objective is not finite near the probe point");
    grad(i) = (plus - minus) / (2.0 * h);
  }
  return grad;
}

double relative_error(const Vector& analytic, const Vector& reference) {
  if (analytic.size() != reference.size()) throw std::invalid_argument("size mismatch");
  if (analytic.size() == 0) return 0.0;
  const double scale = std::max(1.0, analytic.cwiseAbs().maxCoeff());
  return (analytic - reference).cwiseAbs().maxCoeff() / scale;
}

}  // namespace gnrg
