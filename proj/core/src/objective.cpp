#include "gnrg/objective.hpp"

#include <stdexcept>
#include <string>

namespace gnrg {

std::string Method::tag() const {
  return std::string(to_string(kind)) + "-" + std::string(to_string(order));
}

std::string_view to_string(GradientKind kind) {
  return kind == GradientKind::Residual ? "residual" : "semi";
}

std::string_view to_string(Order order) { return order == Order::First ? "first" : "second"; }

GradientKind parse_gradient_kind(std::string_view name) {
  if (name == "residual") return GradientKind::Residual;
  if (name == "semi") return GradientKind::Semi;
  throw std::invalid_argument("unknown gradient kind: " + std::string(name));
}

Order parse_order(std::string_view name) {
  if (name == "first") return Order::First;
  if (name == "second") return Order::Second;
  throw std::invalid_argument("unknown order: " + std::string(name));
}

Matrix gram(const Eigen::Ref<const Jacobian>& a, double scale) {
  const auto n = a.cols();
  Matrix h = Matrix::Zero(n, n);
  h.selfadjointView<Eigen::Lower>().rankUpdate(a.transpose(), scale);
  return h.selfadjointView<Eigen::Lower>();
}

// --- discrete ---------------------------------------------------------------

Vector bellman_residual(const DiscreteMdp& mdp, const Vector& values) {
  if (values.size() != mdp.num_states()) throw std::invalid_argument("value vector length");
  return values - mdp.expected_reward() - mdp.gamma * (mdp.transition * values);
}

namespace {

void check_discrete(const MlpArchitecture& arch, const DiscreteMdp& mdp) {
  mdp.validate();
  if (mdp.features.cols() != arch.input_dim())
    throw std::invalid_argument("MDP features do not match the network input");
}

void check_batch(const MlpArchitecture& arch, const TransitionBatch& batch) {
  if (batch.size() == 0) throw std::invalid_argument("empty transition batch");
  if (batch.states.cols() != arch.input_dim() || batch.successors.cols() != arch.input_dim())
    throw std::invalid_argument("batch states do not match the network input");
  if (batch.successors.rows() != batch.size() || batch.rewards.size() != batch.size())
    throw std::invalid_argument("inconsistent transition batch");
}

}  // namespace

ObjectiveEvaluation evaluate_discrete(const MlpArchitecture& arch, const ParameterSet& params,
                                      const DiscreteMdp& mdp, bool with_hessian,
                                      const Vector* stationary) {
  check_discrete(arch, mdp);
  const Vector xi = stationary ? *stationary : stationary_distribution(mdp.transition);
  const auto k = mdp.num_states();
  const BatchEvaluation net = evaluate_batch(arch, params, mdp.features);

  ObjectiveEvaluation ev;
  ev.method = {GradientKind::Residual, with_hessian ? Order::Second : Order::First};
  ev.residual = bellman_residual(mdp, net.values);
  ev.loss = 0.5 * ev.residual.dot(xi.cwiseProduct(ev.residual));
  // A = (I - gamma P) G
  const Matrix contraction = Matrix::Identity(k, k) - mdp.gamma * mdp.transition;
  Jacobian a = contraction * net.jacobian;
  ev.direction = a.transpose() * xi.cwiseProduct(ev.residual);
  if (with_hessian) {
    a = xi.cwiseSqrt().asDiagonal() * a;
    ev.hessian = gram(a, 1.0);
  }
  return ev;
}

Vector residual_discrete(const MlpArchitecture& arch, const ParameterSet& params,
                         const DiscreteMdp& mdp) {
  check_discrete(arch, mdp);
  const BatchEvaluation net = evaluate_batch(arch, params, mdp.features, false);
  return bellman_residual(mdp, net.values);
}

double nmsbe_discrete(const MlpArchitecture& arch, const ParameterSet& params,
                      const DiscreteMdp& mdp) {
  const Vector delta = residual_discrete(arch, params, mdp);
  const Vector xi = stationary_distribution(mdp.transition);
  return 0.5 * delta.dot(xi.cwiseProduct(delta));
}

Vector gradient_discrete(const MlpArchitecture& arch, const ParameterSet& params,
                         const DiscreteMdp& mdp) {
  return evaluate_discrete(arch, params, mdp, false).direction;
}

Matrix gn_hessian_discrete(const MlpArchitecture& arch, const ParameterSet& params,
                           const DiscreteMdp& mdp) {
  return *evaluate_discrete(arch, params, mdp, true).hessian;
}

// --- sampled ----------------------------------------------------------------

namespace {

struct SampledParts {
  Vector residual;
  Jacobian g;       // G(W)
  Jacobian g_next;  // G'(W)
};

SampledParts sampled_parts(const MlpArchitecture& arch, const ParameterSet& params,
                           const TransitionBatch& batch, bool with_jacobians) {
  check_batch(arch, batch);
  BatchEvaluation here = evaluate_batch(arch, params, batch.states, with_jacobians);
  BatchEvaluation there = evaluate_batch(arch, params, batch.successors, with_jacobians);
  SampledParts parts;
  parts.residual = here.values - batch.rewards - batch.gamma * there.values;
  parts.g = std::move(here.jacobian);
  parts.g_next = std::move(there.jacobian);
  return parts;
}

}  // namespace

ObjectiveEvaluation evaluate_sampled(const MlpArchitecture& arch, const ParameterSet& params,
                                     const TransitionBatch& batch, Method method) {
  return detail::evaluate_sampled_signed(arch, params, batch, method, -1.0);
}

ObjectiveEvaluation detail::evaluate_sampled_signed(const MlpArchitecture& arch,
                                                    const ParameterSet& params,
                                                    const TransitionBatch& batch, Method method,
                                                    double successor_sign) {
  SampledParts parts = sampled_parts(arch, params, batch, true);
  const double inv_n = 1.0 / static_cast<double>(batch.size());

  ObjectiveEvaluation ev;
  ev.method = method;
  ev.loss = 0.5 * inv_n * parts.residual.squaredNorm();
  Jacobian& a = parts.g;
  if (method.kind == GradientKind::Residual)
    a.noalias() += successor_sign * batch.gamma * parts.g_next;
  ev.direction = inv_n * (a.transpose() * parts.residual);
  if (method.order == Order::Second) ev.hessian = gram(a, inv_n);
  ev.residual = std::move(parts.residual);
  return ev;
}

Vector residual_sampled(const MlpArchitecture& arch, const ParameterSet& params,
                        const TransitionBatch& batch) {
  return sampled_parts(arch, params, batch, false).residual;
}

double nmsbe_sampled(const MlpArchitecture& arch, const ParameterSet& params,
                     const TransitionBatch& batch) {
  const Vector delta = residual_sampled(arch, params, batch);
  return 0.5 * delta.squaredNorm() / static_cast<double>(batch.size());
}

Vector gradient_sampled(const MlpArchitecture& arch, const ParameterSet& params,
                        const TransitionBatch& batch) {
  return evaluate_sampled(arch, params, batch, {GradientKind::Residual, Order::First}).direction;
}

Matrix gn_hessian_sampled(const MlpArchitecture& arch, const ParameterSet& params,
                          const TransitionBatch& batch) {
  return *evaluate_sampled(arch, params, batch, {GradientKind::Residual, Order::Second}).hessian;
}

Vector semi_gradient_sampled(const MlpArchitecture& arch, const ParameterSet& params,
                             const TransitionBatch& batch) {
  return evaluate_sampled(arch, params, batch, {GradientKind::Semi, Order::First}).direction;
}

Matrix semi_gn_hessian_sampled(const MlpArchitecture& arch, const ParameterSet& params,
                               const TransitionBatch& batch) {
  return *evaluate_sampled(arch, params, batch, {GradientKind::Semi, Order::Second}).hessian;
}

}  // namespace gnrg
