#pragma once

#include <optional>
#include <string_view>

#include "gnrg/mdp.hpp"

namespace gnrg {

/// Residual gradient differentiates through the TD target; semi-gradient
/// treats the target as a constant.
enum class GradientKind { Residual, Semi };
enum class Order { First, Second };

struct Method {
  GradientKind kind = GradientKind::Residual;
  Order order = Order::Second;

  std::string tag() const;  // e.g. "residual-second"
  friend bool operator==(const Method&, const Method&) = default;
};

std::string_view to_string(GradientKind kind);
std::string_view to_string(Order order);
GradientKind parse_gradient_kind(std::string_view name);
Order parse_order(std::string_view name);

/// Residual, loss and update direction at one parameter point.
///
/// For GradientKind::Semi the `direction` is the semi-gradient update
/// direction, which is not the gradient of `loss`; likewise the Hessian is
/// the semi Gram matrix G^T G / N. Gauss-Newton Hessians are exposed at every
/// point but only approximate the true Hessian near zero residual.
struct ObjectiveEvaluation {
  Vector residual;
  double loss = 0.0;
  Vector direction;
  std::optional<Matrix> hessian;
  Method method;
};

// ---------------------------------------------------------------------------
// Exact-learning setting on a finite MDP, weighted by the stationary distribution.

/// Delta = F - rbar - gamma P F for an arbitrary value vector F.
Vector bellman_residual(const DiscreteMdp& mdp, const Vector& values);

Vector residual_discrete(const MlpArchitecture& arch, const ParameterSet& params,
                         const DiscreteMdp& mdp);
/// 0.5 * Delta^T Xi Delta
double nmsbe_discrete(const MlpArchitecture& arch, const ParameterSet& params,
                      const DiscreteMdp& mdp);
/// G^T (I - gamma P)^T Xi Delta
Vector gradient_discrete(const MlpArchitecture& arch, const ParameterSet& params,
                         const DiscreteMdp& mdp);
/// G^T (I - gamma P)^T Xi (I - gamma P) G
Matrix gn_hessian_discrete(const MlpArchitecture& arch, const ParameterSet& params,
                           const DiscreteMdp& mdp);

/// Everything above in one pass. `stationary` may be supplied to avoid
/// recomputing Xi on every call.
ObjectiveEvaluation evaluate_discrete(const MlpArchitecture& arch, const ParameterSet& params,
                                      const DiscreteMdp& mdp, bool with_hessian,
                                      const Vector* stationary = nullptr);

// ---------------------------------------------------------------------------
// Sampled setting on a batch of deterministic transitions, uniform 1/N weights.

/// delta_i = f(s_i) - r_i - gamma f(s_i')
Vector residual_sampled(const MlpArchitecture& arch, const ParameterSet& params,
                        const TransitionBatch& batch);
/// (1 / 2N) Delta^T Delta
double nmsbe_sampled(const MlpArchitecture& arch, const ParameterSet& params,
                     const TransitionBatch& batch);
/// (1 / N) (G - gamma G')^T Delta
Vector gradient_sampled(const MlpArchitecture& arch, const ParameterSet& params,
                        const TransitionBatch& batch);
/// (1 / N) (G - gamma G')^T (G - gamma G')
Matrix gn_hessian_sampled(const MlpArchitecture& arch, const ParameterSet& params,
                          const TransitionBatch& batch);
/// (1 / N) G^T Delta. An update direction, not a gradient.
Vector semi_gradient_sampled(const MlpArchitecture& arch, const ParameterSet& params,
                             const TransitionBatch& batch);
/// (1 / N) G^T G
Matrix semi_gn_hessian_sampled(const MlpArchitecture& arch, const ParameterSet& params,
                               const TransitionBatch& batch);

ObjectiveEvaluation evaluate_sampled(const MlpArchitecture& arch, const ParameterSet& params,
                                     const TransitionBatch& batch, Method method);

namespace detail {
// Residual-kind evaluation with the successor term entering as G + sign * gamma * G'.
// sign = -1 is the correct derivative; other values exist only for mutation tests.
ObjectiveEvaluation evaluate_sampled_signed(const MlpArchitecture& arch, const ParameterSet& params,
                                            const TransitionBatch& batch, Method method,
                                            double successor_sign);
}  // namespace detail

/// (scale) * A^T A, assembled as an exactly symmetric matrix.
Matrix gram(const Eigen::Ref<const Jacobian>& a, double scale);

}  // namespace gnrg
