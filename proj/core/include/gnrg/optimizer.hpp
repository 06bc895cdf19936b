#pragma once

#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "gnrg/objective.hpp"

namespace gnrg {

struct OptimizerConfig {
  Method method;
  double alpha = 1e-2;    // step size
  double c = 1e-5;        // Tikhonov regulariser of the Newton system
  double epsilon = 1e-5;  // stop once the loss is at or below this value
  int max_iters = 1000;
  int trace_every = 1;
  bool keep_snapshots = false;
  /// A run is flagged diverged once loss > divergence_factor * initial loss.
  double divergence_factor = 1e6;
  /// When > 0, a run that reached epsilon keeps stepping while each step still
  /// shrinks the loss by this factor, and stops at the first iterate that does
  /// not. Drives the final iterate to the round-off floor for convergence plots.
  double polish_ratio = 0.0;
  /// Called with every objective evaluation (diagnostics only; must not throw).
  std::function<void(int iteration, const ObjectiveEvaluation&)> observer;

  void validate() const;
};

struct IterationRecord {
  int iteration = 0;
  double loss = 0.0;
  double grad_norm = 0.0;
  double step_norm = 0.0;  // ||alpha * eta|| of the step taken from this iterate
  double elapsed_s = 0.0;
};

enum class RunStatus { Converged, MaxIterations, Diverged };
std::string_view to_string(RunStatus status);

struct DescentTrace {
  std::vector<IterationRecord> records;
  std::vector<Vector> snapshots;  // vectorize(W^(k)) for every k when requested
  RunStatus status = RunStatus::MaxIterations;
  std::string note;
  int iterations = 0;  // descent steps taken
  double initial_loss = 0.0;
  double final_loss = 0.0;

  bool diverged() const { return status == RunStatus::Diverged; }
};

/// Thrown when the regularised Newton system cannot be solved accurately.
class SolveError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Solves (H + c I) eta = g by Householder QR and checks the solve residual
/// ||(H + cI) eta - g|| <= 1e-10 * max(1, ||g||).
Vector newton_step(const Matrix& hessian, const Vector& gradient, double c);

/// Source of objective evaluations for the descent loop.
class Objective {
 public:
  virtual ~Objective() = default;
  virtual ObjectiveEvaluation evaluate(const ParameterSet& params, Method method) const = 0;
};

class SampledObjective final : public Objective {
 public:
  SampledObjective(MlpArchitecture arch, TransitionBatch batch)
      : arch_(std::move(arch)), batch_(std::move(batch)) {}
  ObjectiveEvaluation evaluate(const ParameterSet& params, Method method) const override;
  const TransitionBatch& batch() const { return batch_; }

 private:
  MlpArchitecture arch_;
  TransitionBatch batch_;
};

/// Xi-weighted objective on a finite MDP. Only the residual-gradient kind is defined.
class DiscreteObjective final : public Objective {
 public:
  DiscreteObjective(MlpArchitecture arch, DiscreteMdp mdp);
  ObjectiveEvaluation evaluate(const ParameterSet& params, Method method) const override;
  const Vector& stationary() const { return stationary_; }

 private:
  MlpArchitecture arch_;
  DiscreteMdp mdp_;
  Vector stationary_;
};

struct StepResultFlat {
  Vector params;
  double step_norm = 0.0;
};

/// W - alpha * eta where eta is the direction (first order) or the regularised
/// Newton step on it (second order).
StepResultFlat descend_step(const Vector& params, const ObjectiveEvaluation& evaluation,
                            const OptimizerConfig& config);

struct EvaluationResult {
  ParameterSet params;
  DescentTrace trace;
};

/// Full-batch descent until loss <= epsilon or max_iters steps were taken.
/// Divergence (non-finite values, loss blow-up or a failed Newton solve)
/// ends the run and is recorded in the trace instead of throwing.
EvaluationResult policy_evaluation(const MlpArchitecture& arch, const ParameterSet& init,
                                   const Objective& objective, const OptimizerConfig& config);

/// sqrt(sum_l ||A_l - B_l||_F^2)
double frobenius_distance(const ParameterSet& a, const ParameterSet& b);

struct ConvergencePair {
  int iteration = 0;
  double distance = 0.0;  // d_k
  double ratio = 0.0;     // d_{k+1} / d_k^2
};

/// Distances of each snapshot to the last one (the accumulation point).
std::vector<double> distances_to_last(const std::vector<Vector>& snapshots);

/// Ratios d_{k+1}/d_k^2 for every k with d_k in (floor, onset).
std::vector<ConvergencePair> quadratic_convergence_ratios(const std::vector<Vector>& snapshots,
                                                          double onset = 1e-2,
                                                          double floor = 1e-10);
std::vector<ConvergencePair> quadratic_convergence_ratios_from_distances(
    const std::vector<double>& distances, double onset = 1e-2, double floor = 1e-10);

/// Number of singular values above rel_tol * sigma_max.
int numerical_rank(const Eigen::Ref<const Matrix>& matrix, double rel_tol = 1e-8);

double min_eigenvalue(const Matrix& symmetric);
double symmetry_error(const Matrix& m);

}  // namespace gnrg
