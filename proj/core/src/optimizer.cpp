#include "gnrg/optimizer.hpp"

#include <chrono>
#include <cmath>

namespace gnrg {

void OptimizerConfig::validate() const {
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
  if (!(c > 0.0)) throw std::invalid_argument("regulariser c must be positive");
  if (!(epsilon >= 0.0)) throw std::invalid_argument("epsilon must be non-negative");
  if (max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
  if (trace_every < 1) throw std::invalid_argument("trace_every must be >= 1");
}

std::string_view to_string(RunStatus status) {
  switch (status) {
    case RunStatus::Converged: return "converged";
    case RunStatus::MaxIterations: return "max-iterations";
    case RunStatus::Diverged: return "diverged";
  }
  return "?";
}

Vector newton_step(const Matrix& hessian, const Vector& gradient, double c) {
  const auto n = hessian.rows();
  if (hessian.cols() != n || gradient.size() != n)
    throw std::invalid_argument("Newton system dimensions");
  if (!(c > 0.0)) throw std::invalid_argument("regulariser c must be positive");
  if (!hessian.allFinite() || !gradient.allFinite()) throw SolveError("non-finite Newton system");

  Matrix system = hessian;
  system.diagonal().array() += c;
  const Eigen::HouseholderQR<Matrix> qr(system);
  Vector eta = qr.solve(gradient);
  const double tol = 1e-10 * std::max(1.0, gradient.norm());
  double residual = (system * eta - gradient).norm();
  if (residual > tol) {
    // One round of iterative refinement on the same factorisation.
    eta += qr.solve(gradient - system * eta);
    residual = (system * eta - gradient).norm();
  }
  if (!eta.allFinite() || residual > tol)
    throw SolveError("Newton solve residual " + std::to_string(residual) + " exceeds tolerance");
  return eta;
}

ObjectiveEvaluation SampledObjective::evaluate(const ParameterSet& params, Method method) const {
  return evaluate_sampled(arch_, params, batch_, method);
}

DiscreteObjective::DiscreteObjective(MlpArchitecture arch, DiscreteMdp mdp)
    : arch_(std::move(arch)), mdp_(std::move(mdp)),
      stationary_(stationary_distribution(mdp_.transition)) {}

ObjectiveEvaluation DiscreteObjective::evaluate(const ParameterSet& params, Method method) const {
  if (method.kind != GradientKind::Residual)
    throw std::invalid_argument("the discrete objective only supports residual gradients");
  return evaluate_discrete(arch_, params, mdp_, method.order == Order::Second, &stationary_);
}

StepResultFlat descend_step(const Vector& params, const ObjectiveEvaluation& evaluation,
                            const OptimizerConfig& config) {
  Vector eta = config.method.order == Order::Second
                   ? newton_step(*evaluation.hessian, evaluation.direction, config.c)
                   : evaluation.direction;
  eta *= config.alpha;
  return {params - eta, eta.norm()};
}

EvaluationResult policy_evaluation(const MlpArchitecture& arch, const ParameterSet& init,
                                   const Objective& objective, const OptimizerConfig& config) {
  config.validate();
  if (!init.matches(arch)) throw std::invalid_argument("initial parameters do not match");
  using Clock = std::chrono::steady_clock;
  const auto t0 = Clock::now();

  EvaluationResult result{init, {}};
  DescentTrace& trace = result.trace;
  Vector flat = vectorize(init);
  ParameterSet current = init;
  double previous_loss = 0.0;

  for (int k = 0;; ++k) {
    const ObjectiveEvaluation ev = objective.evaluate(current, config.method);
    if (config.observer) config.observer(k, ev);
    IterationRecord rec;
    rec.iteration = k;
    rec.loss = ev.loss;
    rec.grad_norm = ev.direction.norm();
    if (k == 0) trace.initial_loss = ev.loss;
    trace.final_loss = ev.loss;
    if (config.keep_snapshots) trace.snapshots.push_back(flat);

    const bool blown_up = !std::isfinite(ev.loss) || !std::isfinite(rec.grad_norm) ||
                          ev.loss > config.divergence_factor * std::max(trace.initial_loss, 1e-300);
    bool stop = false;
    if (blown_up) {
      trace.status = RunStatus::Diverged;
      trace.note = "loss blow-up";
      stop = true;
    } else if (ev.loss <= config.epsilon) {
      trace.status = RunStatus::Converged;
      stop = config.polish_ratio <= 0.0 || k == config.max_iters ||
             (k > 0 && ev.loss > config.polish_ratio * previous_loss);
    } else if (k == config.max_iters) {
      trace.status = RunStatus::MaxIterations;
      stop = true;
    }

    if (!stop) {
      try {
        StepResultFlat step = descend_step(flat, ev, config);
        rec.step_norm = step.step_norm;
        flat = std::move(step.params);
      } catch (const SolveError& e) {
        trace.status = RunStatus::Diverged;
        trace.note = e.what();
        stop = true;
      }
    }
    previous_loss = ev.loss;
    rec.elapsed_s = std::chrono::duration<double>(Clock::now() - t0).count();
    if (stop || k % config.trace_every == 0) trace.records.push_back(rec);
    if (stop) {
      trace.iterations = k;
      break;
    }
    current = unvectorize(arch, flat);
  }
  result.params = std::move(current);
  return result;
}

double frobenius_distance(const ParameterSet& a, const ParameterSet& b) {
  if (a.layers.size() != b.layers.size()) throw std::invalid_argument("layer count mismatch");
  double sq = 0.0;
  for (std::size_t l = 0; l < a.layers.size(); ++l) {
    if (a.layers[l].rows() != b.layers[l].rows() || a.layers[l].cols() != b.layers[l].cols())
      throw std::invalid_argument("layer shape mismatch");
    sq += (a.layers[l] - b.layers[l]).squaredNorm();
  }
  return std::sqrt(sq);
}

std::vector<double> distances_to_last(const std::vector<Vector>& snapshots) {
  std::vector<double> d;
  if (snapshots.empty()) return d;
  const Vector& last = snapshots.back();
  d.reserve(snapshots.size());
  for (const auto& s : snapshots) d.push_back((s - last).norm());
  return d;
}

std::vector<ConvergencePair> quadratic_convergence_ratios_from_distances(
    const std::vector<double>& distances, double onset, double floor) {
  if (distances.size() < 4) throw std::invalid_argument("need at least four snapshots");
  std::vector<ConvergencePair> pairs;
  for (std::size_t k = 0; k + 1 < distances.size(); ++k) {
    const double d = distances[k];
    if (d > floor && d < onset)
      pairs.push_back({static_cast<int>(k), d, distances[k + 1] / (d * d)});
  }
  return pairs;
}

std::vector<ConvergencePair> quadratic_convergence_ratios(const std::vector<Vector>& snapshots,
                                                          double onset, double floor) {
  return quadratic_convergence_ratios_from_distances(distances_to_last(snapshots), onset, floor);
}

int numerical_rank(const Eigen::Ref<const Matrix>& matrix, double rel_tol) {
  if (matrix.size() == 0) throw std::invalid_argument("empty matrix");
  const Eigen::BDCSVD<Matrix> svd(matrix);
  const Vector& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  const double cut = rel_tol * sv(0);
  return static_cast<int>((sv.array() > cut).count());
}

double min_eigenvalue(const Matrix& symmetric) {
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetric, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff();
}

double symmetry_error(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  return (m - m.transpose()).cwiseAbs().maxCoeff();
}

}  // namespace gnrg
