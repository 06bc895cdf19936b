#include "gnrg/policy_iteration.hpp"

#include <algorithm>
#include <stdexcept>

#include "gnrg/random.hpp"

namespace gnrg {

QFunctionSpec::QFunctionSpec(MlpArchitecture a, const ContinuousEnv& env)
    : arch(std::move(a)), num_actions(env.num_actions()) {
  if (arch.input_dim() != env.state_dim() + 1)
    throw std::invalid_argument("Q-network input must be the state dimension plus one");
}

namespace {

Vector state_action(const Vector& state, int action) {
  Vector in(state.size() + 1);
  in.head(state.size()) = state;
  in(state.size()) = static_cast<double>(action);
  return in;
}

}  // namespace

double q_eval(const QFunctionSpec& spec, const ParameterSet& params, const Vector& state,
              int action) {
  if (action < 0 || action >= spec.num_actions) throw std::out_of_range("invalid action index");
  if (state.size() != spec.state_dim()) throw std::invalid_argument("state dimension mismatch");
  return evaluate(spec.arch, params, as_span(state_action(state, action)));
}

int gip(const QFunctionSpec& spec, const ParameterSet& params, const Vector& state) {
  int best = 0;
  double best_q = q_eval(spec, params, state, 0);
  for (int a = 1; a < spec.num_actions; ++a) {
    const double q = q_eval(spec, params, state, a);
    if (q > best_q) {
      best_q = q;
      best = a;
    }
  }
  return best;
}

Policy make_greedy_policy(const QFunctionSpec& spec, ParameterSet params) {
  return [spec, params = std::move(params)](const Vector& s) { return gip(spec, params, s); };
}

TransitionBatch q_residual_batch(const ContinuousEnv& env, const StateMatrix& states,
                                 const Policy& policy, double gamma, bool all_actions) {
  if (states.rows() == 0) throw std::invalid_argument("empty state list");
  const int dim = env.state_dim();
  const int per_state = all_actions ? env.num_actions() : 1;
  const Eigen::Index n = states.rows() * per_state;
  TransitionBatch batch;
  batch.gamma = gamma;
  batch.states.resize(n, dim + 1);
  batch.successors.resize(n, dim + 1);
  batch.rewards.resize(n);
  Eigen::Index row = 0;
  for (Eigen::Index i = 0; i < states.rows(); ++i) {
    const Vector s = states.row(i).transpose();
    for (int j = 0; j < per_state; ++j) {
      const int a = all_actions ? j : policy(s);
      const StepResult r = env.step(s, a);
      batch.states.row(row) = state_action(s, a).transpose();
      batch.successors.row(row) = state_action(r.next, policy(r.next)).transpose();
      batch.rewards(row) = r.reward;
      ++row;
    }
  }
  return batch;
}

RolloutStats rollout_evaluate(const ContinuousEnv& env, const Policy& policy, int n_rollouts,
                              int horizon, double gamma) {
  if (n_rollouts < 1) throw std::invalid_argument("at least one rollout required");
  RolloutStats stats;
  double sum = 0.0;
  for (int r = 0; r < n_rollouts; ++r) {
    const double ret = discounted_return(env, policy, env.start_state(), gamma, horizon);
    sum += ret;
    stats.min = r == 0 ? ret : std::min(stats.min, ret);
    stats.max = r == 0 ? ret : std::max(stats.max, ret);
  }
  stats.mean = sum / n_rollouts;
  // Guard min <= mean <= max against summation rounding.
  stats.mean = std::clamp(stats.mean, stats.min, stats.max);
  return stats;
}

std::string_view to_string(EvaluationMode mode) {
  return mode == EvaluationMode::Transient ? "transient" : "persistent";
}

EvaluationMode parse_evaluation_mode(std::string_view name) {
  if (name == "transient") return EvaluationMode::Transient;
  if (name == "persistent") return EvaluationMode::Persistent;
  throw std::invalid_argument("unknown evaluation mode: " + std::string(name));
}

std::vector<SweepRecord> policy_iteration(const ContinuousEnv& env, const QFunctionSpec& spec,
                                          const PolicyIterationConfig& config) {
  if (config.sweeps < 0) throw std::invalid_argument("sweeps must be non-negative");
  if (config.n_samples < 1) throw std::invalid_argument("n_samples must be >= 1");
  config.evaluation.validate();

  const std::uint64_t reinit_base = derive_seed(config.seed, SeedStream::Reinit);
  ParameterSet params = init_uniform(spec.arch, derive_seed(config.seed, SeedStream::Weights));
  Policy policy = make_greedy_policy(spec, params);
  const StateMatrix states = sample_states(env, config.n_samples,
                                           derive_seed(config.seed, SeedStream::States));

  auto checkpoint_path = [&](int sweep) -> std::string {
    if (!config.checkpoint_dir) return {};
    return (*config.checkpoint_dir / (config.run_id + "_sweep" + std::to_string(sweep) + ".bin"))
        .string();
  };

  std::vector<SweepRecord> records;
  SweepRecord initial;
  initial.sweep = 0;
  initial.n_samples = config.n_samples;
  initial.mode = config.mode;
  initial.returns = rollout_evaluate(env, policy, config.n_rollouts, config.horizon, config.gamma);
  initial.sample_checksum = states.sum();
  initial.checkpoint = checkpoint_path(0);
  if (config.checkpoint_dir) save_parameters(initial.checkpoint, spec.arch, params);
  records.push_back(initial);

  for (int sweep = 1; sweep <= config.sweeps; ++sweep) {
    SweepRecord rec;
    rec.sweep = sweep;
    rec.n_samples = config.n_samples;
    rec.mode = config.mode;
    rec.sample_checksum = states.sum();
    if (config.mode == EvaluationMode::Transient)
      params = init_uniform(spec.arch, derive_seed(reinit_base, static_cast<std::uint64_t>(sweep)));
    else
      rec.init_checkpoint = records.back().checkpoint;

    const SampledObjective objective(
        spec.arch, q_residual_batch(env, states, policy, config.gamma, config.all_actions));
    EvaluationResult eval = policy_evaluation(spec.arch, params, objective, config.evaluation);
    rec.eval_iters = eval.trace.iterations;
    rec.final_nmsbe = eval.trace.final_loss;
    rec.diverged = eval.trace.diverged();

    if (eval.params.all_finite()) {
      params = std::move(eval.params);
      policy = make_greedy_policy(spec, params);
    } else {
      // Keep the previous policy; restart the weights so the next sweep is usable.
      params = init_uniform(spec.arch, derive_seed(reinit_base, static_cast<std::uint64_t>(sweep) +
                                                                   (1ULL << 32)));
    }
    rec.returns = rollout_evaluate(env, policy, config.n_rollouts, config.horizon, config.gamma);
    rec.checkpoint = checkpoint_path(sweep);
    if (config.checkpoint_dir) save_parameters(rec.checkpoint, spec.arch, params);
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace gnrg
