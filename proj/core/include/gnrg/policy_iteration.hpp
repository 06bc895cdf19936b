#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gnrg/optimizer.hpp"

namespace gnrg {

/// Q-network: input is the state with the action index appended as a raw scalar.
struct QFunctionSpec {
  MlpArchitecture arch;
  int num_actions = 0;

  QFunctionSpec(MlpArchitecture arch, const ContinuousEnv& env);
  int state_dim() const { return arch.input_dim() - 1; }
};

double q_eval(const QFunctionSpec& spec, const ParameterSet& params, const Vector& state,
              int action);

/// argmax_a Q(s, a); ties go to the lowest action index.
int gip(const QFunctionSpec& spec, const ParameterSet& params, const Vector& state);

/// Greedy policy over a snapshot of `params`.
Policy make_greedy_policy(const QFunctionSpec& spec, ParameterSet params);

/// Q-transitions ((s, a), r, (s', pi(s'))) with (s', r) = step(s, a). With
/// `all_actions` every state is expanded with every action, otherwise only
/// with a = pi(s).
TransitionBatch q_residual_batch(const ContinuousEnv& env, const StateMatrix& states,
                                 const Policy& policy, double gamma, bool all_actions = true);

struct RolloutStats {
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
};

/// Discounted returns of `n_rollouts` rollouts from the start state.
RolloutStats rollout_evaluate(const ContinuousEnv& env, const Policy& policy, int n_rollouts,
                              int horizon, double gamma);

enum class EvaluationMode { Transient, Persistent };
std::string_view to_string(EvaluationMode mode);
EvaluationMode parse_evaluation_mode(std::string_view name);

struct PolicyIterationConfig {
  int n_samples = 181;
  int sweeps = 50;
  EvaluationMode mode = EvaluationMode::Persistent;
  OptimizerConfig evaluation;  // max_iters is the per-sweep evaluation budget
  bool all_actions = true;
  int n_rollouts = 10;
  int horizon = 500;
  double gamma = 0.99;
  std::uint64_t seed = 0;
  /// When set, parameters after every sweep are written here.
  std::optional<std::filesystem::path> checkpoint_dir;
  std::string run_id = "run";
};

struct SweepRecord {
  int sweep = 0;  // 0 scores the initial random policy
  int eval_iters = 0;
  int n_samples = 0;
  EvaluationMode mode = EvaluationMode::Persistent;
  RolloutStats returns;
  double final_nmsbe = 0.0;
  bool diverged = false;
  double sample_checksum = 0.0;  // sum of the sampled state coordinates used by this sweep
  std::string checkpoint;       // file written after this sweep (empty if none)
  std::string init_checkpoint;  // checkpoint the evaluation started from (persistent mode)
};

std::vector<SweepRecord> policy_iteration(const ContinuousEnv& env, const QFunctionSpec& spec,
                                          const PolicyIterationConfig& config);

}  // namespace gnrg
