#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gnrg/policy_iteration.hpp"

namespace gnrg {

enum class ExperimentKind { QuadConv, PeCompare, GenSingle, GenMulti, PolicyIter };
std::string_view to_string(ExperimentKind kind);
ExperimentKind parse_experiment_kind(std::string_view name);

/// Invalid or inconsistent experiment configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::QuadConv;
  std::string env;                 // "baird-star", "mountain-car" or "cart-pole"
  std::vector<std::string> archs;  // e.g. "2-10-10-1"
  Activation activation = Activation::BentIdentity;
  std::vector<Method> methods;
  std::vector<double> alphas;
  double c = 1e-5;
  double epsilon = 1e-5;
  std::vector<int> samples;          // N grid
  int first_order_iters = 10'000;
  int second_order_iters = 1'500;    // GN budget of every non-policy-iteration run
  std::vector<int> eval_iters;       // policy-iteration evaluation budgets i
  std::vector<EvaluationMode> modes;
  int sweeps = 25;
  int reps = 1;
  std::uint64_t seed = 0;
  std::filesystem::path out = "results";
  int jobs = 0;  // 0: one worker per hardware thread
  int trace_every = 1;
  double gamma = 0.99;
  /// Keep stepping past epsilon while each step shrinks the loss by this factor.
  double polish_ratio = 0.0;
  /// Training NMSBE at or below which a generalisation run counts as an exact fit.
  double exact_fit_tol = 1e-12;
  int grid_points = 500;     // test grid per dimension
  int surface_points = 100;  // value surface / ground truth grid per dimension
  bool ground_truth = false;
  int ground_truth_horizon = 2000;
  bool all_actions = true;
  int n_rollouts = 10;
  int horizon = 500;
  std::uint64_t feature_seed = kBairdFeatureSeed;
  bool checkpoints = true;

  /// Reference defaults of each experiment.
  static ExperimentConfig defaults(ExperimentKind kind);

  std::uint64_t repetition_seed(int rep) const { return seed + static_cast<std::uint64_t>(rep); }
  std::vector<MlpArchitecture> architectures() const;
  /// Throws ConfigError.
  void validate() const;
};

/// Optional diagnostics hooks. Called from worker threads; must be thread-safe.
struct ExperimentHooks {
  std::function<void(const std::string& run_id, int iteration, const ObjectiveEvaluation&)>
      on_evaluation;
};

/// Runs `n` independent tasks on at most `jobs` workers. Every task runs even
/// if another throws; the first exception is rethrown after all have finished.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& task);

struct QuadconvResult {
  MlpArchitecture arch;
  DiscreteMdp mdp;
  ParameterSet final_params;
  DescentTrace trace;  // with snapshots of every iterate
  std::vector<double> distances;
};

struct PeCell {
  std::string run_id;
  int repetition = 0;
  Method method;
  double alpha = 0.0;
  DescentTrace trace;
};

struct GenRecord {
  std::string run_id;
  std::string arch;
  int n_net = 0;
  int n_samples = 0;
  int repetition = 0;
  double train_nmsbe = 0.0;
  double test_nmsbe = 0.0;
  int iterations = 0;
  RunStatus status = RunStatus::MaxIterations;
  bool exact_fit = false;
};

struct ConditionPoint {
  std::string arch;
  int n_net = 0;
  int nearest_n = 0;  // N_net rounded to the closest sample size of the grid
};

struct GenResult {
  std::vector<GenRecord> records;
  std::vector<ConditionPoint> condition_line;
};

struct PolicyRun {
  std::string run_id;
  int n_samples = 0;
  int eval_iters = 0;
  EvaluationMode mode = EvaluationMode::Persistent;
  int repetition = 0;
  std::vector<SweepRecord> sweeps;
};

/// Closest value of `grid` to `value`; ties go to the smaller value.
int nearest_sample_size(const std::vector<int>& grid, int value);

QuadconvResult run_quadconv(const ExperimentConfig& config, const ExperimentHooks& hooks = {});
std::vector<PeCell> run_pe_compare(const ExperimentConfig& config,
                                   const ExperimentHooks& hooks = {});
GenResult run_generalisation(const ExperimentConfig& config, const ExperimentHooks& hooks = {});
std::vector<PolicyRun> run_policy_iter(const ExperimentConfig& config);

/// Dispatches on config.kind. Writes CSVs and index.json below config.out.
/// Hooks are not forwarded to policy iteration.
void run_experiment(const ExperimentConfig& config, const ExperimentHooks& hooks = {});

}  // namespace gnrg
