#include "gnrg/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>

#include "gnrg/csv.hpp"
#include "gnrg/random.hpp"
#include "json.hpp"

namespace gnrg {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

std::string_view to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::QuadConv: return "quadconv";
    case ExperimentKind::PeCompare: return "pe-compare";
    case ExperimentKind::GenSingle: return "gen-single";
    case ExperimentKind::GenMulti: return "gen-multi";
    case ExperimentKind::PolicyIter: return "policy-iter";
  }
  return "?";
}

ExperimentKind parse_experiment_kind(std::string_view name) {
  for (auto k : {ExperimentKind::QuadConv, ExperimentKind::PeCompare, ExperimentKind::GenSingle,
                 ExperimentKind::GenMulti, ExperimentKind::PolicyIter})
    if (to_string(k) == name) return k;
  throw ConfigError("unknown experiment: " + std::string(name));
}

namespace {

const std::vector<Method> kAllMethods = {
    {GradientKind::Residual, Order::First},
    {GradientKind::Residual, Order::Second},
    {GradientKind::Semi, Order::First},
    {GradientKind::Semi, Order::Second},
};

std::string mlp_wd(int width, int depth) {
  std::string s = "2";
  for (int d = 0; d < depth; ++d) s += "-" + std::to_string(width);
  return s + "-1";
}

}  // namespace

ExperimentConfig ExperimentConfig::defaults(ExperimentKind kind) {
  ExperimentConfig c;
  c.kind = kind;
  switch (kind) {
    case ExperimentKind::QuadConv:
      c.env = "baird-star";
      c.archs = {"2-7-1"};
      c.methods = {{GradientKind::Residual, Order::Second}};
      c.alphas = {1.0};
      c.epsilon = 1e-12;
      c.second_order_iters = 100;
      c.polish_ratio = 0.5;
      c.reps = 1;
      break;
    case ExperimentKind::PeCompare:
      c.env = "mountain-car";
      c.archs = {"2-10-10-1"};
      c.methods = kAllMethods;
      c.alphas = {1.0, 1e-1, 1e-2, 1e-3};
      c.epsilon = 0.0;  // always use the full budget
      c.samples = {100};
      c.reps = 25;
      c.trace_every = 10;
      break;
    case ExperimentKind::GenSingle:
      c.env = "mountain-car";
      c.archs = {"2-10-10-1"};
      c.methods = {{GradientKind::Residual, Order::Second}};
      c.alphas = {1e-2};
      c.samples = {25, 50, 75, 100, 125, 150, 175, 200, 300, 500, 1000, 2000};
      c.second_order_iters = 20'000;
      c.polish_ratio = 0.999;
      c.reps = 25;
      break;
    case ExperimentKind::GenMulti:
      c.env = "mountain-car";
      c.archs.clear();
      for (int depth : {1, 2, 3})
        for (int width : {6, 10, 15, 20}) c.archs.push_back(mlp_wd(width, depth));
      c.methods = {{GradientKind::Residual, Order::Second}};
      c.alphas = {1e-2};
      c.samples = {50, 100, 150, 200, 300, 500, 700, 900, 1000};
      c.second_order_iters = 20'000;
      c.polish_ratio = 0.999;
      c.reps = 10;
      break;
    case ExperimentKind::PolicyIter:
      c.env = "cart-pole";
      c.archs = {"5-10-10-1"};
      c.methods = {{GradientKind::Residual, Order::Second}};
      c.alphas = {1e-2};
      c.samples = {100, 181, 300, 500};
      c.eval_iters = {500, 1500, 2500, 3500, 4500};
      c.modes = {EvaluationMode::Transient, EvaluationMode::Persistent};
      c.sweeps = 25;
      c.reps = 5;
      break;
  }
  return c;
}

std::vector<MlpArchitecture> ExperimentConfig::architectures() const {
  std::vector<MlpArchitecture> out;
  for (const auto& spec : archs) {
    try {
      out.push_back(MlpArchitecture::parse(spec, activation));
    } catch (const std::exception& e) {
      throw ConfigError("invalid architecture '" + spec + "': " + e.what());
    }
  }
  return out;
}

void ExperimentConfig::validate() const {
  if (reps < 1) throw ConfigError("reps must be >= 1");
  if (archs.empty()) throw ConfigError("at least one architecture is required");
  const auto nets = architectures();
  if (methods.empty()) throw ConfigError("at least one method is required");
  if (alphas.empty()) throw ConfigError("at least one alpha is required");
  for (double a : alphas)
    if (!(a > 0.0)) throw ConfigError("alpha must be positive");
  if (!(c > 0.0)) throw ConfigError("c must be positive");
  if (!(epsilon >= 0.0)) throw ConfigError("epsilon must be non-negative");
  if (first_order_iters < 1 || second_order_iters < 1)
    throw ConfigError("iteration budgets must be >= 1");
  if (trace_every < 1) throw ConfigError("trace_every must be >= 1");
  if (jobs < 0) throw ConfigError("jobs must be >= 0");
  if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("gamma must lie in (0, 1)");
  if (polish_ratio < 0.0 || polish_ratio >= 1.0) throw ConfigError("polish_ratio must lie in [0, 1)");
  for (int n : samples)
    if (n < 1) throw ConfigError("sample sizes must be >= 1");

  auto expect_env = [&](const char* name) {
    if (env != name)
      throw ConfigError(std::string(to_string(kind)) + " requires env " + name + ", got " + env);
  };
  switch (kind) {
    case ExperimentKind::QuadConv:
      expect_env("baird-star");
      if (archs.size() != 1 || nets[0].widths != std::vector<int>{2, 7, 1})
        throw ConfigError("quadconv requires the 2-7-1 architecture");
      if (activation != Activation::BentIdentity)
        throw ConfigError("quadconv requires Bent-Id hidden units");
      if (alphas != std::vector<double>{1.0}) throw ConfigError("quadconv requires alpha = 1");
      if (methods.size() != 1 || methods[0].kind != GradientKind::Residual ||
          methods[0].order != Order::Second)
        throw ConfigError("quadconv requires the residual second-order method");
      if (reps != 1) throw ConfigError("quadconv is a single run");
      break;
    case ExperimentKind::PeCompare:
      expect_env("mountain-car");
      if (archs.size() != 1) throw ConfigError("pe-compare takes a single architecture");
      if (nets[0].input_dim() != 2) throw ConfigError("architecture input must be 2-dimensional");
      if (samples.size() != 1) throw ConfigError("pe-compare takes a single sample size");
      break;
    case ExperimentKind::GenSingle:
    case ExperimentKind::GenMulti:
      expect_env("mountain-car");
      if (kind == ExperimentKind::GenSingle && archs.size() != 1)
        throw ConfigError("gen-single takes a single architecture");
      for (const auto& a : nets)
        if (a.input_dim() != 2) throw ConfigError("architecture input must be 2-dimensional");
      if (samples.empty()) throw ConfigError("at least one sample size is required");
      if (alphas.size() != 1 || methods.size() != 1)
        throw ConfigError("generalisation runs take a single method and alpha");
      if (grid_points < 2 || surface_points < 2) throw ConfigError("grids need >= 2 points");
      // Memory guard for the test grid.
      if (static_cast<double>(grid_points) * grid_points > 4e6)
        throw ConfigError("test grid too large");
      break;
    case ExperimentKind::PolicyIter:
      expect_env("cart-pole");
      if (archs.size() != 1) throw ConfigError("policy-iter takes a single architecture");
      if (nets[0].input_dim() != 5) throw ConfigError("Q-network input must be 5-dimensional");
      if (samples.empty() || eval_iters.empty() || modes.empty())
        throw ConfigError("policy-iter needs sample sizes, evaluation budgets and modes");
      for (int i : eval_iters)
        if (i < 1) throw ConfigError("evaluation budgets must be >= 1");
      if (alphas.size() != 1 || methods.size() != 1)
        throw ConfigError("policy-iter takes a single method and alpha");
      if (sweeps < 0) throw ConfigError("sweeps must be >= 0");
      if (n_rollouts < 1 || horizon < 1) throw ConfigError("rollout settings must be >= 1");
      break;
  }
}

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& task) {
  std::size_t workers = jobs > 0 ? static_cast<std::size_t>(jobs)
                                 : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, n);
  if (workers <= 1) {
    std::exception_ptr first;
    for (std::size_t i = 0; i < n; ++i) {
      try {
        task(i);
      } catch (...) {
        if (!first) first = std::current_exception();
      }
    }
    if (first) std::rethrow_exception(first);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr first;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          task(i);
        } catch (...) {
          const std::lock_guard lock(error_mutex);
          if (!first) first = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first) std::rethrow_exception(first);
}

int nearest_sample_size(const std::vector<int>& grid, int value) {
  if (grid.empty()) throw std::invalid_argument("empty sample grid");
  int best = grid.front();
  for (int n : grid) {
    const int d = std::abs(n - value), bd = std::abs(best - value);
    if (d < bd || (d == bd && n < best)) best = n;
  }
  return best;
}

namespace {

std::string alpha_tag(double alpha) { return "a" + format_double(alpha); }

OptimizerConfig optimizer_config(const ExperimentConfig& config, Method method, double alpha,
                                 int max_iters) {
  OptimizerConfig opt;
  opt.method = method;
  opt.alpha = alpha;
  opt.c = config.c;
  opt.epsilon = config.epsilon;
  opt.max_iters = max_iters;
  opt.trace_every = config.trace_every;
  opt.polish_ratio = config.polish_ratio;
  return opt;
}

void attach_hooks(OptimizerConfig& opt, const ExperimentHooks& hooks, const std::string& run_id) {
  if (!hooks.on_evaluation) return;
  opt.observer = [&hooks, run_id](int k, const ObjectiveEvaluation& ev) {
    hooks.on_evaluation(run_id, k, ev);
  };
}

Json base_snapshot(const ExperimentConfig& config) {
  Json j;
  j["experiment"] = std::string(to_string(config.kind));
  j["env"] = config.env;
  j["activation"] = std::string(to_string(config.activation));
  j["c"] = config.c;
  j["epsilon"] = config.epsilon;
  j["gamma"] = config.gamma;
  j["polish_ratio"] = config.polish_ratio;
  j["base_seed"] = config.seed;
  return j;
}

void write_index(const ExperimentConfig& config, const Json& runs) {
  Json index;
  index["experiment"] = std::string(to_string(config.kind));
  index["runs"] = runs;
  std::ofstream out(config.out / "index.json", std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write index.json");
  out << index.dump(2) << '\n';
}

void write_trace_rows(CsvWriter& csv, const std::string& run_id, Method method, double alpha,
                      const DescentTrace& trace) {
  for (const auto& r : trace.records) {
    csv << run_id << to_string(method.kind) << to_string(method.order) << alpha << r.iteration
        << r.loss << r.grad_norm << r.step_norm << r.elapsed_s;
    csv.end_row();
  }
}

const std::vector<std::string> kTraceColumns = {"run_id", "method",    "order",     "alpha",
                                                "iteration", "nmsbe", "grad_norm", "step_norm",
                                                "elapsed_s"};

}  // namespace

// --- quadratic convergence demo ---------------------------------------------

QuadconvResult run_quadconv(const ExperimentConfig& config, const ExperimentHooks& hooks) {
  config.validate();
  QuadconvResult result{config.architectures().front(), baird_star(config.feature_seed, config.gamma),
                        {}, {}, {}};
  const DiscreteObjective objective(result.arch, result.mdp);
  OptimizerConfig opt = optimizer_config(config, config.methods[0], 1.0, config.second_order_iters);
  opt.trace_every = 1;
  opt.keep_snapshots = true;
  attach_hooks(opt, hooks, "quadconv");
  const ParameterSet init = init_uniform(result.arch,
                                         derive_seed(config.repetition_seed(0), SeedStream::Weights));
  EvaluationResult run = policy_evaluation(result.arch, init, objective, opt);
  result.final_params = std::move(run.params);
  result.trace = std::move(run.trace);
  result.distances = distances_to_last(result.trace.snapshots);
  return result;
}

// --- convergence study ------------------------------------------------------

std::vector<PeCell> run_pe_compare(const ExperimentConfig& config, const ExperimentHooks& hooks) {
  config.validate();
  const MlpArchitecture arch = config.architectures().front();
  const auto env = make_env(config.env);
  const int n = config.samples.front();

  struct Shared {
    SampledObjective objective;
    ParameterSet init;
  };
  std::vector<std::unique_ptr<Shared>> shared;
  for (int rep = 0; rep < config.reps; ++rep) {
    const std::uint64_t s = config.repetition_seed(rep);
    const StateMatrix states = sample_states(*env, n, derive_seed(s, SeedStream::States));
    shared.push_back(std::make_unique<Shared>(Shared{
        SampledObjective(arch, collect_transitions(*env, states, mountain_car_velocity_policy,
                                                   config.gamma)),
        init_uniform(arch, derive_seed(s, SeedStream::Weights))}));
  }

  std::vector<PeCell> cells;
  for (int rep = 0; rep < config.reps; ++rep)
    for (double alpha : config.alphas)
      for (const Method& m : config.methods)
        cells.push_back({"pe-r" + std::to_string(rep) + "-" + m.tag() + "-" + alpha_tag(alpha),
                         rep, m, alpha, {}});

  parallel_for(cells.size(), config.jobs, [&](std::size_t i) {
    PeCell& cell = cells[i];
    const int budget =
        cell.method.order == Order::First ? config.first_order_iters : config.second_order_iters;
    OptimizerConfig opt = optimizer_config(config, cell.method, cell.alpha, budget);
    attach_hooks(opt, hooks, cell.run_id);
    const Shared& sh = *shared[cell.repetition];
    cell.trace = policy_evaluation(arch, sh.init, sh.objective, opt).trace;
  });
  return cells;
}

// --- generalisation ---------------------------------------------------------

namespace {

struct GenTask {
  GenRecord record;
  std::size_t arch_index = 0;
  ParameterSet params;
};

void write_surface(const fs::path& path, const StateMatrix& grid, const Vector& values) {
  write_ground_truth_csv(path, grid, values);
}

}  // namespace

GenResult run_generalisation(const ExperimentConfig& config, const ExperimentHooks& hooks) {
  config.validate();
  if (config.kind != ExperimentKind::GenSingle && config.kind != ExperimentKind::GenMulti)
    throw ConfigError("not a generalisation experiment");
  const auto nets = config.architectures();
  const auto env = make_env(config.env);
  const Method method = config.methods.front();
  const double alpha = config.alphas.front();

  // Test set: transitions of every grid state under the fixed policy.
  const StateMatrix grid = grid_states(*env, {config.grid_points, config.grid_points});
  const TransitionBatch test = collect_transitions(*env, grid, mountain_car_velocity_policy,
                                                   config.gamma);

  std::vector<GenTask> tasks;
  for (std::size_t a = 0; a < nets.size(); ++a)
    for (int n : config.samples)
      for (int rep = 0; rep < config.reps; ++rep) {
        GenTask t;
        t.arch_index = a;
        t.record.arch = nets[a].to_string();
        t.record.n_net = static_cast<int>(num_parameters(nets[a]));
        t.record.n_samples = n;
        t.record.repetition = rep;
        t.record.run_id = "gen-" + t.record.arch + "-N" + std::to_string(n) + "-r" +
                          std::to_string(rep);
        tasks.push_back(std::move(t));
      }

  parallel_for(tasks.size(), config.jobs, [&](std::size_t i) {
    GenTask& t = tasks[i];
    const MlpArchitecture& arch = nets[t.arch_index];
    const std::uint64_t s = config.repetition_seed(t.record.repetition);
    const StateMatrix states =
        sample_states(*env, t.record.n_samples,
                      derive_seed(derive_seed(s, SeedStream::States),
                                  static_cast<std::uint64_t>(t.record.n_samples)));
    const SampledObjective objective(
        arch, collect_transitions(*env, states, mountain_car_velocity_policy, config.gamma));
    OptimizerConfig opt = optimizer_config(config, method, alpha, config.second_order_iters);
    opt.trace_every = config.second_order_iters;  // only the endpoints are kept
    attach_hooks(opt, hooks, t.record.run_id);
    EvaluationResult run = policy_evaluation(arch, init_uniform(arch, derive_seed(s, SeedStream::Weights)),
                                             objective, opt);
    t.record.iterations = run.trace.iterations;
    t.record.status = run.trace.status;
    t.record.train_nmsbe = run.trace.final_loss;
    t.record.test_nmsbe = run.params.all_finite() ? nmsbe_sampled(arch, run.params, test)
                                                  : std::numeric_limits<double>::infinity();
    t.record.exact_fit = t.record.train_nmsbe <= config.exact_fit_tol;
    t.params = std::move(run.params);
  });

  GenResult result;
  for (auto& t : tasks) result.records.push_back(t.record);
  for (const auto& a : nets) {
    const int n_net = static_cast<int>(num_parameters(a));
    result.condition_line.push_back({a.to_string(), n_net, nearest_sample_size(config.samples, n_net)});
  }

  // Value surfaces of the best (lowest test error) run per (arch, N).
  if (config.kind == ExperimentKind::GenSingle && !config.out.empty()) {
    fs::create_directories(config.out / "surfaces");
    const StateMatrix surface_grid = grid_states(*env, {config.surface_points, config.surface_points});
    std::map<std::pair<std::size_t, int>, const GenTask*> best;
    for (const auto& t : tasks) {
      auto& slot = best[{t.arch_index, t.record.n_samples}];
      if (!slot || t.record.test_nmsbe < slot->record.test_nmsbe) slot = &t;
    }
    for (const auto& [key, t] : best) {
      if (!t->params.all_finite()) continue;
      const BatchEvaluation values = evaluate_batch(nets[key.first], t->params, surface_grid, false);
      write_surface(config.out / "surfaces" / ("value_N" + std::to_string(key.second) + ".csv"),
                    surface_grid, values.values);
    }
    if (config.ground_truth) {
      const Vector truth = ground_truth_values(*env, mountain_car_velocity_policy, surface_grid,
                                               config.gamma, config.ground_truth_horizon);
      write_ground_truth_csv(config.out / "ground_truth.csv", surface_grid, truth);
    }
  }
  return result;
}

// --- policy iteration -------------------------------------------------------

std::vector<PolicyRun> run_policy_iter(const ExperimentConfig& config) {
  config.validate();
  const MlpArchitecture arch = config.architectures().front();
  const auto env = make_env(config.env);
  const QFunctionSpec spec(arch, *env);

  std::vector<PolicyRun> runs;
  for (int n : config.samples)
    for (int i : config.eval_iters)
      for (EvaluationMode mode : config.modes)
        for (int rep = 0; rep < config.reps; ++rep) {
          PolicyRun r;
          r.n_samples = n;
          r.eval_iters = i;
          r.mode = mode;
          r.repetition = rep;
          r.run_id = "pi-N" + std::to_string(n) + "-i" + std::to_string(i) + "-" +
                     std::string(to_string(mode)) + "-r" + std::to_string(rep);
          runs.push_back(std::move(r));
        }

  const bool checkpoints = config.checkpoints && !config.out.empty();
  if (checkpoints) fs::create_directories(config.out / "checkpoints");

  parallel_for(runs.size(), config.jobs, [&](std::size_t k) {
    PolicyRun& r = runs[k];
    PolicyIterationConfig pic;
    pic.n_samples = r.n_samples;
    pic.sweeps = config.sweeps;
    pic.mode = r.mode;
    pic.evaluation = optimizer_config(config, config.methods.front(), config.alphas.front(),
                                      r.eval_iters);
    pic.evaluation.trace_every = r.eval_iters;
    pic.all_actions = config.all_actions;
    pic.n_rollouts = config.n_rollouts;
    pic.horizon = config.horizon;
    pic.gamma = config.gamma;
    pic.seed = config.repetition_seed(r.repetition);
    if (checkpoints) pic.checkpoint_dir = config.out / "checkpoints";
    pic.run_id = r.run_id;
    r.sweeps = policy_iteration(*env, spec, pic);
  });
  return runs;
}

// --- CSV / index emission ---------------------------------------------------

namespace {

void emit_quadconv(const ExperimentConfig& config, const ExperimentHooks& hooks) {
  const QuadconvResult r = run_quadconv(config, hooks);
  CsvWriter csv(config.out / "quadconv.csv", {"iteration", "distance", "nmsbe"});
  for (std::size_t k = 0; k < r.trace.records.size(); ++k) {
    csv << r.trace.records[k].iteration << r.distances.at(k) << r.trace.records[k].loss;
    csv.end_row();
  }
  Json runs;
  Json snap = base_snapshot(config);
  snap["arch"] = r.arch.to_string();
  snap["method"] = config.methods[0].tag();
  snap["alpha"] = 1.0;
  snap["max_iters"] = config.second_order_iters;
  snap["feature_seed"] = config.feature_seed;
  snap["init_seed"] = derive_seed(config.repetition_seed(0), SeedStream::Weights);
  snap["status"] = std::string(to_string(r.trace.status));
  runs["quadconv"] = snap;
  write_index(config, runs);
}

void emit_pe_compare(const ExperimentConfig& config, const ExperimentHooks& hooks) {
  const std::vector<PeCell> cells = run_pe_compare(config, hooks);
  CsvWriter trace(config.out / "pe_compare_trace.csv", kTraceColumns);
  CsvWriter summary(config.out / "pe_compare_summary.csv",
                    {"run_id", "repetition", "method", "order", "alpha", "iterations",
                     "final_nmsbe", "status", "diverged_flag"});
  Json runs;
  for (const auto& cell : cells) {
    write_trace_rows(trace, cell.run_id, cell.method, cell.alpha, cell.trace);
    summary << cell.run_id << cell.repetition << to_string(cell.method.kind)
            << to_string(cell.method.order) << cell.alpha << cell.trace.iterations
            << cell.trace.final_loss << to_string(cell.trace.status) << cell.trace.diverged();
    summary.end_row();
    Json snap = base_snapshot(config);
    snap["arch"] = config.archs.front();
    snap["method"] = cell.method.tag();
    snap["alpha"] = cell.alpha;
    snap["n_samples"] = config.samples.front();
    snap["repetition"] = cell.repetition;
    snap["seed"] = config.repetition_seed(cell.repetition);
    snap["max_iters"] = cell.method.order == Order::First ? config.first_order_iters
                                                          : config.second_order_iters;
    snap["trace_every"] = config.trace_every;
    runs[cell.run_id] = snap;
  }
  write_index(config, runs);
}

void emit_generalisation(const ExperimentConfig& config, const ExperimentHooks& hooks) {
  const GenResult result = run_generalisation(config, hooks);
  const bool multi = config.kind == ExperimentKind::GenMulti;
  std::vector<std::string> columns = {"run_id",      "arch",        "n_net",      "n_samples",
                                      "repetition",  "train_nmsbe", "test_nmsbe", "iterations",
                                      "status",      "exact_fit"};
  if (multi) {
    columns.push_back("log10_train");
    columns.push_back("log10_test");
  }
  CsvWriter csv(config.out / (multi ? "gen_multi.csv" : "gen_single.csv"), columns);
  Json runs;
  for (const auto& r : result.records) {
    csv << r.run_id << r.arch << r.n_net << r.n_samples << r.repetition << r.train_nmsbe
        << r.test_nmsbe << r.iterations << to_string(r.status) << r.exact_fit;
    if (multi) csv << std::log10(r.train_nmsbe) << std::log10(r.test_nmsbe);
    csv.end_row();
    Json snap = base_snapshot(config);
    snap["arch"] = r.arch;
    snap["method"] = config.methods.front().tag();
    snap["alpha"] = config.alphas.front();
    snap["n_samples"] = r.n_samples;
    snap["repetition"] = r.repetition;
    snap["seed"] = config.repetition_seed(r.repetition);
    snap["max_iters"] = config.second_order_iters;
    snap["exact_fit_tol"] = config.exact_fit_tol;
    snap["grid_points"] = config.grid_points;
    runs[r.run_id] = snap;
  }
  if (multi) {
    // Mean errors per cell, as drawn in the contour plots.
    std::map<std::pair<std::string, int>, std::pair<double, double>> sums;
    std::map<std::pair<std::string, int>, int> n_net;
    for (const auto& r : result.records) {
      auto& s = sums[{r.arch, r.n_samples}];
      s.first += r.train_nmsbe;
      s.second += r.test_nmsbe;
      n_net[{r.arch, r.n_samples}] = r.n_net;
    }
    CsvWriter mean(config.out / "gen_multi_mean.csv",
                   {"arch", "n_net", "n_samples", "mean_train", "mean_test", "log10_mean_train",
                    "log10_mean_test"});
    for (const auto& arch : config.archs) {
      const std::string name = MlpArchitecture::parse(arch, config.activation).to_string();
      for (int n : config.samples) {
        const auto& s = sums.at({name, n});
        const double tr = s.first / config.reps, te = s.second / config.reps;
        mean << name << n_net.at({name, n}) << n << tr << te << std::log10(tr) << std::log10(te);
        mean.end_row();
      }
    }
    CsvWriter line(config.out / "condition_line.csv", {"arch", "n_net", "nearest_n"});
    for (const auto& p : result.condition_line) {
      line << p.arch << p.n_net << p.nearest_n;
      line.end_row();
    }
  }
  write_index(config, runs);
}

void emit_policy_iter(const ExperimentConfig& config) {
  const std::vector<PolicyRun> runs = run_policy_iter(config);
  fs::create_directories(config.out / "raw");
  const std::vector<std::string> sweep_columns = {
      "repetition", "sweep",      "eval_iters", "n_samples",   "mode",
      "mean_return", "min_return", "max_return", "final_nmsbe", "diverged_flag"};

  // One SweepRecord CSV per (N, i, mode) group; repetitions are rows.
  std::map<std::string, std::unique_ptr<CsvWriter>> groups;
  Json index;
  for (const auto& r : runs) {
    const std::string group = "policy_iter_N" + std::to_string(r.n_samples) + "_i" +
                              std::to_string(r.eval_iters) + "_" + std::string(to_string(r.mode));
    auto& writer = groups[group];
    if (!writer) writer = std::make_unique<CsvWriter>(config.out / (group + ".csv"), sweep_columns);
    CsvWriter raw(config.out / "raw" / (r.run_id + ".csv"),
                  {"sweep", "mean_return", "min_return", "max_return", "final_nmsbe",
                   "diverged_flag", "checkpoint", "init_checkpoint"});
    for (const auto& s : r.sweeps) {
      *writer << r.repetition << s.sweep << s.eval_iters << s.n_samples << to_string(s.mode)
              << s.returns.mean << s.returns.min << s.returns.max << s.final_nmsbe << s.diverged;
      writer->end_row();
      const auto rel = [&](const std::string& p) {
        return p.empty() ? std::string() : fs::path(p).filename().string();
      };
      raw << s.sweep << s.returns.mean << s.returns.min << s.returns.max << s.final_nmsbe
          << s.diverged << rel(s.checkpoint) << rel(s.init_checkpoint);
      raw.end_row();
    }
    Json snap = base_snapshot(config);
    snap["arch"] = config.archs.front();
    snap["method"] = config.methods.front().tag();
    snap["alpha"] = config.alphas.front();
    snap["n_samples"] = r.n_samples;
    snap["eval_iters"] = r.eval_iters;
    snap["mode"] = std::string(to_string(r.mode));
    snap["sweeps"] = config.sweeps;
    snap["all_actions"] = config.all_actions;
    snap["n_rollouts"] = config.n_rollouts;
    snap["horizon"] = config.horizon;
    snap["repetition"] = r.repetition;
    snap["seed"] = config.repetition_seed(r.repetition);
    index[r.run_id] = snap;
  }
  write_index(config, index);
}

}  // namespace

void run_experiment(const ExperimentConfig& config, const ExperimentHooks& hooks) {
  config.validate();
  fs::create_directories(config.out);
  switch (config.kind) {
    case ExperimentKind::QuadConv: emit_quadconv(config, hooks); break;
    case ExperimentKind::PeCompare: emit_pe_compare(config, hooks); break;
    case ExperimentKind::GenSingle:
    case ExperimentKind::GenMulti: emit_generalisation(config, hooks); break;
    case ExperimentKind::PolicyIter: emit_policy_iter(config); break;
  }
}

}  // namespace gnrg
