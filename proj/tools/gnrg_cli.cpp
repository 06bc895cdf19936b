// gnrg: run the convergence, generalisation and policy-iteration experiments.
//
// Settings come from the per-experiment defaults, then an optional INI file
// (--config, keys are the long flag names), then the command line.

#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gnrg/experiments.hpp"
#include "gnrg/verify.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvariant = 1;
constexpr int kExitConfig = 2;

struct Flags {
  std::string experiment;
  std::string env;
  std::vector<std::string> archs;
  std::string activation;
  std::vector<std::string> methods;
  std::vector<double> alphas;
  double c = 0.0;
  double epsilon = 0.0;
  std::vector<int> samples;
  std::vector<int> iters;
  int first_order_iters = 0;
  std::vector<std::string> modes;
  int sweeps = 0;
  int reps = 0;
  std::uint64_t seed = 0;
  std::string out;
  int jobs = 0;
  int trace_every = 0;
  double gamma = 0.0;
  double polish_ratio = 0.0;
  double exact_fit_tol = 0.0;
  int grid_points = 0;
  int surface_points = 0;
  bool ground_truth = false;
  bool policy_action_only = false;
  int rollouts = 0;
  int horizon = 0;
  std::uint64_t feature_seed = 0;
  bool no_checkpoints = false;
  bool mutate_sign = false;
  bool quick = false;
};

gnrg::Method parse_method(const std::string& tag) {
  const auto dash = tag.find('-');
  if (dash == std::string::npos) throw gnrg::ConfigError("method must look like residual-second");
  return {gnrg::parse_gradient_kind(tag.substr(0, dash)), gnrg::parse_order(tag.substr(dash + 1))};
}

gnrg::ExperimentConfig build_config(const CLI::App& app, const Flags& f) {
  auto set = [&](const char* name) { return app.count(name) > 0; };
  gnrg::ExperimentConfig cfg =
      gnrg::ExperimentConfig::defaults(gnrg::parse_experiment_kind(f.experiment));
  try {
    if (set("--env")) cfg.env = f.env;
    if (set("--arch")) cfg.archs = f.archs;
    if (set("--activation")) cfg.activation = gnrg::parse_activation(f.activation);
    if (set("--method")) {
      cfg.methods.clear();
      for (const auto& m : f.methods) cfg.methods.push_back(parse_method(m));
    }
    if (set("--modes")) {
      cfg.modes.clear();
      for (const auto& m : f.modes) cfg.modes.push_back(gnrg::parse_evaluation_mode(m));
    }
  } catch (const gnrg::ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw gnrg::ConfigError(e.what());
  }
  if (set("--alpha")) cfg.alphas = f.alphas;
  if (set("--c")) cfg.c = f.c;
  if (set("--epsilon")) cfg.epsilon = f.epsilon;
  if (set("--samples")) cfg.samples = f.samples;
  if (set("--iters")) {
    if (cfg.kind == gnrg::ExperimentKind::PolicyIter) {
      cfg.eval_iters = f.iters;
    } else {
      if (f.iters.size() != 1) throw gnrg::ConfigError("--iters takes one value here");
      cfg.second_order_iters = f.iters.front();
    }
  }
  if (set("--first-order-iters")) cfg.first_order_iters = f.first_order_iters;
  if (set("--sweeps")) cfg.sweeps = f.sweeps;
  if (set("--reps")) cfg.reps = f.reps;
  if (set("--seed")) cfg.seed = f.seed;
  if (set("--out")) cfg.out = f.out;
  if (set("--jobs")) cfg.jobs = f.jobs;
  if (set("--trace-every")) cfg.trace_every = f.trace_every;
  if (set("--gamma")) cfg.gamma = f.gamma;
  if (set("--polish-ratio")) cfg.polish_ratio = f.polish_ratio;
  if (set("--exact-fit-tol")) cfg.exact_fit_tol = f.exact_fit_tol;
  if (set("--grid-points")) cfg.grid_points = f.grid_points;
  if (set("--surface-points")) cfg.surface_points = f.surface_points;
  if (set("--ground-truth")) cfg.ground_truth = f.ground_truth;
  if (set("--policy-action-only")) cfg.all_actions = !f.policy_action_only;
  if (set("--rollouts")) cfg.n_rollouts = f.rollouts;
  if (set("--horizon")) cfg.horizon = f.horizon;
  if (set("--feature-seed")) cfg.feature_seed = f.feature_seed;
  if (set("--no-checkpoints")) cfg.checkpoints = !f.no_checkpoints;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gauss-Newton residual gradient experiments for MLP value functions"};
  Flags f;
  app.set_config("--config", "", "INI file with flag values (flags override it)");
  app.add_option("--experiment,-e", f.experiment,
                 "quadconv | pe-compare | gen-single | gen-multi | policy-iter | verify")
      ->required()
      ->check(CLI::IsMember(
          {"quadconv", "pe-compare", "gen-single", "gen-multi", "policy-iter", "verify"}));
  app.add_option("--env", f.env, "baird-star | mountain-car | cart-pole");
  app.add_option("--arch", f.archs, "architecture(s), e.g. 2-10-10-1");
  app.add_option("--activation", f.activation, "bent-id | softplus | identity");
  app.add_option("--method", f.methods, "residual|semi - first|second, e.g. residual-second");
  app.add_option("--alpha", f.alphas, "step size(s)");
  app.add_option("--c", f.c, "Tikhonov regulariser of the Newton system");
  app.add_option("--epsilon", f.epsilon, "stop once the NMSBE is at or below this value");
  app.add_option("--samples", f.samples, "sample size(s) N");
  app.add_option("--iters", f.iters,
                 "GN iteration budget; policy-iter: evaluation budget(s) per sweep");
  app.add_option("--first-order-iters", f.first_order_iters, "first-order budget (pe-compare)");
  app.add_option("--modes,--mode", f.modes, "transient | persistent (policy-iter)");
  app.add_option("--sweeps", f.sweeps, "policy-iteration sweeps");
  app.add_option("--reps", f.reps, "repetitions");
  app.add_option("--seed", f.seed, "base seed; repetition r uses seed + r");
  app.add_option("--out,-o", f.out, "output directory");
  app.add_option("--jobs,-j", f.jobs, "worker threads (0 = all cores)");
  app.add_option("--trace-every", f.trace_every, "keep every k-th iteration in traces");
  app.add_option("--gamma", f.gamma, "discount factor");
  app.add_option("--polish-ratio", f.polish_ratio,
                 "continue past epsilon while each step shrinks the loss by this factor");
  app.add_option("--exact-fit-tol", f.exact_fit_tol, "training NMSBE counted as an exact fit");
  app.add_option("--grid-points", f.grid_points, "test grid points per dimension");
  app.add_option("--surface-points", f.surface_points, "value surface points per dimension");
  app.add_flag("--ground-truth", f.ground_truth, "also write Monte-Carlo ground truth (gen-single)");
  app.add_flag("--policy-action-only", f.policy_action_only,
               "expand sampled states only with the policy action (policy-iter)");
  app.add_option("--rollouts", f.rollouts, "rollouts per policy evaluation");
  app.add_option("--horizon", f.horizon, "rollout length");
  app.add_option("--feature-seed", f.feature_seed, "Baird star feature seed (quadconv)");
  app.add_flag("--no-checkpoints", f.no_checkpoints, "do not write policy-iteration checkpoints");
  app.add_flag("--mutate-successor-sign", f.mutate_sign,
               "verify: flip the sign of the successor term (mutation smoke test)");
  app.add_flag("--quick", f.quick, "verify: skip checks that run whole experiments");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  if (f.experiment == "verify") {
    gnrg::VerifyOptions opts;
    if (app.count("--seed")) opts.seed = f.seed;
    if (f.mutate_sign) opts.successor_sign = 1.0;
    opts.quick = f.quick;
    const auto results = gnrg::run_verification(opts);
    gnrg::print_report(std::cout, results);
    return gnrg::all_passed(results) ? kExitOk : kExitInvariant;
  }

  gnrg::ExperimentConfig cfg;
  try {
    cfg = build_config(app, f);
  } catch (const gnrg::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
  try {
    gnrg::run_experiment(cfg);
  } catch (const gnrg::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvariant;
  }
  std::cout << "wrote " << to_string(cfg.kind) << " results to " << cfg.out.string() << '\n';
  return kExitOk;
}
