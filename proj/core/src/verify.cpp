#include "gnrg/verify.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include "gnrg/csv.hpp"
#include "gnrg/experiments.hpp"
#include "gnrg/random.hpp"

namespace gnrg {

namespace fs = std::filesystem;

namespace {

class Checks {
 public:
  // Passes when measured <= tolerance.
  void at_most(std::string id, std::string description, double measured, double tolerance,
               std::string detail = {}) {
    add(std::move(id), std::move(description), measured <= tolerance, measured, tolerance,
        std::move(detail));
  }
  // Passes when measured >= tolerance.
  void at_least(std::string id, std::string description, double measured, double tolerance,
                std::string detail = {}) {
    add(std::move(id), std::move(description), measured >= tolerance, measured, tolerance,
        std::move(detail));
  }
  void add(std::string id, std::string description, bool passed, double measured,
           double tolerance, std::string detail = {}) {
    results.push_back({std::move(id), std::move(description), passed && std::isfinite(measured),
                       measured, tolerance, std::move(detail)});
  }
  // Runs `fn`; an exception fails the check instead of aborting the report.
  template <typename Fn>
  void guarded(const std::string& id, const std::string& description, Fn&& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      add(id, description, false, std::numeric_limits<double>::quiet_NaN(), 0.0,
          std::string("exception: ") + e.what());
    }
  }

  std::vector<CheckResult> results;
};

const std::vector<std::string> kArchs = {"2-7-1", "2-10-10-1", "5-10-10-1", "1-1"};

StateMatrix random_inputs(int n, int dim, Rng& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  StateMatrix s(n, dim);
  for (int i = 0; i < n; ++i)
    for (int d = 0; d < dim; ++d) s(i, d) = u(rng);
  return s;
}

TransitionBatch random_batch(int n, int dim, double gamma, Rng& rng) {
  TransitionBatch b;
  b.gamma = gamma;
  b.states = random_inputs(n, dim, rng);
  b.successors = random_inputs(n, dim, rng);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  b.rewards.resize(n);
  for (int i = 0; i < n; ++i) b.rewards(i) = u(rng);
  return b;
}

Vector random_vector(Eigen::Index n, Rng& rng) {
  std::normal_distribution<double> g;
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = g(rng);
  return v;
}

TransitionBatch mountain_car_fixture(int n, std::uint64_t seed) {
  const MountainCar env;
  return collect_transitions(env, sample_states(env, n, derive_seed(seed, SeedStream::States)),
                             mountain_car_velocity_policy, 0.99);
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// --- mlp_core ---------------------------------------------------------------

void check_mlp(Checks& c, Rng& rng) {
  c.guarded("MLP-1", "vectorize/unvectorize round trips are exact", [&] {
    int mismatches = 0;
    for (const auto& spec : kArchs) {
      const auto arch = MlpArchitecture::parse(spec);
      const ParameterSet p = init_uniform(arch, rng());
      const ParameterSet back = unvectorize(arch, vectorize(p));
      for (std::size_t l = 0; l < p.layers.size(); ++l)
        mismatches += (p.layers[l].array() != back.layers[l].array()).count();
      const Vector flat = random_vector(num_parameters(arch), rng);
      mismatches += (vectorize(unvectorize(arch, flat)).array() != flat.array()).count();
    }
    c.at_most("MLP-1", "vectorize/unvectorize round trips are exact", mismatches, 0);
  });
  c.guarded("MLP-2", "num_parameters equals the vectorised length", [&] {
    int bad = 0;
    for (const auto& spec : kArchs) {
      const auto arch = MlpArchitecture::parse(spec);
      bad += vectorize(zero_parameters(arch)).size() != num_parameters(arch);
    }
    c.at_most("MLP-2", "num_parameters equals the vectorised length", bad, 0);
  });
  c.guarded("MLP-3", "activation derivatives are positive on [-50, 50]", [&] {
    double min_slope = std::numeric_limits<double>::infinity();
    for (auto kind : {Activation::BentIdentity, Activation::SoftPlus, Activation::Identity})
      for (int i = 0; i <= 100'000; ++i)
        min_slope = std::min(min_slope, activate_derivative(kind, -50.0 + i * 1e-3));
    c.add("MLP-3", "activation derivatives are positive on [-50, 50]", min_slope > 0.0, min_slope,
          0.0, "min derivative (must be > 0)");
  });
  c.guarded("MLP-4", "forward is deterministic", [&] {
    int diffs = 0;
    for (const auto& spec : kArchs) {
      const auto arch = MlpArchitecture::parse(spec);
      const ParameterSet p = init_uniform(arch, rng());
      const Vector x = random_vector(arch.input_dim(), rng);
      const ForwardTrace a = forward(arch, p, as_span(x)), b = forward(arch, p, as_span(x));
      for (std::size_t l = 0; l < a.outputs.size(); ++l)
        diffs += (a.outputs[l].array() != b.outputs[l].array()).count();
      for (std::size_t l = 0; l < a.derivatives.size(); ++l)
        diffs += (a.derivatives[l].array() != b.derivatives[l].array()).count();
    }
    c.at_most("MLP-4", "forward is deterministic", diffs, 0);
  });
}

// --- autodiff_maps ----------------------------------------------------------

void check_autodiff(Checks& c, Rng& rng, std::uint64_t seed) {
  c.guarded("AD-1", "residual Jacobian action is linear", [&] {
    const auto arch = MlpArchitecture::parse("2-10-10-1");
    const ParameterSet p = init_uniform(arch, rng());
    const TransitionBatch b = random_batch(30, 2, 0.99, rng);
    const Jacobian jt = residual_jacobian(arch, p, b.states, b.successors, b.gamma);
    const Vector h1 = random_vector(jt.cols(), rng), h2 = random_vector(jt.cols(), rng);
    const double a = 0.7, bb = -1.3;
    const Vector lhs = jt * (a * h1 + bb * h2);
    const Vector rhs = a * (jt * h1) + bb * (jt * h2);
    c.at_most("AD-1", "residual Jacobian action is linear",
              (lhs - rhs).cwiseAbs().maxCoeff() / std::max(1.0, rhs.cwiseAbs().maxCoeff()), 1e-12);
  });
  c.guarded("AD-2", "G has full row rank at random weights (N_net >= N)", [&] {
    const auto arch = MlpArchitecture::parse("2-10-10-1");
    const MountainCar env;
    int full = 0;
    for (int draw = 0; draw < 25; ++draw) {
      const StateMatrix s = sample_states(env, 100, derive_seed(seed + draw, SeedStream::States));
      const ParameterSet p = init_uniform(arch, derive_seed(seed + draw, SeedStream::Weights));
      full += numerical_rank(batch_jacobian(arch, p, s)) == 100;
    }
    c.at_least("AD-2", "G has full row rank at random weights (N_net >= N)", full, 24,
               "draws out of 25 with rank(G) = N");
  });
  c.guarded("AD-3", "sample gradient from one forward trace matches finite differences", [&] {
    double worst = 0.0;
    for (const auto& spec : {"2-7-1", "2-10-10-1", "5-10-10-1"}) {
      const auto arch = MlpArchitecture::parse(spec);
      for (int k = 0; k < 5; ++k) {
        const ParameterSet p = init_uniform(arch, rng());
        const Vector x = random_vector(arch.input_dim(), rng);
        const Vector g = sample_gradient(arch, p, forward(arch, p, as_span(x)));
        const Vector fd = fd_gradient_oracle(
            [&](const Vector& w) { return evaluate(arch, unvectorize(arch, w), as_span(x)); },
            vectorize(p));
        worst = std::max(worst, relative_error(g, fd));
      }
    }
    c.at_most("AD-3", "sample gradient from one forward trace matches finite differences", worst,
              1e-6);
  });
}

// --- mdp_env ----------------------------------------------------------------

void check_mdp(Checks& c, Rng& rng) {
  const DiscreteMdp mdp = baird_star();
  c.guarded("MDP-1", "Bellman operator is a gamma-contraction in the xi-norm", [&] {
    const Vector xi = stationary_distribution(mdp.transition);
    auto norm = [&](const Vector& v) { return std::sqrt(v.dot(xi.cwiseProduct(v))); };
    double worst = 0.0;
    for (int k = 0; k < 200; ++k) {
      const Vector v1 = 10.0 * random_vector(7, rng), v2 = 10.0 * random_vector(7, rng);
      worst = std::max(worst, norm(bellman_operator(mdp, v1) - bellman_operator(mdp, v2)) /
                                  norm(v1 - v2));
    }
    c.at_most("MDP-1", "Bellman operator is a gamma-contraction in the xi-norm", worst,
              mdp.gamma * (1.0 + 1e-12), "max ||TV1 - TV2|| / ||V1 - V2||");
  });
  c.guarded("MDP-2", "exact_value is the fixed point of the Bellman operator", [&] {
    const Vector v = exact_value(mdp);
    c.at_most("MDP-2", "exact_value is the fixed point of the Bellman operator",
              (v - bellman_operator(mdp, v)).cwiseAbs().maxCoeff(), 1e-12);
  });
  c.guarded("MDP-3", "stationary distribution is invariant and positive", [&] {
    const Vector xi = stationary_distribution(mdp.transition);
    const double err = (mdp.transition.transpose() * xi - xi).cwiseAbs().maxCoeff();
    c.add("MDP-3", "stationary distribution is invariant and positive",
          err <= 1e-12 && xi.minCoeff() > 0.0, err, 1e-12);
  });
  c.guarded("MDP-4", "continuous envs are total and deterministic on their boxes", [&] {
    int failures = 0;
    for (const char* name : {"mountain-car", "cart-pole"}) {
      const auto env = make_env(name);
      const StateMatrix s = sample_states(*env, 10'000, rng());
      std::uniform_int_distribution<int> action(0, env->num_actions() - 1);
      for (Eigen::Index i = 0; i < s.rows(); ++i) {
        const Vector x = s.row(i).transpose();
        const int a = action(rng);
        const StepResult r1 = env->step(x, a), r2 = env->step(x, a);
        failures += (r1.next.array() != r2.next.array()).any() || r1.reward != r2.reward ||
                    !r1.next.allFinite() || !env->contains(r1.next);
      }
    }
    c.at_most("MDP-4", "continuous envs are total and deterministic on their boxes", failures, 0,
              "replay mismatches or out-of-box successors over 2 x 10^4 steps");
  });
}

// --- bellman_objective ------------------------------------------------------

void check_objective(Checks& c, Rng& rng, double successor_sign) {
  c.guarded("OBJ-1", "NMSBE gradients match finite differences of their losses", [&] {
    double worst_discrete = 0.0, worst_sampled = 0.0;
    const DiscreteMdp mdp = baird_star();
    const auto baird_arch = MlpArchitecture::parse("2-7-1");
    for (const auto& spec : {"2-7-1", "2-10-10-1", "5-10-10-1"}) {
      const auto arch = MlpArchitecture::parse(spec);
      for (int k = 0; k < 20; ++k) {
        const TransitionBatch b = random_batch(20, arch.input_dim(), 0.99, rng);
        const ParameterSet p = init_uniform(arch, rng());
        const Vector g = detail::evaluate_sampled_signed(
                             arch, p, b, {GradientKind::Residual, Order::First}, successor_sign)
                             .direction;
        const Vector fd = fd_gradient_oracle(
            [&](const Vector& w) { return nmsbe_sampled(arch, unvectorize(arch, w), b); },
            vectorize(p));
        worst_sampled = std::max(worst_sampled, relative_error(g, fd));
      }
    }
    for (int k = 0; k < 20; ++k) {
      const ParameterSet p = init_uniform(baird_arch, rng());
      const Vector g = gradient_discrete(baird_arch, p, mdp);
      const Vector fd = fd_gradient_oracle(
          [&](const Vector& w) { return nmsbe_discrete(baird_arch, unvectorize(baird_arch, w), mdp); },
          vectorize(p));
      worst_discrete = std::max(worst_discrete, relative_error(g, fd));
    }
    const double worst = std::max(worst_discrete, worst_sampled);
    std::ostringstream detail;
    detail << "sampled " << worst_sampled << ", discrete " << worst_discrete;
    c.at_most("OBJ-1", "NMSBE gradients match finite differences of their losses", worst, 1e-6,
              detail.str());
  });
  c.guarded("OBJ-2", "GN Hessians are positive semi-definite", [&] {
    double lowest = std::numeric_limits<double>::infinity();
    const DiscreteMdp mdp = baird_star();
    const auto baird_arch = MlpArchitecture::parse("2-7-1");
    const auto arch = MlpArchitecture::parse("2-10-10-1");
    for (int k = 0; k < 20; ++k) {
      lowest = std::min(lowest, min_eigenvalue(gn_hessian_discrete(
                                    baird_arch, init_uniform(baird_arch, rng()), mdp)));
      const TransitionBatch b = random_batch(100, 2, 0.99, rng);
      const ParameterSet p = init_uniform(arch, rng());
      lowest = std::min(lowest, min_eigenvalue(gn_hessian_sampled(arch, p, b)));
      lowest = std::min(lowest, min_eigenvalue(semi_gn_hessian_sampled(arch, p, b)));
    }
    c.at_least("OBJ-2", "GN Hessians are positive semi-definite", lowest, -1e-10,
               "min eigenvalue");
  });
  c.guarded("OBJ-3", "vanishing loss implies a vanishing gradient", [&] {
    const auto arch = MlpArchitecture::parse("2-10-10-1");
    double worst = 0.0, worst_loss = 0.0;
    for (int k = 0; k < 10; ++k) {
      TransitionBatch b = random_batch(50, 2, 0.99, rng);
      const ParameterSet p = init_uniform(arch, rng());
      // Rewards consistent with the network make the residual vanish.
      b.rewards = evaluate_batch(arch, p, b.states, false).values -
                  b.gamma * evaluate_batch(arch, p, b.successors, false).values;
      const ObjectiveEvaluation ev = evaluate_sampled(arch, p, b, {GradientKind::Residual, Order::First});
      worst_loss = std::max(worst_loss, ev.loss);
      worst = std::max(worst, ev.direction.cwiseAbs().maxCoeff());
    }
    std::ostringstream detail;
    detail << "max loss " << worst_loss << " (must be <= 1e-14)";
    c.add("OBJ-3", "vanishing loss implies a vanishing gradient", worst_loss <= 1e-14 && worst <= 1e-6,
          worst, 1e-6, detail.str());
  });
  c.guarded("OBJ-4", "discrete and sampled NMSBE agree on a deterministic chain", [&] {
    // Four-state cycle: uniform stationary distribution, exactly representable.
    DiscreteMdp mdp;
    mdp.gamma = 0.9;
    mdp.transition = Matrix::Zero(4, 4);
    mdp.reward = Matrix::Zero(4, 4);
    for (int s = 0; s < 4; ++s) {
      mdp.transition(s, (s + 1) % 4) = 1.0;
      mdp.reward(s, (s + 1) % 4) = 0.25 * (s + 1);
    }
    mdp.features = random_inputs(4, 2, rng);
    TransitionBatch b;
    b.gamma = mdp.gamma;
    b.states = mdp.features;
    b.successors.resize(4, 2);
    b.rewards.resize(4);
    for (int s = 0; s < 4; ++s) {
      b.successors.row(s) = mdp.features.row((s + 1) % 4);
      b.rewards(s) = mdp.reward(s, (s + 1) % 4);
    }
    const auto arch = MlpArchitecture::parse("2-7-1");
    double worst = 0.0;
    for (int k = 0; k < 10; ++k) {
      const ParameterSet p = init_uniform(arch, rng());
      worst = std::max(worst, std::abs(nmsbe_discrete(arch, p, mdp) - nmsbe_sampled(arch, p, b)));
    }
    c.at_most("OBJ-4", "discrete and sampled NMSBE agree on a deterministic chain", worst, 0.0);
  });
}

// --- gauss_newton_opt -------------------------------------------------------

void check_optimizer(Checks& c, Rng& rng, std::uint64_t seed) {
  const auto arch = MlpArchitecture::parse("2-10-10-1");
  const SampledObjective objective(arch, mountain_car_fixture(100, seed));
  const ParameterSet init = init_uniform(arch, derive_seed(seed, SeedStream::Weights));
  OptimizerConfig cfg;
  cfg.method = {GradientKind::Residual, Order::Second};
  cfg.alpha = 1e-2;
  cfg.epsilon = 0.0;
  cfg.max_iters = 300;

  c.guarded("OPT-1", "GN residual descent is monotone at alpha = 1e-2", [&] {
    const DescentTrace t = policy_evaluation(arch, init, objective, cfg).trace;
    int non_increasing = 0;
    for (std::size_t k = 0; k + 1 < t.records.size(); ++k)
      non_increasing += t.records[k + 1].loss <= t.records[k].loss;
    c.at_least("OPT-1", "GN residual descent is monotone at alpha = 1e-2",
               static_cast<double>(non_increasing) / static_cast<double>(t.records.size() - 1),
               0.95, "fraction of non-increasing consecutive pairs");
  });
  c.guarded("OPT-2", "descent is deterministic", [&] {
    OptimizerConfig short_cfg = cfg;
    short_cfg.max_iters = 40;
    const auto a = policy_evaluation(arch, init, objective, short_cfg);
    const auto b = policy_evaluation(arch, init, objective, short_cfg);
    int diffs = (vectorize(a.params).array() != vectorize(b.params).array()).count();
    for (std::size_t k = 0; k < a.trace.records.size(); ++k)
      diffs += a.trace.records[k].loss != b.trace.records[k].loss;
    c.at_most("OPT-2", "descent is deterministic", diffs, 0);
  });
  c.guarded("OPT-3", "every Newton step meets the solve-residual bound", [&] {
    double worst = 0.0;
    ParameterSet p = init;
    for (int k = 0; k < 30; ++k) {
      const ObjectiveEvaluation ev = objective.evaluate(p, cfg.method);
      const Vector eta = newton_step(*ev.hessian, ev.direction, cfg.c);
      Matrix system = *ev.hessian;
      system.diagonal().array() += cfg.c;
      worst = std::max(worst, (system * eta - ev.direction).norm() /
                                  (1e-10 * std::max(1.0, ev.direction.norm())));
      p = unvectorize(arch, vectorize(p) - cfg.alpha * eta);
    }
    c.at_most("OPT-3", "every Newton step meets the solve-residual bound", worst, 1.0,
              "residual / tolerance");
  });
  c.guarded("OPT-4", "frobenius_distance is a metric", [&] {
    double violation = 0.0;
    for (int k = 0; k < 50; ++k) {
      const ParameterSet a = init_uniform(arch, rng()), b = init_uniform(arch, rng()),
                         d = init_uniform(arch, rng());
      violation = std::max(violation, std::abs(frobenius_distance(a, b) - frobenius_distance(b, a)));
      violation = std::max(violation, frobenius_distance(a, a));
      violation = std::max(violation, frobenius_distance(a, d) - frobenius_distance(a, b) -
                                          frobenius_distance(b, d) - 1e-12);
    }
    c.at_most("OPT-4", "frobenius_distance is a metric", violation, 0.0);
  });
}

// --- policy_iteration -------------------------------------------------------

void check_policy_iteration(Checks& c, Rng& rng, std::uint64_t seed) {
  c.guarded("PI-1", "greedy action is invariant to a constant Q shift", [&] {
    const CartPole env;
    const QFunctionSpec spec(MlpArchitecture::parse("5-10-10-1"), env);
    const ParameterSet p = init_uniform(spec.arch, rng());
    ParameterSet shifted = p;
    auto& last = shifted.layers.back();
    last(last.rows() - 1, 0) += 3.75;  // output bias
    const StateMatrix s = sample_states(env, 200, rng());
    int changed = 0;
    for (Eigen::Index i = 0; i < s.rows(); ++i) {
      const Vector x = s.row(i).transpose();
      changed += gip(spec, p, x) != gip(spec, shifted, x);
    }
    c.at_most("PI-1", "greedy action is invariant to a constant Q shift", changed, 0);
  });
  c.guarded("PI-2", "tabular policy iteration reaches the optimal policy within 3 sweeps", [&] {
    // Four-state chain, actions left/right, reward 1 for every move into state 3.
    constexpr int kStates = 4, kActions = 2;
    constexpr double gamma = 0.9;
    auto next_state = [](int s, int a) { return a == 1 ? std::min(s + 1, 3) : std::max(s - 1, 0); };
    auto reward = [&](int s, int a) { return next_state(s, a) == 3 ? 1.0 : 0.0; };
    auto feature = [](int s, int a) {
      Vector f = Vector::Zero(kStates * kActions);
      f(s * kActions + a) = 1.0;
      return f;
    };
    // Value-iteration oracle.
    Vector v = Vector::Zero(kStates);
    for (int it = 0; it < 2000; ++it) {
      Vector nv(kStates);
      for (int s = 0; s < kStates; ++s)
        nv(s) = std::max(reward(s, 0) + gamma * v(next_state(s, 0)),
                         reward(s, 1) + gamma * v(next_state(s, 1)));
      v = nv;
    }
    std::vector<int> optimal(kStates);
    for (int s = 0; s < kStates; ++s)
      optimal[s] = reward(s, 1) + gamma * v(next_state(s, 1)) >
                           reward(s, 0) + gamma * v(next_state(s, 0))
                       ? 1
                       : 0;

    const MlpArchitecture arch({kStates * kActions, 1}, Activation::Identity);
    ParameterSet params = init_uniform(arch, derive_seed(seed, SeedStream::Weights));
    std::vector<int> policy(kStates, 0);  // start from "always left"
    OptimizerConfig cfg;
    cfg.method = {GradientKind::Residual, Order::Second};
    cfg.alpha = 1.0;
    cfg.c = 1e-10;
    cfg.epsilon = 1e-24;
    cfg.max_iters = 50;
    int reached = -1;
    for (int sweep = 1; sweep <= 3 && reached < 0; ++sweep) {
      TransitionBatch b;
      b.gamma = gamma;
      b.states.resize(kStates * kActions, kStates * kActions);
      b.successors.resize(kStates * kActions, kStates * kActions);
      b.rewards.resize(kStates * kActions);
      for (int s = 0; s < kStates; ++s)
        for (int a = 0; a < kActions; ++a) {
          const int row = s * kActions + a, s2 = next_state(s, a);
          b.states.row(row) = feature(s, a).transpose();
          b.successors.row(row) = feature(s2, policy[s2]).transpose();
          b.rewards(row) = reward(s, a);
        }
      params = policy_evaluation(arch, params, SampledObjective(arch, b), cfg).params;
      for (int s = 0; s < kStates; ++s) {
        const double q0 = evaluate(arch, params, as_span(feature(s, 0)));
        const double q1 = evaluate(arch, params, as_span(feature(s, 1)));
        policy[s] = q1 > q0 + 1e-9 ? 1 : 0;
      }
      if (policy == optimal) reached = sweep;
    }
    c.add("PI-2", "tabular policy iteration reaches the optimal policy within 3 sweeps",
          reached > 0, reached, 3, "sweeps needed");
  });
  c.guarded("PI-3", "the same sample states are used in every sweep", [&] {
    const CartPole env;
    const QFunctionSpec spec(MlpArchitecture::parse("5-10-10-1"), env);
    PolicyIterationConfig cfg;
    cfg.n_samples = 20;
    cfg.sweeps = 3;
    cfg.evaluation.method = {GradientKind::Residual, Order::Second};
    cfg.evaluation.max_iters = 5;
    cfg.n_rollouts = 1;
    cfg.horizon = 50;
    cfg.seed = seed;
    const auto records = policy_iteration(env, spec, cfg);
    int changed = 0;
    for (const auto& r : records) changed += r.sample_checksum != records.front().sample_checksum;
    c.at_most("PI-3", "the same sample states are used in every sweep", changed, 0);
  });
}

// --- experiment_cli ---------------------------------------------------------

void check_cli(Checks& c, std::uint64_t seed) {
  const fs::path root = fs::temp_directory_path() /
                        ("gnrg-verify-" + std::to_string(seed) + "-" +
                         std::to_string(reinterpret_cast<std::uintptr_t>(&c)));
  ExperimentConfig quad = ExperimentConfig::defaults(ExperimentKind::QuadConv);
  quad.seed = seed;
  ExperimentConfig pe = ExperimentConfig::defaults(ExperimentKind::PeCompare);
  pe.seed = seed;
  pe.reps = 1;
  pe.first_order_iters = 60;
  pe.second_order_iters = 20;
  pe.jobs = 1;

  c.guarded("CLI-1", "reruns with the same seed give byte-identical CSVs", [&] {
    quad.out = root / "a";
    run_experiment(quad);
    quad.out = root / "b";
    run_experiment(quad);
    const bool same = read_file(root / "a" / "quadconv.csv") == read_file(root / "b" / "quadconv.csv") &&
                      read_file(root / "a" / "index.json") == read_file(root / "b" / "index.json");
    c.add("CLI-1", "reruns with the same seed give byte-identical CSVs", same, same ? 0 : 1, 0);
  });
  c.guarded("CLI-2", "emitted CSVs match their declared schemas", [&] {
    pe.out = root / "pe";
    run_experiment(pe);
    int bad = 0;
    const std::vector<std::pair<fs::path, std::vector<std::string>>> schemas = {
        {root / "a" / "quadconv.csv", {"iteration", "distance", "nmsbe"}},
        {root / "pe" / "pe_compare_trace.csv",
         {"run_id", "method", "order", "alpha", "iteration", "nmsbe", "grad_norm", "step_norm",
          "elapsed_s"}},
        {root / "pe" / "pe_compare_summary.csv",
         {"run_id", "repetition", "method", "order", "alpha", "iterations", "final_nmsbe", "status",
          "diverged_flag"}},
    };
    for (const auto& [path, columns] : schemas) {
      const CsvTable t = read_csv(path);
      bad += t.header != columns;
      for (const auto& row : t.rows) bad += row.size() != columns.size();
    }
    c.at_most("CLI-2", "emitted CSVs match their declared schemas", bad, 0);
  });
  c.guarded("CLI-3", "divergent runs do not abort sibling runs", [&] {
    const CsvTable t = read_csv(root / "pe" / "pe_compare_summary.csv");
    int diverged = 0;
    for (std::size_t r = 0; r < t.rows.size(); ++r)
      diverged += t.rows[r][t.column("diverged_flag")] == "true";
    c.add("CLI-3", "divergent runs do not abort sibling runs", t.rows.size() == 16,
          static_cast<double>(t.rows.size()), 16,
          std::to_string(diverged) + " diverged cells reported alongside the rest");
  });
  std::error_code ec;
  fs::remove_all(root, ec);
}

}  // namespace

std::vector<CheckResult> run_verification(const VerifyOptions& options) {
  Checks c;
  Rng rng(derive_seed(options.seed, SeedStream::Features));
  check_mlp(c, rng);
  check_autodiff(c, rng, options.seed);
  check_mdp(c, rng);
  check_objective(c, rng, options.successor_sign);
  check_optimizer(c, rng, options.seed);
  check_policy_iteration(c, rng, options.seed);
  if (!options.quick) check_cli(c, options.seed);
  return c.results;
}

void print_report(std::ostream& out, const std::vector<CheckResult>& results) {
  for (const auto& r : results) {
    out << (r.passed ? "PASS " : "FAIL ") << std::left << std::setw(6) << r.id << ' '
        << r.description << "  measured=" << format_double(r.measured)
        << " tol=" << format_double(r.tolerance);
    if (!r.detail.empty()) out << "  (" << r.detail << ')';
    out << '\n';
  }
}

bool all_passed(const std::vector<CheckResult>& results) {
  for (const auto& r : results)
    if (!r.passed) return false;
  return !results.empty();
}

}  // namespace gnrg
