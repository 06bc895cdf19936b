#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "gnrg/autodiff.hpp"

namespace gnrg {

/// Finite MDP under a fixed policy: transition matrix, per-transition rewards
/// and a feature vector per state that is fed to the network.
struct DiscreteMdp {
  Matrix transition;  // K x K, row-stochastic
  Matrix reward;      // K x K, r(s -> s'), zero where transition is zero
  double gamma = 0.99;
  StateMatrix features;  // K x n_0

  Eigen::Index num_states() const { return transition.rows(); }
  /// rbar_s = sum_{s'} P(s, s') r(s -> s')
  Vector expected_reward() const;
  /// Throws std::invalid_argument on shape, stochasticity or gamma violations.
  void validate() const;
};

/// Adapted seven-state star: the centre keeps itself with probability 0.94 and
/// feeds each outer state with 0.01; outer states return to the centre. Every
/// transition into the centre pays 1. Features are N(0, I) draws from `feature_seed`.
inline constexpr std::uint64_t kBairdFeatureSeed = 20230615;
DiscreteMdp baird_star(std::uint64_t feature_seed = kBairdFeatureSeed, double gamma = 0.99);

/// Stationary distribution by power iteration on the lazy chain (P + I) / 2.
/// Rejects non-stochastic and reducible chains.
Vector stationary_distribution(const Matrix& transition, double tol = 1e-14,
                               int max_iters = 1'000'000);

/// Solves (I - gamma P) V = rbar.
Vector exact_value(const DiscreteMdp& mdp);

/// (T V)(s) = rbar_s + gamma * sum_{s'} P(s, s') V(s')
Vector bellman_operator(const DiscreteMdp& mdp, const Vector& values);

struct StepResult {
  Vector next;
  double reward = 0.0;
};

/// Deterministic continuous-state environment with a finite action set.
class ContinuousEnv {
 public:
  virtual ~ContinuousEnv() = default;

  virtual std::string name() const = 0;
  virtual int state_dim() const = 0;
  virtual int num_actions() const = 0;
  virtual const Vector& lower() const = 0;
  virtual const Vector& upper() const = 0;
  virtual const Vector& start_state() const = 0;
  /// Bound on |r|.
  virtual double reward_bound() const { return 1.0; }

  /// Throws std::out_of_range for states outside the box or invalid actions.
  virtual StepResult step(const Vector& state, int action) const = 0;

  bool contains(const Vector& state) const;

 protected:
  void check_input(const Vector& state, int action) const;
};

/// Infinite-horizon Mountain Car: -1 per step outside the goal region x > 0.5;
/// entering the goal pays 0 and teleports to the fixed start (-0.5, 0).
class MountainCar final : public ContinuousEnv {
 public:
  static constexpr double kMinPosition = -1.2;
  static constexpr double kMaxPosition = 0.6;
  static constexpr double kMaxSpeed = 0.07;
  static constexpr double kGoalPosition = 0.5;
  static constexpr double kForce = 0.001;
  static constexpr double kGravity = 0.0025;

  MountainCar();

  std::string name() const override { return "mountain-car"; }
  int state_dim() const override { return 2; }
  int num_actions() const override { return 3; }
  const Vector& lower() const override { return lower_; }
  const Vector& upper() const override { return upper_; }
  const Vector& start_state() const override { return start_; }
  StepResult step(const Vector& state, int action) const override;

 private:
  Vector lower_, upper_, start_;
};

/// Infinite-horizon Cart Pole: transitions into failure (|x| > 2.4 or
/// |theta| > 12 deg) pay -1 and teleport to the zero state; all others pay 0.
class CartPole final : public ContinuousEnv {
 public:
  static constexpr double kGravity = 9.8;
  static constexpr double kCartMass = 1.0;
  static constexpr double kPoleMass = 0.1;
  static constexpr double kHalfLength = 0.5;
  static constexpr double kForce = 10.0;
  static constexpr double kTau = 0.02;
  static constexpr double kXThreshold = 2.4;
  static constexpr double kThetaThreshold = 12.0 * 2.0 * 3.14159265358979323846 / 360.0;
  static constexpr double kVelocityBound = 3.0;
  static constexpr double kThetaBound = 0.2095;

  CartPole();

  std::string name() const override { return "cart-pole"; }
  int state_dim() const override { return 4; }
  int num_actions() const override { return 2; }
  const Vector& lower() const override { return lower_; }
  const Vector& upper() const override { return upper_; }
  const Vector& start_state() const override { return start_; }
  StepResult step(const Vector& state, int action) const override;

  static bool is_failure(const Vector& state);

 private:
  Vector lower_, upper_, start_;
};

std::unique_ptr<ContinuousEnv> make_env(const std::string& name);

using Policy = std::function<int(const Vector&)>;

/// Accelerates in the direction of the current velocity; v == 0 pushes right.
int mountain_car_velocity_policy(const Vector& state);

/// n distinct states drawn uniformly from the env's box.
StateMatrix sample_states(const ContinuousEnv& env, int n, std::uint64_t seed);

struct TransitionBatch {
  StateMatrix states;
  Vector rewards;
  StateMatrix successors;
  double gamma = 0.99;

  Eigen::Index size() const { return states.rows(); }
};

TransitionBatch collect_transitions(const ContinuousEnv& env, const StateMatrix& states,
                                    const Policy& policy, double gamma);

/// Truncated discounted return of a rollout from `state`.
double discounted_return(const ContinuousEnv& env, const Policy& policy, Vector state,
                         double gamma, int horizon);

/// Smallest horizon T with gamma^T * M / (1 - gamma) <= tol.
int horizon_for_tolerance(double gamma, double reward_bound, double tol);

/// Regular lattice over the env's box, `points[d]` points per dimension, endpoints included.
/// Rows are ordered with the last dimension varying fastest.
StateMatrix grid_states(const ContinuousEnv& env, const std::vector<int>& points);

/// Monte-Carlo ground truth V_pi on a grid (one deterministic rollout per point).
Vector ground_truth_values(const ContinuousEnv& env, const Policy& policy,
                           const StateMatrix& grid, double gamma, int horizon);

/// CSV with header dim_0,...,dim_{K-1},value.
void write_ground_truth_csv(const std::filesystem::path& path, const StateMatrix& grid,
                            const Vector& values);

}  // namespace gnrg
