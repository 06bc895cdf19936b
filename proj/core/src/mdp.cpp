#include "gnrg/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>
#include <stdexcept>

#include "gnrg/csv.hpp"
#include "gnrg/random.hpp"

namespace gnrg {

Vector DiscreteMdp::expected_reward() const {
  return transition.cwiseProduct(reward).rowwise().sum();
}

void DiscreteMdp::validate() const {
  const auto k = transition.rows();
  if (k == 0 || transition.cols() != k) throw std::invalid_argument("transition matrix must be square");
  if (reward.rows() != k || reward.cols() != k) throw std::invalid_argument("reward matrix shape");
  if (features.rows() != k) throw std::invalid_argument("one feature vector per state required");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must lie in [0, 1)");
  if ((transition.array() < 0.0).any()) throw std::invalid_argument("negative transition probability");
  for (Eigen::Index i = 0; i < k; ++i)
    if (std::abs(transition.row(i).sum() - 1.0) > 1e-12)
      throw std::invalid_argument("transition rows must sum to one");
  if (!reward.allFinite()) throw std::invalid_argument("rewards must be finite");
}

DiscreteMdp baird_star(std::uint64_t feature_seed, double gamma) {
  constexpr int k = 7;
  DiscreteMdp mdp;
  mdp.gamma = gamma;
  mdp.transition = Matrix::Zero(k, k);
  mdp.reward = Matrix::Zero(k, k);
  mdp.transition(0, 0) = 0.94;
  for (int s = 1; s < k; ++s) {
    mdp.transition(0, s) = 0.01;
    mdp.transition(s, 0) = 1.0;
  }
  // Reward 1 on every transition into the centre (state 0).
  mdp.reward.col(0).setOnes();

  Rng rng(feature_seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  mdp.features.resize(k, 2);
  for (int s = 0; s < k; ++s)
    for (int d = 0; d < 2; ++d) mdp.features(s, d) = normal(rng);
  mdp.validate();
  return mdp;
}

namespace {

bool strongly_connected(const Matrix& p) {
  const auto k = p.rows();
  auto reaches_all = [&](bool transpose) {
    std::vector<char> seen(k, 0);
    std::queue<Eigen::Index> todo;
    todo.push(0);
    seen[0] = 1;
    while (!todo.empty()) {
      const auto s = todo.front();
      todo.pop();
      for (Eigen::Index t = 0; t < k; ++t) {
        const double w = transpose ? p(t, s) : p(s, t);
        if (w > 0.0 && !seen[t]) {
          seen[t] = 1;
          todo.push(t);
        }
      }
    }
    return std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; });
  };
  return reaches_all(false) && reaches_all(true);
}

}  // namespace

Vector stationary_distribution(const Matrix& transition, double tol, int max_iters) {
  const auto k = transition.rows();
  if (k == 0 || transition.cols() != k) throw std::invalid_argument("transition matrix must be square");
  if ((transition.array() < 0.0).any()) throw std::invalid_argument("negative transition probability");
  for (Eigen::Index i = 0; i < k; ++i)
    if (std::abs(transition.row(i).sum() - 1.0) > 1e-12)
      throw std::invalid_argument("transition rows must sum to one");
  if (!strongly_connected(transition))
    throw std::invalid_argument("chain is not irreducible; stationary distribution is not unique");

  // The lazy chain shares the stationary distribution and is aperiodic.
  const Matrix lazy_t = 0.5 * (transition + Matrix::Identity(k, k)).transpose();
  Vector xi = Vector::Constant(k, 1.0 / static_cast<double>(k));
  for (int it = 0; it < max_iters; ++it) {
    Vector next = lazy_t * xi;
    next /= next.sum();
    const double change = (next - xi).cwiseAbs().maxCoeff();
    xi = std::move(next);
    if (change <= tol) {
      if (!(xi.minCoeff() > 0.0)) throw std::runtime_error("stationary distribution has zero mass");
      return xi;
    }
  }
  throw std::runtime_error("power iteration did not converge");
}

Vector exact_value(const DiscreteMdp& mdp) {
  mdp.validate();
  const auto k = mdp.num_states();
  const Matrix system = Matrix::Identity(k, k) - mdp.gamma * mdp.transition;
  Eigen::FullPivLU<Matrix> lu(system);
  if (!lu.isInvertible()) throw std::logic_error("Bellman system is singular");
  return lu.solve(mdp.expected_reward());
}

Vector bellman_operator(const DiscreteMdp& mdp, const Vector& values) {
  if (values.size() != mdp.num_states()) throw std::invalid_argument("value vector length");
  return mdp.expected_reward() + mdp.gamma * (mdp.transition * values);
}

bool ContinuousEnv::contains(const Vector& state) const {
  if (state.size() != state_dim()) return false;
  return (state.array() >= lower().array()).all() && (state.array() <= upper().array()).all();
}

void ContinuousEnv::check_input(const Vector& state, int action) const {
  if (action < 0 || action >= num_actions()) throw std::out_of_range(name() + ": invalid action");
  if (!contains(state)) throw std::out_of_range(name() + ": state outside the state box");
}

MountainCar::MountainCar()
    : lower_{{kMinPosition, -kMaxSpeed}}, upper_{{kMaxPosition, kMaxSpeed}}, start_{{-0.5, 0.0}} {}

StepResult MountainCar::step(const Vector& state, int action) const {
  check_input(state, action);
  double x = state(0);
  double v = state(1);
  v += (action - 1) * kForce - kGravity * std::cos(3.0 * x);
  v = std::clamp(v, -kMaxSpeed, kMaxSpeed);
  x = std::clamp(x + v, kMinPosition, kMaxPosition);
  if (x == kMinPosition && v < 0.0) v = 0.0;
  if (x > kGoalPosition) return {start_, 0.0};
  return {Vector{{x, v}}, -1.0};
}

CartPole::CartPole()
    : lower_{{-kXThreshold, -kVelocityBound, -kThetaBound, -kVelocityBound}},
      upper_{{kXThreshold, kVelocityBound, kThetaBound, kVelocityBound}},
      start_{Vector::Zero(4)} {}

bool CartPole::is_failure(const Vector& s) {
  return s(0) < -kXThreshold || s(0) > kXThreshold || s(2) < -kThetaThreshold ||
         s(2) > kThetaThreshold;
}

StepResult CartPole::step(const Vector& state, int action) const {
  check_input(state, action);
  constexpr double total_mass = kCartMass + kPoleMass;
  constexpr double polemass_length = kPoleMass * kHalfLength;
  const double x = state(0), x_dot = state(1), theta = state(2), theta_dot = state(3);
  const double force = action == 1 ? kForce : -kForce;
  const double cos_t = std::cos(theta);
  const double sin_t = std::sin(theta);
  const double temp = (force + polemass_length * theta_dot * theta_dot * sin_t) / total_mass;
  const double theta_acc = (kGravity * sin_t - cos_t * temp) /
                           (kHalfLength * (4.0 / 3.0 - kPoleMass * cos_t * cos_t / total_mass));
  const double x_acc = temp - polemass_length * theta_acc * cos_t / total_mass;

  Vector next{{x + kTau * x_dot, x_dot + kTau * x_acc, theta + kTau * theta_dot,
               theta_dot + kTau * theta_acc}};
  if (is_failure(next)) return {start_, -1.0};
  next(1) = std::clamp(next(1), -kVelocityBound, kVelocityBound);
  next(3) = std::clamp(next(3), -kVelocityBound, kVelocityBound);
  return {std::move(next), 0.0};
}

std::unique_ptr<ContinuousEnv> make_env(const std::string& name) {
  if (name == "mountain-car") return std::make_unique<MountainCar>();
  if (name == "cart-pole") return std::make_unique<CartPole>();
  throw std::invalid_argument("unknown environment: " + name);
}

int mountain_car_velocity_policy(const Vector& state) { return state(1) < 0.0 ? 0 : 2; }

StateMatrix sample_states(const ContinuousEnv& env, int n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sample_states requires n >= 1");
  const int dim = env.state_dim();
  Rng rng(seed);
  std::vector<std::uniform_real_distribution<double>> dists;
  for (int d = 0; d < dim; ++d) dists.emplace_back(env.lower()(d), env.upper()(d));

  StateMatrix states(n, dim);
  std::set<std::vector<double>> seen;
  int filled = 0;
  while (filled < n) {
    std::vector<double> s(dim);
    for (int d = 0; d < dim; ++d) s[d] = dists[d](rng);
    if (!seen.insert(s).second) continue;
    for (int d = 0; d < dim; ++d) states(filled, d) = s[d];
    ++filled;
  }
  return states;
}

TransitionBatch collect_transitions(const ContinuousEnv& env, const StateMatrix& states,
                                    const Policy& policy, double gamma) {
  if (states.rows() == 0) throw std::invalid_argument("empty state list");
  TransitionBatch batch;
  batch.gamma = gamma;
  batch.states = states;
  batch.successors.resize(states.rows(), states.cols());
  batch.rewards.resize(states.rows());
  for (Eigen::Index i = 0; i < states.rows(); ++i) {
    const Vector s = states.row(i).transpose();
    const StepResult r = env.step(s, policy(s));
    batch.successors.row(i) = r.next.transpose();
    batch.rewards(i) = r.reward;
  }
  return batch;
}

double discounted_return(const ContinuousEnv& env, const Policy& policy, Vector state,
                         double gamma, int horizon) {
  double total = 0.0;
  double discount = 1.0;
  for (int t = 0; t < horizon; ++t) {
    StepResult r = env.step(state, policy(state));
    total += discount * r.reward;
    discount *= gamma;
    state = std::move(r.next);
  }
  return total;
}

int horizon_for_tolerance(double gamma, double reward_bound, double tol) {
  if (!(gamma > 0.0 && gamma < 1.0) || !(tol > 0.0)) throw std::invalid_argument("horizon inputs");
  if (reward_bound <= 0.0) return 0;
  const double needed = std::log(tol * (1.0 - gamma) / reward_bound) / std::log(gamma);
  return std::max(0, static_cast<int>(std::ceil(needed)));
}

StateMatrix grid_states(const ContinuousEnv& env, const std::vector<int>& points) {
  const int dim = env.state_dim();
  if (static_cast<int>(points.size()) != dim) throw std::invalid_argument("one count per dimension");
  Eigen::Index total = 1;
  for (int p : points) {
    if (p < 2) throw std::invalid_argument("grid needs at least two points per dimension");
    total *= p;
  }
  StateMatrix grid(total, dim);
  for (Eigen::Index row = 0; row < total; ++row) {
    Eigen::Index rem = row;
    for (int d = dim - 1; d >= 0; --d) {
      const auto idx = rem % points[d];
      rem /= points[d];
      const double lo = env.lower()(d), hi = env.upper()(d);
      grid(row, d) = idx == points[d] - 1 ? hi : lo + (hi - lo) * static_cast<double>(idx) / (points[d] - 1);
    }
  }
  return grid;
}

Vector ground_truth_values(const ContinuousEnv& env, const Policy& policy, const StateMatrix& grid,
                           double gamma, int horizon) {
  Vector values(grid.rows());
  for (Eigen::Index i = 0; i < grid.rows(); ++i)
    values(i) = discounted_return(env, policy, grid.row(i).transpose(), gamma, horizon);
  return values;
}

void write_ground_truth_csv(const std::filesystem::path& path, const StateMatrix& grid,
                            const Vector& values) {
  std::vector<std::string> cols;
  for (Eigen::Index d = 0; d < grid.cols(); ++d) cols.push_back("dim_" + std::to_string(d));
  cols.emplace_back("value");
  CsvWriter csv(path, std::move(cols));
  for (Eigen::Index i = 0; i < grid.rows(); ++i) {
    for (Eigen::Index d = 0; d < grid.cols(); ++d) csv << grid(i, d);
    csv << values(i);
    csv.end_row();
  }
}

}  // namespace gnrg
