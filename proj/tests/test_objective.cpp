#include <gtest/gtest.h>

#include "gnrg/objective.hpp"
#include "gnrg/optimizer.hpp"
#include "gnrg/random.hpp"

using namespace gnrg;

namespace {

TransitionBatch mountain_car_batch(int n, std::uint64_t seed) {
  const MountainCar env;
  return collect_transitions(env, sample_states(env, n, seed), mountain_car_velocity_policy, 0.99);
}

// Deterministic 4-cycle 0 -> 1 -> 2 -> 3 -> 0 with reward 1 on entering 0.
DiscreteMdp four_cycle() {
  DiscreteMdp mdp;
  mdp.gamma = 0.9;
  mdp.transition = Matrix::Zero(4, 4);
  mdp.reward = Matrix::Zero(4, 4);
  for (int s = 0; s < 4; ++s) mdp.transition(s, (s + 1) % 4) = 1.0;
  mdp.reward(3, 0) = 1.0;
  mdp.features.resize(4, 2);
  mdp.features << 1.0, 0.0, 0.0, 1.0, -1.0, 0.0, 0.0, -1.0;
  return mdp;
}

}  // namespace

TEST(Method, TagsAndParsing) {
  EXPECT_EQ((Method{GradientKind::Semi, Order::First}).tag(), "semi-first");
  EXPECT_EQ(parse_gradient_kind("residual"), GradientKind::Residual);
  EXPECT_EQ(parse_order("second"), Order::Second);
  EXPECT_THROW(parse_gradient_kind("full"), std::invalid_argument);
  EXPECT_THROW(parse_order("third"), std::invalid_argument);
}

TEST(Sampled, ResidualAndLossDefinition) {
  const auto arch = MlpArchitecture::parse("2-10-10-1");
  const ParameterSet p = init_uniform(arch, 1);
  const TransitionBatch b = mountain_car_batch(30, 2);
  const Vector delta = residual_sampled(arch, p, b);
  for (Eigen::Index i = 0; i < b.size(); ++i) {
    const Vector s = b.states.row(i).transpose(), s2 = b.successors.row(i).transpose();
    const double expected =
        evaluate(arch, p, as_span(s)) - b.rewards(i) - b.gamma * evaluate(arch, p, as_span(s2));
    EXPECT_NEAR(delta(i), expected, 1e-13);
  }
  EXPECT_NEAR(nmsbe_sampled(arch, p, b), delta.squaredNorm() / 60.0, 1e-15);
}

TEST(Sampled, ResidualGradientMatchesFiniteDifferences) {
  const auto arch = MlpArchitecture::parse("2-10-10-1");
  const TransitionBatch b = mountain_car_batch(40, 3);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const ParameterSet p = init_uniform(arch, seed);
    const Vector fd = fd_gradient_oracle(
        [&](const Vector& w) { return nmsbe_sampled(arch, unvectorize(arch, w), b); }, vectorize(p));
    EXPECT_LE(relative_error(gradient_sampled(arch, p, b), fd), 1e-6);
  }
}

TEST(Sampled, FlippedSuccessorSignIsDetected) {
  const auto arch = MlpArchitecture::parse("2-10-10-1");
  const TransitionBatch b = mountain_car_batch(40, 3);
  const ParameterSet p = init_uniform(arch, 9);
  const Vector fd = fd_gradient_oracle(
      [&](const Vector& w) { return nmsbe_sampled(arch, unvectorize(arch, w), b); }, vectorize(p));
  const auto wrong = detail::evaluate_sampled_signed(arch, p, b, {}, +1.0);
  EXPECT_GT(relative_error(wrong.direction, fd), 1e-6);
}

TEST(Sampled, LinearLeastSquaresOracle) {
  // gamma = 0 with an affine net is ordinary least squares.
  const MlpArchitecture arch({2, 1}, Activation::Identity);
  const TransitionBatch b = [] {
    auto batch = mountain_car_batch(25, 4);
    batch.gamma = 0.0;
    return batch;
  }();
  const ParameterSet p = init_uniform(arch, 5);
  Matrix x(b.size(), 3);
  x << b.states.col(0), b.states.col(1), Vector::Ones(b.size());
  const Vector w = vectorize(p);
  const double n = static_cast<double>(b.size());
  const auto ev = evaluate_sampled(arch, p, b, {});
  EXPECT_LE((ev.direction - x.transpose() * (x * w - b.rewards) / n).norm(), 1e-13);
  EXPECT_LE((*ev.hessian - x.transpose() * x / n).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(Sampled, HessianIsSymmetricPsdGram) {
  const auto arch = MlpArchitecture::parse("2-10-10-1");
  const TransitionBatch b = mountain_car_batch(50, 6);
  const ParameterSet p = init_uniform(arch, 7);
  const Matrix h = gn_hessian_sampled(arch, p, b);
  EXPECT_EQ(symmetry_error(h), 0.0);
  EXPECT_GE(min_eigenvalue(h), -1e-10);
  const Jacobian a = residual_jacobian(arch, p, b.states, b.successors, b.gamma);
  EXPECT_LE((h - a.transpose() * a / 50.0).cwiseAbs().maxCoeff(), 1e-12 * h.cwiseAbs().maxCoeff());
}

TEST(Sampled, SemiGradientDirection) {
  const auto arch = MlpArchitecture::parse("2-10-10-1");
  const TransitionBatch b = mountain_car_batch(30, 8);
  const ParameterSet p = init_uniform(arch, 2);
  const Jacobian g = batch_jacobian(arch, p, b.states);
  const Vector delta = residual_sampled(arch, p, b);
  const Vector semi = semi_gradient_sampled(arch, p, b);
  EXPECT_LE((semi - g.transpose() * delta / 30.0).norm(), 1e-13 * std::max(1.0, semi.norm()));
  EXPECT_GT((semi - gradient_sampled(arch, p, b)).norm(), 1e-6);
  const Matrix h = semi_gn_hessian_sampled(arch, p, b);
  EXPECT_LE((h - g.transpose() * g / 30.0).cwiseAbs().maxCoeff(), 1e-13);
  const auto ev = evaluate_sampled(arch, p, b, {GradientKind::Semi, Order::First});
  EXPECT_FALSE(ev.hessian.has_value());
  EXPECT_EQ(ev.direction, semi);
}

TEST(Sampled, RejectsInconsistentBatch) {
  const auto arch = MlpArchitecture::parse("2-3-1");
  TransitionBatch b = mountain_car_batch(5, 1);
  b.rewards.resize(4);
  EXPECT_THROW(nmsbe_sampled(arch, zero_parameters(arch), b), std::invalid_argument);
  EXPECT_THROW(nmsbe_sampled(MlpArchitecture::parse("3-3-1"), zero_parameters(MlpArchitecture::parse("3-3-1")),
                             mountain_car_batch(5, 1)),
               std::invalid_argument);
}

TEST(Discrete, BellmanResidualOfExactValueVanishes) {
  const DiscreteMdp mdp = baird_star();
  EXPECT_LE(bellman_residual(mdp, exact_value(mdp)).cwiseAbs().maxCoeff(), 1e-10);
  // Delta = (I - gamma P) F - rbar for any F.
  const Vector f = Vector::LinSpaced(7, -1.0, 2.0);
  const Vector expected = f - mdp.expected_reward() - mdp.gamma * mdp.transition * f;
  EXPECT_EQ(bellman_residual(mdp, f), expected);
}

TEST(Discrete, GradientMatchesFiniteDifferences) {
  const DiscreteMdp mdp = baird_star();
  const auto arch = MlpArchitecture::parse("2-7-1");
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const ParameterSet p = init_uniform(arch, seed);
    const Vector fd = fd_gradient_oracle(
        [&](const Vector& w) { return nmsbe_discrete(arch, unvectorize(arch, w), mdp); },
        vectorize(p));
    EXPECT_LE(relative_error(gradient_discrete(arch, p, mdp), fd), 1e-6);
  }
}

TEST(Discrete, HessianFactorisation) {
  const DiscreteMdp mdp = baird_star();
  const auto arch = MlpArchitecture::parse("2-7-1");
  const ParameterSet p = init_uniform(arch, 3);
  const Vector xi = stationary_distribution(mdp.transition);
  const Jacobian g = batch_jacobian(arch, p, mdp.features);
  const Matrix m = Matrix::Identity(7, 7) - mdp.gamma * mdp.transition;
  const Matrix expected = g.transpose() * m.transpose() * xi.asDiagonal() * m * g;
  const Matrix h = gn_hessian_discrete(arch, p, mdp);
  EXPECT_EQ(symmetry_error(h), 0.0);
  EXPECT_LE((h - expected).cwiseAbs().maxCoeff(), 1e-12 * expected.cwiseAbs().maxCoeff());
  EXPECT_GE(min_eigenvalue(h), -1e-10);
}

TEST(Discrete, UniformCycleEqualsSampledBatch) {
  // With a uniform stationary distribution and one transition per state the
  // two settings define the same objective.
  const DiscreteMdp mdp = four_cycle();
  const auto arch = MlpArchitecture::parse("2-5-1");
  const ParameterSet p = init_uniform(arch, 4);
  TransitionBatch b;
  b.gamma = mdp.gamma;
  b.states = mdp.features;
  b.successors.resize(4, 2);
  b.rewards.resize(4);
  for (int s = 0; s < 4; ++s) {
    b.successors.row(s) = mdp.features.row((s + 1) % 4);
    b.rewards(s) = mdp.reward(s, (s + 1) % 4);
  }
  const auto d = evaluate_discrete(arch, p, mdp, true);
  const auto s = evaluate_sampled(arch, p, b, {});
  EXPECT_NEAR(d.loss, s.loss, 1e-14);
  EXPECT_LE((d.direction - s.direction).norm(), 1e-13);
  EXPECT_LE((*d.hessian - *s.hessian).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(Discrete, FeatureWidthMismatchRejected) {
  EXPECT_THROW(nmsbe_discrete(MlpArchitecture::parse("3-3-1"),
                              zero_parameters(MlpArchitecture::parse("3-3-1")), baird_star()),
               std::invalid_argument);
}
