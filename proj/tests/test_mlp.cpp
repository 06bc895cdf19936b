#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "gnrg/mlp.hpp"
#include "gnrg/random.hpp"

using namespace gnrg;

TEST(Architecture, NumParameters) {
  EXPECT_EQ(num_parameters(MlpArchitecture::parse("2-7-1")), 29);
  EXPECT_EQ(num_parameters(MlpArchitecture::parse("2-10-10-1")), 151);
  EXPECT_EQ(num_parameters(MlpArchitecture::parse("5-10-10-1")), 181);
  EXPECT_EQ(num_parameters(MlpArchitecture::parse("1-1")), 2);
}

TEST(Architecture, ParseAndValidate) {
  const auto arch = MlpArchitecture::parse("2-10-10-1");
  EXPECT_EQ(arch.widths, (std::vector<int>{2, 10, 10, 1}));
  EXPECT_EQ(arch.num_layers(), 3);
  EXPECT_EQ(arch.to_string(), "2-10-10-1");
  EXPECT_EQ(arch.layer_activation(1), Activation::BentIdentity);
  EXPECT_EQ(arch.layer_activation(3), Activation::Identity);

  EXPECT_THROW(MlpArchitecture::parse("2-10-2"), std::invalid_argument);  // n_L must be 1
  EXPECT_THROW(MlpArchitecture::parse("2"), std::invalid_argument);
  EXPECT_THROW(MlpArchitecture::parse("2-0-1"), std::invalid_argument);
  EXPECT_THROW(MlpArchitecture::parse("2-x-1"), std::invalid_argument);
  EXPECT_THROW(MlpArchitecture::parse(""), std::invalid_argument);
}

TEST(Activation, BentIdentity) {
  EXPECT_DOUBLE_EQ(activate(Activation::BentIdentity, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(activate_derivative(Activation::BentIdentity, 0.0), 1.0);
  EXPECT_NEAR(activate(Activation::BentIdentity, 1.0), (std::sqrt(2.0) - 1.0) / 2.0 + 1.0, 1e-15);
  EXPECT_NEAR(activate(Activation::BentIdentity, 1.0), 1.207107, 1e-6);
}

TEST(Activation, IdentityAndSoftPlus) {
  EXPECT_EQ(activate(Activation::Identity, 3.5), 3.5);
  EXPECT_EQ(activate_derivative(Activation::Identity, 3.5), 1.0);
  EXPECT_NEAR(activate(Activation::SoftPlus, 0.0), std::log(2.0), 1e-15);
  EXPECT_NEAR(activate_derivative(Activation::SoftPlus, 0.0), 0.5, 1e-15);
  // Stable branches: no overflow for large |x|.
  EXPECT_NEAR(activate(Activation::SoftPlus, 800.0), 800.0, 1e-12);
  EXPECT_GT(activate(Activation::SoftPlus, -800.0), -1e-300);
  EXPECT_TRUE(std::isfinite(activate_derivative(Activation::SoftPlus, -800.0)));
}

TEST(Activation, StrictlyIncreasingOnDenseGrid) {
  for (auto kind : {Activation::BentIdentity, Activation::SoftPlus, Activation::Identity})
    for (double x = -50.0; x <= 50.0; x += 1e-3)
      ASSERT_GT(activate_derivative(kind, x), 0.0) << to_string(kind) << " at " << x;
}

TEST(Activation, DerivativeMatchesDifferenceQuotient) {
  for (auto kind : {Activation::BentIdentity, Activation::SoftPlus})
    for (double x : {-3.0, -0.4, 0.0, 0.7, 5.0}) {
      const double h = 1e-6;
      const double fd = (activate(kind, x + h) - activate(kind, x - h)) / (2 * h);
      EXPECT_NEAR(activate_derivative(kind, x), fd, 1e-8);
    }
}

TEST(Forward, ZeroParametersGiveZero) {
  const auto arch = MlpArchitecture::parse("2-10-10-1");
  const Vector x = Vector::Constant(2, 0.3);
  EXPECT_EQ(evaluate(arch, zero_parameters(arch), as_span(x)), 0.0);
}

TEST(Forward, SingleAffineUnit) {
  const MlpArchitecture arch({1, 1}, Activation::Identity);
  ParameterSet p = zero_parameters(arch);
  p.layers[0](0, 0) = 2.0;  // weight
  p.layers[0](1, 0) = 1.0;  // bias
  const Vector x = Vector::Constant(1, 3.0);
  EXPECT_EQ(evaluate(arch, p, as_span(x)), 7.0);
}

TEST(Forward, TraceShapes) {
  const auto arch = MlpArchitecture::parse("2-7-5-1");
  const ParameterSet p = init_uniform(arch, 3);
  const Vector x = Vector::LinSpaced(2, -0.5, 0.2);
  const ForwardTrace t = forward(arch, p, as_span(x));
  ASSERT_EQ(t.outputs.size(), 4u);
  ASSERT_EQ(t.derivatives.size(), 3u);
  EXPECT_EQ(t.outputs[0], x);
  for (int l = 0; l <= arch.num_layers(); ++l) EXPECT_EQ(t.outputs[l].size(), arch.widths[l]);
  EXPECT_EQ(t.value(), evaluate(arch, p, as_span(x)));
}

TEST(Forward, MatchesStraightLineRecomputation) {
  const auto arch = MlpArchitecture::parse("2-10-10-1");
  const ParameterSet p = init_uniform(arch, 11);
  Rng rng(5);
  std::uniform_real_distribution<double> pos(-1.2, 0.6), vel(-0.07, 0.07);
  for (int k = 0; k < 50; ++k) {
    const Vector x{{pos(rng), vel(rng)}};
    // Naive layer-by-layer loop over scalar entries.
    std::vector<double> phi(x.data(), x.data() + 2);
    for (int l = 1; l <= arch.num_layers(); ++l) {
      const Matrix& w = p.layers[l - 1];
      std::vector<double> next(arch.widths[l]);
      for (int j = 0; j < arch.widths[l]; ++j) {
        double z = w(arch.widths[l - 1], j);
        for (int i = 0; i < arch.widths[l - 1]; ++i) z += w(i, j) * phi[i];
        next[j] = l == arch.num_layers() ? z : (std::sqrt(z * z + 1.0) - 1.0) / 2.0 + z;
      }
      phi = next;
    }
    const double f = evaluate(arch, p, as_span(x));
    EXPECT_NEAR(f, phi[0], 1e-12 * std::max(1.0, std::abs(phi[0])));
  }
}

TEST(Forward, RejectsWrongInputLength) {
  const auto arch = MlpArchitecture::parse("2-3-1");
  const Vector x = Vector::Zero(3);
  EXPECT_THROW(forward(arch, zero_parameters(arch), as_span(x)), std::invalid_argument);
}

TEST(Vectorize, ColumnMajorOrder) {
  const MlpArchitecture wide({1, 2, 1}, Activation::Identity);
  ParameterSet p = zero_parameters(wide);
  p.layers[0] << 1.0, 3.0,  // [[a, c], [b, d]]
      2.0, 4.0;
  const Vector flat = vectorize(p);
  EXPECT_EQ(flat.head(4), (Vector{{1.0, 2.0, 3.0, 4.0}}));
  EXPECT_EQ(flat.size(), 7);
}

TEST(Vectorize, RoundTripsAreExact) {
  for (const char* spec : {"2-7-1", "2-10-10-1", "5-10-10-1", "1-1"}) {
    const auto arch = MlpArchitecture::parse(spec);
    const ParameterSet p = init_uniform(arch, 42);
    const Vector flat = vectorize(p);
    EXPECT_EQ(flat.size(), num_parameters(arch));
    const ParameterSet back = unvectorize(arch, flat);
    for (std::size_t l = 0; l < p.layers.size(); ++l) EXPECT_EQ(back.layers[l], p.layers[l]);
    EXPECT_EQ(vectorize(back), flat);
  }
}

TEST(Vectorize, PrefixReconstructsFirstLayer) {
  const auto arch = MlpArchitecture::parse("3-4-1");
  const ParameterSet p = init_uniform(arch, 8);
  const Vector flat = vectorize(p);
  const Eigen::Map<const Matrix> first(flat.data(), 4, 4);
  EXPECT_EQ(Matrix(first), p.layers[0]);
}

TEST(Vectorize, WrongLengthRejected) {
  const auto arch = MlpArchitecture::parse("2-3-1");
  EXPECT_THROW(unvectorize(arch, Vector::Zero(5)), std::invalid_argument);
}

TEST(InitUniform, Deterministic) {
  const auto arch = MlpArchitecture::parse("2-10-10-1");
  EXPECT_EQ(vectorize(init_uniform(arch, 7)), vectorize(init_uniform(arch, 7)));
  EXPECT_NE(vectorize(init_uniform(arch, 7)), vectorize(init_uniform(arch, 8)));
}

TEST(InitUniform, DegenerateIntervalRejected) {
  const auto arch = MlpArchitecture::parse("2-3-1");
  EXPECT_THROW(init_uniform(arch, 1, 0.5, 0.5), std::invalid_argument);
}

TEST(InitUniform, EmpiricalMeanAndRange) {
  // 34 draws of a 2998-parameter net: just over 10^5 entries.
  const auto arch = MlpArchitecture::parse("1-999-1");
  double sum = 0.0, lo = 1.0, hi = -1.0;
  std::int64_t count = 0;
  for (std::uint64_t s = 0; s < 34; ++s) {
    const Vector v = vectorize(init_uniform(arch, s));
    sum += v.sum();
    lo = std::min(lo, v.minCoeff());
    hi = std::max(hi, v.maxCoeff());
    count += v.size();
  }
  ASSERT_GE(count, 100'000);
  EXPECT_NEAR(sum / count, 0.0, 0.02);
  EXPECT_GE(lo, -1.0);
  EXPECT_LE(hi, 1.0);
}

TEST(Checkpoint, RoundTrip) {
  const auto arch = MlpArchitecture::parse("5-10-10-1");
  const ParameterSet p = init_uniform(arch, 99);
  const auto path = std::filesystem::temp_directory_path() / "gnrg_test_checkpoint.bin";
  save_parameters(path, arch, p);
  EXPECT_EQ(read_checkpoint_widths(path), arch.widths);
  EXPECT_EQ(vectorize(load_parameters(path, arch)), vectorize(p));
  EXPECT_THROW(load_parameters(path, MlpArchitecture::parse("5-10-1")), std::invalid_argument);
  std::filesystem::remove(path);
}

TEST(Checkpoint, TruncatedFileRejected) {
  const auto arch = MlpArchitecture::parse("2-3-1");
  const auto path = std::filesystem::temp_directory_path() / "gnrg_test_truncated.bin";
  save_parameters(path, arch, init_uniform(arch, 1));
  std::filesystem::resize_file(path, std::filesystem::file_size(path) - 4);
  EXPECT_THROW(load_parameters(path, arch), std::runtime_error);
  std::filesystem::remove(path);
}
