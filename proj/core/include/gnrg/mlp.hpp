#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace gnrg {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class Activation { BentIdentity, SoftPlus, Identity };

double activate(Activation kind, double x);
double activate_derivative(Activation kind, double x);

std::string_view to_string(Activation kind);
Activation parse_activation(std::string_view name);

/// Layer widths n_0 ... n_L of a fully connected network with scalar output.
/// Hidden layers use `hidden[l]`; the output layer is always the identity.
struct MlpArchitecture {
  std::vector<int> widths;
  std::vector<Activation> hidden;

  MlpArchitecture() = default;
  MlpArchitecture(std::vector<int> layer_widths, Activation hidden_kind);
  MlpArchitecture(std::vector<int> layer_widths, std::vector<Activation> hidden_kinds);

  /// Parses "2-10-10-1". Every hidden layer gets `hidden_kind`.
  static MlpArchitecture parse(std::string_view spec,
                               Activation hidden_kind = Activation::BentIdentity);

  int num_layers() const { return static_cast<int>(widths.size()) - 1; }
  int input_dim() const { return widths.front(); }
  Activation layer_activation(int layer) const;  // 1-based layer index
  std::string to_string() const;                 // "2-10-10-1"

  /// Throws std::invalid_argument unless L >= 1, all widths >= 1 and n_L == 1.
  void validate() const;

  friend bool operator==(const MlpArchitecture&, const MlpArchitecture&) = default;
};

/// Total number of scalar parameters, bias rows included.
std::int64_t num_parameters(const MlpArchitecture& arch);

/// One (n_{l-1}+1) x n_l matrix per layer; the last row holds the bias.
struct ParameterSet {
  std::vector<Matrix> layers;

  std::int64_t size() const;
  bool matches(const MlpArchitecture& arch) const;
  bool all_finite() const;
};

struct ForwardTrace {
  std::vector<Vector> outputs;      // phi_0 ... phi_L
  std::vector<Vector> derivatives;  // sigma' at the pre-activations of layers 1 ... L

  double value() const { return outputs.back()(0); }
};

ForwardTrace forward(const MlpArchitecture& arch, const ParameterSet& params,
                     std::span<const double> input);

/// Network output without retaining the trace.
double evaluate(const MlpArchitecture& arch, const ParameterSet& params,
                std::span<const double> input);

inline std::span<const double> as_span(const Vector& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

/// Column-stacks every layer matrix and concatenates them in layer order.
Vector vectorize(const ParameterSet& params);
ParameterSet unvectorize(const MlpArchitecture& arch, const Vector& flat);

ParameterSet zero_parameters(const MlpArchitecture& arch);

/// I.i.d. uniform entries on [lo, hi]; identical seeds give identical parameters.
ParameterSet init_uniform(const MlpArchitecture& arch, std::uint64_t seed, double lo = -1.0,
                          double hi = 1.0);

/// Checkpoint format, all little-endian:
///   u32 count, u32 widths[count], f64 values[N_net] in vectorize order.
void save_parameters(const std::filesystem::path& path, const MlpArchitecture& arch,
                     const ParameterSet& params);
/// Reads a checkpoint; the stored widths must equal `arch.widths`.
ParameterSet load_parameters(const std::filesystem::path& path, const MlpArchitecture& arch);
std::vector<int> read_checkpoint_widths(const std::filesystem::path& path);

}  // namespace gnrg
