#include "gnrg/mlp.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "gnrg/random.hpp"

namespace gnrg {

double activate(Activation kind, double x) {
  switch (kind) {
    case Activation::BentIdentity:
      return 0.5 * (std::sqrt(x * x + 1.0) - 1.0) + x;
    case Activation::SoftPlus:
      // log(1 + e^x) = max(x, 0) + log1p(e^{-|x|})
      return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
    case Activation::Identity:
      return x;
  }
  throw std::logic_error("unknown activation");
}

double activate_derivative(Activation kind, double x) {
  switch (kind) {
    case Activation::BentIdentity:
      return x / (2.0 * std::sqrt(x * x + 1.0)) + 1.0;
    case Activation::SoftPlus:
      if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
      else {
        const double e = std::exp(x);
        return e / (1.0 + e);
      }
    case Activation::Identity:
      return 1.0;
  }
  throw std::logic_error("unknown activation");
}

std::string_view to_string(Activation kind) {
  switch (kind) {
    case Activation::BentIdentity: return "bent-id";
    case Activation::SoftPlus: return "softplus";
    case Activation::Identity: return "identity";
  }
  return "?";
}

Activation parse_activation(std::string_view name) {
  if (name == "bent-id" || name == "bentid" || name == "bent-identity") return Activation::BentIdentity;
  if (name == "softplus") return Activation::SoftPlus;
  if (name == "identity") return Activation::Identity;
  throw std::invalid_argument("unknown activation: " + std::string(name));
}

MlpArchitecture::MlpArchitecture(std::vector<int> layer_widths, Activation hidden_kind)
    : widths(std::move(layer_widths)) {
  if (widths.size() >= 2) hidden.assign(widths.size() - 2, hidden_kind);
  validate();
}

MlpArchitecture::MlpArchitecture(std::vector<int> layer_widths,
                                 std::vector<Activation> hidden_kinds)
    : widths(std::move(layer_widths)), hidden(std::move(hidden_kinds)) {
  validate();
}

MlpArchitecture MlpArchitecture::parse(std::string_view spec, Activation hidden_kind) {
  std::vector<int> widths;
  std::size_t pos = 0;
  while (pos <= spec.size()) {
    const auto dash = spec.find('-', pos);
    const auto token = spec.substr(pos, dash == std::string_view::npos ? spec.npos : dash - pos);
    int w = 0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), w);
    if (ec != std::errc{} || ptr != token.data() + token.size() || token.empty())
      throw std::invalid_argument("malformed architecture: " + std::string(spec));
    widths.push_back(w);
    if (dash == std::string_view::npos) break;
    pos = dash + 1;
  }
  return MlpArchitecture(std::move(widths), hidden_kind);
}

Activation MlpArchitecture::layer_activation(int layer) const {
  return layer == num_layers() ? Activation::Identity : hidden[layer - 1];
}

std::string MlpArchitecture::to_string() const {
  std::string s;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    if (i) s += '-';
    s += std::to_string(widths[i]);
  }
  return s;
}

void MlpArchitecture::validate() const {
  if (widths.size() < 2) throw std::invalid_argument("architecture needs at least one layer");
  for (int w : widths)
    if (w < 1) throw std::invalid_argument("layer widths must be >= 1");
  if (widths.back() != 1) throw std::invalid_argument("output layer must have exactly one unit");
  if (hidden.size() != widths.size() - 2)
    throw std::invalid_argument("one activation per hidden layer required");
}

std::int64_t num_parameters(const MlpArchitecture& arch) {
  std::int64_t n = 0;
  for (int l = 1; l <= arch.num_layers(); ++l)
    n += static_cast<std::int64_t>(arch.widths[l - 1] + 1) * arch.widths[l];
  return n;
}

std::int64_t ParameterSet::size() const {
  std::int64_t n = 0;
  for (const auto& w : layers) n += w.size();
  return n;
}

bool ParameterSet::matches(const MlpArchitecture& arch) const {
  if (static_cast<int>(layers.size()) != arch.num_layers()) return false;
  for (int l = 1; l <= arch.num_layers(); ++l) {
    const auto& w = layers[l - 1];
    if (w.rows() != arch.widths[l - 1] + 1 || w.cols() != arch.widths[l]) return false;
  }
  return true;
}

bool ParameterSet::all_finite() const {
  for (const auto& w : layers)
    if (!w.allFinite()) return false;
  return true;
}

namespace {

void check_shapes(const MlpArchitecture& arch, const ParameterSet& params,
                  std::span<const double> input) {
  if (!params.matches(arch)) throw std::invalid_argument("parameters do not match architecture");
  if (static_cast<int>(input.size()) != arch.input_dim())
    throw std::invalid_argument("input length does not match architecture");
}

}  // namespace

ForwardTrace forward(const MlpArchitecture& arch, const ParameterSet& params,
                     std::span<const double> input) {
  check_shapes(arch, params, input);
  const int depth = arch.num_layers();
  ForwardTrace trace;
  trace.outputs.reserve(depth + 1);
  trace.derivatives.reserve(depth);
  trace.outputs.emplace_back(
      Eigen::Map<const Vector>(input.data(), static_cast<Eigen::Index>(input.size())));
  for (int l = 1; l <= depth; ++l) {
    const Matrix& w = params.layers[l - 1];
    const Vector& prev = trace.outputs.back();
    const auto n_in = prev.size();
    // W^T [phi; 1] = W_top^T phi + bias
    Vector pre = w.topRows(n_in).transpose() * prev + w.row(n_in).transpose();
    const Activation kind = arch.layer_activation(l);
    Vector deriv(pre.size());
    for (Eigen::Index j = 0; j < pre.size(); ++j) {
      deriv(j) = activate_derivative(kind, pre(j));
      pre(j) = activate(kind, pre(j));
    }
    trace.outputs.push_back(std::move(pre));
    trace.derivatives.push_back(std::move(deriv));
  }
  return trace;
}

double evaluate(const MlpArchitecture& arch, const ParameterSet& params,
                std::span<const double> input) {
  check_shapes(arch, params, input);
  Vector phi = Eigen::Map<const Vector>(input.data(), static_cast<Eigen::Index>(input.size()));
  for (int l = 1; l <= arch.num_layers(); ++l) {
    const Matrix& w = params.layers[l - 1];
    const auto n_in = phi.size();
    Vector pre = w.topRows(n_in).transpose() * phi + w.row(n_in).transpose();
    const Activation kind = arch.layer_activation(l);
    if (kind != Activation::Identity)
      for (Eigen::Index j = 0; j < pre.size(); ++j) pre(j) = activate(kind, pre(j));
    phi = std::move(pre);
  }
  return phi(0);
}

Vector vectorize(const ParameterSet& params) {
  Vector flat(params.size());
  Eigen::Index offset = 0;
  for (const auto& w : params.layers) {
    // Eigen storage is column-major, so the raw buffer is already vec(W).
    flat.segment(offset, w.size()) = Eigen::Map<const Vector>(w.data(), w.size());
    offset += w.size();
  }
  return flat;
}

ParameterSet unvectorize(const MlpArchitecture& arch, const Vector& flat) {
  if (flat.size() != num_parameters(arch))
    throw std::invalid_argument("flat parameter vector has wrong length");
  ParameterSet params;
  params.layers.reserve(arch.num_layers());
  Eigen::Index offset = 0;
  for (int l = 1; l <= arch.num_layers(); ++l) {
    const int rows = arch.widths[l - 1] + 1;
    const int cols = arch.widths[l];
    params.layers.emplace_back(
        Eigen::Map<const Matrix>(flat.data() + offset, rows, cols));
    offset += static_cast<Eigen::Index>(rows) * cols;
  }
  return params;
}

ParameterSet zero_parameters(const MlpArchitecture& arch) {
  ParameterSet params;
  for (int l = 1; l <= arch.num_layers(); ++l)
    params.layers.push_back(Matrix::Zero(arch.widths[l - 1] + 1, arch.widths[l]));
  return params;
}

ParameterSet init_uniform(const MlpArchitecture& arch, std::uint64_t seed, double lo, double hi) {
  if (!(lo < hi)) throw std::invalid_argument("init_uniform requires lo < hi");
  Rng rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  ParameterSet params = zero_parameters(arch);
  for (auto& w : params.layers)
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = dist(rng);
  return params;
}

namespace {

template <typename T>
void write_le(std::ostream& out, T value) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  const U bits = std::bit_cast<U>(value);
  std::array<char, sizeof(U)> bytes{};
  for (std::size_t i = 0; i < sizeof(U); ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
  out.write(bytes.data(), bytes.size());
}

template <typename T>
T read_le(std::istream& in) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  std::array<unsigned char, sizeof(U)> bytes{};
  in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (!in) throw std::runtime_error("truncated checkpoint");
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) bits |= static_cast<U>(bytes[i]) << (8 * i);
  return std::bit_cast<T>(bits);
}

std::vector<int> read_widths(std::istream& in) {
  const auto count = read_le<std::uint32_t>(in);
  if (count < 2 || count > 1024) throw std::runtime_error("corrupt checkpoint header");
  std::vector<int> widths(count);
  for (auto& w : widths) w = static_cast<int>(read_le<std::uint32_t>(in));
  return widths;
}

}  // namespace

void save_parameters(const std::filesystem::path& path, const MlpArchitecture& arch,
                     const ParameterSet& params) {
  if (!params.matches(arch)) throw std::invalid_argument("parameters do not match architecture");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  write_le(out, static_cast<std::uint32_t>(arch.widths.size()));
  for (int w : arch.widths) write_le(out, static_cast<std::uint32_t>(w));
  const Vector flat = vectorize(params);
  for (Eigen::Index i = 0; i < flat.size(); ++i) write_le(out, flat(i));
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::vector<int> read_checkpoint_widths(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_widths(in);
}

ParameterSet load_parameters(const std::filesystem::path& path, const MlpArchitecture& arch) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  if (read_widths(in) != arch.widths)
    throw std::invalid_argument("checkpoint architecture mismatch");
  Vector flat(num_parameters(arch));
  for (Eigen::Index i = 0; i < flat.size(); ++i) flat(i) = read_le<double>(in);
  if (in.peek() != std::char_traits<char>::eof())
    throw std::runtime_error("trailing bytes in checkpoint");
  return unvectorize(arch, flat);
}

}  // namespace gnrg
