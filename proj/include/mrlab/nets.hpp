#pragma once

// Multilayer perceptrons for the generator G(x, z), the discriminator D(x, y)
// and the moment predictor P(x).

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mrlab/rng.hpp"
#include "mrlab/tensor.hpp"

namespace mrlab {

enum class Activation { linear, leaky_relu, tanh, sigmoid };

std::string to_string(Activation a);
Activation parse_activation(const std::string& name);

struct MLPSpec {
  std::size_t input_dim = 1;
  std::vector<std::size_t> hidden_widths{64, 64, 64};
  std::size_t output_dim = 1;
  Activation hidden_activation = Activation::leaky_relu;
  Activation output_activation = Activation::linear;
  double leaky_slope = 0.2;

  /// Throws ConfigError unless the layer chain is usable. input_dim may be 0
  /// (an unconditional predictor sees no input and learns constants).
  void validate() const;
  /// Σ (fan_in + 1)·fan_out over layers.
  std::size_t parameter_count() const;

  bool operator==(const MLPSpec&) const = default;
};

/// Parameter container. Parameters are stored as [W0, b0, W1, b1, ...] with
/// W of shape fan_in×fan_out and b of shape 1×fan_out.
class Network {
 public:
  Network() = default;
  Network(MLPSpec spec, std::vector<Tensor> parameters);

  const MLPSpec& spec() const { return spec_; }
  const std::vector<Tensor>& parameters() const { return params_; }
  void set_parameters(std::vector<Tensor> parameters);
  std::size_t parameter_count() const;

  /// Copy whose parameters are watched leaves of `tape`.
  Network bind(Tape& tape) const;

  Tensor forward(const Tensor& input) const;

 private:
  MLPSpec spec_;
  std::vector<Tensor> params_;
};

/// Weights ~ U(−√(6/fan_in), +√(6/fan_in)), biases zero.
Network mlp_init(const MLPSpec& spec, Rng& rng);

// ---------------------------------------------------------------------------
// Roles

/// ỹ = G(concat(x, z)). Pass an n×0 tensor for x in unconditional tasks.
Tensor generator_forward(const Network& g, const Tensor& x, const Tensor& z);

/// K noise draws per conditioning row. Sample i of row b sits at row i·B + b of
/// `stacked`; `samples[i]` is the B×dy slice for draw i.
struct GeneratorSamples {
  Tensor x_tiled;
  Tensor stacked;
  std::vector<Tensor> samples;
};

GeneratorSamples generator_sample_k(const Network& g, const Tensor& x, std::size_t k, Rng& rng);

/// D(x, y) ∈ (0, 1), one row per input row. Needs a sigmoid output layer.
Tensor discriminator_forward(const Network& d, const Tensor& x, const Tensor& y);

enum class Family { gaussian, laplace };

std::string to_string(Family f);
Family parse_family(const std::string& name);

/// Location (mean or median) and log dispersion (log variance or log MAD).
struct PredictorOutput {
  Tensor location;
  Tensor log_dispersion;
  Family family = Family::gaussian;

  Tensor dispersion() const { return exp(log_dispersion); }
};

PredictorOutput predictor_forward(const Network& p, const Tensor& x, Family family);

// ---------------------------------------------------------------------------
// Checkpoints
//
// Text format, one item per line:
//   mrlab-checkpoint 1
//   role <generator|discriminator|predictor>
//   seed <u64>
//   step <u64>
//   input_dim <n>
//   hidden_widths <w1,w2,...>
//   output_dim <n>
//   hidden_activation <name>
//   output_activation <name>
//   leaky_slope <value>
//   family <gaussian|laplace|none>
//   tensors <count>
//   tensor <rows> <cols>
//   <rows·cols values, space separated, %.17g>
//   ...
// Values round-trip bit-exactly.

struct CheckpointHeader {
  std::string role;
  std::uint64_t seed = 0;
  std::uint64_t step = 0;
  std::string family = "none";
};

struct Checkpoint {
  CheckpointHeader header;
  Network network;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace mrlab
