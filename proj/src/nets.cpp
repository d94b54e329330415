#include "mrlab/nets.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace mrlab {

std::string to_string(Activation a) {
  switch (a) {
    case Activation::linear: return "linear";
    case Activation::leaky_relu: return "leaky_relu";
    case Activation::tanh: return "tanh";
    case Activation::sigmoid: return "sigmoid";
  }
  return "?";
}

Activation parse_activation(const std::string& name) {
  if (name == "linear") return Activation::linear;
  if (name == "leaky_relu") return Activation::leaky_relu;
  if (name == "tanh") return Activation::tanh;
  if (name == "sigmoid") return Activation::sigmoid;
  throw ConfigError("unknown activation '" + name + "'");
}

std::string to_string(Family f) { return f == Family::gaussian ? "gaussian" : "laplace"; }

Family parse_family(const std::string& name) {
  if (name == "gaussian") return Family::gaussian;
  if (name == "laplace") return Family::laplace;
  throw ConfigError("unknown family '" + name + "'");
}

void MLPSpec::validate() const {
  if (hidden_widths.empty()) throw ConfigError("MLP needs at least one hidden layer");
  for (std::size_t w : hidden_widths) {
    if (w == 0) throw ConfigError("MLP hidden widths must be >= 1");
  }
  if (output_dim == 0) throw ConfigError("MLP output_dim must be >= 1");
}

std::size_t MLPSpec::parameter_count() const {
  std::size_t count = 0;
  std::size_t fan_in = input_dim;
  for (std::size_t w : hidden_widths) {
    count += (fan_in + 1) * w;
    fan_in = w;
  }
  return count + (fan_in + 1) * output_dim;
}

namespace {

std::vector<std::size_t> layer_dims(const MLPSpec& spec) {
  std::vector<std::size_t> dims{spec.input_dim};
  dims.insert(dims.end(), spec.hidden_widths.begin(), spec.hidden_widths.end());
  dims.push_back(spec.output_dim);
  return dims;
}

Tensor activate(const Tensor& a, Activation act, double slope) {
  switch (act) {
    case Activation::linear: return a;
    case Activation::leaky_relu: return leaky_relu(a, slope);
    case Activation::tanh: return tanh(a);
    case Activation::sigmoid: return sigmoid(a);
  }
  return a;
}

}  // namespace

Network::Network(MLPSpec spec, std::vector<Tensor> parameters) : spec_(std::move(spec)) {
  spec_.validate();
  set_parameters(std::move(parameters));
}

void Network::set_parameters(std::vector<Tensor> parameters) {
  const auto dims = layer_dims(spec_);
  const std::size_t layers = dims.size() - 1;
  if (parameters.size() != 2 * layers) {
    throw ShapeError("network expects " + std::to_string(2 * layers) + " parameter tensors, got " +
                     std::to_string(parameters.size()));
  }
  for (std::size_t l = 0; l < layers; ++l) {
    const Shape w{dims[l], dims[l + 1]};
    const Shape b{1, dims[l + 1]};
    if (parameters[2 * l].shape() != w || parameters[2 * l + 1].shape() != b) {
      throw ShapeError("layer " + std::to_string(l) + " expects W " + to_string(w) + " and b " + to_string(b));
    }
  }
  params_ = std::move(parameters);
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const Tensor& p : params_) n += p.size();
  return n;
}

Network Network::bind(Tape& tape) const {
  Network out;
  out.spec_ = spec_;
  out.params_ = tape.watch(params_);
  return out;
}

Tensor Network::forward(const Tensor& input) const {
  if (input.cols() != spec_.input_dim) {
    throw ShapeError("network input has " + std::to_string(input.cols()) + " columns, expected " +
                     std::to_string(spec_.input_dim));
  }
  Tensor h = input;
  const std::size_t layers = params_.size() / 2;
  for (std::size_t l = 0; l < layers; ++l) {
    h = affine(h, params_[2 * l], params_[2 * l + 1]);
    const bool last = l + 1 == layers;
    h = activate(h, last ? spec_.output_activation : spec_.hidden_activation, spec_.leaky_slope);
  }
  return h;
}

Network mlp_init(const MLPSpec& spec, Rng& rng) {
  spec.validate();
  const auto dims = layer_dims(spec);
  std::vector<Tensor> params;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const std::size_t fan_in = dims[l], fan_out = dims[l + 1];
    if (fan_in == 0) {
      params.push_back(Tensor::zeros(0, fan_out));
    } else {
      const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
      params.push_back(uniform(fan_in, fan_out, -bound, bound, rng));
    }
    params.push_back(Tensor::zeros(1, fan_out));
  }
  return Network(spec, std::move(params));
}

// ---------------------------------------------------------------------------

Tensor generator_forward(const Network& g, const Tensor& x, const Tensor& z) {
  if (x.rows() != z.rows()) {
    throw ShapeError("generator: x has " + std::to_string(x.rows()) + " rows, z has " + std::to_string(z.rows()));
  }
  if (x.cols() + z.cols() != g.spec().input_dim) {
    throw ShapeError("generator: dim(x)+dim(z) = " + std::to_string(x.cols() + z.cols()) + ", expected " +
                     std::to_string(g.spec().input_dim));
  }
  return g.forward(x.cols() == 0 ? z : concat(x, z, Axis::cols));
}

GeneratorSamples generator_sample_k(const Network& g, const Tensor& x, std::size_t k, Rng& rng) {
  if (k < 2) throw ConfigError("generator sampling needs K >= 2, got " + std::to_string(k));
  if (x.cols() > g.spec().input_dim) throw ShapeError("generator: x wider than the generator input");
  const std::size_t noise_dim = g.spec().input_dim - x.cols();
  const std::size_t b = x.rows();
  GeneratorSamples out;
  out.x_tiled = tile_rows(x, k);
  const Tensor z = standard_normal(k * b, noise_dim, rng);
  out.stacked = generator_forward(g, out.x_tiled, z);
  out.samples.reserve(k);
  for (std::size_t i = 0; i < k; ++i) out.samples.push_back(slice_rows(out.stacked, i * b, b));
  return out;
}

Tensor discriminator_forward(const Network& d, const Tensor& x, const Tensor& y) {
  if (d.spec().output_activation != Activation::sigmoid) {
    throw ConfigError("discriminator needs a sigmoid output layer");
  }
  if (d.spec().output_dim != 1) throw ShapeError("discriminator must have a single output");
  if (x.rows() != y.rows()) throw ShapeError("discriminator: x and y row counts differ");
  return d.forward(x.cols() == 0 ? y : concat(x, y, Axis::cols));
}

PredictorOutput predictor_forward(const Network& p, const Tensor& x, Family family) {
  const std::size_t out_dim = p.spec().output_dim;
  if (out_dim % 2 != 0) throw ShapeError("predictor output_dim must be 2 x target_dim");
  if (p.spec().output_activation != Activation::linear) throw ConfigError("predictor output must be linear");
  const Tensor h = p.forward(x);
  const std::size_t dy = out_dim / 2;
  return {slice_cols(h, 0, dy), slice_cols(h, dy, dy), family};
}

// ---------------------------------------------------------------------------

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot write checkpoint " + path.string());
  const MLPSpec& s = ckpt.network.spec();
  os << "mrlab-checkpoint 1\n";
  os << "role " << ckpt.header.role << "\n";
  os << "seed " << ckpt.header.seed << "\n";
  os << "step " << ckpt.header.step << "\n";
  os << "input_dim " << s.input_dim << "\n";
  os << "hidden_widths ";
  for (std::size_t i = 0; i < s.hidden_widths.size(); ++i) os << (i ? "," : "") << s.hidden_widths[i];
  os << "\n";
  os << "output_dim " << s.output_dim << "\n";
  os << "hidden_activation " << to_string(s.hidden_activation) << "\n";
  os << "output_activation " << to_string(s.output_activation) << "\n";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", s.leaky_slope);
  os << "leaky_slope " << buf << "\n";
  os << "family " << ckpt.header.family << "\n";
  const auto& params = ckpt.network.parameters();
  os << "tensors " << params.size() << "\n";
  for (const Tensor& t : params) {
    os << "tensor " << t.rows() << " " << t.cols() << "\n";
    const auto v = t.values();
    for (std::size_t i = 0; i < v.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", v[i]);
      os << (i ? " " : "") << buf;
    }
    os << "\n";
  }
  if (!os) throw ConfigError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open checkpoint " + path.string());
  auto expect = [&](const std::string& key) {
    std::string k;
    if (!(is >> k) || k != key) throw ConfigError(path.string() + ": expected '" + key + "', found '" + k + "'");
  };
  Checkpoint ckpt;
  MLPSpec spec;
  std::string magic;
  int version = 0;
  is >> magic >> version;
  if (magic != "mrlab-checkpoint" || version != 1) throw ConfigError(path.string() + ": not an mrlab checkpoint");
  expect("role");
  is >> ckpt.header.role;
  expect("seed");
  is >> ckpt.header.seed;
  expect("step");
  is >> ckpt.header.step;
  expect("input_dim");
  is >> spec.input_dim;
  expect("hidden_widths");
  std::string widths;
  is >> widths;
  spec.hidden_widths.clear();
  std::stringstream ws(widths);
  for (std::string item; std::getline(ws, item, ',');) spec.hidden_widths.push_back(std::stoul(item));
  expect("output_dim");
  is >> spec.output_dim;
  std::string act;
  expect("hidden_activation");
  is >> act;
  spec.hidden_activation = parse_activation(act);
  expect("output_activation");
  is >> act;
  spec.output_activation = parse_activation(act);
  expect("leaky_slope");
  is >> spec.leaky_slope;
  expect("family");
  is >> ckpt.header.family;
  expect("tensors");
  std::size_t count = 0;
  is >> count;
  std::vector<Tensor> params;
  for (std::size_t t = 0; t < count; ++t) {
    expect("tensor");
    std::size_t rows = 0, cols = 0;
    is >> rows >> cols;
    std::vector<double> v(rows * cols);
    for (double& x : v) {
      std::string tok;
      is >> tok;
      x = std::strtod(tok.c_str(), nullptr);
    }
    params.emplace_back(rows, cols, std::move(v));
  }
  if (!is) throw ConfigError(path.string() + ": truncated checkpoint");
  ckpt.network = Network(spec, std::move(params));
  return ckpt;
}

}  // namespace mrlab
