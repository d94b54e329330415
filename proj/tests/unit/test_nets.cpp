#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "mrlab/nets.hpp"
#include "mrlab/rng.hpp"

using namespace mrlab;

namespace {

Network zero_network(const MLPSpec& spec, double output_bias = 0.0) {
  Rng rng = make_rng(0, 0);
  Network n = mlp_init(spec, rng);
  std::vector<Tensor> p;
  for (const Tensor& t : n.parameters()) p.push_back(Tensor::zeros(t.rows(), t.cols()));
  p.back() = Tensor::full(1, spec.output_dim, output_bias);
  return Network(spec, p);
}

}  // namespace

TEST_CASE("parameter count formula") {
  const MLPSpec spec{2, {16, 16}, 2};
  CHECK(spec.parameter_count() == 354);
  Rng rng = make_rng(1, 0);
  CHECK(mlp_init(spec, rng).parameter_count() == 354);
}

TEST_CASE("init is deterministic, biases are zero, weights within the bound") {
  const MLPSpec spec{3, {8, 8, 8}, 2};
  Rng r1 = make_rng(5, 1), r2 = make_rng(5, 1);
  const Network a = mlp_init(spec, r1), b = mlp_init(spec, r2);
  for (std::size_t i = 0; i < a.parameters().size(); ++i) {
    const auto va = a.parameters()[i].values(), vb = b.parameters()[i].values();
    CHECK(std::equal(va.begin(), va.end(), vb.begin()));
  }
  for (std::size_t l = 0; l < 4; ++l) {
    const Tensor& w = a.parameters()[2 * l];
    const double bound = std::sqrt(6.0 / static_cast<double>(w.rows()));
    for (double v : w.values()) CHECK(std::abs(v) <= bound);
    for (double v : a.parameters()[2 * l + 1].values()) CHECK(v == 0.0);
  }
}

TEST_CASE("spec validation") {
  CHECK_THROWS_AS((MLPSpec{1, {}, 1}.validate()), ConfigError);
  CHECK_THROWS_AS((MLPSpec{1, {4, 0}, 1}.validate()), ConfigError);
  CHECK_THROWS_AS((MLPSpec{1, {4}, 0}.validate()), ConfigError);
  CHECK_NOTHROW((MLPSpec{0, {4}, 2}.validate()));
  CHECK(parse_activation("leaky_relu") == Activation::leaky_relu);
  CHECK_THROWS_AS(parse_activation("relu6"), ConfigError);
}

TEST_CASE("set_parameters validates shapes") {
  const MLPSpec spec{2, {4}, 1};
  Rng rng = make_rng(2, 0);
  Network n = mlp_init(spec, rng);
  std::vector<Tensor> p = n.parameters();
  p[0] = Tensor::zeros(3, 4);
  CHECK_THROWS_AS(n.set_parameters(p), ShapeError);
  p.pop_back();
  CHECK_THROWS_AS(n.set_parameters(p), ShapeError);
}

TEST_CASE("generator forward contracts") {
  Rng rng = make_rng(3, 0);
  const Network g = mlp_init({8, {16, 16, 16}, 2}, rng);
  const Tensor z = standard_normal(5, 8, rng);
  const Tensor y = generator_forward(g, Tensor::zeros(5, 0), z);
  CHECK(y.shape() == Shape{5, 2});
  const Tensor y2 = generator_forward(g, Tensor::zeros(5, 0), z);
  for (std::size_t i = 0; i < y.size(); ++i) CHECK(y[i] == y2[i]);

  const Network zg = zero_network({9, {4, 4, 4}, 1}, 0.75);
  const Tensor out = generator_forward(zg, Tensor::full(3, 1, 0.2), standard_normal(3, 8, rng));
  for (double v : out.values()) CHECK(v == 0.75);
  CHECK_THROWS_AS(generator_forward(zg, Tensor::zeros(3, 1), standard_normal(2, 8, rng)), ShapeError);
}

TEST_CASE("generator_sample_k layout, degenerate case and noise dependence") {
  Rng rng = make_rng(4, 0);
  const Network zg = zero_network({9, {4, 4, 4}, 1}, -0.5);
  const Tensor x = Tensor::column({0.1, 0.2, 0.3});
  const GeneratorSamples s = generator_sample_k(zg, x, 2, rng);
  REQUIRE(s.samples.size() == 2);
  for (const Tensor& t : s.samples)
    for (double v : t.values()) CHECK(v == -0.5);
  CHECK(s.stacked.rows() == 6);
  CHECK(s.x_tiled(4, 0) == x(1, 0));
  CHECK_THROWS_AS(generator_sample_k(zg, x, 1, rng), ConfigError);

  const Network g = mlp_init({9, {16, 16, 16}, 1}, rng);
  Rng a = make_rng(10, 0), b = make_rng(11, 0);
  const GeneratorSamples sa = generator_sample_k(g, x, 10, a);
  const GeneratorSamples sb = generator_sample_k(g, x, 10, b);
  CHECK(sa.samples[0][0] != sb.samples[0][0]);
  // row i·B + b of stacked is sample i of row b
  CHECK(sa.stacked(2 * 3 + 1, 0) == sa.samples[2](1, 0));

  // Var over 100 z draws at a fixed x is positive.
  const GeneratorSamples many = generator_sample_k(g, Tensor::column({0.3}), 100, a);
  double m = 0.0, v = 0.0;
  for (const Tensor& t : many.samples) m += t[0] / 100.0;
  for (const Tensor& t : many.samples) v += (t[0] - m) * (t[0] - m);
  CHECK(v > 0.0);
}

TEST_CASE("discriminator forward") {
  const Network zd = zero_network({3, {4, 4}, 1, Activation::leaky_relu, Activation::sigmoid});
  const Tensor out = discriminator_forward(zd, Tensor::column({1, 2}), Tensor::from_rows({{3, 4}, {5, 6}}));
  for (double v : out.values()) CHECK(v == 0.5);

  Rng rng = make_rng(6, 0);
  const Network d = mlp_init({2, {16, 16}, 1, Activation::leaky_relu, Activation::sigmoid}, rng);
  const Tensor o = discriminator_forward(d, Tensor::zeros(50, 0), standard_normal(50, 2, rng) * 5.0);
  for (double v : o.values()) CHECK((v > 0.0 && v < 1.0));

  const Network lin = mlp_init({2, {4}, 1}, rng);
  CHECK_THROWS_AS(discriminator_forward(lin, Tensor::zeros(1, 0), Tensor::zeros(1, 2)), ConfigError);
}

TEST_CASE("predictor forward") {
  const Network zp = zero_network({1, {4, 4}, 2});
  const PredictorOutput out = predictor_forward(zp, Tensor::column({0.3, -0.4}), Family::laplace);
  CHECK(out.family == Family::laplace);
  for (double v : out.location.values()) CHECK(v == 0.0);
  for (double v : out.dispersion().to_vector()) CHECK(v == 1.0);

  Rng rng = make_rng(7, 0);
  const Network p = mlp_init({1, {16, 16}, 4}, rng);
  const PredictorOutput o = predictor_forward(p, uniform(20, 1, -50, 50, rng), Family::gaussian);
  CHECK(o.location.shape() == Shape{20, 2});
  for (double v : o.dispersion().to_vector()) CHECK(v > 0.0);

  const Network odd = mlp_init({1, {4}, 3}, rng);
  CHECK_THROWS_AS(predictor_forward(odd, Tensor::column({0.0}), Family::gaussian), ShapeError);
}

TEST_CASE("forward passes do not mutate the network") {
  Rng rng = make_rng(8, 0);
  const Network g = mlp_init({2, {8}, 1}, rng);
  const std::vector<double> before = g.parameters()[0].to_vector();
  Tape tape;
  const Network bound = g.bind(tape);
  (void)tape.backward(sum(bound.forward(Tensor::row({0.5, -0.5}))));
  CHECK(g.parameters()[0].to_vector() == before);
}

TEST_CASE("checkpoint round trip is bit exact") {
  Rng rng = make_rng(9, 0);
  const MLPSpec spec{3, {5, 7}, 2, Activation::tanh, Activation::linear, 0.1};
  const Network n = mlp_init(spec, rng);
  std::vector<Tensor> p = n.parameters();
  p[1] = uniform(1, 5, -1e-300, 1e300, rng);
  const Network src(spec, p);
  const auto path = std::filesystem::temp_directory_path() / "mrlab_test_ckpt.txt";
  save_checkpoint(path, {{"predictor", 42, 17, "laplace"}, src});
  const Checkpoint c = load_checkpoint(path);
  CHECK(c.header.role == "predictor");
  CHECK(c.header.seed == 42);
  CHECK(c.header.step == 17);
  CHECK(c.header.family == "laplace");
  CHECK(c.network.spec() == spec);
  for (std::size_t i = 0; i < p.size(); ++i) CHECK(c.network.parameters()[i].to_vector() == p[i].to_vector());
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_checkpoint(path), ConfigError);
}
