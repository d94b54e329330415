#include "mrlab/gradcheck.hpp"

#include <cmath>

#include "mrlab/losses.hpp"
#include "mrlab/nets.hpp"
#include "mrlab/rng.hpp"

namespace mrlab {

namespace {

// Random values with |v| ≥ margin, keeping kinks of abs/leaky_relu out of reach
// of the finite-difference step.
Tensor nudged(std::size_t rows, std::size_t cols, double margin, Rng& rng) {
  Tensor t = uniform(rows, cols, -1.0, 1.0, rng);
  std::vector<double> v = t.to_vector();
  for (double& x : v) x = x >= 0 ? x + margin : x - margin;
  return Tensor(rows, cols, std::move(v));
}

// Scalarizes an op output with fixed random weights so every entry of the
// incoming gradient differs.
struct Probe {
  Tensor weights;
  Tensor operator()(const Tensor& out) const { return sum(out * weights); }
};

Probe probe_for(Shape s, Rng& rng) { return {uniform(s.rows, s.cols, 0.5, 1.5, rng)}; }

}  // namespace

std::vector<GradcheckItem> run_gradcheck(const GradcheckOptions& opts) {
  Rng rng = make_rng(opts.seed, 0x9c);
  std::vector<GradcheckItem> items;
  auto check = [&](const std::string& name, const LossFn& fn, const std::vector<Tensor>& params, double threshold) {
    items.push_back({name, finite_diff_check(fn, params, opts.h), threshold});
  };
  auto op = [&](const std::string& name, const LossFn& fn, const std::vector<Tensor>& params) {
    check(name, fn, params, opts.op_threshold);
  };

  const std::size_t r = 3, c = 4;
  const Tensor a = nudged(r, c, 1e-3, rng);
  const Tensor b = nudged(r, c, 1e-3, rng);
  const Tensor pos = uniform(r, c, 0.5, 2.0, rng);
  const Probe pr = probe_for({r, c}, rng);

  auto unary_item = [&](const std::string& name, auto f, const Tensor& in) {
    op(name, [=](std::span<const Tensor> p) { return pr(f(p[0])); }, {in});
  };
  unary_item("neg", [](const Tensor& t) { return neg(t); }, a);
  unary_item("square", [](const Tensor& t) { return square(t); }, a);
  unary_item("abs", [](const Tensor& t) { return abs(t); }, a);
  unary_item("log", [](const Tensor& t) { return log(t); }, pos);
  unary_item("exp", [](const Tensor& t) { return exp(t); }, a);
  unary_item("tanh", [](const Tensor& t) { return tanh(t); }, a);
  unary_item("sigmoid", [](const Tensor& t) { return sigmoid(t); }, a);
  unary_item("leaky_relu", [](const Tensor& t) { return leaky_relu(t, 0.2); }, a);
  unary_item("clamp", [](const Tensor& t) { return clamp(t, -5.0, 5.0); }, a);
  unary_item("clamp_min", [](const Tensor& t) { return clamp_min(t, 1e-6); }, pos);

  auto binary_item = [&](const std::string& name, auto f, const Tensor& lhs, const Tensor& rhs) {
    const Probe bp = probe_for(f(lhs, rhs).shape(), rng);
    op(name, [=](std::span<const Tensor> p) { return bp(f(p[0], p[1])); }, {lhs, rhs});
  };
  binary_item("add", [](const Tensor& x, const Tensor& y) { return add(x, y); }, a, b);
  binary_item("sub", [](const Tensor& x, const Tensor& y) { return sub(x, y); }, a, b);
  binary_item("mul", [](const Tensor& x, const Tensor& y) { return mul(x, y); }, a, b);
  binary_item("div", [](const Tensor& x, const Tensor& y) { return div(x, y); }, a, pos);
  binary_item("mul_scalar_broadcast", [](const Tensor& x, const Tensor& y) { return mul(x, y); }, Tensor::scalar(1.3), a);
  binary_item("div_scalar_broadcast", [](const Tensor& x, const Tensor& y) { return div(x, y); }, a, Tensor::scalar(0.7));
  binary_item("matmul", [](const Tensor& x, const Tensor& y) { return matmul(x, y); }, a, uniform(c, 2, -1, 1, rng));
  binary_item("concat_cols", [](const Tensor& x, const Tensor& y) { return concat(x, y, Axis::cols); }, a,
              uniform(r, 2, -1, 1, rng));
  binary_item("concat_rows", [](const Tensor& x, const Tensor& y) { return concat(x, y, Axis::rows); }, a,
              uniform(2, c, -1, 1, rng));

  {
    const Tensor w = uniform(c, 5, -1, 1, rng);
    const Tensor bias = uniform(1, 5, -1, 1, rng);
    const Probe ap = probe_for({r, 5}, rng);
    op("affine", [=](std::span<const Tensor> p) { return ap(affine(p[0], p[1], p[2])); }, {a, w, bias});
  }
  op("mean", [](std::span<const Tensor> p) { return mean(square(p[0])); }, {a});
  op("sum", [](std::span<const Tensor> p) { return sum(square(p[0])); }, {a});
  {
    const Probe sp = probe_for({2, c}, rng);
    op("slice_rows", [=](std::span<const Tensor> p) { return sp(slice_rows(p[0], 1, 2)); }, {a});
    const Probe cp = probe_for({r, 2}, rng);
    op("slice_cols", [=](std::span<const Tensor> p) { return cp(slice_cols(p[0], 1, 2)); }, {a});
    const Probe tp = probe_for({3 * r, c}, rng);
    op("tile_rows", [=](std::span<const Tensor> p) { return tp(tile_rows(p[0], 3)); }, {a});
  }
  for (std::size_t k : {5u, 4u}) {
    std::vector<Tensor> terms;
    for (std::size_t i = 0; i < k; ++i) terms.push_back(uniform(r, c, -1, 1, rng));
    op("sum_of(K=" + std::to_string(k) + ")", [=](std::span<const Tensor> p) { return pr(sum_of(p)); }, terms);
    op("median_of(K=" + std::to_string(k) + ")", [=](std::span<const Tensor> p) { return pr(median_of(p)); }, terms);
  }
  op("gradient_stop", [=](std::span<const Tensor> p) { return pr(gradient_stop(p[0]) * p[0]); }, {a});

  if (opts.corrupted_fixture) {
    // Derivative registered as 3x instead of 2x.
    op("corrupted_square (fixture)",
       [=](std::span<const Tensor> p) {
         return pr(map_unary(p[0], [](double x) { return x * x; }, [](double x) { return 3.0 * x; }));
       },
       {a});
  }

  // ---- composite losses on random 3-hidden-layer MLPs --------------------
  const std::size_t dx = 1, dy = 2, noise = 3, batch = 3, k = 5;
  const std::vector<std::size_t> widths{8, 8, 8};
  const Network g = mlp_init({dx + noise, widths, dy, Activation::tanh, Activation::linear}, rng);
  const Network d = mlp_init({dx + dy, widths, 1, Activation::tanh, Activation::sigmoid}, rng);
  const Network p_gauss = mlp_init({dx, widths, 2 * dy, Activation::tanh, Activation::linear}, rng);
  const Network p_laplace = mlp_init({dx, widths, 2 * dy, Activation::tanh, Activation::linear}, rng);
  const Tensor x = uniform(batch, dx, -1, 1, rng);
  const Tensor y = uniform(batch, dy, -2, 2, rng);
  const std::uint64_t noise_seed = opts.seed + 101;
  const double lambda_aux = 10.0, lambda_rec = 0.5;

  for (VariantId v : kAllVariants) {
    const VariantTraits t = traits(v);
    if (!t.trains_generator) {
      const MLPSpec ps = p_gauss.spec();
      check("variant " + to_string(v) + " (predictor MLE)",
            [=](std::span<const Tensor> params) {
              const Network p(ps, {params.begin(), params.end()});
              return mle_loss(predictor_forward(p, x, Family::gaussian), y);
            },
            p_gauss.parameters(), opts.loss_threshold);
      continue;
    }
    const MLPSpec gs = g.spec();
    const Network& pnet = t.family == Family::gaussian ? p_gauss : p_laplace;
    check("variant " + to_string(v),
          [=](std::span<const Tensor> params) {
            const Network gb(gs, {params.begin(), params.end()});
            Rng noise_rng = make_rng(noise_seed, 0);
            const GeneratorSamples s = generator_sample_k(gb, x, k, noise_rng);
            LossParts parts;
            parts.gan = gan_g_loss_stacked(d, s.x_tiled, s.stacked);
            std::optional<PredictorOutput> pred;
            if (t.proxy) pred = predictor_forward(pnet, x, t.family);
            parts.aux = variant_aux_loss(v, s.samples, y, pred);
            parts.rec = recon_loss(1, s.samples, y);
            return generator_objective(v, lambda_aux, lambda_rec, parts);
          },
          g.parameters(), opts.loss_threshold);
  }

  {
    const MLPSpec ps = p_laplace.spec();
    check("laplace predictor MLE",
          [=](std::span<const Tensor> params) {
            const Network p(ps, {params.begin(), params.end()});
            return mle_loss(predictor_forward(p, x, Family::laplace), y);
          },
          p_laplace.parameters(), opts.loss_threshold);
    const MLPSpec ds = d.spec();
    Rng fake_rng = make_rng(noise_seed, 1);
    const Tensor fake = generator_forward(g, x, standard_normal(batch, noise, fake_rng));
    check("discriminator loss",
          [=](std::span<const Tensor> params) {
            const Network db(ds, {params.begin(), params.end()});
            return gan_d_loss(db, x, y, fake);
          },
          d.parameters(), opts.loss_threshold);
  }
  return items;
}

}  // namespace mrlab
