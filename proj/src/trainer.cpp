#include "mrlab/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

namespace mrlab {

namespace {

// RNG streams of a run.
enum Stream : std::uint64_t {
  kInitG = 1,
  kInitD = 2,
  kInitP = 3,
  kBatches = 4,
  kNoise = 5,
  kPredictorShuffle = 6,
};

void require(bool ok, const std::string& key, const std::string& why) {
  if (!ok) throw ConfigError(key + ": " + why);
}

}  // namespace

void TrainConfig::validate() const {
  dataset.validate();
  require(lr > 0.0, "lr", "must be > 0");
  require(beta1 >= 0.0 && beta1 < 1.0, "beta1", "must be in [0, 1)");
  require(beta2 >= 0.0 && beta2 < 1.0, "beta2", "must be in [0, 1)");
  require(weight_decay >= 0.0, "weight_decay", "must be >= 0");
  require(clip_value > 0.0, "clip_value", "must be > 0");
  require(lambda_aux >= 0.0, "lambda_aux", "must be >= 0");
  require(lambda_rec >= 0.0, "lambda_rec", "must be >= 0");
  const VariantTraits t = traits(variant);
  require(k >= 2 || !t.needs_samples_statistics(), "K", "must be >= 2 for MR/pMR variants");
  require(k >= 1, "K", "must be >= 1");
  require(batch_d > 0, "batch_d", "must be > 0");
  require(batch_g > 0, "batch_g", "must be > 0");
  require(batch_p > 0, "batch_p", "must be > 0");
  require(d_steps_per_g > 0, "d_steps_per_g", "must be > 0");
  require(g_steps_per_d > 0, "g_steps_per_d", "must be > 0");
  require(eval_interval > 0, "eval_interval", "must be > 0");
  require(noise_dim > 0, "noise_dim", "must be > 0");
  require(!hidden_widths.empty(), "hidden_widths", "needs at least one layer");
  for (std::size_t w : hidden_widths) require(w > 0, "hidden_widths", "widths must be >= 1");
  require(predictor_lr > 0.0, "predictor_lr", "must be > 0");
  require(predictor_epochs > 0, "predictor_epochs", "must be > 0");
  require(patience > 0, "patience", "must be > 0");
  require(k_eval >= 2, "k_eval", "must be >= 2");
  require(eval_samples >= 1000, "eval_samples", "must be >= 1000");
}

std::optional<Family> TrainConfig::predictor_family() const {
  const VariantTraits t = traits(variant);
  if (t.proxy) return t.family;
  if (variant == VariantId::mle_only) return family;
  return std::nullopt;
}

MLPSpec generator_spec(const TrainConfig& cfg) {
  const Dims dims = dataset_dims(cfg.dataset.kind);
  return {dims.x + cfg.noise_dim, cfg.hidden_widths, dims.y, cfg.hidden_activation, Activation::linear,
          cfg.leaky_slope};
}

MLPSpec discriminator_spec(const TrainConfig& cfg) {
  const Dims dims = dataset_dims(cfg.dataset.kind);
  return {dims.x + dims.y, cfg.hidden_widths, 1, cfg.hidden_activation, Activation::sigmoid, cfg.leaky_slope};
}

MLPSpec predictor_spec(const TrainConfig& cfg) {
  const Dims dims = dataset_dims(cfg.dataset.kind);
  return {dims.x, cfg.hidden_widths, 2 * dims.y, cfg.hidden_activation, Activation::linear, cfg.leaky_slope};
}

// ---------------------------------------------------------------------------

AmsGradOptions amsgrad_options(const TrainConfig& cfg, double lr) {
  return {lr, cfg.beta1, cfg.beta2, 1e-8, cfg.weight_decay};
}

namespace {

std::string parameter_name(std::size_t index) {
  return std::string(index % 2 ? "b" : "W") + std::to_string(index / 2) + " (parameter " + std::to_string(index) + ")";
}

}  // namespace

void amsgrad_step(std::vector<Tensor>& params, std::span<const Tensor> grads, OptimizerState& state,
                  const AmsGradOptions& opts) {
  if (grads.size() != params.size()) throw ShapeError("amsgrad_step: parameter/gradient count mismatch");
  for (std::size_t p = 0; p < params.size(); ++p) {
    if (grads[p].shape() != params[p].shape()) throw ShapeError("amsgrad_step: gradient shape mismatch for " + parameter_name(p));
    for (double g : grads[p].values()) {
      if (!std::isfinite(g)) throw NumericError("non-finite gradient for " + parameter_name(p));
    }
  }
  if (state.m.empty()) {
    for (const Tensor& p : params) {
      state.m.emplace_back(p.size(), 0.0);
      state.v.emplace_back(p.size(), 0.0);
      state.v_hat.emplace_back(p.size(), 0.0);
    }
  }
  state.t += 1;
  const double bias = 1.0 - std::pow(opts.beta1, static_cast<double>(state.t));
  const double decay = 1.0 - opts.lr * opts.weight_decay;
  for (std::size_t p = 0; p < params.size(); ++p) {
    std::vector<double> theta = params[p].to_vector();
    const auto g = grads[p].values();
    auto& m = state.m[p];
    auto& v = state.v[p];
    auto& vh = state.v_hat[p];
    for (std::size_t i = 0; i < theta.size(); ++i) {
      m[i] = opts.beta1 * m[i] + (1.0 - opts.beta1) * g[i];
      v[i] = opts.beta2 * v[i] + (1.0 - opts.beta2) * g[i] * g[i];
      vh[i] = std::max(vh[i], v[i]);
      theta[i] -= opts.lr * (m[i] / bias) / (std::sqrt(vh[i]) + opts.eps);
      theta[i] *= decay;
    }
    params[p] = Tensor(params[p].rows(), params[p].cols(), std::move(theta));
  }
}

std::vector<Tensor> clip_by_value(std::span<const Tensor> grads, double c) {
  if (!(c > 0.0)) throw ConfigError("clip value must be > 0");
  std::vector<Tensor> out;
  out.reserve(grads.size());
  for (const Tensor& g : grads) {
    std::vector<double> v = g.to_vector();
    for (double& x : v) x = std::clamp(x, -c, c);
    out.emplace_back(g.rows(), g.cols(), std::move(v));
  }
  return out;
}

namespace {

// Backward, clip and step for one network.
void apply_update(Network& net, const Network& bound, Tape& tape, const Tensor& loss, OptimizerState& opt,
                  const AmsGradOptions& opts, double clip) {
  const auto grads = clip_by_value(tape.backward(loss).of(bound.parameters()), clip);
  std::vector<Tensor> params = net.parameters();
  amsgrad_step(params, grads, opt, opts);
  net.set_parameters(std::move(params));
}

}  // namespace

// ---------------------------------------------------------------------------

PredictorResult train_predictor(const Splits& data, const TrainConfig& cfg, Family family) {
  Rng init_rng = make_rng(cfg.seed, kInitP);
  Rng shuffle_rng = make_rng(cfg.seed, kPredictorShuffle);
  PredictorResult result;
  result.family = family;
  Network net = mlp_init(predictor_spec(cfg), init_rng);
  OptimizerState opt;
  const AmsGradOptions opts = amsgrad_options(cfg, cfg.predictor_lr);

  std::vector<std::size_t> order(data.train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  double best = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;
  result.network = net;

  for (std::size_t epoch = 0; epoch < cfg.predictor_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_p) {
      const std::size_t n = std::min(cfg.batch_p, order.size() - start);
      const Batch b = take_rows(data.train, std::span<const std::size_t>(order).subspan(start, n));
      Tape tape;
      const Network bound = net.bind(tape);
      const PredictorOutput out = predictor_forward(bound, b.x, family);
      const Tensor loss = mle_loss(out, b.y);
      if (!std::isfinite(loss.item())) {
        const auto ld = out.log_dispersion.values();
        throw NumericError("predictor training diverged at epoch " + std::to_string(epoch) + " (loss " +
                           std::to_string(loss.item()) + ", log dispersion in [" +
                           std::to_string(*std::min_element(ld.begin(), ld.end())) + ", " +
                           std::to_string(*std::max_element(ld.begin(), ld.end())) + "])");
      }
      apply_update(net, bound, tape, loss, opt, opts, cfg.clip_value);
    }
    const double val = mle_loss(predictor_forward(net, data.val.x, family), data.val.y).item();
    if (!std::isfinite(val)) throw NumericError("predictor validation loss diverged at epoch " + std::to_string(epoch));
    result.val_curve.push_back(val);
    if (val < best) {
      best = val;
      since_best = 0;
      result.best_epoch = epoch;
      result.network = net;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  return result;
}

PredictorResult train_mle_only(const TrainConfig& cfg) {
  cfg.validate();
  TrainConfig c = cfg;
  c.dataset.seed = cfg.seed;
  return train_predictor(make_splits(c.dataset), c, cfg.family);
}

// ---------------------------------------------------------------------------

double discriminator_update(GanState& state, const Batch& real, const TrainConfig& cfg, Rng& noise_rng) {
  const Tensor z = standard_normal(real.size(), cfg.noise_dim, noise_rng);
  const Tensor fake = generator_forward(state.g, real.x, z);
  Tape tape;
  const Network d = state.d.bind(tape);
  const Tensor loss = gan_d_loss(d, real.x, real.y, fake);
  const double value = loss.item();
  if (!std::isfinite(value)) throw NumericError("discriminator loss is not finite");
  apply_update(state.d, d, tape, loss, state.d_opt, amsgrad_options(cfg, cfg.lr), cfg.clip_value);
  return value;
}

GeneratorLosses generator_update(VariantId variant, GanState& state, const std::optional<Network>& predictor,
                                 const Batch& batch, const TrainConfig& cfg, Rng& noise_rng) {
  const VariantTraits t = traits(variant);
  if (!t.trains_generator) throw ConfigError(to_string(variant) + " does not train a generator");
  if (t.proxy && !predictor) throw ConfigError(to_string(variant) + " needs a pretrained predictor");
  if (t.needs_samples_statistics() && cfg.k < 2) throw ConfigError("K must be >= 2 for " + to_string(variant));

  Tape tape;
  const Network g = state.g.bind(tape);
  const GeneratorSamples s = generator_sample_k(g, batch.x, std::max<std::size_t>(cfg.k, 2), noise_rng);

  LossParts parts;
  parts.gan = gan_g_loss_stacked(state.d, s.x_tiled, s.stacked);
  std::optional<PredictorOutput> pred;
  if (t.proxy) pred = predictor_forward(*predictor, batch.x, t.family);
  parts.aux = variant_aux_loss(variant, s.samples, batch.y, pred);
  if (cfg.lambda_rec != 0.0) parts.rec = recon_loss(1, s.samples, batch.y);
  const Tensor total = generator_objective(variant, cfg.lambda_aux, cfg.lambda_rec, parts);

  GeneratorLosses out;
  out.gan = parts.gan.item();
  if (parts.aux) out.aux = parts.aux->item();
  if (parts.rec) out.rec = parts.rec->item();
  out.total = total.item();
  if (!std::isfinite(out.total)) throw NumericError("generator loss is not finite");
  apply_update(state.g, g, tape, total, state.g_opt, amsgrad_options(cfg, cfg.lr), cfg.clip_value);
  return out;
}

GanResult train_gan(const TrainConfig& cfg, const TrainCallbacks& callbacks) {
  cfg.validate();
  const VariantTraits t = traits(cfg.variant);
  if (!t.trains_generator) throw ConfigError("train_gan: use train_mle_only for " + to_string(cfg.variant));

  DatasetSpec data_spec = cfg.dataset;
  data_spec.seed = cfg.seed;
  const Splits data = make_splits(data_spec);

  GanResult result;
  std::optional<Network> predictor;
  if (const auto fam = cfg.predictor_family()) {
    result.predictor = train_predictor(data, cfg, *fam);
    predictor = result.predictor->network;
    if (callbacks.on_predictor) callbacks.on_predictor(*result.predictor);
  }

  Rng init_g = make_rng(cfg.seed, kInitG);
  Rng init_d = make_rng(cfg.seed, kInitD);
  Rng batch_rng = make_rng(cfg.seed, kBatches);
  Rng noise_rng = make_rng(cfg.seed, kNoise);
  GanState state{mlp_init(generator_spec(cfg), init_g), mlp_init(discriminator_spec(cfg), init_d), {}, {}};
  Network last_good_g = state.g, last_good_d = state.d;

  const EvalOptions eval_opts{cfg.k_eval, 21, cfg.eval_samples, 200};
  const auto start = std::chrono::steady_clock::now();
  double sum_d = 0.0, sum_gan = 0.0, sum_aux = 0.0, sum_rec = 0.0;
  std::size_t n_d = 0, n_g = 0;
  std::uint64_t step = 0;

  auto flush_row = [&] {
    HistoryRow row;
    row.step = step;
    row.loss_d = n_d ? sum_d / static_cast<double>(n_d) : 0.0;
    row.loss_g_gan = n_g ? sum_gan / static_cast<double>(n_g) : 0.0;
    if (cfg.variant != VariantId::gan_only) row.loss_aux = n_g ? sum_aux / static_cast<double>(n_g) : 0.0;
    if (cfg.lambda_rec != 0.0) row.loss_rec = n_g ? sum_rec / static_cast<double>(n_g) : 0.0;
    Rng eval_rng = make_rng(cfg.seed, kEvalStreamBase + step);
    row.metrics = evaluate_generator(state.g, data_spec, eval_opts, eval_rng);
    row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    result.history.rows.push_back(row);
    if (callbacks.on_row) callbacks.on_row(row, state);
    last_good_g = state.g;
    last_good_d = state.d;
    sum_d = sum_gan = sum_aux = sum_rec = 0.0;
    n_d = n_g = 0;
  };

  try {
    while (step < cfg.g_steps) {
      for (std::size_t i = 0; i < cfg.d_steps_per_g; ++i) {
        sum_d += discriminator_update(state, sample_rows(data.train, cfg.batch_d, batch_rng), cfg, noise_rng);
        ++n_d;
      }
      for (std::size_t i = 0; i < cfg.g_steps_per_d && step < cfg.g_steps; ++i) {
        const GeneratorLosses l = generator_update(cfg.variant, state, predictor,
                                                   sample_rows(data.train, cfg.batch_g, batch_rng), cfg, noise_rng);
        sum_gan += l.gan;
        sum_aux += l.aux.value_or(0.0);
        sum_rec += l.rec.value_or(0.0);
        ++n_g;
        ++step;
        if (step % cfg.eval_interval == 0 || step == cfg.g_steps) flush_row();
      }
    }
  } catch (const NumericError& e) {
    throw TrainingDiverged(std::string(e.what()) + " at generator step " + std::to_string(step), step,
                           std::move(last_good_g), std::move(last_good_d), std::move(result.history));
  }

  result.generator = state.g;
  result.discriminator = state.d;
  return result;
}

}  // namespace mrlab
