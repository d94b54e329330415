#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mrlab/losses.hpp"
#include "mrlab/metrics.hpp"
#include "mrlab/nets.hpp"
#include "mrlab/synth_data.hpp"

namespace mrlab {

/// RNG stream of the evaluation that follows generator step `step` is
/// kEvalStreamBase + step.
inline constexpr std::uint64_t kEvalStreamBase = 1'000'000;

struct TrainConfig {
  VariantId variant = VariantId::gan_only;
  DatasetSpec dataset;

  // Optimizer (AMSGrad with decoupled weight decay and value clipping).
  double lr = 1e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double weight_decay = 1e-4;
  double clip_value = 0.5;

  // Objective.
  std::size_t k = 10;
  double lambda_aux = 10.0;
  double lambda_rec = 0.0;

  // Schedule. One round is d_steps_per_g discriminator updates followed by
  // g_steps_per_d generator updates; training stops after g_steps generator updates.
  std::size_t batch_d = 64;
  std::size_t batch_g = 32;
  std::size_t d_steps_per_g = 1;
  std::size_t g_steps_per_d = 1;
  std::size_t g_steps = 20000;
  std::size_t eval_interval = 500;

  // Networks.
  std::size_t noise_dim = 8;
  std::vector<std::size_t> hidden_widths{64, 64, 64};
  Activation hidden_activation = Activation::leaky_relu;
  double leaky_slope = 0.2;

  // Predictor pretraining.
  std::size_t batch_p = 64;
  double predictor_lr = 1e-4;
  std::size_t predictor_epochs = 300;
  std::size_t patience = 20;
  Family family = Family::gaussian;  // used by mle_only; pMR variants imply their own

  // Evaluation.
  std::size_t k_eval = 200;
  std::size_t eval_samples = 5000;

  std::uint64_t seed = 0;

  /// Throws ConfigError naming the offending key.
  void validate() const;
  /// Family of the predictor this run needs, if any.
  std::optional<Family> predictor_family() const;

  bool operator==(const TrainConfig&) const = default;
};

MLPSpec generator_spec(const TrainConfig& cfg);
MLPSpec discriminator_spec(const TrainConfig& cfg);
MLPSpec predictor_spec(const TrainConfig& cfg);

// ---------------------------------------------------------------------------
// Optimizer

struct AmsGradOptions {
  double lr = 1e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-4;
};

AmsGradOptions amsgrad_options(const TrainConfig& cfg, double lr);

struct OptimizerState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::vector<std::vector<double>> v_hat;
  std::uint64_t t = 0;
};

/// m ← β₁m + (1−β₁)g; v ← β₂v + (1−β₂)g²; v̂ ← max(v̂, v);
/// θ ← θ − lr·(m/(1−β₁ᵗ))/(√v̂ + ε); then θ ← θ·(1 − lr·wd).
/// Throws NumericError naming the parameter when a gradient is not finite.
void amsgrad_step(std::vector<Tensor>& params, std::span<const Tensor> grads, OptimizerState& state,
                  const AmsGradOptions& opts);

/// Clamps every entry into [−c, c].
std::vector<Tensor> clip_by_value(std::span<const Tensor> grads, double c);

// ---------------------------------------------------------------------------
// Predictor pretraining

struct PredictorResult {
  Network network;
  Family family = Family::gaussian;
  std::vector<double> val_curve;  // validation MLE loss per epoch
  std::size_t best_epoch = 0;     // index into val_curve of the returned weights
};

/// Minimizes the family's MLE loss on data.train, tracks the validation loss
/// each epoch, stops after `patience` epochs without improvement and returns
/// the best-validation weights.
PredictorResult train_predictor(const Splits& data, const TrainConfig& cfg, Family family);

// ---------------------------------------------------------------------------
// Adversarial training

struct GanState {
  Network g;
  Network d;
  OptimizerState g_opt;
  OptimizerState d_opt;
};

/// One AMSGrad step on the discriminator loss; fakes come from a detached G.
double discriminator_update(GanState& state, const Batch& real, const TrainConfig& cfg, Rng& noise_rng);

struct GeneratorLosses {
  double gan = 0.0;
  std::optional<double> aux;
  std::optional<double> rec;
  double total = 0.0;
};

/// K samples per conditioning row, the variant's auxiliary loss, the
/// non-saturating GAN term, then one clipped AMSGrad step on G only.
GeneratorLosses generator_update(VariantId variant, GanState& state, const std::optional<Network>& predictor,
                                 const Batch& batch, const TrainConfig& cfg, Rng& noise_rng);

struct HistoryRow {
  std::uint64_t step = 0;  // generator steps completed
  double loss_d = 0.0;
  double loss_g_gan = 0.0;
  std::optional<double> loss_aux;
  std::optional<double> loss_rec;
  EvalSummary metrics;
  double wall_ms = 0.0;
};

struct TrainHistory {
  std::vector<HistoryRow> rows;
};

struct GanResult {
  Network generator;
  Network discriminator;
  std::optional<PredictorResult> predictor;
  TrainHistory history;
};

struct TrainCallbacks {
  std::function<void(const PredictorResult&)> on_predictor;
  std::function<void(const HistoryRow&, const GanState&)> on_row;
};

/// Thrown when training hits non-finite values. Carries the last state that
/// was evaluated without error.
class TrainingDiverged : public NumericError {
 public:
  TrainingDiverged(const std::string& what, std::uint64_t step, Network last_good_g, Network last_good_d,
                   TrainHistory history)
      : NumericError(what),
        step(step),
        last_good_g(std::move(last_good_g)),
        last_good_d(std::move(last_good_d)),
        history(std::move(history)) {}

  std::uint64_t step;
  Network last_good_g;
  Network last_good_d;
  TrainHistory history;
};

/// Full run: data, optional predictor pretraining, alternating updates, periodic
/// evaluation. Deterministic given cfg (including the seed).
GanResult train_gan(const TrainConfig& cfg, const TrainCallbacks& callbacks = {});

/// Predictor-only run for mle_only.
PredictorResult train_mle_only(const TrainConfig& cfg);

}  // namespace mrlab
