#pragma once

// Reconstruction, maximum-likelihood, moment reconstruction (MR), proxy moment
// reconstruction (pMR) and GAN losses.
//
// Conventions shared by every loss here:
//  * y and every generated sample are B×dy; statistics are taken per row and
//    per coordinate across the K samples, and the loss is the mean over all
//    B·dy entries.
//  * Dispersions (variance, MAD) are floored at kDispersionFloor before any
//    division or log.
//  * Discriminator outputs are clamped to [kProbClamp, 1 − kProbClamp] before log.

#include <array>
#include <optional>
#include <span>
#include <string>

#include "mrlab/nets.hpp"
#include "mrlab/tensor.hpp"

namespace mrlab {

inline constexpr double kDispersionFloor = 1e-6;
inline constexpr double kProbClamp = 1e-7;

struct MomentEstimate {
  Family family = Family::gaussian;
  Tensor location;    // mean or median
  Tensor dispersion;  // variance or MAD
};

enum class VariantId {
  gan_only,
  gan_l1,
  gan_l2,
  mle_only,
  g_mr1,
  g_mr2,
  l_mr1,
  l_mr2,
  g_pmr1,
  g_pmr2,
  l_pmr1,
  l_pmr2,
};

inline constexpr std::array<VariantId, 12> kAllVariants{
    VariantId::gan_only, VariantId::gan_l1, VariantId::gan_l2, VariantId::mle_only,
    VariantId::g_mr1,    VariantId::g_mr2,  VariantId::l_mr1,  VariantId::l_mr2,
    VariantId::g_pmr1,   VariantId::g_pmr2, VariantId::l_pmr1, VariantId::l_pmr2,
};

/// Lower-case config name, e.g. "g_pmr2".
std::string to_string(VariantId v);
/// Case-insensitive inverse of to_string.
VariantId parse_variant(const std::string& name);

struct VariantTraits {
  bool trains_generator = true;  // false only for mle_only
  bool reconstruction = false;   // gan_l1, gan_l2
  bool moment_reconstruction = false;
  bool proxy = false;            // needs a pretrained predictor
  int norm = 0;                  // reconstruction exponent p
  int moments = 0;               // 1 or 2 for MR/pMR
  Family family = Family::gaussian;

  bool needs_samples_statistics() const { return moment_reconstruction || proxy; }
};

VariantTraits traits(VariantId v);

// ---------------------------------------------------------------------------

/// mean |y − ŷ|^p, p ∈ {1, 2}.
Tensor recon_loss(int p, const Tensor& y_hat, const Tensor& y);
/// Reconstruction averaged over K samples of the same rows.
Tensor recon_loss(int p, std::span<const Tensor> samples, const Tensor& y);

/// mean (y − μ̂)²/(2σ̂²) + ½ log σ̂².
Tensor gaussian_mle_loss(const MomentEstimate& est, const Tensor& y);
/// mean |y − m̂|/b̂ + log b̂.
Tensor laplace_mle_loss(const MomentEstimate& est, const Tensor& y);
/// MLE loss of a predictor output against targets, dispatching on its family.
Tensor mle_loss(const PredictorOutput& pred, const Tensor& y);
/// Floored moments carried by a predictor output.
MomentEstimate predicted_moments(const PredictorOutput& pred);

/// Sample mean and unbiased (K − 1) sample variance.
MomentEstimate sample_mean_var(std::span<const Tensor> samples);
/// Sample median and mean absolute deviation around it.
MomentEstimate sample_median_mad(std::span<const Tensor> samples);

Tensor mr_loss_gaussian(int n_moments, std::span<const Tensor> samples, const Tensor& y);

/// Median-based MR loss. The targets t_i = stop(ỹ_i + (y − m̃)) give every
/// sample the same residual, so the gradient reaches all K samples instead of
/// only the median one.
Tensor mr_loss_laplace(int n_moments, std::span<const Tensor> samples, const Tensor& y);

/// The predictor output is treated as a constant.
Tensor pmr_loss_gaussian(int n_moments, std::span<const Tensor> samples, const PredictorOutput& pred);
Tensor pmr_loss_laplace(int n_moments, std::span<const Tensor> samples, const PredictorOutput& pred);

/// −log D(x, y_real) − log(1 − D(x, y_fake)), batch means. y_fake is detached.
Tensor gan_d_loss(const Network& d, const Tensor& x, const Tensor& y_real, const Tensor& y_fake);
/// Non-saturating generator loss (1/K) Σ −log D(x, ỹ_i).
Tensor gan_g_loss(const Network& d, const Tensor& x, std::span<const Tensor> samples);
/// Same value computed on row-stacked samples (GeneratorSamples layout).
Tensor gan_g_loss_stacked(const Network& d, const Tensor& x_tiled, const Tensor& stacked);

/// The variant's auxiliary term: reconstruction, MR or pMR. Empty for gan_only.
std::optional<Tensor> variant_aux_loss(VariantId variant, std::span<const Tensor> samples, const Tensor& y,
                                       const std::optional<PredictorOutput>& pred);

struct LossParts {
  Tensor gan;
  std::optional<Tensor> aux;
  std::optional<Tensor> rec;
};

/// L_GAN + λ_aux·L_aux + λ_rec·L_rec. The GAN weight is fixed to 1.
Tensor generator_objective(VariantId variant, double lambda_aux, double lambda_rec, const LossParts& parts);

}  // namespace mrlab
