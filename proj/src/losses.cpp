#include "mrlab/losses.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <vector>

namespace mrlab {

std::string to_string(VariantId v) {
  switch (v) {
    case VariantId::gan_only: return "gan_only";
    case VariantId::gan_l1: return "gan_l1";
    case VariantId::gan_l2: return "gan_l2";
    case VariantId::mle_only: return "mle_only";
    case VariantId::g_mr1: return "g_mr1";
    case VariantId::g_mr2: return "g_mr2";
    case VariantId::l_mr1: return "l_mr1";
    case VariantId::l_mr2: return "l_mr2";
    case VariantId::g_pmr1: return "g_pmr1";
    case VariantId::g_pmr2: return "g_pmr2";
    case VariantId::l_pmr1: return "l_pmr1";
    case VariantId::l_pmr2: return "l_pmr2";
  }
  return "?";
}

VariantId parse_variant(const std::string& name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  for (VariantId v : kAllVariants) {
    if (to_string(v) == lower) return v;
  }
  throw ConfigError("unknown variant '" + name + "'");
}

VariantTraits traits(VariantId v) {
  VariantTraits t;
  switch (v) {
    case VariantId::gan_only: break;
    case VariantId::gan_l1: t.reconstruction = true; t.norm = 1; break;
    case VariantId::gan_l2: t.reconstruction = true; t.norm = 2; break;
    case VariantId::mle_only: t.trains_generator = false; break;
    case VariantId::g_mr1: t.moment_reconstruction = true; t.moments = 1; break;
    case VariantId::g_mr2: t.moment_reconstruction = true; t.moments = 2; break;
    case VariantId::l_mr1: t.moment_reconstruction = true; t.moments = 1; t.family = Family::laplace; break;
    case VariantId::l_mr2: t.moment_reconstruction = true; t.moments = 2; t.family = Family::laplace; break;
    case VariantId::g_pmr1: t.proxy = true; t.moments = 1; break;
    case VariantId::g_pmr2: t.proxy = true; t.moments = 2; break;
    case VariantId::l_pmr1: t.proxy = true; t.moments = 1; t.family = Family::laplace; break;
    case VariantId::l_pmr2: t.proxy = true; t.moments = 2; t.family = Family::laplace; break;
  }
  return t;
}

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(what) + ": shape mismatch " + to_string(a.shape()) + " vs " + to_string(b.shape()));
  }
}

void require_finite(const Tensor& t, const char* what) {
  for (double v : t.values()) {
    if (std::isnan(v)) throw NumericError(std::string(what) + ": NaN input");
  }
}

void require_k(std::span<const Tensor> samples, const char* what) {
  if (samples.size() < 2) {
    throw ConfigError(std::string(what) + " needs K >= 2 samples, got " + std::to_string(samples.size()));
  }
}

void require_moments(int n, const char* what) {
  if (n != 1 && n != 2) throw ConfigError(std::string(what) + ": moment count must be 1 or 2");
}

Tensor floored(const Tensor& dispersion) { return clamp_min(dispersion, kDispersionFloor); }

// Detached per-sample targets ỹ_i + shift.
std::vector<Tensor> shifted_targets(std::span<const Tensor> samples, const Tensor& shift) {
  const Tensor stopped_shift = gradient_stop(shift);
  std::vector<Tensor> t;
  t.reserve(samples.size());
  for (const Tensor& s : samples) t.push_back(gradient_stop(s) + stopped_shift);
  return t;
}

Tensor mean_over_samples(std::span<const Tensor> terms) {
  return sum_of(terms) / static_cast<double>(terms.size());
}

}  // namespace

// ---------------------------------------------------------------------------

Tensor recon_loss(int p, const Tensor& y_hat, const Tensor& y) {
  require_same_shape(y_hat, y, "recon_loss");
  if (p == 1) return mean(abs(y - y_hat));
  if (p == 2) return mean(square(y - y_hat));
  throw ConfigError("recon_loss: p must be 1 or 2");
}

Tensor recon_loss(int p, std::span<const Tensor> samples, const Tensor& y) {
  if (samples.empty()) throw ConfigError("recon_loss: no samples");
  std::vector<Tensor> terms;
  for (const Tensor& s : samples) terms.push_back(recon_loss(p, s, y));
  return mean_over_samples(terms);
}

Tensor gaussian_mle_loss(const MomentEstimate& est, const Tensor& y) {
  if (est.family != Family::gaussian) throw ConfigError("gaussian_mle_loss given a Laplace estimate");
  require_same_shape(est.location, y, "gaussian_mle_loss");
  require_same_shape(est.dispersion, y, "gaussian_mle_loss");
  require_finite(y, "gaussian_mle_loss");
  require_finite(est.location, "gaussian_mle_loss");
  require_finite(est.dispersion, "gaussian_mle_loss");
  const Tensor var = floored(est.dispersion);
  return mean(square(y - est.location) / (2.0 * var) + 0.5 * log(var));
}

Tensor laplace_mle_loss(const MomentEstimate& est, const Tensor& y) {
  if (est.family != Family::laplace) throw ConfigError("laplace_mle_loss given a Gaussian estimate");
  require_same_shape(est.location, y, "laplace_mle_loss");
  require_same_shape(est.dispersion, y, "laplace_mle_loss");
  require_finite(y, "laplace_mle_loss");
  require_finite(est.location, "laplace_mle_loss");
  require_finite(est.dispersion, "laplace_mle_loss");
  const Tensor mad = floored(est.dispersion);
  return mean(abs(y - est.location) / mad + log(mad));
}

MomentEstimate predicted_moments(const PredictorOutput& pred) {
  return {pred.family, pred.location, floored(pred.dispersion())};
}

Tensor mle_loss(const PredictorOutput& pred, const Tensor& y) {
  const MomentEstimate est = predicted_moments(pred);
  return pred.family == Family::gaussian ? gaussian_mle_loss(est, y) : laplace_mle_loss(est, y);
}

MomentEstimate sample_mean_var(std::span<const Tensor> samples) {
  require_k(samples, "sample_mean_var");
  const double k = static_cast<double>(samples.size());
  const Tensor mu = sum_of(samples) / k;
  std::vector<Tensor> sq;
  sq.reserve(samples.size());
  for (const Tensor& s : samples) sq.push_back(square(s - mu));
  return {Family::gaussian, mu, floored(sum_of(sq) / (k - 1.0))};
}

MomentEstimate sample_median_mad(std::span<const Tensor> samples) {
  require_k(samples, "sample_median_mad");
  const Tensor med = median_of(samples);
  std::vector<Tensor> dev;
  dev.reserve(samples.size());
  for (const Tensor& s : samples) dev.push_back(abs(s - med));
  return {Family::laplace, med, floored(mean_over_samples(dev))};
}

Tensor mr_loss_gaussian(int n_moments, std::span<const Tensor> samples, const Tensor& y) {
  require_moments(n_moments, "mr_loss_gaussian");
  const MomentEstimate est = sample_mean_var(samples);
  require_same_shape(est.location, y, "mr_loss_gaussian");
  if (n_moments == 1) return mean(square(y - est.location));
  return gaussian_mle_loss(est, y);
}

Tensor mr_loss_laplace(int n_moments, std::span<const Tensor> samples, const Tensor& y) {
  require_moments(n_moments, "mr_loss_laplace");
  const MomentEstimate est = sample_median_mad(samples);
  require_same_shape(est.location, y, "mr_loss_laplace");
  const std::vector<Tensor> targets = shifted_targets(samples, y - est.location);
  std::vector<Tensor> resid;
  resid.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) resid.push_back(abs(targets[i] - samples[i]));
  const Tensor per_entry = mean_over_samples(resid);
  if (n_moments == 1) return mean(per_entry);
  return mean(per_entry / est.dispersion + log(est.dispersion));
}

Tensor pmr_loss_gaussian(int n_moments, std::span<const Tensor> samples, const PredictorOutput& pred) {
  require_moments(n_moments, "pmr_loss_gaussian");
  if (pred.family != Family::gaussian) throw ConfigError("pmr_loss_gaussian given a Laplace predictor");
  const MomentEstimate est = sample_mean_var(samples);
  const MomentEstimate target = predicted_moments(pred);
  require_same_shape(est.location, target.location, "pmr_loss_gaussian");
  const Tensor mean_term = square(gradient_stop(target.location) - est.location);
  if (n_moments == 1) return mean(mean_term);
  return mean(mean_term + square(gradient_stop(target.dispersion) - est.dispersion));
}

Tensor pmr_loss_laplace(int n_moments, std::span<const Tensor> samples, const PredictorOutput& pred) {
  require_moments(n_moments, "pmr_loss_laplace");
  if (pred.family != Family::laplace) throw ConfigError("pmr_loss_laplace given a Gaussian predictor");
  const MomentEstimate est = sample_median_mad(samples);
  const MomentEstimate target = predicted_moments(pred);
  require_same_shape(est.location, target.location, "pmr_loss_laplace");
  const std::vector<Tensor> targets = shifted_targets(samples, gradient_stop(target.location) - est.location);
  std::vector<Tensor> resid;
  resid.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) resid.push_back(square(targets[i] - samples[i]));
  const Tensor per_entry = mean_over_samples(resid);
  if (n_moments == 1) return mean(per_entry);
  return mean(per_entry + square(gradient_stop(target.dispersion) - est.dispersion));
}

// ---------------------------------------------------------------------------

namespace {

Tensor neg_log_prob(const Tensor& p) { return -log(clamp(p, kProbClamp, 1.0 - kProbClamp)); }

}  // namespace

Tensor gan_d_loss(const Network& d, const Tensor& x, const Tensor& y_real, const Tensor& y_fake) {
  require_same_shape(y_real, y_fake, "gan_d_loss");
  const Tensor real = discriminator_forward(d, x, y_real);
  const Tensor fake = discriminator_forward(d, x, gradient_stop(y_fake));
  return mean(neg_log_prob(real)) + mean(neg_log_prob(1.0 - fake));
}

Tensor gan_g_loss(const Network& d, const Tensor& x, std::span<const Tensor> samples) {
  if (samples.empty()) throw ConfigError("gan_g_loss: no samples");
  std::vector<Tensor> terms;
  terms.reserve(samples.size());
  for (const Tensor& s : samples) terms.push_back(mean(neg_log_prob(discriminator_forward(d, x, s))));
  return mean_over_samples(terms);
}

Tensor gan_g_loss_stacked(const Network& d, const Tensor& x_tiled, const Tensor& stacked) {
  return mean(neg_log_prob(discriminator_forward(d, x_tiled, stacked)));
}

std::optional<Tensor> variant_aux_loss(VariantId variant, std::span<const Tensor> samples, const Tensor& y,
                                       const std::optional<PredictorOutput>& pred) {
  const VariantTraits t = traits(variant);
  if (!t.trains_generator) throw ConfigError(to_string(variant) + " does not train a generator");
  if (t.reconstruction) return recon_loss(t.norm, samples, y);
  if (t.moment_reconstruction) {
    return t.family == Family::gaussian ? mr_loss_gaussian(t.moments, samples, y)
                                        : mr_loss_laplace(t.moments, samples, y);
  }
  if (t.proxy) {
    if (!pred) throw ConfigError(to_string(variant) + " needs a pretrained predictor");
    if (pred->family != t.family) throw ConfigError(to_string(variant) + ": predictor family mismatch");
    return t.family == Family::gaussian ? pmr_loss_gaussian(t.moments, samples, *pred)
                                        : pmr_loss_laplace(t.moments, samples, *pred);
  }
  return std::nullopt;
}

Tensor generator_objective(VariantId variant, double lambda_aux, double lambda_rec, const LossParts& parts) {
  const VariantTraits t = traits(variant);
  if (!t.trains_generator) throw ConfigError(to_string(variant) + " does not train a generator");
  Tensor total = parts.gan;
  if (variant != VariantId::gan_only) {
    if (!parts.aux) {
      throw ConfigError(to_string(variant) + (t.proxy ? ": missing predictor loss" : ": missing auxiliary loss"));
    }
    total = total + lambda_aux * *parts.aux;
  }
  if (lambda_rec != 0.0) {
    if (!parts.rec) throw ConfigError("lambda_rec is nonzero but no reconstruction loss was given");
    total = total + lambda_rec * *parts.rec;
  }
  return total;
}

}  // namespace mrlab
