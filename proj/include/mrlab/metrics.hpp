#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "mrlab/nets.hpp"
#include "mrlab/rng.hpp"
#include "mrlab/synth_data.hpp"

namespace mrlab {

struct ModeCoverageReport {
  std::size_t modes_captured = 0;
  /// Fraction of all samples assigned to each mode and within 3·mode_std of it.
  std::vector<double> mode_share;
  double high_quality_fraction = 0.0;
};

/// Nearest-center assignment. A mode counts as captured when its share is at
/// least `capture_share`. Needs at least `min_samples` rows.
ModeCoverageReport mode_coverage(const Tensor& samples, const Tensor& centers, double mode_std,
                                 double capture_share = 0.02, std::size_t min_samples = 1000);

struct MomentErrorReport {
  double mean_abs_err = 0.0;
  double var_rel_err = 0.0;
  double median_err = 0.0;  // distance of the sample median to the analytic median interval
  double mad_rel_err = 0.0;
  double mean_sample_variance = 0.0;  // grid average of the generator's sample variance
};

/// Draws `k_eval` samples of G at every grid point and compares the sample
/// moments with the analytic ones; all errors are grid averages (and averages
/// over coordinates). Unconditional tasks use a single evaluation point.
MomentErrorReport conditional_moment_error(const Network& g, const DatasetSpec& spec, std::span<const double> grid,
                                           std::size_t k_eval, Rng& rng);

/// Mean Euclidean distance over all K(K−1)/2 pairs of rows.
double pairwise_diversity(const Tensor& samples);

struct DecompositionReport {
  double var_y = 0.0;
  double se = 0.0;
  double ve = 0.0;
  double total = 0.0;
  double identity_residual = 0.0;
};

/// Squared-error decomposition with plug-in (1/n) moments:
/// (1/nm) Σ_i Σ_j (y_i − ŷ_j)² = Var(y) + (mean ŷ − mean y)² + Var(ŷ).
DecompositionReport se_ve_decomposition(std::span<const double> y, std::span<const double> y_hat);

struct DiscreteDistribution {
  std::vector<std::pair<double, double>> atoms;  // (value, probability)
};

struct L1ScanReport {
  double min_value = 0.0;
  std::vector<double> argmin;  // grid points within 1e−12 of the minimum
  double median_lo = 0.0;
  double median_hi = 0.0;
};

/// Brute-force E|y − c| over a grid, plus the analytic median interval [a, b]
/// with P(y < a) ≤ ½ ≤ P(y ≤ b).
L1ScanReport l1_minimizer_scan(const DiscreteDistribution& dist, std::span<const double> grid);

/// Equally spaced grid over [lo, hi] with the given step (endpoints included).
std::vector<double> scan_grid(double lo, double hi, double step);

// ---------------------------------------------------------------------------
// Whole-generator evaluation used by the trainer and the CLI.

struct EvalOptions {
  std::size_t k_eval = 200;
  std::size_t grid_points = 21;
  std::size_t ring_samples = 5000;
  std::size_t diversity_samples = 200;
};

struct EvalSummary {
  std::optional<std::size_t> modes_captured;
  std::optional<double> hq_fraction;
  double mean_abs_err = 0.0;
  double var_rel_err = 0.0;
  double diversity = 0.0;
  double mean_sample_variance = 0.0;
};

EvalSummary evaluate_generator(const Network& g, const DatasetSpec& spec, const EvalOptions& opts, Rng& rng);

/// Final samples for plotting: `per_x` samples at each grid x for conditional
/// tasks, `ring_samples` samples for ring8.
Batch generate_samples(const Network& g, const DatasetSpec& spec, std::size_t per_x, std::size_t grid_points,
                       std::size_t ring_samples, Rng& rng);

}  // namespace mrlab
