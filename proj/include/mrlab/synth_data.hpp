#pragma once

// Synthetic tasks whose conditional moments are known in closed form.

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mrlab/rng.hpp"
#include "mrlab/tensor.hpp"

namespace mrlab {

enum class DatasetKind {
  ring8,            // unconditional: 8 Gaussians on a circle, dy = 2
  two_delta,        // y ∈ {−1, +1} equiprobable, independent of x
  hetero_gaussian,  // y | x ~ N(sin πx, (0.1 + 0.4x²)²)
  cond_bimodal,     // y | x ~ ½N(+g, s²) + ½N(−g, s²)
};

std::string to_string(DatasetKind k);
DatasetKind parse_dataset_kind(const std::string& name);

struct DatasetSpec {
  DatasetKind kind = DatasetKind::ring8;
  double radius = 2.0;     // ring8
  double mode_std = 0.05;  // ring8
  double gap = 1.0;        // cond_bimodal
  double comp_std = 0.1;   // cond_bimodal
  std::size_t n_train = 10000;
  std::size_t n_val = 2000;
  std::size_t n_test = 2000;
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const DatasetSpec&) const = default;
};

struct Dims {
  std::size_t x = 0;
  std::size_t y = 0;
};

Dims dataset_dims(DatasetKind kind);
bool is_conditional(DatasetKind kind);

struct Batch {
  Tensor x;  // n×dx, dx may be 0
  Tensor y;  // n×dy

  std::size_t size() const { return y.rows(); }
};

/// Per-coordinate closed-form moments of y | x.
struct AnalyticMoments {
  std::vector<double> mean;
  std::vector<double> variance;
  std::vector<double> median_lo;
  std::vector<double> median_hi;
  std::vector<double> mad;  // E|y − m| around the median
};

/// x is ignored for unconditional or x-independent tasks.
AnalyticMoments analytic_moments(const DatasetSpec& spec, double x);

/// 8×2 mode centers radius·(cos 2πk/8, sin 2πk/8).
Tensor ring8_centers(const DatasetSpec& spec);

Batch make_ring8(const DatasetSpec& spec, std::size_t n, Rng& rng);
Batch make_two_delta(const DatasetSpec& spec, std::size_t n, Rng& rng);
Batch make_hetero_gaussian(const DatasetSpec& spec, std::size_t n, Rng& rng);
Batch make_cond_bimodal(const DatasetSpec& spec, std::size_t n, Rng& rng);
Batch make_dataset(const DatasetSpec& spec, std::size_t n, Rng& rng);

/// Draws y | x for given conditioning rows (x ignored where irrelevant).
Tensor sample_targets(const DatasetSpec& spec, const Tensor& x, Rng& rng);

/// Equally spaced grid on [−1, 1]; `points` ≥ 2.
std::vector<double> x_grid(std::size_t points = 21);

struct Splits {
  Batch train;
  Batch val;
  Batch test;
};

/// Disjoint shuffled partition. Fractions must sum to 1 (tolerance 1e−9).
Splits split(const Batch& batch, std::array<double, 3> fractions, Rng& rng);

/// Generates n_train + n_val + n_test rows from spec.seed and partitions them.
Splits make_splits(const DatasetSpec& spec);

Batch take_rows(const Batch& batch, std::span<const std::size_t> rows);
/// n rows drawn uniformly with replacement.
Batch sample_rows(const Batch& batch, std::size_t n, Rng& rng);

/// CSV with header x0..x{dx-1},y0..y{dy-1}.
void write_csv(const Batch& batch, const std::filesystem::path& path);

}  // namespace mrlab
