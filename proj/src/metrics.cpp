#include "mrlab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mrlab {

ModeCoverageReport mode_coverage(const Tensor& samples, const Tensor& centers, double mode_std,
                                 double capture_share, std::size_t min_samples) {
  if (samples.rows() < min_samples) {
    throw ConfigError("mode_coverage needs at least " + std::to_string(min_samples) + " samples, got " +
                      std::to_string(samples.rows()));
  }
  if (samples.cols() != centers.cols()) throw ShapeError("mode_coverage: sample and center dims differ");
  const std::size_t n = samples.rows(), m = centers.rows(), d = samples.cols();
  const double radius = 3.0 * mode_std;
  std::vector<std::size_t> hits(m, 0);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best = 0;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < m; ++c) {
      double d2 = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        const double diff = samples(i, k) - centers(c, k);
        d2 += diff * diff;
      }
      if (d2 < best_d2) {
        best_d2 = d2;
        best = c;
      }
    }
    if (best_d2 <= radius * radius) ++hits[best];
  }
  ModeCoverageReport r;
  r.mode_share.resize(m);
  std::size_t total_hits = 0;
  for (std::size_t c = 0; c < m; ++c) {
    r.mode_share[c] = static_cast<double>(hits[c]) / static_cast<double>(n);
    if (r.mode_share[c] >= capture_share) ++r.modes_captured;
    total_hits += hits[c];
  }
  r.high_quality_fraction = static_cast<double>(total_hits) / static_cast<double>(n);
  return r;
}

namespace {

Tensor draw_at(const Network& g, const DatasetSpec& spec, double x, std::size_t n, Rng& rng) {
  const Dims dims = dataset_dims(spec.kind);
  const Tensor xs = Tensor::full(n, dims.x, x);
  const Tensor z = standard_normal(n, g.spec().input_dim - dims.x, rng);
  return generator_forward(g, xs, z);
}

struct ColumnStats {
  double mean, var, median, mad;
};

ColumnStats column_stats(const Tensor& samples, std::size_t col) {
  const std::size_t n = samples.rows();
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = samples(i, col);
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  var /= static_cast<double>(n - 1);
  std::sort(v.begin(), v.end());
  const double median = n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  double mad = 0.0;
  for (double x : v) mad += std::fabs(x - median);
  mad /= static_cast<double>(n);
  return {mean, var, median, mad};
}

}  // namespace

MomentErrorReport conditional_moment_error(const Network& g, const DatasetSpec& spec, std::span<const double> grid,
                                           std::size_t k_eval, Rng& rng) {
  if (k_eval < 2) throw ConfigError("conditional_moment_error needs k_eval >= 2");
  std::vector<double> points(grid.begin(), grid.end());
  if (!is_conditional(spec.kind) || points.empty()) points = {0.0};
  MomentErrorReport r;
  std::size_t terms = 0;
  for (double x : points) {
    const Tensor samples = draw_at(g, spec, x, k_eval, rng);
    const AnalyticMoments truth = analytic_moments(spec, x);
    for (std::size_t c = 0; c < samples.cols(); ++c) {
      const ColumnStats s = column_stats(samples, c);
      r.mean_abs_err += std::fabs(s.mean - truth.mean[c]);
      r.var_rel_err += std::fabs(s.var - truth.variance[c]) / truth.variance[c];
      r.median_err += std::max({0.0, truth.median_lo[c] - s.median, s.median - truth.median_hi[c]});
      r.mad_rel_err += std::fabs(s.mad - truth.mad[c]) / truth.mad[c];
      r.mean_sample_variance += s.var;
      ++terms;
    }
  }
  const double t = static_cast<double>(terms);
  r.mean_abs_err /= t;
  r.var_rel_err /= t;
  r.median_err /= t;
  r.mad_rel_err /= t;
  r.mean_sample_variance /= t;
  return r;
}

double pairwise_diversity(const Tensor& samples) {
  const std::size_t k = samples.rows(), d = samples.cols();
  if (k < 2) throw ConfigError("pairwise_diversity needs K >= 2");
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      double d2 = 0.0;
      for (std::size_t c = 0; c < d; ++c) {
        const double diff = samples(i, c) - samples(j, c);
        d2 += diff * diff;
      }
      total += std::sqrt(d2);
    }
  }
  return total / (static_cast<double>(k) * static_cast<double>(k - 1) / 2.0);
}

DecompositionReport se_ve_decomposition(std::span<const double> y, std::span<const double> y_hat) {
  if (y.size() < 2 || y_hat.size() < 2) throw ConfigError("se_ve_decomposition needs at least 2 draws of each");
  auto plug_in = [](std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - m) * (x - m);
    return std::pair{m, var / static_cast<double>(v.size())};
  };
  const auto [my, vy] = plug_in(y);
  const auto [mh, vh] = plug_in(y_hat);
  DecompositionReport r;
  r.var_y = vy;
  r.se = (mh - my) * (mh - my);
  r.ve = vh;
  double total = 0.0;
  for (double a : y) {
    double row = 0.0;
    for (double b : y_hat) row += (a - b) * (a - b);
    total += row;
  }
  r.total = total / (static_cast<double>(y.size()) * static_cast<double>(y_hat.size()));
  r.identity_residual = std::fabs(r.total - (r.var_y + r.se + r.ve));
  return r;
}

std::vector<double> scan_grid(double lo, double hi, double step) {
  if (!(step > 0.0) || hi < lo) throw ConfigError("scan_grid needs step > 0 and lo <= hi");
  const auto n = static_cast<std::size_t>(std::llround((hi - lo) / step));
  std::vector<double> g(n + 1);
  for (std::size_t i = 0; i <= n; ++i) g[i] = lo + static_cast<double>(i) * step;
  g.back() = hi;
  return g;
}

L1ScanReport l1_minimizer_scan(const DiscreteDistribution& dist, std::span<const double> grid) {
  if (dist.atoms.empty()) throw ConfigError("l1_minimizer_scan: empty distribution");
  if (grid.empty()) throw ConfigError("l1_minimizer_scan: empty grid");
  double mass = 0.0;
  for (const auto& [value, p] : dist.atoms) {
    if (p < 0.0) throw ConfigError("l1_minimizer_scan: negative probability");
    mass += p;
  }
  if (std::fabs(mass - 1.0) > 1e-9) throw ConfigError("l1_minimizer_scan: probabilities must sum to 1");

  L1ScanReport r;
  std::vector<double> risk(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double e = 0.0;
    for (const auto& [value, p] : dist.atoms) e += p * std::fabs(value - grid[i]);
    risk[i] = e;
  }
  r.min_value = *std::min_element(risk.begin(), risk.end());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (risk[i] <= r.min_value + 1e-12) r.argmin.push_back(grid[i]);
  }

  auto atoms = dist.atoms;
  std::sort(atoms.begin(), atoms.end());
  // Merge duplicate support points.
  std::vector<std::pair<double, double>> merged;
  for (const auto& a : atoms) {
    if (!merged.empty() && merged.back().first == a.first) {
      merged.back().second += a.second;
    } else {
      merged.push_back(a);
    }
  }
  double cdf = 0.0;
  constexpr double tol = 1e-12;
  for (std::size_t i = 0; i < merged.size(); ++i) {
    cdf += merged[i].second;
    if (cdf >= 0.5 - tol) {
      r.median_lo = merged[i].first;
      // CDF exactly ½ here: every point up to the next atom is a median.
      r.median_hi = (std::fabs(cdf - 0.5) <= tol && i + 1 < merged.size()) ? merged[i + 1].first : merged[i].first;
      break;
    }
  }
  return r;
}

// ---------------------------------------------------------------------------

EvalSummary evaluate_generator(const Network& g, const DatasetSpec& spec, const EvalOptions& opts, Rng& rng) {
  EvalSummary s;
  if (spec.kind == DatasetKind::ring8) {
    const Tensor samples = draw_at(g, spec, 0.0, opts.ring_samples, rng);
    const ModeCoverageReport cov = mode_coverage(samples, ring8_centers(spec), spec.mode_std);
    s.modes_captured = cov.modes_captured;
    s.hq_fraction = cov.high_quality_fraction;
    const std::size_t k = std::min(opts.diversity_samples, samples.rows());
    s.diversity = pairwise_diversity(slice_rows(samples, 0, k));
    const double grid0 = 0.0;
    const MomentErrorReport m = conditional_moment_error(g, spec, {&grid0, 1}, opts.ring_samples, rng);
    s.mean_abs_err = m.mean_abs_err;
    s.var_rel_err = m.var_rel_err;
    s.mean_sample_variance = m.mean_sample_variance;
    return s;
  }
  const std::vector<double> grid = x_grid(opts.grid_points);
  double diversity = 0.0;
  for (double x : grid) diversity += pairwise_diversity(draw_at(g, spec, x, std::min(opts.k_eval, opts.diversity_samples), rng));
  s.diversity = diversity / static_cast<double>(grid.size());
  const MomentErrorReport m = conditional_moment_error(g, spec, grid, opts.k_eval, rng);
  s.mean_abs_err = m.mean_abs_err;
  s.var_rel_err = m.var_rel_err;
  s.mean_sample_variance = m.mean_sample_variance;
  return s;
}

Batch generate_samples(const Network& g, const DatasetSpec& spec, std::size_t per_x, std::size_t grid_points,
                       std::size_t ring_samples, Rng& rng) {
  const Dims dims = dataset_dims(spec.kind);
  if (!is_conditional(spec.kind)) {
    return {Tensor::zeros(ring_samples, 0), draw_at(g, spec, 0.0, ring_samples, rng)};
  }
  std::vector<double> xs, ys;
  for (double x : x_grid(grid_points)) {
    const Tensor y = draw_at(g, spec, x, per_x, rng);
    for (std::size_t i = 0; i < per_x; ++i) {
      for (std::size_t c = 0; c < dims.x; ++c) xs.push_back(x);
      for (std::size_t c = 0; c < y.cols(); ++c) ys.push_back(y(i, c));
    }
  }
  const std::size_t n = per_x * grid_points;
  return {Tensor(n, dims.x, std::move(xs)), Tensor(n, dims.y, std::move(ys))};
}

}  // namespace mrlab
