#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "mrlab/metrics.hpp"

using namespace mrlab;

namespace {

// y = c for any (x, z).
Network constant_generator(std::size_t input_dim, double c) {
  const MLPSpec spec{input_dim, {2}, 1};
  return Network(spec, {Tensor::zeros(input_dim, 2), Tensor::zeros(1, 2), Tensor::zeros(2, 1), Tensor::full(1, 1, c)});
}

// y = scale·z₀ exactly: leaky(z) − leaky(−z) = (1 + slope)·z.
Network identity_generator(std::size_t dx, std::size_t noise, double scale) {
  const MLPSpec spec{dx + noise, {2}, 1};
  std::vector<double> w0((dx + noise) * 2, 0.0);
  w0[dx * 2 + 0] = 1.0;
  w0[dx * 2 + 1] = -1.0;
  const double k = scale / (1.0 + spec.leaky_slope);
  return Network(spec, {Tensor(dx + noise, 2, w0), Tensor::zeros(1, 2), Tensor::column({k, -k}), Tensor::zeros(1, 1)});
}

Tensor repeat_centers(const Tensor& centers, std::size_t times) { return tile_rows(centers, times); }

}  // namespace

TEST_CASE("mode coverage examples") {
  DatasetSpec s;
  const Tensor c = ring8_centers(s);
  ModeCoverageReport r = mode_coverage(repeat_centers(c, 125), c, s.mode_std);
  CHECK(r.modes_captured == 8);
  CHECK(r.high_quality_fraction == 1.0);

  r = mode_coverage(tile_rows(slice_rows(c, 3, 1), 1000), c, s.mode_std);
  CHECK(r.modes_captured == 1);

  Rng rng = make_rng(1, 0);
  const Batch real = make_ring8(s, 10000, rng);
  r = mode_coverage(real.y, c, s.mode_std);
  CHECK(r.modes_captured == 8);
  CHECK(r.high_quality_fraction >= 0.98);

  CHECK_THROWS_AS(mode_coverage(Tensor::zeros(10, 2), c, s.mode_std), ConfigError);
  CHECK_THROWS_AS(mode_coverage(Tensor::zeros(2000, 3), c, s.mode_std), ShapeError);
}

TEST_CASE("mode coverage is permutation invariant and ignores stragglers") {
  DatasetSpec s;
  const Tensor c = ring8_centers(s);
  // 2 collapsed modes plus 1% of samples on a third mode.
  std::vector<double> v;
  for (int i = 0; i < 990; ++i) {
    const std::size_t k = i % 2 ? 0 : 4;
    v.push_back(c(k, 0));
    v.push_back(c(k, 1));
  }
  for (int i = 0; i < 10; ++i) {
    v.push_back(c(2, 0));
    v.push_back(c(2, 1));
  }
  const Tensor samples(1000, 2, v);
  CHECK(mode_coverage(samples, c, s.mode_std).modes_captured == 2);

  std::vector<double> rev;
  for (std::size_t i = 1000; i-- > 0;) {
    rev.push_back(samples(i, 0));
    rev.push_back(samples(i, 1));
  }
  std::vector<double> crev;
  for (std::size_t k = 8; k-- > 0;) {
    crev.push_back(c(k, 0));
    crev.push_back(c(k, 1));
  }
  const ModeCoverageReport a = mode_coverage(samples, c, s.mode_std);
  const ModeCoverageReport b = mode_coverage(Tensor(1000, 2, rev), Tensor(8, 2, crev), s.mode_std);
  CHECK(a.modes_captured == b.modes_captured);
  CHECK(a.high_quality_fraction == b.high_quality_fraction);
}

TEST_CASE("conditional moment error on two_delta") {
  DatasetSpec s;
  s.kind = DatasetKind::two_delta;
  const std::vector<double> grid = x_grid(21);
  Rng rng = make_rng(2, 0);
  MomentErrorReport r = conditional_moment_error(constant_generator(9, 0.3), s, grid, 200, rng);
  CHECK(r.mean_abs_err == doctest::Approx(0.3));
  CHECK(r.var_rel_err == 1.0);
  CHECK(r.mean_sample_variance < 1e-20);

  r = conditional_moment_error(identity_generator(1, 8, 1.0), s, grid, 200, rng);
  CHECK(r.var_rel_err < 0.25);
  CHECK(r.mean_abs_err < 0.25);
  CHECK(r.median_err >= 0.0);
  CHECK(r.mad_rel_err >= 0.0);
  CHECK(r.mean_sample_variance == doctest::Approx(1.0).epsilon(0.25));
  CHECK_THROWS_AS(conditional_moment_error(constant_generator(9, 0), s, grid, 1, rng), ConfigError);
}

TEST_CASE("pairwise diversity") {
  CHECK(pairwise_diversity(Tensor::full(5, 2, 1.5)) == 0.0);
  CHECK(pairwise_diversity(Tensor::column({-1, 1})) == 2.0);
  CHECK(pairwise_diversity(Tensor::from_rows({{0, 0}, {3, 4}, {0, 0}})) == doctest::Approx(10.0 / 3.0));
  Rng rng = make_rng(3, 0);
  const Tensor x = uniform(20, 3, -1, 1, rng);
  const double d = pairwise_diversity(x);
  CHECK(pairwise_diversity(x + 7.0) == doctest::Approx(d).epsilon(1e-12));
  CHECK(pairwise_diversity(x * -2.5) == doctest::Approx(2.5 * d).epsilon(1e-12));
  CHECK_THROWS_AS(pairwise_diversity(Tensor::row({1, 2})), ConfigError);
}

TEST_CASE("decomposition examples") {
  const std::vector<double> y{0, 2}, c{1, 1};
  DecompositionReport r = se_ve_decomposition(y, c);
  CHECK(r.var_y == 1.0);
  CHECK(r.se == 0.0);
  CHECK(r.ve == 0.0);
  CHECK(r.total == 1.0);

  const std::vector<double> y3{1, 2, 6}, m3{3, 3};
  r = se_ve_decomposition(y3, m3);
  CHECK(r.se == 0.0);
  CHECK(r.ve == 0.0);
  CHECK_THROWS_AS(se_ve_decomposition(std::vector<double>{1}, c), ConfigError);
}

TEST_CASE("decomposition identity on random sample sets") {
  Rng rng = make_rng(4, 0);
  std::uniform_int_distribution<int> size(2, 60);
  std::normal_distribution<double> normal;
  for (int t = 0; t < 100; ++t) {
    std::vector<double> y(size(rng)), yh(size(rng));
    const double shift = 5 * normal(rng), scale = std::exp(normal(rng));
    for (double& v : y) v = normal(rng);
    for (double& v : yh) v = shift + scale * normal(rng);
    const DecompositionReport r = se_ve_decomposition(y, yh);
    CHECK(r.identity_residual < 1e-10);
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / y.size();
    const double mh = std::accumulate(yh.begin(), yh.end(), 0.0) / yh.size();
    CHECK(r.se == doctest::Approx((mh - my) * (mh - my)).epsilon(1e-10));
  }
}

TEST_CASE("l1 scan examples") {
  const std::vector<double> grid = scan_grid(-2, 2, 1e-3);
  L1ScanReport r = l1_minimizer_scan({{{-1.0, 0.5}, {1.0, 0.5}}}, grid);
  CHECK(r.min_value == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.argmin.front() == doctest::Approx(-1.0));
  CHECK(r.argmin.back() == doctest::Approx(1.0));
  CHECK(r.argmin.size() == 2001);
  CHECK(r.median_lo == -1.0);
  CHECK(r.median_hi == 1.0);

  r = l1_minimizer_scan({{{0.0, 1.0}}}, grid);
  CHECK(r.min_value == doctest::Approx(0.0).scale(1));
  REQUIRE(r.argmin.size() == 1);
  CHECK(r.argmin[0] == doctest::Approx(0.0).scale(1));

  r = l1_minimizer_scan({{{0.0, 0.25}, {1.0, 0.5}, {2.0, 0.25}}}, grid);
  REQUIRE(r.argmin.size() == 1);
  CHECK(r.argmin[0] == doctest::Approx(1.0));
  CHECK(r.median_lo == 1.0);
  CHECK(r.median_hi == 1.0);

  CHECK_THROWS_AS(l1_minimizer_scan({{{0.0, 0.4}}}, grid), ConfigError);
  CHECK_THROWS_AS(scan_grid(1, 0, 0.1), ConfigError);
}

TEST_CASE("l1 argmin lies inside the median interval for random distributions") {
  Rng rng = make_rng(5, 0);
  std::uniform_int_distribution<int> atoms(1, 6), value(-10, 10);
  std::uniform_int_distribution<int> weight(1, 4);
  for (int t = 0; t < 50; ++t) {
    DiscreteDistribution d;
    const int n = atoms(rng);
    std::vector<int> w(n);
    for (int& x : w) x = weight(rng);
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    for (int i = 0; i < n; ++i) d.atoms.emplace_back(value(rng) * 0.5, w[i] / total);
    const std::vector<double> grid = scan_grid(-6, 6, 1e-3);
    const L1ScanReport r = l1_minimizer_scan(d, grid);
    for (double c : r.argmin) {
      CHECK(c >= r.median_lo - 1e-9);
      CHECK(c <= r.median_hi + 1e-9);
      // Independent median check: P(y < c) ≤ ½ ≤ P(y ≤ c).
      double below = 0, at_or_below = 0;
      for (const auto& [v, p] : d.atoms) {
        below += v < c - 1e-9 ? p : 0;
        at_or_below += v <= c + 1e-9 ? p : 0;
      }
      CHECK(below <= 0.5 + 1e-9);
      CHECK(at_or_below >= 0.5 - 1e-9);
    }
  }
}

TEST_CASE("generator evaluation and plotting samples") {
  DatasetSpec s;
  s.kind = DatasetKind::cond_bimodal;
  Rng rng = make_rng(6, 0);
  const EvalSummary e = evaluate_generator(identity_generator(1, 8, 1.0), s, {}, rng);
  CHECK(!e.modes_captured);
  CHECK(e.mean_sample_variance == doctest::Approx(1.0).epsilon(0.2));
  const Batch b = generate_samples(identity_generator(1, 8, 1.0), s, 20, 21, 5000, rng);
  CHECK(b.size() == 420);
  CHECK(b.x(20, 0) == doctest::Approx(-0.9));

  DatasetSpec ring;
  const Batch rb = generate_samples(identity_generator(0, 8, 1.0), ring, 20, 21, 5000, rng);
  CHECK(rb.size() == 5000);
}
