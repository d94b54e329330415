#include "mrlab/synth_data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <numeric>

namespace mrlab {

std::string to_string(DatasetKind k) {
  switch (k) {
    case DatasetKind::ring8: return "ring8";
    case DatasetKind::two_delta: return "two_delta";
    case DatasetKind::hetero_gaussian: return "hetero_gaussian";
    case DatasetKind::cond_bimodal: return "cond_bimodal";
  }
  return "?";
}

DatasetKind parse_dataset_kind(const std::string& name) {
  for (DatasetKind k : {DatasetKind::ring8, DatasetKind::two_delta, DatasetKind::hetero_gaussian,
                        DatasetKind::cond_bimodal}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("unknown dataset '" + name + "'");
}

void DatasetSpec::validate() const {
  if (n_train == 0 || n_val == 0 || n_test == 0) throw ConfigError("dataset split sizes must be > 0");
  if (!(radius > 0.0)) throw ConfigError("radius must be > 0");
  if (!(mode_std >= 0.0)) throw ConfigError("mode_std must be >= 0");
  if (!(gap > 0.0)) throw ConfigError("gap must be > 0");
  if (!(comp_std >= 0.0)) throw ConfigError("comp_std must be >= 0");
}

Dims dataset_dims(DatasetKind kind) {
  return kind == DatasetKind::ring8 ? Dims{0, 2} : Dims{1, 1};
}

bool is_conditional(DatasetKind kind) { return kind != DatasetKind::ring8; }

namespace {

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }
double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

// E|c + s·Z| for Z ~ N(0, 1).
double folded_normal_mean(double c, double s) {
  if (s == 0.0) return std::fabs(c);
  return c * (1.0 - 2.0 * normal_cdf(-c / s)) + 2.0 * s * normal_pdf(c / s);
}

double hetero_std(double x) { return 0.1 + 0.4 * x * x; }

}  // namespace

AnalyticMoments analytic_moments(const DatasetSpec& spec, double x) {
  AnalyticMoments m;
  auto push = [&](double mean, double var, double lo, double hi, double mad) {
    m.mean.push_back(mean);
    m.variance.push_back(var);
    m.median_lo.push_back(lo);
    m.median_hi.push_back(hi);
    m.mad.push_back(mad);
  };
  switch (spec.kind) {
    case DatasetKind::ring8: {
      // Each coordinate is a symmetric mixture of r·cos(2πk/8) + noise; median 0.
      const double var = spec.radius * spec.radius / 2.0 + spec.mode_std * spec.mode_std;
      for (int coord = 0; coord < 2; ++coord) {
        double mad = 0.0;
        for (int k = 0; k < 8; ++k) {
          const double angle = 2.0 * std::numbers::pi * k / 8.0;
          const double c = spec.radius * (coord == 0 ? std::cos(angle) : std::sin(angle));
          mad += folded_normal_mean(c, spec.mode_std) / 8.0;
        }
        push(0.0, var, 0.0, 0.0, mad);
      }
      break;
    }
    case DatasetKind::two_delta:
      push(0.0, 1.0, -1.0, 1.0, 1.0);
      break;
    case DatasetKind::hetero_gaussian: {
      const double mu = std::sin(std::numbers::pi * x);
      const double s = hetero_std(x);
      push(mu, s * s, mu, mu, s * std::sqrt(2.0 / std::numbers::pi));
      break;
    }
    case DatasetKind::cond_bimodal: {
      const double g = spec.gap, s = spec.comp_std;
      // The ℓ1 objective is flat between the two components as s → 0.
      push(0.0, g * g + s * s, -g, g, folded_normal_mean(g, s));
      break;
    }
  }
  return m;
}

Tensor ring8_centers(const DatasetSpec& spec) {
  std::vector<double> v;
  for (int k = 0; k < 8; ++k) {
    const double angle = 2.0 * std::numbers::pi * k / 8.0;
    v.push_back(spec.radius * std::cos(angle));
    v.push_back(spec.radius * std::sin(angle));
  }
  return Tensor(8, 2, std::move(v));
}

Batch make_ring8(const DatasetSpec& spec, std::size_t n, Rng& rng) {
  std::uniform_int_distribution<int> mode(0, 7);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<double> y(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    const double angle = 2.0 * std::numbers::pi * mode(rng) / 8.0;
    y[2 * i] = spec.radius * std::cos(angle) + spec.mode_std * noise(rng);
    y[2 * i + 1] = spec.radius * std::sin(angle) + spec.mode_std * noise(rng);
  }
  return {Tensor::zeros(n, 0), Tensor(n, 2, std::move(y))};
}

Tensor sample_targets(const DatasetSpec& spec, const Tensor& x, Rng& rng) {
  const std::size_t n = x.rows();
  std::normal_distribution<double> normal(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  switch (spec.kind) {
    case DatasetKind::ring8:
      return make_ring8(spec, n, rng).y;
    case DatasetKind::two_delta: {
      std::vector<double> y(n);
      for (double& v : y) v = coin(rng) ? 1.0 : -1.0;
      return Tensor::column(std::move(y));
    }
    case DatasetKind::hetero_gaussian: {
      std::vector<double> y(n);
      for (std::size_t i = 0; i < n; ++i) {
        const double xi = x(i, 0);
        y[i] = std::sin(std::numbers::pi * xi) + hetero_std(xi) * normal(rng);
      }
      return Tensor::column(std::move(y));
    }
    case DatasetKind::cond_bimodal: {
      std::vector<double> y(n);
      for (double& v : y) {
        const double sign = coin(rng) ? 1.0 : -1.0;
        v = sign * spec.gap + spec.comp_std * normal(rng);
      }
      return Tensor::column(std::move(y));
    }
  }
  throw std::logic_error("unknown dataset kind");
}

namespace {

Batch make_conditional(const DatasetSpec& spec, std::size_t n, Rng& rng) {
  Tensor x = uniform(n, 1, -1.0, 1.0, rng);
  Tensor y = sample_targets(spec, x, rng);
  return {std::move(x), std::move(y)};
}

}  // namespace

Batch make_two_delta(const DatasetSpec& spec, std::size_t n, Rng& rng) {
  DatasetSpec s = spec;
  s.kind = DatasetKind::two_delta;
  return make_conditional(s, n, rng);
}

Batch make_hetero_gaussian(const DatasetSpec& spec, std::size_t n, Rng& rng) {
  DatasetSpec s = spec;
  s.kind = DatasetKind::hetero_gaussian;
  return make_conditional(s, n, rng);
}

Batch make_cond_bimodal(const DatasetSpec& spec, std::size_t n, Rng& rng) {
  DatasetSpec s = spec;
  s.kind = DatasetKind::cond_bimodal;
  return make_conditional(s, n, rng);
}

Batch make_dataset(const DatasetSpec& spec, std::size_t n, Rng& rng) {
  spec.validate();
  if (spec.kind == DatasetKind::ring8) return make_ring8(spec, n, rng);
  return make_conditional(spec, n, rng);
}

std::vector<double> x_grid(std::size_t points) {
  if (points < 2) throw ConfigError("x grid needs at least 2 points");
  std::vector<double> g(points);
  for (std::size_t i = 0; i < points; ++i) g[i] = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(points - 1);
  return g;
}

Batch take_rows(const Batch& batch, std::span<const std::size_t> rows) {
  const std::size_t dx = batch.x.cols(), dy = batch.y.cols();
  std::vector<double> x, y;
  x.reserve(rows.size() * dx);
  y.reserve(rows.size() * dy);
  for (std::size_t r : rows) {
    if (r >= batch.size()) throw ShapeError("take_rows: row index out of range");
    const auto xv = batch.x.values().subspan(r * dx, dx);
    const auto yv = batch.y.values().subspan(r * dy, dy);
    x.insert(x.end(), xv.begin(), xv.end());
    y.insert(y.end(), yv.begin(), yv.end());
  }
  return {Tensor(rows.size(), dx, std::move(x)), Tensor(rows.size(), dy, std::move(y))};
}

Batch sample_rows(const Batch& batch, std::size_t n, Rng& rng) {
  if (batch.size() == 0) throw ShapeError("sample_rows from an empty batch");
  std::uniform_int_distribution<std::size_t> pick(0, batch.size() - 1);
  std::vector<std::size_t> rows(n);
  for (std::size_t& r : rows) r = pick(rng);
  return take_rows(batch, rows);
}

Splits split(const Batch& batch, std::array<double, 3> fractions, Rng& rng) {
  double total = 0.0;
  for (double f : fractions) {
    if (f < 0.0) throw ConfigError("split fractions must be nonnegative");
    total += f;
  }
  if (std::fabs(total - 1.0) > 1e-9) throw ConfigError("split fractions must sum to 1");
  const std::size_t n = batch.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_train = static_cast<std::size_t>(std::llround(fractions[0] * static_cast<double>(n)));
  const auto n_val = std::min(n - n_train, static_cast<std::size_t>(std::llround(fractions[1] * static_cast<double>(n))));
  std::span<const std::size_t> all(order);
  return {take_rows(batch, all.subspan(0, n_train)), take_rows(batch, all.subspan(n_train, n_val)),
          take_rows(batch, all.subspan(n_train + n_val))};
}

Splits make_splits(const DatasetSpec& spec) {
  spec.validate();
  Rng rng = make_rng(spec.seed, 0xda7a);
  const std::size_t n = spec.n_train + spec.n_val + spec.n_test;
  const Batch all = make_dataset(spec, n, rng);
  const double dn = static_cast<double>(n);
  return split(all,
               {static_cast<double>(spec.n_train) / dn, static_cast<double>(spec.n_val) / dn,
                1.0 - static_cast<double>(spec.n_train + spec.n_val) / dn},
               rng);
}

void write_csv(const Batch& batch, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot write " + path.string());
  const std::size_t dx = batch.x.cols(), dy = batch.y.cols();
  for (std::size_t c = 0; c < dx; ++c) os << (c ? "," : "") << "x" << c;
  for (std::size_t c = 0; c < dy; ++c) os << (dx + c ? "," : "") << "y" << c;
  os << "\n";
  char buf[32];
  for (std::size_t r = 0; r < batch.size(); ++r) {
    for (std::size_t c = 0; c < dx; ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", batch.x(r, c));
      os << (c ? "," : "") << buf;
    }
    for (std::size_t c = 0; c < dy; ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", batch.y(r, c));
      os << (dx + c ? "," : "") << buf;
    }
    os << "\n";
  }
}

}  // namespace mrlab
