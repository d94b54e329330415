// Acceptance checks. Usage: mrlab_acceptance <1-9> [--configs DIR] [--work DIR] [--bin MRLAB]
// Prints one "criterion N: PASS|FAIL ..." line and exits 0 on PASS.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mrlab/config.hpp"
#include "mrlab/gradcheck.hpp"
#include "mrlab/runner.hpp"

using namespace mrlab;
namespace fs = std::filesystem;

namespace {

struct Context {
  fs::path configs;
  fs::path work;
  std::string bin;
};

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

// Reconstruction baselines use their customary weight of 100; MR/pMR keep the config's lambda_aux.
constexpr double kReconstructionWeight = 100.0;

// Final evaluation row of one training run of `base` with overrides.
HistoryRow run_cell(const Context& ctx, const std::string& base, VariantId variant, std::uint64_t seed,
                    const std::vector<std::pair<std::string, std::string>>& overrides = {}) {
  TrainConfig cfg = parse_config(ctx.configs / base);
  cfg.variant = variant;
  cfg.seed = seed;
  if (variant == VariantId::gan_l1 || variant == VariantId::gan_l2) cfg.lambda_aux = kReconstructionWeight;
  std::string tag = to_string(variant) + "_s" + std::to_string(seed);
  for (const auto& [k, v] : overrides) {
    set_config_value(cfg, k, v);
    tag += "_" + k + "=" + v;
  }
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const RunOutcome o = run_training(cfg, ctx.work / fs::path(base).stem() / tag);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (o.exit_code != 0 || !o.final_row) throw std::runtime_error(tag + " failed: " + o.error);
  const EvalSummary& m = o.final_row->metrics;
  std::cout << "  " << tag << ": ";
  if (m.modes_captured) std::cout << "modes " << *m.modes_captured << ", hq " << fmt(m.hq_fraction.value_or(0)) << ", ";
  std::cout << "sample var " << fmt(m.mean_sample_variance) << ", " << fmt(secs) << " s" << std::endl;
  return *o.final_row;
}

Verdict gradients(const Context&) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto items = run_gradcheck();
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  double worst_op = 0, worst_loss = 0;
  bool ok = true;
  for (const auto& it : items) {
    ok &= it.passed();
    (it.threshold <= 1e-6 ? worst_op : worst_loss) =
        std::max(it.threshold <= 1e-6 ? worst_op : worst_loss, it.worst_rel_error);
  }
  std::size_t variants = 0;
  for (VariantId v : kAllVariants) {
    for (const auto& it : items) {
      if (it.name.find(to_string(v)) != std::string::npos) {
        ++variants;
        break;
      }
    }
  }
  return {ok && variants == kAllVariants.size() && secs < 60,
          std::to_string(items.size()) + " items, " + std::to_string(variants) + " variants, worst op " +
              fmt(worst_op) + ", worst loss " + fmt(worst_loss) + ", " + fmt(secs) + " s"};
}

Verdict decomposition(const Context&) {
  Rng rng = make_rng(2024, 0);
  std::uniform_int_distribution<int> size(2, 200);
  std::normal_distribution<double> normal;
  double worst = 0;
  for (int t = 0; t < 100; ++t) {
    std::vector<double> y(size(rng)), yh(size(rng));
    const double shift = 3 * normal(rng), scale = std::exp(normal(rng));
    for (double& v : y) v = 10 * normal(rng);
    for (double& v : yh) v = shift + scale * normal(rng);
    worst = std::max(worst, se_ve_decomposition(y, yh).identity_residual);
  }
  const DecompositionReport r = se_ve_decomposition(std::vector<double>{0, 2}, std::vector<double>{1, 1});
  const bool exact = r.var_y == 1.0 && r.se == 0.0 && r.ve == 0.0;
  return {worst < 1e-10 && exact, "worst residual " + fmt(worst) + ", two-point case (" + fmt(r.var_y) + ", " +
                                      fmt(r.se) + ", " + fmt(r.ve) + ")"};
}

Verdict median_property(const Context&) {
  const std::vector<double> grid = scan_grid(-2, 2, 1e-3);
  const L1ScanReport two = l1_minimizer_scan({{{-1.0, 0.5}, {1.0, 0.5}}}, grid);
  const bool two_ok = std::abs(two.min_value - 1.0) < 1e-12 && std::abs(two.argmin.front() + 1.0) < 1e-9 &&
                      std::abs(two.argmin.back() - 1.0) < 1e-9 && two.argmin.size() == 2001;

  Rng rng = make_rng(2025, 0);
  std::uniform_int_distribution<int> atoms(1, 8), value(-20, 20), weight(1, 5);
  std::size_t bad = 0;
  for (int t = 0; t < 50; ++t) {
    DiscreteDistribution d;
    const int n = atoms(rng);
    std::vector<int> w(n);
    for (int& x : w) x = weight(rng);
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    for (int i = 0; i < n; ++i) d.atoms.emplace_back(value(rng) * 0.25, w[i] / total);
    // Analytic median interval from the sorted CDF.
    std::vector<std::pair<double, double>> a = d.atoms;
    std::sort(a.begin(), a.end());
    double cdf = 0, lo = 0, hi = 0;
    bool have_lo = false;
    for (std::size_t i = 0; i < a.size(); ++i) {
      cdf += a[i].second;
      if (!have_lo && cdf >= 0.5 - 1e-12) {
        lo = a[i].first;
        have_lo = true;
        hi = std::abs(cdf - 0.5) < 1e-12 && i + 1 < a.size() ? a[i + 1].first : lo;
      }
    }
    const L1ScanReport r = l1_minimizer_scan(d, scan_grid(-6, 6, 1e-3));
    for (double c : r.argmin) bad += c < lo - 1e-9 || c > hi + 1e-9;
  }
  return {two_ok && bad == 0, "two-point min " + fmt(two.min_value) + " on [" + fmt(two.argmin.front()) + ", " +
                                  fmt(two.argmin.back()) + "], " + std::to_string(bad) +
                                  " argmin points outside the median interval over 50 distributions"};
}

Verdict mle_recovery(const Context& ctx) {
  TrainConfig cfg = parse_config(ctx.configs / "hetero_gaussian.cfg");
  cfg.validate();
  DatasetSpec spec = cfg.dataset;
  spec.seed = cfg.seed;
  const Splits data = make_splits(spec);
  const auto t0 = std::chrono::steady_clock::now();
  const PredictorResult g = train_predictor(data, cfg, Family::gaussian);
  const PredictorResult l = train_predictor(data, cfg, Family::laplace);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const std::vector<double> xs = x_grid(21);
  const Tensor x(xs.size(), 1, xs);
  const PredictorOutput pg = predictor_forward(g.network, x, Family::gaussian);
  const PredictorOutput pl = predictor_forward(l.network, x, Family::laplace);
  const Tensor var = pg.dispersion();
  double mean_err = 0, var_err = 0, med_err = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const AnalyticMoments m = analytic_moments(spec, xs[i]);
    mean_err = std::max(mean_err, std::abs(pg.location[i] - m.mean[0]));
    var_err = std::max(var_err, std::abs(var[i] - m.variance[0]) / m.variance[0]);
    med_err = std::max(med_err, std::abs(pl.location[i] - m.median_lo[0]));
  }
  return {mean_err < 0.05 && var_err < 0.2 && med_err < 0.05 && secs < 300,
          "max |mean err| " + fmt(mean_err) + ", max var rel err " + fmt(var_err) + ", max |median err| " +
              fmt(med_err) + ", " + fmt(secs) + " s"};
}

Verdict mode_collapse(const Context& ctx) {
  struct Group {
    std::vector<VariantId> variants;
    bool collapse;
    double min_modes;
  };
  const std::vector<Group> groups{
      {{VariantId::gan_only, VariantId::gan_l2}, true, 0},
      {{VariantId::g_mr1, VariantId::g_mr2, VariantId::g_pmr1, VariantId::g_pmr2}, false, 7},
      {{VariantId::l_mr1, VariantId::l_mr2, VariantId::l_pmr1, VariantId::l_pmr2}, false, 6},
  };
  bool ok = true;
  std::string detail;
  for (const Group& gr : groups) {
    for (VariantId v : gr.variants) {
      std::vector<double> modes, hq;
      for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const HistoryRow r = run_cell(ctx, "ring8.cfg", v, seed);
        modes.push_back(static_cast<double>(r.metrics.modes_captured.value_or(0)));
        hq.push_back(r.metrics.hq_fraction.value_or(0));
      }
      const double m = median(modes), h = median(hq);
      const bool pass = gr.collapse ? m <= 3 : (m >= gr.min_modes && h >= 0.5);
      ok &= pass;
      detail += (detail.empty() ? "" : ", ") + to_string(v) + " " + fmt(m) + (gr.collapse ? "" : "/" + fmt(h)) +
                (pass ? "" : " (fail)");
    }
  }
  return {ok, "median modes[/hq]: " + detail};
}

Verdict variance_collapse(const Context& ctx) {
  const double truth = 1.01;
  std::vector<double> l2, pmr;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    l2.push_back(run_cell(ctx, "cond_bimodal.cfg", VariantId::gan_l2, seed).metrics.mean_sample_variance);
    pmr.push_back(run_cell(ctx, "cond_bimodal.cfg", VariantId::g_pmr2, seed).metrics.mean_sample_variance);
  }
  const double a = median(l2), b = median(pmr);
  return {a < 0.1 * truth && b >= 0.6 * truth && b <= 1.4 * truth,
          "median sample variance gan_l2 " + fmt(a) + " (< " + fmt(0.1 * truth) + "), g_pmr2 " + fmt(b) + " (in [" +
              fmt(0.6 * truth) + ", " + fmt(1.4 * truth) + "])"};
}

Verdict laplace_trick(const Context&) {
  Rng rng = make_rng(2026, 0);
  bool value_ok = true, all_reached = true, control_ok = true;
  double worst = 0;
  std::size_t control_max = 0;
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t k = 2 + static_cast<std::size_t>(trial % 9), b = 5, dy = 2;
    std::vector<Tensor> init;
    for (std::size_t i = 0; i < k; ++i) init.push_back(standard_normal(b, dy, rng));
    Tensor y = standard_normal(b, dy, rng);
    const Tensor med = median_of(init);
    std::vector<double> yv = y.to_vector();
    for (std::size_t e = 0; e < yv.size(); ++e) {
      if (std::abs(yv[e] - med[e]) < 1e-3) yv[e] += 0.5;
    }
    y = Tensor(b, dy, yv);

    Tape tape;
    const std::vector<Tensor> s = tape.watch(init);
    const Tensor loss = mr_loss_laplace(1, s, y);
    double expected = 0;
    for (std::size_t e = 0; e < b * dy; ++e) expected += std::abs(y[e] - med[e]);
    expected /= static_cast<double>(b * dy);
    worst = std::max(worst, std::abs(loss.item() - expected));
    value_ok &= std::abs(loss.item() - expected) <= 1e-12;
    const Gradients g = tape.backward(loss);
    for (const Tensor& t : s) {
      const Tensor gi = g.of(t);
      for (std::size_t e = 0; e < b * dy; ++e) all_reached &= gi[e] != 0.0;
    }

    // Negative control: differentiate straight through the median.
    Tape naive_tape;
    const std::vector<Tensor> ns = naive_tape.watch(init);
    const Gradients ng = naive_tape.backward(mean(abs(y - median_of(ns))));
    for (std::size_t e = 0; e < b * dy; ++e) {
      std::size_t nonzero = 0;
      for (const Tensor& t : ns) nonzero += ng.of(t)[e] != 0.0;
      control_max = std::max(control_max, nonzero);
      control_ok &= nonzero <= 2;
    }
  }
  return {value_ok && all_reached && control_ok,
          "worst value error " + fmt(worst) + ", every sample reached: " + (all_reached ? "yes" : "no") +
              ", naive loss reaches at most " + std::to_string(control_max) + " samples"};
}

Verdict recon_sweep(const Context& ctx) {
  const std::vector<std::string> lambdas{"0", "1", "10", "100"};
  std::vector<double> v;
  for (const std::string& lam : lambdas) {
    std::vector<double> per_seed;
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      per_seed.push_back(run_cell(ctx, "cond_bimodal.cfg", VariantId::g_pmr2, seed, {{"lambda_rec", lam}})
                             .metrics.mean_sample_variance);
    }
    v.push_back(median(per_seed));
  }
  bool monotone = true;
  for (std::size_t i = 0; i + 1 < v.size(); ++i) monotone &= v[i + 1] <= 1.2 * v[i];
  const bool drop = v.back() < 0.25 * v.front();
  std::string detail = "median sample variance by lambda_rec:";
  for (std::size_t i = 0; i < v.size(); ++i) detail += " " + lambdas[i] + " -> " + fmt(v[i]);
  return {monotone && drop, detail};
}

Verdict reproducibility(const Context& ctx) {
  TrainConfig cfg = parse_config(ctx.configs / "cond_bimodal.cfg");
  cfg.variant = VariantId::g_pmr2;
  cfg.g_steps = 2000;
  cfg.predictor_epochs = 20;
  const fs::path dir = ctx.work / "repro";
  fs::remove_all(dir);
  bool ok = run_training(cfg, dir / "a").exit_code == 0 && run_training(cfg, dir / "b").exit_code == 0;
  const std::string a = slurp(dir / "a" / "metrics.csv");
  ok &= !a.empty() && a == slurp(dir / "b" / "metrics.csv");
  std::string detail = "in-process rerun " + std::string(ok ? "identical" : "differs");
  if (!ctx.bin.empty()) {
    std::ofstream(dir / "cfg.txt") << serialize_config(cfg);
    const std::string cmd = ctx.bin + " train " + (dir / "cfg.txt").string() + " --out " + (dir / "c").string() + " -q";
    const bool ran = std::system(cmd.c_str()) == 0;
    const bool same = ran && slurp(dir / "c" / run_id(cfg) / "metrics.csv") == a;
    ok &= same;
    detail += ", separate process " + std::string(same ? "identical" : "differs");
  }
  return {ok, detail + " (" + std::to_string(std::count(a.begin(), a.end(), '\n')) + " lines)"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mrlab acceptance checks"};
  int criterion = 0;
  Context ctx;
  ctx.configs = MRLAB_CONFIG_DIR;
  ctx.work = fs::temp_directory_path() / "mrlab_acceptance";
  app.add_option("criterion", criterion, "criterion number")->required()->check(CLI::Range(1, 9));
  app.add_option("--configs", ctx.configs, "directory with the base configs");
  app.add_option("--work", ctx.work, "scratch directory for run outputs");
  app.add_option("--bin", ctx.bin, "mrlab executable for the separate-process rerun");
  CLI11_PARSE(app, argc, argv);

  using Check = Verdict (*)(const Context&);
  const Check checks[] = {gradients, decomposition, median_property, mle_recovery, mode_collapse,
                          variance_collapse, laplace_trick, recon_sweep, reproducibility};
  Verdict v;
  try {
    fs::create_directories(ctx.work);
    v = checks[criterion - 1](ctx);
  } catch (const std::exception& e) {
    v = {false, std::string("error: ") + e.what()};
  }
  std::cout << "criterion " << criterion << ": " << (v.pass ? "PASS" : "FAIL") << "  " << v.detail << std::endl;
  return v.pass ? 0 : 1;
}
