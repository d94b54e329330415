#include "mrlab/runner.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <mutex>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "mrlab/config.hpp"
#include "mrlab/gradcheck.hpp"

#ifndef MRLAB_VERSION
#define MRLAB_VERSION "0.1.0"
#endif

namespace mrlab {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

constexpr std::uint64_t kSamplesStream = 7;
constexpr std::uint64_t kPredictorSampleStream = 8;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

template <class T>
std::string cell(const std::optional<T>& v) {
  if (!v) return "";
  if constexpr (std::is_integral_v<T>) {
    return std::to_string(*v);
  } else {
    return num(*v);
  }
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
}

struct MetricsRow {
  std::uint64_t step = 0;
  std::optional<double> loss_d, loss_g_gan, loss_aux, loss_rec;
  std::optional<std::size_t> modes_captured;
  std::optional<double> hq_fraction, mean_abs_err, var_rel_err, diversity, wall_ms;
};

std::string format_row(const std::string& id, const TrainConfig& cfg, const MetricsRow& r) {
  std::string s = id + "," + to_string(cfg.variant) + "," + std::to_string(cfg.seed) + "," + std::to_string(r.step);
  for (const std::string& c :
       {cell(r.loss_d), cell(r.loss_g_gan), cell(r.loss_aux), cell(r.loss_rec), cell(r.modes_captured),
        cell(r.hq_fraction), cell(r.mean_abs_err), cell(r.var_rel_err), cell(r.diversity), cell(r.wall_ms)}) {
    s += "," + c;
  }
  return s + "\n";
}

MetricsRow from_history(const HistoryRow& h, bool wall) {
  MetricsRow r;
  r.step = h.step;
  r.loss_d = h.loss_d;
  r.loss_g_gan = h.loss_g_gan;
  r.loss_aux = h.loss_aux;
  r.loss_rec = h.loss_rec;
  r.modes_captured = h.metrics.modes_captured;
  r.hq_fraction = h.metrics.hq_fraction;
  r.mean_abs_err = h.metrics.mean_abs_err;
  r.var_rel_err = h.metrics.var_rel_err;
  r.diversity = h.metrics.diversity;
  if (wall) r.wall_ms = h.wall_ms;
  return r;
}

Json summary_json(const HistoryRow& h) {
  Json j;
  j["step"] = h.step;
  j["loss_d"] = h.loss_d;
  j["loss_g_gan"] = h.loss_g_gan;
  j["loss_aux"] = h.loss_aux ? Json(*h.loss_aux) : Json();
  j["loss_rec"] = h.loss_rec ? Json(*h.loss_rec) : Json();
  j["modes_captured"] = h.metrics.modes_captured ? Json(*h.metrics.modes_captured) : Json();
  j["hq_fraction"] = h.metrics.hq_fraction ? Json(*h.metrics.hq_fraction) : Json();
  j["mean_abs_err"] = h.metrics.mean_abs_err;
  j["var_rel_err"] = h.metrics.var_rel_err;
  j["diversity"] = h.metrics.diversity;
  j["mean_sample_variance"] = h.metrics.mean_sample_variance;
  return j;
}

Tensor grid_inputs(std::size_t per_x, std::size_t grid_points) {
  std::vector<double> xs;
  for (double x : x_grid(grid_points)) xs.insert(xs.end(), per_x, x);
  return Tensor(xs.size(), 1, std::move(xs));
}

// Draws from the distribution a predictor assigns to each input row.
Tensor sample_predicted(const PredictorOutput& pred, Rng& rng) {
  const Tensor disp = pred.dispersion();
  std::normal_distribution<double> normal;
  std::exponential_distribution<double> expo(1.0);
  std::vector<double> out(pred.location.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (pred.family == Family::gaussian) {
      out[i] = pred.location[i] + std::sqrt(disp[i]) * normal(rng);
    } else {
      const double e1 = expo(rng);
      out[i] = pred.location[i] + disp[i] * (e1 - expo(rng));
    }
  }
  return Tensor(pred.location.rows(), pred.location.cols(), std::move(out));
}

Batch predictor_samples(const Network& p, Family family, const DatasetSpec& spec, std::size_t per_x,
                        std::size_t grid_points, std::size_t ring_samples, Rng& rng) {
  Tensor x = is_conditional(spec.kind) ? grid_inputs(per_x, grid_points) : Tensor::zeros(ring_samples, 0);
  const PredictorOutput pred = predictor_forward(p, x, family);
  return {x, sample_predicted(pred, rng)};
}

std::optional<double> parse_number(const std::string& s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  for (std::string item; std::getline(ss, item, ',');) {
    const auto b = item.find_first_not_of(" \t\r");
    const auto e = item.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? "" : item.substr(b, e - b + 1));
  }
  return out;
}

Json config_echo(const TrainConfig& cfg) {
  Json j = Json::object();
  for (const std::string& k : config_keys()) j[k] = get_config_value(cfg, k);
  return j;
}

void mark_failed(const fs::path& dir, const std::string& why) { write_text(dir / "FAILED", why + "\n"); }

}  // namespace

TrainConfig apply_env_seed(TrainConfig cfg) {
  const char* env = std::getenv("MRLAB_SEED");
  if (!env) return cfg;
  const std::string s(env);
  std::uint64_t seed = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), seed);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) {
    throw ConfigError("MRLAB_SEED: '" + s + "' is not a nonnegative integer");
  }
  cfg.seed = seed;
  return cfg;
}

PredictorEval evaluate_predictor(const Network& p, Family family, const DatasetSpec& spec, std::size_t grid_points) {
  const bool cond = is_conditional(spec.kind);
  const std::vector<double> xs = cond ? x_grid(grid_points) : std::vector<double>{0.0};
  const Tensor x = cond ? Tensor(xs.size(), 1, xs) : Tensor::zeros(1, 0);
  const PredictorOutput pred = predictor_forward(p, x, family);
  const Tensor disp = pred.dispersion();
  const std::size_t dy = pred.location.cols();
  PredictorEval out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const AnalyticMoments am = analytic_moments(spec, xs[i]);
    for (std::size_t j = 0; j < dy; ++j) {
      const double loc = pred.location(i, j);
      double loc_err = 0.0, disp_err = 0.0;
      if (family == Family::gaussian) {
        loc_err = std::abs(loc - am.mean[j]);
        disp_err = std::abs(disp(i, j) - am.variance[j]) / am.variance[j];
      } else {
        loc_err = std::max({0.0, am.median_lo[j] - loc, loc - am.median_hi[j]});
        disp_err = std::abs(disp(i, j) - am.mad[j]) / am.mad[j];
      }
      out.mean_location_err += loc_err;
      out.mean_dispersion_rel_err += disp_err;
      out.max_location_err = std::max(out.max_location_err, loc_err);
      out.max_dispersion_rel_err = std::max(out.max_dispersion_rel_err, disp_err);
    }
  }
  const double n = static_cast<double>(xs.size() * dy);
  out.mean_location_err /= n;
  out.mean_dispersion_rel_err /= n;
  return out;
}

RunOutcome run_training(const TrainConfig& cfg, const fs::path& run_dir, const RunOptions& opts) {
  RunOutcome outcome;
  outcome.run_id = run_id(cfg);
  outcome.dir = run_dir;
  fs::create_directories(run_dir);
  fs::remove(run_dir / "FAILED");

  const auto t0 = std::chrono::steady_clock::now();
  Json manifest;
  manifest["run_id"] = outcome.run_id;
  manifest["seed"] = cfg.seed;
  manifest["version"] = std::string("mrlab ") + MRLAB_VERSION;
  manifest["start_time"] = utc_now();
  manifest["config"] = config_echo(cfg);

  auto finish = [&](const std::string& status) {
    manifest["end_time"] = utc_now();
    manifest["wall_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    manifest["final_metrics"] = outcome.final_row ? summary_json(*outcome.final_row) : Json();
    manifest["exit_status"] = status;
    manifest["exit_code"] = outcome.exit_code;
    if (!outcome.error.empty()) manifest["error"] = outcome.error;
    write_text(run_dir / "manifest.json", manifest.dump(2) + "\n");
  };

  std::ofstream metrics;
  try {
    cfg.validate();
    write_text(run_dir / "config.txt", serialize_config(cfg));
    metrics.open(run_dir / "metrics.csv", std::ios::binary | std::ios::trunc);
    if (!metrics) throw std::runtime_error("cannot write " + (run_dir / "metrics.csv").string());
    metrics << kMetricsHeader << "\n";

    DatasetSpec data_spec = cfg.dataset;
    data_spec.seed = cfg.seed;

    if (!traits(cfg.variant).trains_generator) {
      const PredictorResult pr = train_mle_only(cfg);
      const PredictorEval pe = evaluate_predictor(pr.network, pr.family, data_spec);
      std::optional<std::size_t> modes;
      std::optional<double> hq;
      Rng srng = make_rng(cfg.seed, kPredictorSampleStream);
      const Batch samples = predictor_samples(pr.network, pr.family, data_spec, 20, 21, cfg.eval_samples, srng);
      if (data_spec.kind == DatasetKind::ring8) {
        const ModeCoverageReport cov = mode_coverage(samples.y, ring8_centers(data_spec), data_spec.mode_std);
        modes = cov.modes_captured;
        hq = cov.high_quality_fraction;
      }
      for (std::size_t e = 0; e < pr.val_curve.size(); ++e) {
        MetricsRow r;
        r.step = e + 1;
        r.loss_aux = pr.val_curve[e];
        if (e + 1 == pr.val_curve.size()) {
          r.modes_captured = modes;
          r.hq_fraction = hq;
          r.mean_abs_err = pe.mean_location_err;
          r.var_rel_err = pe.mean_dispersion_rel_err;
        }
        metrics << format_row(outcome.run_id, cfg, r);
      }
      save_checkpoint(run_dir / "predictor.ckpt",
                      {{"predictor", cfg.seed, pr.best_epoch + 1, to_string(pr.family)}, pr.network});
      write_csv(samples, run_dir / "samples.csv");
      HistoryRow last;
      last.step = pr.val_curve.size();
      last.loss_aux = pr.val_curve.empty() ? std::nullopt : std::optional<double>(pr.val_curve.back());
      last.metrics.modes_captured = modes;
      last.metrics.hq_fraction = hq;
      last.metrics.mean_abs_err = pe.mean_location_err;
      last.metrics.var_rel_err = pe.mean_dispersion_rel_err;
      outcome.final_row = last;
      manifest["predictor"] = {{"family", to_string(pr.family)}, {"best_epoch", pr.best_epoch},
                               {"epochs_run", pr.val_curve.size()}};
    } else {
      TrainCallbacks cb;
      cb.on_predictor = [&](const PredictorResult& pr) {
        save_checkpoint(run_dir / "predictor.ckpt",
                        {{"predictor", cfg.seed, pr.best_epoch + 1, to_string(pr.family)}, pr.network});
        manifest["predictor"] = {{"family", to_string(pr.family)}, {"best_epoch", pr.best_epoch},
                                 {"epochs_run", pr.val_curve.size()}};
        if (opts.log) {
          *opts.log << outcome.run_id << " predictor: best epoch " << pr.best_epoch << " of " << pr.val_curve.size()
                    << ", val loss " << num(pr.val_curve[pr.best_epoch]) << "\n";
        }
      };
      cb.on_row = [&](const HistoryRow& row, const GanState&) {
        metrics << format_row(outcome.run_id, cfg, from_history(row, opts.record_wall_time));
        metrics.flush();
        outcome.final_row = row;
        if (opts.log) {
          *opts.log << outcome.run_id << " step " << row.step << " loss_d " << num(row.loss_d) << " loss_g "
                    << num(row.loss_g_gan);
          if (row.metrics.modes_captured) *opts.log << " modes " << *row.metrics.modes_captured;
          *opts.log << " mean_err " << num(row.metrics.mean_abs_err) << " var_rel_err "
                    << num(row.metrics.var_rel_err) << "\n";
        }
      };
      const GanResult r = train_gan(cfg, cb);
      save_checkpoint(run_dir / "generator.ckpt", {{"generator", cfg.seed, cfg.g_steps, "none"}, r.generator});
      save_checkpoint(run_dir / "discriminator.ckpt",
                      {{"discriminator", cfg.seed, cfg.g_steps, "none"}, r.discriminator});
      Rng srng = make_rng(cfg.seed, kSamplesStream);
      write_csv(generate_samples(r.generator, data_spec, 20, 21, cfg.eval_samples, srng), run_dir / "samples.csv");
    }
    metrics.close();
    finish("ok");
  } catch (const TrainingDiverged& e) {
    metrics.close();
    outcome.exit_code = 2;
    outcome.error = e.what();
    const std::uint64_t good_step = outcome.final_row ? outcome.final_row->step : 0;
    save_checkpoint(run_dir / "generator_last_good.ckpt", {{"generator", cfg.seed, good_step, "none"}, e.last_good_g});
    save_checkpoint(run_dir / "discriminator_last_good.ckpt",
                    {{"discriminator", cfg.seed, good_step, "none"}, e.last_good_d});
    mark_failed(run_dir, std::string("diverged: ") + e.what());
    finish("diverged");
  } catch (const std::exception& e) {
    metrics.close();
    outcome.exit_code = 1;
    outcome.error = e.what();
    mark_failed(run_dir, std::string("error: ") + e.what());
    finish("error");
  }
  return outcome;
}

RunOutcome cmd_train(const fs::path& config_path, const fs::path& out_dir, const RunOptions& opts) {
  const TrainConfig cfg = apply_env_seed(parse_config(config_path));
  return run_training(cfg, out_dir / run_id(cfg), opts);
}

std::vector<SweepRow> run_sweep(const TrainConfig& base, const std::string& key, const std::vector<std::string>& values,
                                const fs::path& out_dir, std::size_t jobs, const RunOptions& opts) {
  if (!is_numeric_key(key)) throw ConfigError(key + ": not a numeric key, cannot sweep");
  if (values.empty()) throw ConfigError("sweep needs at least one value");
  std::vector<TrainConfig> cfgs;
  for (const std::string& v : values) {
    TrainConfig c = base;
    set_config_value(c, key, v);
    cfgs.push_back(c);
  }
  fs::create_directories(out_dir);

  std::vector<SweepRow> rows(values.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mu;
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < cfgs.size();) {
      const fs::path dir = out_dir / (key + "=" + values[i]);
      RunOptions ro = opts;
      ro.log = nullptr;
      rows[i].value = values[i];
      rows[i].outcome = run_training(cfgs[i], dir, ro);
      if (opts.log) {
        std::lock_guard lock(log_mu);
        const RunOutcome& o = rows[i].outcome;
        *opts.log << key << "=" << values[i] << " " << o.run_id << (o.exit_code == 0 ? " ok" : " FAILED: " + o.error)
                  << "\n";
      }
    }
  };
  const std::size_t n_threads = std::clamp<std::size_t>(jobs, 1, cfgs.size());
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }

  std::string csv =
      "key,value,run_id,status,step,modes_captured,hq_fraction,mean_abs_err,var_rel_err,diversity,"
      "mean_sample_variance\n";
  for (const SweepRow& r : rows) {
    const RunOutcome& o = r.outcome;
    csv += key + "," + r.value + "," + o.run_id + "," + (o.exit_code == 0 ? "ok" : "failed");
    if (o.final_row) {
      const EvalSummary& m = o.final_row->metrics;
      csv += "," + std::to_string(o.final_row->step) + "," + cell(m.modes_captured) + "," + cell(m.hq_fraction) +
             "," + num(m.mean_abs_err) + "," + num(m.var_rel_err) + "," + num(m.diversity) + "," +
             num(m.mean_sample_variance);
    } else {
      csv += ",,,,,,,";
    }
    csv += "\n";
  }
  write_text(out_dir / "summary.csv", csv);
  return rows;
}

int cmd_sweep(const fs::path& config_path, const std::string& key, const std::vector<std::string>& values,
              const fs::path& out_dir, std::size_t jobs, const RunOptions& opts) {
  const TrainConfig base = apply_env_seed(parse_config(config_path));
  const std::vector<SweepRow> rows = run_sweep(base, key, values, out_dir, jobs, opts);
  return std::all_of(rows.begin(), rows.end(), [](const SweepRow& r) { return r.outcome.exit_code == 0; }) ? 0 : 1;
}

int cmd_gradcheck(bool corrupted_fixture, std::ostream& out) {
  GradcheckOptions opts;
  opts.corrupted_fixture = corrupted_fixture;
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<GradcheckItem> items = run_gradcheck(opts);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::size_t failed = 0;
  for (const GradcheckItem& it : items) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-36s %10.3e  (max %.0e)  %s\n", it.name.c_str(), it.worst_rel_error,
                  it.threshold, it.passed() ? "ok" : "FAIL");
    out << buf;
    if (!it.passed()) ++failed;
  }
  out << items.size() << " items, " << failed << " failed, " << num(secs) << " s\n";
  return failed == 0 ? 0 : 1;
}

// ---------------------------------------------------------------------------

std::optional<DiscreteDistribution> builtin_distribution(const std::string& name) {
  if (name == "two_delta") return DiscreteDistribution{{{-1.0, 0.5}, {1.0, 0.5}}};
  if (name == "point") return DiscreteDistribution{{{0.0, 1.0}}};
  if (name == "three_point") return DiscreteDistribution{{{-1.0, 0.25}, {0.0, 0.5}, {2.0, 0.25}}};
  if (name == "skewed") return DiscreteDistribution{{{0.0, 0.6}, {1.0, 0.3}, {5.0, 0.1}}};
  return std::nullopt;
}

SampleTable read_sample_table(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error(path.string() + ": empty file");
  const std::vector<std::string> header = split_csv_line(line);
  if (header.empty() || header[0] != "y" || header.size() > 2) {
    throw std::runtime_error(path.string() + ":1: expected header 'y' or 'y,<column>'");
  }
  SampleTable t;
  if (header.size() == 2) t.second_name = header[1];
  for (std::size_t line_no = 2; std::getline(is, line); ++line_no) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::vector<std::string> f = split_csv_line(line);
    if (f.size() != header.size()) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": expected " +
                               std::to_string(header.size()) + " fields");
    }
    for (std::size_t c = 0; c < f.size(); ++c) {
      const auto v = parse_number(f[c]);
      if (!v || !std::isfinite(*v)) {
        throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": bad number '" + f[c] + "'");
      }
      (c == 0 ? t.y : t.second).push_back(*v);
    }
  }
  if (t.y.empty()) throw std::runtime_error(path.string() + ": no rows");
  return t;
}

int cmd_decompose(const std::string& target, const DecomposeOptions& opts, std::ostream& out) {
  std::vector<double> y, y_hat;
  if (const auto dist = builtin_distribution(target)) {
    for (const auto& [value, p] : dist->atoms) y.insert(y.end(), static_cast<std::size_t>(std::llround(p * 100)), value);
  } else {
    SampleTable t = read_sample_table(target);
    if (!t.second_name.empty() && t.second_name != "y_hat") {
      throw std::runtime_error(target + ": second column must be named y_hat");
    }
    y = std::move(t.y);
    y_hat = std::move(t.second);
  }
  if (y_hat.empty()) {
    const double c = opts.constant.value_or(std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size()));
    y_hat.assign(y.size(), c);
  }
  const DecompositionReport r = se_ve_decomposition(y, y_hat);
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "n_y = %zu\nn_y_hat = %zu\nvar_y = %.12g\nse = %.12g\nve = %.12g\ntotal = %.12g\n"
                "identity_residual = %.3e\n",
                y.size(), y_hat.size(), r.var_y, r.se, r.ve, r.total, r.identity_residual);
  out << buf;
  return 0;
}

int cmd_median_scan(const std::string& target, double step, std::ostream& out) {
  DiscreteDistribution dist;
  if (const auto b = builtin_distribution(target)) {
    dist = *b;
  } else {
    const SampleTable t = read_sample_table(target);
    if (!t.second_name.empty() && t.second_name != "p") throw std::runtime_error(target + ": second column must be p");
    const double total = std::accumulate(t.second.begin(), t.second.end(), 0.0);
    if (!t.second.empty() && std::abs(total - 1.0) > 1e-9) {
      throw std::runtime_error(target + ": probabilities sum to " + num(total) + ", not 1");
    }
    for (std::size_t i = 0; i < t.y.size(); ++i) {
      dist.atoms.emplace_back(t.y[i], t.second.empty() ? 1.0 / static_cast<double>(t.y.size()) : t.second[i]);
    }
  }
  const auto [lo_it, hi_it] = std::minmax_element(dist.atoms.begin(), dist.atoms.end());
  const std::vector<double> grid = scan_grid(lo_it->first - 1.0, hi_it->first + 1.0, step);
  const L1ScanReport r = l1_minimizer_scan(dist, grid);
  const double a_lo = r.argmin.front(), a_hi = r.argmin.back();
  const bool inside = a_lo >= r.median_lo - 1e-12 && a_hi <= r.median_hi + 1e-12;
  char buf[320];
  std::snprintf(buf, sizeof buf,
                "grid = [%.12g, %.12g] step %.3g (%zu points)\nmin_value = %.12g\nargmin = [%.12g, %.12g] "
                "(%zu points)\nmedian_interval = [%.12g, %.12g]\nargmin_inside_median_interval = %s\n",
                grid.front(), grid.back(), step, grid.size(), r.min_value, a_lo, a_hi, r.argmin.size(), r.median_lo,
                r.median_hi, inside ? "yes" : "no");
  out << buf;
  return 0;
}

int cmd_eval(const fs::path& checkpoint, const fs::path& config_path, std::ostream& out) {
  const Checkpoint ckpt = load_checkpoint(checkpoint);
  const TrainConfig cfg = apply_env_seed(parse_config(config_path));
  DatasetSpec spec = cfg.dataset;
  spec.seed = cfg.seed;
  const Dims dims = dataset_dims(spec.kind);
  const MLPSpec& ns = ckpt.network.spec();
  if (ckpt.header.role == "generator") {
    if (ns.output_dim != dims.y || ns.input_dim <= dims.x) {
      throw ConfigError("generator checkpoint does not fit dataset " + to_string(spec.kind));
    }
    Rng rng = make_rng(cfg.seed, kEvalStreamBase + ckpt.header.step);
    const EvalSummary s =
        evaluate_generator(ckpt.network, spec, {cfg.k_eval, 21, cfg.eval_samples, 200}, rng);
    out << "role = generator\nstep = " << ckpt.header.step << "\n";
    if (s.modes_captured) out << "modes_captured = " << *s.modes_captured << "\n";
    if (s.hq_fraction) out << "hq_fraction = " << num(*s.hq_fraction) << "\n";
    out << "mean_abs_err = " << num(s.mean_abs_err) << "\nvar_rel_err = " << num(s.var_rel_err)
        << "\ndiversity = " << num(s.diversity) << "\nmean_sample_variance = " << num(s.mean_sample_variance)
        << "\n";
    return 0;
  }
  if (ckpt.header.role == "predictor") {
    if (ns.output_dim != 2 * dims.y || ns.input_dim != dims.x) {
      throw ConfigError("predictor checkpoint does not fit dataset " + to_string(spec.kind));
    }
    const Family fam = parse_family(ckpt.header.family);
    const PredictorEval e = evaluate_predictor(ckpt.network, fam, spec);
    out << "role = predictor\nfamily = " << to_string(fam) << "\nmean_location_err = " << num(e.mean_location_err)
        << "\nmax_location_err = " << num(e.max_location_err)
        << "\nmean_dispersion_rel_err = " << num(e.mean_dispersion_rel_err)
        << "\nmax_dispersion_rel_err = " << num(e.max_dispersion_rel_err) << "\n";
    return 0;
  }
  throw ConfigError("cannot evaluate a " + ckpt.header.role + " checkpoint");
}

}  // namespace mrlab
