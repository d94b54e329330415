#pragma once

// Experiment orchestration behind the mrlab command line.
//
// A run directory holds:
//   config.txt       serialized TrainConfig
//   manifest.json    run id, config echo, timestamps, final metrics, status
//   metrics.csv      one row per evaluation
//   generator.ckpt / discriminator.ckpt / predictor.ckpt
//   samples.csv      final samples for plotting
//   FAILED           present only when the run aborted (with the reason)

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mrlab/metrics.hpp"
#include "mrlab/trainer.hpp"

namespace mrlab {

/// Fixed metrics.csv header.
inline constexpr const char* kMetricsHeader =
    "run_id,variant,seed,step,loss_d,loss_g_gan,loss_aux,loss_rec,modes_captured,hq_fraction,mean_abs_err,"
    "var_rel_err,diversity,wall_ms";

/// Replaces cfg.seed with $MRLAB_SEED when set. Throws ConfigError if the
/// variable is not a nonnegative integer.
TrainConfig apply_env_seed(TrainConfig cfg);

struct RunOptions {
  /// Fill the wall_ms column. Off by default so reruns give identical files.
  bool record_wall_time = false;
  /// Progress lines; null for silence.
  std::ostream* log = nullptr;
};

struct RunOutcome {
  int exit_code = 0;
  std::string run_id;
  std::filesystem::path dir;
  std::optional<HistoryRow> final_row;
  std::string error;
};

/// Trains one configuration and writes every output into `run_dir`.
/// Exit code 0 on success, 2 when training diverged, 1 on other failures.
RunOutcome run_training(const TrainConfig& cfg, const std::filesystem::path& run_dir, const RunOptions& opts = {});

/// `mrlab train`: parses the config, applies MRLAB_SEED and runs into out_dir/<run_id>.
RunOutcome cmd_train(const std::filesystem::path& config_path, const std::filesystem::path& out_dir,
                     const RunOptions& opts = {});

struct SweepRow {
  std::string value;
  RunOutcome outcome;
};

/// One run per value in out_dir/<key>=<value>, at most `jobs` at a time, then
/// out_dir/summary.csv. Failed runs are recorded and the sweep goes on.
std::vector<SweepRow> run_sweep(const TrainConfig& base, const std::string& key, const std::vector<std::string>& values,
                                const std::filesystem::path& out_dir, std::size_t jobs, const RunOptions& opts = {});

int cmd_sweep(const std::filesystem::path& config_path, const std::string& key, const std::vector<std::string>& values,
              const std::filesystem::path& out_dir, std::size_t jobs, const RunOptions& opts = {});

/// Prints one line per gradcheck item; 0 iff all pass.
int cmd_gradcheck(bool corrupted_fixture, std::ostream& out);

// ---------------------------------------------------------------------------
// Analysis commands

/// Built-in discrete distributions: two_delta {−1, +1}, point {0},
/// three_point {−1: ¼, 0: ½, 2: ¼}, skewed {0: 0.6, 1: 0.3, 5: 0.1}.
std::optional<DiscreteDistribution> builtin_distribution(const std::string& name);

/// CSV with a `y` column and an optional weight column `p` (or `y_hat` for
/// decompose). A header line is required.
struct SampleTable {
  std::vector<double> y;
  std::vector<double> second;  // p or y_hat; empty if absent
  std::string second_name;
};
SampleTable read_sample_table(const std::filesystem::path& path);

struct DecomposeOptions {
  /// Constant prediction; defaults to the mean of y.
  std::optional<double> constant;
};

/// `mrlab decompose`: a built-in distribution (each atom replicated in
/// proportion to its probability, 100 rows total) or a CSV of (y[, y_hat]).
int cmd_decompose(const std::string& target, const DecomposeOptions& opts, std::ostream& out);

/// `mrlab median-scan`: E|y − c| over a grid of step `step` spanning the atoms ± 1.
int cmd_median_scan(const std::string& target, double step, std::ostream& out);

/// `mrlab eval`: re-evaluates a saved generator (or predictor) on the task of `config_path`.
int cmd_eval(const std::filesystem::path& checkpoint, const std::filesystem::path& config_path, std::ostream& out);

/// Errors of a predictor's location and dispersion against the analytic
/// moments on the x grid (a single point for unconditional tasks). Gaussian
/// predictors are compared with mean and variance, Laplace ones with the median
/// interval and the MAD. Averages and maxima run over grid points and coordinates.
struct PredictorEval {
  double mean_location_err = 0.0;
  double max_location_err = 0.0;
  double mean_dispersion_rel_err = 0.0;
  double max_dispersion_rel_err = 0.0;
};
PredictorEval evaluate_predictor(const Network& p, Family family, const DatasetSpec& spec,
                                 std::size_t grid_points = 21);

}  // namespace mrlab
