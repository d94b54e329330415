#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "mrlab/runner.hpp"

namespace {

std::vector<std::string> split_values(const std::string& list) {
  std::vector<std::string> out;
  std::stringstream ss(list);
  for (std::string item; std::getline(ss, item, ',');) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mrlab: moment reconstruction losses for conditional GANs"};
  app.require_subcommand(1);

  std::string config, out_dir, key, values, target, checkpoint;
  std::size_t jobs = 1;
  bool wall = false, quiet = false, corrupt = false;
  double constant = 0.0, step = 1e-3;

  auto* train = app.add_subcommand("train", "train one configuration");
  train->add_option("config", config, "config file")->required()->check(CLI::ExistingFile);
  train->add_option("--out", out_dir, "output root; the run goes to <out>/<run_id>")->required();
  train->add_flag("--wall-time", wall, "fill the wall_ms column of metrics.csv");
  train->add_flag("-q,--quiet", quiet, "no progress output");

  auto* sweep = app.add_subcommand("sweep", "train once per value of a numeric key");
  sweep->add_option("config", config, "base config file")->required()->check(CLI::ExistingFile);
  sweep->add_option("--key", key, "numeric config key")->required();
  sweep->add_option("--values", values, "comma separated values")->required();
  sweep->add_option("--out", out_dir, "output directory")->required();
  sweep->add_option("--jobs", jobs, "concurrent runs")->check(CLI::PositiveNumber);
  sweep->add_flag("--wall-time", wall, "fill the wall_ms column of metrics.csv");
  sweep->add_flag("-q,--quiet", quiet, "no progress output");

  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference check of every op and loss");
  gradcheck->add_flag("--corrupt", corrupt, "include an op with a deliberately wrong derivative");

  auto* decompose = app.add_subcommand("decompose", "squared-error decomposition into var, se and ve");
  decompose->add_option("target", target, "built-in distribution or CSV (y[,y_hat])")->required();
  auto* constant_opt = decompose->add_option("--constant", constant, "constant prediction (default: mean of y)");

  auto* median = app.add_subcommand("median-scan", "grid scan of E|y - c| against the median interval");
  median->add_option("target", target, "built-in distribution or CSV (y[,p])")->required();
  median->add_option("--step", step, "grid step")->check(CLI::PositiveNumber);

  auto* eval = app.add_subcommand("eval", "evaluate a saved generator or predictor");
  eval->add_option("checkpoint", checkpoint, "checkpoint file")->required()->check(CLI::ExistingFile);
  eval->add_option("config", config, "config file of the task")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    mrlab::RunOptions ro;
    ro.record_wall_time = wall;
    ro.log = quiet ? nullptr : &std::cerr;
    if (*train) {
      const mrlab::RunOutcome o = mrlab::cmd_train(config, out_dir, ro);
      std::cout << o.dir.string() << "\n";
      if (o.exit_code != 0) std::cerr << "run failed: " << o.error << "\n";
      return o.exit_code;
    }
    if (*sweep) return mrlab::cmd_sweep(config, key, split_values(values), out_dir, jobs, ro);
    if (*gradcheck) return mrlab::cmd_gradcheck(corrupt, std::cout);
    if (*decompose) {
      mrlab::DecomposeOptions opts;
      if (*constant_opt) opts.constant = constant;
      return mrlab::cmd_decompose(target, opts, std::cout);
    }
    if (*median) return mrlab::cmd_median_scan(target, step, std::cout);
    if (*eval) return mrlab::cmd_eval(checkpoint, config, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "mrlab: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
