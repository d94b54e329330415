#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "mrlab/config.hpp"
#include "mrlab/gradcheck.hpp"
#include "mrlab/runner.hpp"

namespace py = pybind11;
using namespace mrlab;

namespace {

py::array_t<double> to_numpy(const Tensor& t) {
  py::array_t<double> a({t.rows(), t.cols()});
  std::copy(t.values().begin(), t.values().end(), a.mutable_data());
  return a;
}

py::dict summary_dict(const EvalSummary& s) {
  py::dict d;
  if (s.modes_captured) d["modes_captured"] = *s.modes_captured;
  if (s.hq_fraction) d["hq_fraction"] = *s.hq_fraction;
  d["mean_abs_err"] = s.mean_abs_err;
  d["var_rel_err"] = s.var_rel_err;
  d["diversity"] = s.diversity;
  d["mean_sample_variance"] = s.mean_sample_variance;
  return d;
}

TrainConfig config_from(const std::string& text, const py::dict& overrides) {
  TrainConfig cfg = parse_config_text(text);
  for (const auto& [k, v] : overrides) set_config_value(cfg, py::str(k), py::str(v));
  cfg.validate();
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_mrlab, m) {
  m.doc() = "Moment reconstruction losses for conditional GANs: training lab bindings";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  m.def("config_keys", &config_keys);
  m.def(
      "normalize_config", [](const std::string& text, const py::dict& overrides) {
        return serialize_config(config_from(text, overrides));
      },
      py::arg("text") = "", py::arg("overrides") = py::dict());
  m.def(
      "run_id", [](const std::string& text, const py::dict& overrides) { return run_id(config_from(text, overrides)); },
      py::arg("text") = "", py::arg("overrides") = py::dict());

  m.def(
      "train",
      [](const std::string& text, const std::filesystem::path& run_dir, const py::dict& overrides) {
        const TrainConfig cfg = config_from(text, overrides);
        RunOutcome o;
        {
          py::gil_scoped_release release;
          o = run_training(cfg, run_dir);
        }
        py::dict d;
        d["exit_code"] = o.exit_code;
        d["run_id"] = o.run_id;
        d["dir"] = o.dir.string();
        d["error"] = o.error;
        if (o.final_row) {
          d["step"] = o.final_row->step;
          d["metrics"] = summary_dict(o.final_row->metrics);
        }
        return d;
      },
      py::arg("text"), py::arg("run_dir"), py::arg("overrides") = py::dict(),
      "Runs one training job into run_dir and returns the final evaluation.");

  m.def(
      "gradcheck",
      [](bool corrupted) {
        GradcheckOptions o;
        o.corrupted_fixture = corrupted;
        std::vector<std::tuple<std::string, double, double>> out;
        for (const auto& it : run_gradcheck(o)) out.emplace_back(it.name, it.worst_rel_error, it.threshold);
        return out;
      },
      py::arg("corrupted_fixture") = false, "List of (name, worst relative error, threshold).");

  m.def(
      "make_dataset",
      [](const std::string& kind, std::size_t n, std::uint64_t seed) {
        DatasetSpec s;
        s.kind = parse_dataset_kind(kind);
        Rng rng = make_rng(seed, 0);
        const Batch b = make_dataset(s, n, rng);
        return py::make_tuple(to_numpy(b.x), to_numpy(b.y));
      },
      py::arg("kind"), py::arg("n"), py::arg("seed") = 0, "Returns (x, y) arrays.");

  m.def(
      "decompose",
      [](const std::vector<double>& y, const std::vector<double>& y_hat) {
        const DecompositionReport r = se_ve_decomposition(y, y_hat);
        py::dict d;
        d["var_y"] = r.var_y;
        d["se"] = r.se;
        d["ve"] = r.ve;
        d["total"] = r.total;
        d["identity_residual"] = r.identity_residual;
        return d;
      },
      py::arg("y"), py::arg("y_hat"));

  m.def(
      "median_scan",
      [](const std::vector<std::pair<double, double>>& atoms, double lo, double hi, double step) {
        const L1ScanReport r = l1_minimizer_scan({atoms}, scan_grid(lo, hi, step));
        py::dict d;
        d["min_value"] = r.min_value;
        d["argmin"] = r.argmin;
        d["median_interval"] = py::make_tuple(r.median_lo, r.median_hi);
        return d;
      },
      py::arg("atoms"), py::arg("lo"), py::arg("hi"), py::arg("step") = 1e-3,
      "E|y - c| over a grid for a discrete distribution of (value, probability) atoms.");
}
