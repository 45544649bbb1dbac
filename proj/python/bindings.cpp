#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "crowdscore/analytics.hpp"
#include "crowdscore/harness.hpp"

namespace py = pybind11;
using namespace crowdscore;

namespace {

AnswerDist parse_dist(const std::string& dist) {
  if (dist == "I") return AnswerDist::kGeneric;
  if (dist == "II") return AnswerDist::kTopOnly;
  if (dist == "III") return AnswerDist::kWeighted;
  throw InvalidConfigError("dist must be 'I', 'II' or 'III'");
}

py::dict row_to_dict(const SweepRow& row) {
  py::dict d;
  d["pi_th"] = row.pi_th;
  d["trials"] = row.trials;
  if (!row.error.empty()) {
    d["error"] = row.error;
    return d;
  }
  d["p_e"] = row.p_e;
  d["p_e_ci95"] = row.p_e_ci95;
  d["p_e_lo"] = row.p_e_lo;
  d["p_e_hi"] = row.p_e_hi;
  d["m_bar_per_n"] = row.m_bar_per_n;
  d["m_bar_ci95"] = row.m_bar_ci95;
  d["rounds_mean"] = row.rounds_mean;
  d["stop_budget"] = row.stop_budget;
  d["stop_singleton"] = row.stop_singleton;
  d["stop_accuracy"] = row.stop_accuracy;
  d["stop_stall"] = row.stop_stall;
  return d;
}

py::dict trial_to_dict(const TrialResult& r) {
  py::dict d;
  d["winner"] = r.winner;
  d["correct"] = r.correct;
  d["m_total"] = r.m_total;
  d["rounds"] = r.rounds;
  d["stop_reason"] = to_string(r.stop_reason);
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Adaptive crowd-scoring contest simulator (C++ core)";

  py::register_exception<InvalidConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<InvalidInstanceError>(m, "InstanceError", PyExc_ValueError);
  py::register_exception<UnderdeterminedError>(m, "UnderdeterminedError", PyExc_RuntimeError);

  // Closed-form comparison-vs-scoring error probabilities.
  m.def("p_delta", &analytics::p_delta, py::arg("delta"), py::arg("sigma"),
        "Single direct comparison error probability.");
  m.def("p_comp", &analytics::p_comp, py::arg("w"), py::arg("delta"), py::arg("sigma"),
        "Majority-vote error over an odd jury of w direct comparisons.");
  m.def("p_est", &analytics::p_est, py::arg("w"), py::arg("delta"), py::arg("sigma"),
        "Error probability when the same jury returns scores instead.");
  m.def("p_comp_gaussian", &analytics::p_comp_gaussian, py::arg("w"), py::arg("delta"),
        py::arg("sigma"), "Gaussian approximation of p_comp.");
  m.def("p_comp_small_gap", &analytics::p_comp_small_gap, py::arg("w"), py::arg("delta"),
        py::arg("sigma"), "Small-gap limit of the Gaussian approximation.");

  py::class_<QuantizerSpec>(m, "QuantizerSpec")
      .def_readonly("thresholds", &QuantizerSpec::thresholds)
      .def_readonly("representatives", &QuantizerSpec::representatives)
      .def_property_readonly("levels", &QuantizerSpec::levels)
      .def("quantize", &QuantizerSpec::quantize, py::arg("x"))
      .def("to_table", &QuantizerSpec::to_table)
      .def_static("from_table", &QuantizerSpec::from_table, py::arg("text"))
      .def("__repr__", [](const QuantizerSpec& q) {
        return "<QuantizerSpec levels=" + std::to_string(q.levels()) + ">";
      });

  m.def("uniform_quantizer", &uniform_design, py::arg("lo"), py::arg("hi"), py::arg("levels"),
        "Equal-width quantizer on [lo, hi] with midpoint representatives.");
  m.def(
      "lloyd_quantizer",
      [](const std::string& scenario, int levels, const std::string& dist, double gamma,
         double bias_over_sigma) {
        return design_scenario_quantizer(Scenario::parse(scenario), levels, /*uniform=*/false,
                                         parse_dist(dist), gamma, bias_over_sigma);
      },
      py::arg("scenario"), py::arg("levels") = 8, py::arg("dist") = "III",
      py::arg("gamma") = 0.5, py::arg("bias_over_sigma") = 0.0,
      "Minimum-distortion quantizer for a scenario's blended answer density.\n"
      "scenario is 'gaussian:N:ratio' or 'equally_spaced:N:ratio'.");

  m.def(
      "run_experiment",
      [](const std::string& config_text) {
        SweepResult result;
        {
          py::gil_scoped_release release;
          result = run_experiment(ExperimentConfig::from_text(config_text, "<python>"));
        }
        py::list rows;
        for (const SweepRow& row : result.rows) rows.append(row_to_dict(row));
        return rows;
      },
      py::arg("config_text"),
      "Run a threshold sweep from config text; returns one dict per sweep point.");

  m.def(
      "run_experiment_csv",
      [](const std::string& config_text) {
        SweepResult result;
        {
          py::gil_scoped_release release;
          result = run_experiment(ExperimentConfig::from_text(config_text, "<python>"));
        }
        return result.to_csv();
      },
      py::arg("config_text"), "Run a threshold sweep and return the CSV text.");

  m.def(
      "run_trial",
      [](const std::string& config_text, double pi_th, std::uint64_t trial) {
        const ExperimentConfig cfg = ExperimentConfig::from_text(config_text, "<python>");
        AlgorithmSpec algo = cfg.algo;
        algo.policy.pi_th_a = pi_th;
        algo.policy.pi_th_e = pi_th;
        const std::uint64_t seed = derive_seed(cfg.master_seed, kTrialStream, 0, trial);
        const auto inst = sample_instance(cfg.scenario.quality_prior(), cfg.workers, seed);
        return trial_to_dict(run_trial(algo, inst));
      },
      py::arg("config_text"), py::arg("pi_th"), py::arg("trial") = 0,
      "Run one trial of the configured algorithm at the given threshold.");

  m.attr("__version__") = "0.1.0";
}
