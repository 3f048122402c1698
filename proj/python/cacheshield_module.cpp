// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The CacheShield Authors
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "cacheshield/dataset.hpp"
#include "cacheshield/detector.hpp"
#include "cacheshield/error.hpp"
#include "cacheshield/eval.hpp"
#include "cacheshield/feature_select.hpp"
#include "cacheshield/monitor.hpp"
#include "cacheshield/scenario.hpp"
#include "cacheshield/trace.hpp"
#include "cacheshield/trace_sim.hpp"

namespace py = pybind11;
using namespace cacheshield;

namespace {

PyObject* g_error_type = nullptr;

Trace ToTrace(const std::vector<std::uint64_t>& t_us, const std::vector<std::uint64_t>& misses,
              const std::vector<std::uint64_t>& cycles) {
  if (t_us.size() != misses.size() || misses.size() != cycles.size()) {
    throw Error(ErrorCode::kInvalidArgument, "t_us, misses and cycles differ in length");
  }
  Trace t;
  t.reserve(t_us.size());
  for (std::size_t i = 0; i < t_us.size(); ++i) t.push_back({t_us[i], misses[i], cycles[i]});
  return t;
}

py::dict TraceDict(const Trace& trace, const std::optional<TraceLabel>& label) {
  std::vector<std::uint64_t> t_us, misses, cycles;
  for (const auto& s : trace) {
    t_us.push_back(s.t_us);
    misses.push_back(s.misses);
    cycles.push_back(s.cycles);
  }
  py::dict d;
  d["t_us"] = t_us;
  d["misses"] = misses;
  d["cycles"] = cycles;
  if (label) {
    d["label"] = label->per_sample_attack;
    d["lambda"] = label->lambda;
  } else {
    d["label"] = py::none();
    d["lambda"] = py::none();
  }
  return d;
}

LabeledDataset ToDataset(std::vector<std::string> attributes, std::vector<std::vector<double>> rows,
                         std::vector<int> labels) {
  LabeledDataset ds{std::move(attributes), std::move(rows), std::move(labels)};
  ds.Validate();
  return ds;
}

py::dict DatasetDict(const LabeledDataset& ds) {
  py::dict d;
  d["attributes"] = ds.attributes;
  d["rows"] = ds.rows;
  d["labels"] = ds.labels;
  return d;
}

py::dict SummaryDict(const EvalSummary& s) {
  py::dict d;
  d["scenario"] = s.scenario;
  d["traces"] = s.traces;
  d["attack_traces"] = s.attack_traces;
  d["attack_free_traces"] = s.attack_free_traces;
  d["detected"] = s.detected;
  d["early_alarms"] = s.early_alarms;
  d["add_samples"] = s.add_samples;
  d["add_ms"] = s.add_ms;
  d["detection_rate"] = s.detection_rate;
  d["attack_free_samples"] = s.attack_free_samples;
  d["false_alarms"] = s.false_alarms;
  d["alarmed_attack_free_traces"] = s.alarmed_attack_free_traces;
  d["far_per_sample"] = s.far_per_sample;
  d["far_run_length"] = s.far_run_length;
  d["far_per_trace"] = s.far_per_trace;
  return d;
}

py::dict DecisionDict(const Decision& d) {
  py::dict out;
  out["alarm"] = d.alarm;
  out["g"] = d.g;
  out["h"] = d.h;
  out["mu_a"] = d.mu_a;
  return out;
}

DetectorConfig MakeDetector(double beta, double mu0, std::uint32_t tau, const std::string& compare) {
  DetectorConfig cfg{beta, mu0, tau, ParseComparison(compare)};
  cfg.Validate();
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_cacheshield, m) {
  m.doc() = "Cache side-channel attack detection from per-process LLC miss counts";

  g_error_type = PyErr_NewException("cacheshield._cacheshield.CacheShieldError",
                                    PyExc_RuntimeError, nullptr);
  m.attr("CacheShieldError") = py::handle(g_error_type);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object err = py::reinterpret_borrow<py::object>(g_error_type)(e.what());
      err.attr("code") = std::string(ErrorCodeName(e.code()));
      err.attr("line") = e.line() ? py::cast(*e.line()) : py::none();
      PyErr_SetObject(g_error_type, err.ptr());
    }
  });

  py::class_<DetectorConfig>(m, "DetectorConfig")
      .def(py::init(&MakeDetector), py::arg("beta") = 0.05, py::arg("mu0") = 12.5,
           py::arg("tau") = 10, py::arg("compare") = "ge")
      .def_readonly("beta", &DetectorConfig::beta)
      .def_readonly("mu_a_init", &DetectorConfig::mu_a_init)
      .def_readonly("tau_e", &DetectorConfig::tau_e)
      .def_property_readonly("compare",
                             [](const DetectorConfig& c) { return std::string(ToString(c.comparison)); });

  py::class_<CusumDetector>(m, "Detector")
      .def(py::init<const DetectorConfig&>(), py::arg("config") = DetectorConfig{})
      .def("update", [](CusumDetector& d, double misses) { return DecisionDict(d.Update(misses)); },
           py::arg("misses"))
      .def("reset", &CusumDetector::Reset)
      .def_property_readonly("g", [](const CusumDetector& d) { return d.state().g; })
      .def_property_readonly("h", [](const CusumDetector& d) { return d.state().h; })
      .def_property_readonly("mu_a", [](const CusumDetector& d) { return d.state().mu_a; })
      .def_property_readonly("samples", [](const CusumDetector& d) { return d.state().k; })
      .def_property_readonly("alarmed", [](const CusumDetector& d) { return d.state().alarmed; });

  m.def(
      "first_alarm",
      [](const std::vector<double>& misses, const DetectorConfig& config) {
        CusumDetector det(config);
        for (std::size_t i = 0; i < misses.size(); ++i) {
          if (det.Update(misses[i]).alarm) return std::optional<std::size_t>(i);
        }
        return std::optional<std::size_t>();
      },
      py::arg("misses"), py::arg("config") = DetectorConfig{},
      "0-based index of the first alarm over a miss-count sequence, or None.");
  m.def("threshold_for", &ThresholdFor, py::arg("tau_e"), py::arg("mu_a"));
  m.def("min_expected_detection_time", &MinExpectedDetectionTime, py::arg("h"), py::arg("mu_a"));

  m.def(
      "simulate",
      [](const std::string& scenario_text, std::optional<std::uint64_t> seed) {
        ScenarioSpec spec = ParseScenario(scenario_text);
        if (seed) spec.seed = *seed;
        const auto lt = GenerateTrace(spec);
        return TraceDict(lt.trace, lt.label);
      },
      py::arg("scenario"), py::arg("seed") = py::none(),
      "Generate a labeled trace from scenario file text.");
  m.def(
      "read_trace",
      [](const std::filesystem::path& path) {
        const auto loaded = ReadTrace(path);
        return TraceDict(loaded.trace, loaded.label);
      },
      py::arg("path"));
  m.def(
      "write_trace",
      [](const std::filesystem::path& path, const std::vector<std::uint64_t>& t_us,
         const std::vector<std::uint64_t>& misses, const std::vector<std::uint64_t>& cycles,
         std::optional<std::vector<bool>> label) {
        const Trace t = ToTrace(t_us, misses, cycles);
        if (label) {
          if (label->size() != t.size()) {
            throw Error(ErrorCode::kInvalidArgument, "label length differs from the trace");
          }
          const auto l = LabelFromFlags(*label);
          WriteTrace(path, t, &l);
        } else {
          WriteTrace(path, t);
        }
      },
      py::arg("path"), py::arg("t_us"), py::arg("misses"), py::arg("cycles"),
      py::arg("label") = py::none());

  m.def(
      "monitor_trace",
      [](const std::vector<std::uint64_t>& t_us, const std::vector<std::uint64_t>& misses,
         const std::vector<std::uint64_t>& cycles, const DetectorConfig& config,
         std::uint64_t idle_cycles, std::uint32_t idle_intervals) {
        MonitorConfig cfg;
        cfg.source = SourceDescriptor::Replay("python");
        cfg.detector = config;
        cfg.idle_threshold_cycles = idle_cycles;
        cfg.idle_intervals_to_pause = idle_intervals;
        cfg.Validate();
        std::vector<std::string> events;
        MonitorSummary summary;
        {
          py::gil_scoped_release release;
          summary = RunMonitor(cfg, MakeReplaySource(ToTrace(t_us, misses, cycles)),
                               [&](const MonitorEvent& e) { events.push_back(EventToJson(e)); });
        }
        py::dict d;
        d["alarmed"] = summary.alarmed;
        d["first_alarm"] = summary.first_alarm_index;
        d["samples"] = summary.samples;
        d["mean_loop_us"] = summary.overhead.mean_loop_us;
        d["utilization"] = summary.overhead.utilization;
        d["events"] = events;
        return d;
      },
      py::arg("t_us"), py::arg("misses"), py::arg("cycles"), py::arg("config") = DetectorConfig{},
      py::arg("idle_cycles") = 1000, py::arg("idle_intervals") = 50,
      "Replay samples through the monitor. Events are JSON strings.");

  m.def("counter_names", &SimulatedCounterNames);
  m.def(
      "counter_dataset",
      [](std::size_t rows_per_class, std::uint64_t seed) {
        return DatasetDict(GenerateCounterDataset(rows_per_class, seed));
      },
      py::arg("rows_per_class") = 250, py::arg("seed") = 1);
  m.def(
      "read_dataset",
      [](const std::filesystem::path& path) { return DatasetDict(ReadDataset(path)); },
      py::arg("path"));
  m.def(
      "info_gain",
      [](std::vector<std::string> attributes, std::vector<std::vector<double>> rows,
         std::vector<int> labels, const std::string& attribute, std::size_t bins) {
        return InfoGain(ToDataset(std::move(attributes), std::move(rows), std::move(labels)),
                        attribute, bins);
      },
      py::arg("attributes"), py::arg("rows"), py::arg("labels"), py::arg("attribute"),
      py::arg("bins") = 10);
  m.def(
      "relief",
      [](std::vector<std::string> attributes, std::vector<std::vector<double>> rows,
         std::vector<int> labels, std::optional<std::size_t> iterations, std::uint64_t seed) {
        const auto ds = ToDataset(std::move(attributes), std::move(rows), std::move(labels));
        return Relief(ds, iterations.value_or(ds.size()), seed);
      },
      py::arg("attributes"), py::arg("rows"), py::arg("labels"),
      py::arg("iterations") = py::none(), py::arg("seed") = 0);
  m.def(
      "rank",
      [](std::vector<std::string> attributes, std::vector<std::vector<double>> rows,
         std::vector<int> labels, const std::string& metric, std::size_t bins,
         std::size_t iterations, std::uint64_t seed) {
        RankMetric rm;
        if (metric == "infogain") {
          rm = RankMetric::kInfoGain;
        } else if (metric == "relief") {
          rm = RankMetric::kRelief;
        } else {
          throw Error(ErrorCode::kInvalidArgument, "metric must be infogain or relief");
        }
        const auto report =
            RankAttributes(ToDataset(std::move(attributes), std::move(rows), std::move(labels)), rm,
                           RankingParams{bins, iterations, seed});
        py::list out;
        for (const auto& name : report.ordering) {
          for (const auto& s : report.per_attribute) {
            if (s.name != name) continue;
            py::dict d;
            d["attribute"] = s.name;
            d["infogain_bits"] = s.infogain_bits;
            d["relief_weight"] = s.relief_weight;
            out.append(d);
          }
        }
        return out;
      },
      py::arg("attributes"), py::arg("rows"), py::arg("labels"), py::arg("metric") = "infogain",
      py::arg("bins") = 10, py::arg("iterations") = 0, py::arg("seed") = 0,
      "Attributes best first.");

  m.def(
      "evaluate_corpus",
      [](const std::filesystem::path& corpus, std::optional<std::filesystem::path> out,
         const std::string& format, unsigned threads) {
        const auto spec = LoadCorpus(corpus);
        EvalReport report;
        {
          py::gil_scoped_release release;
          report = EvaluateCorpus(spec, {threads});
        }
        if (out) ExportReport(report, ParseReportFormat(format), *out);
        py::dict d;
        d["overall"] = SummaryDict(report.overall);
        py::list per;
        for (const auto& s : report.per_scenario) per.append(SummaryDict(s));
        d["per_scenario"] = per;
        return d;
      },
      py::arg("corpus"), py::arg("out") = py::none(), py::arg("format") = "csv",
      py::arg("threads") = 0);
  m.def(
      "sweep",
      [](std::uint32_t n_sets, std::vector<std::uint32_t> victim_sets,
         std::uint64_t samples_per_set, std::uint64_t seed, const DetectorConfig& config) {
        SweepSpec spec;
        spec.n_sets = n_sets;
        spec.victim_sets = std::move(victim_sets);
        spec.samples_per_set = samples_per_set;
        spec.seed = seed;
        py::gil_scoped_release release;
        return EvaluateSweep(GenerateProfilingSweep(spec), config);
      },
      py::arg("n_sets") = 8192, py::arg("victim_sets") = std::vector<std::uint32_t>{},
      py::arg("samples_per_set") = 200, py::arg("seed") = 1, py::arg("config") = DetectorConfig{},
      "Alarm flag per cache set.");
  m.def(
      "far_curve",
      [](const std::filesystem::path& grid, unsigned threads) {
        const auto g = LoadNoiseGrid(grid);
        std::vector<FarPoint> curve;
        {
          py::gil_scoped_release release;
          curve = NoiseFarCurve(g, {threads});
        }
        py::list out;
        for (const auto& p : curve) {
          py::dict d = SummaryDict(p.summary);
          d["level"] = p.level.name;
          d["profile"] = p.level.noise ? py::cast(std::string(ToString(p.level.noise->profile)))
                                       : py::none();
          d["burst_rate"] = p.level.noise ? p.level.noise->burst_rate : 0.0;
          out.append(d);
        }
        return out;
      },
      py::arg("grid"), py::arg("threads") = 0);
}
