// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The CacheShield Authors
//
// cacheshield command-line front end.
#include <pthread.h>
#include <signal.h>

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "cacheshield/config_file.hpp"
#include "cacheshield/dataset.hpp"
#include "cacheshield/error.hpp"
#include "cacheshield/eval.hpp"
#include "cacheshield/feature_select.hpp"
#include "cacheshield/monitor.hpp"
#include "cacheshield/scenario.hpp"
#include "cacheshield/trace.hpp"
#include "cacheshield/trace_sim.hpp"

namespace cs = cacheshield;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitAlarm = 2;

// Whitespace split honouring single and double quotes.
std::vector<std::string> SplitCommand(const std::string& cmd) {
  std::vector<std::string> out;
  std::string cur;
  bool in_word = false;
  char quote = 0;
  for (char c : cmd) {
    if (quote) {
      if (c == quote) {
        quote = 0;
      } else {
        cur += c;
      }
    } else if (c == '\'' || c == '"') {
      quote = c;
      in_word = true;
    } else if (c == ' ' || c == '\t') {
      if (in_word) out.push_back(std::exchange(cur, {}));
      in_word = false;
    } else {
      cur += c;
      in_word = true;
    }
  }
  if (quote) throw cs::Error(cs::ErrorCode::kInvalidArgument, "unterminated quote in --run");
  if (in_word) out.push_back(cur);
  if (out.empty()) throw cs::Error(cs::ErrorCode::kInvalidArgument, "--run needs a command");
  return out;
}

std::ofstream OpenOut(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw cs::Error(cs::ErrorCode::kIoError, "cannot write " + path);
  return out;
}

// Maps SIGCONT to resume and SIGINT / SIGTERM to stop while a monitor runs.
// The signals must be blocked in every thread, so construct this before any
// other thread starts.
class SignalBridge {
 public:
  explicit SignalBridge(cs::MonitorControl& control) : control_(control) {
    sigemptyset(&mask_);
    for (int s : {SIGCONT, SIGINT, SIGTERM, SIGUSR2}) sigaddset(&mask_, s);
    pthread_sigmask(SIG_BLOCK, &mask_, nullptr);
    thread_ = std::thread([this] { Loop(); });
  }
  ~SignalBridge() {
    done_ = true;
    pthread_kill(thread_.native_handle(), SIGUSR2);
    thread_.join();
  }

 private:
  void Loop() {
    while (!done_) {
      int sig = 0;
      if (sigwait(&mask_, &sig) != 0) continue;
      if (sig == SIGCONT) {
        try {
          control_.Resume();
        } catch (const cs::Error&) {
          // not paused: nothing to do
        }
      } else if (sig == SIGINT || sig == SIGTERM) {
        control_.Stop();
      }
    }
  }

  cs::MonitorControl& control_;
  sigset_t mask_;
  std::atomic<bool> done_{false};
  std::thread thread_;
};

struct MonitorArgs {
  std::optional<int> pid;
  std::string run;
  std::string replay;
  std::string scenario;
  bool paced = false;
  std::uint32_t rate_us = 100;
  double beta = 0.05;
  double mu0 = 12.5;
  std::uint32_t tau = 10;
  std::string compare = "ge";
  std::string reaction = "log";
  std::uint64_t idle_cycles = 1000;
  std::uint32_t idle_intervals = 50;
  std::uint64_t report_every = 10000;
  std::string events_out;
};

int RunMonitorCommand(const MonitorArgs& a) {
  cs::MonitorConfig config;
  config.detector.beta = a.beta;
  config.detector.mu_a_init = a.mu0;
  config.detector.tau_e = a.tau;
  config.detector.comparison = cs::ParseComparison(a.compare);
  config.reaction = cs::ParseReaction(a.reaction);
  config.idle_threshold_cycles = a.idle_cycles;
  config.idle_intervals_to_pause = a.idle_intervals;
  config.overhead_report_every = a.report_every;

  if (a.pid) {
    config.source = cs::SourceDescriptor::Live(*a.pid, a.rate_us);
  } else if (!a.replay.empty()) {
    config.source = cs::SourceDescriptor::Replay(a.replay, a.rate_us);
  } else if (!a.scenario.empty()) {
    config.source = cs::SourceDescriptor::Synthetic(cs::LoadScenario(a.scenario), a.rate_us,
                                                    a.paced);
  } else if (!a.run.empty()) {
    config.source.kind = cs::SourceKind::kLive;
    config.source.period_us = a.rate_us;
  } else {
    throw cs::Error(cs::ErrorCode::kInvalidArgument,
                    "one of --pid, --run, --replay or --scenario is required");
  }

  std::string events_path = a.events_out;
  if (events_path.empty()) {
    if (const char* env = std::getenv("CACHESHIELD_EVENTS_OUT")) events_path = env;
  }
  std::ofstream file;
  if (!events_path.empty()) file = OpenOut(events_path);
  std::ostream& events = events_path.empty() ? std::cout : file;
  auto sink = [&](const cs::MonitorEvent& e) { events << cs::EventToJson(e) << '\n' << std::flush; };

  cs::MonitorControl control;
  std::optional<SignalBridge> bridge;
  if (config.source.kind == cs::SourceKind::kLive) bridge.emplace(control);
  cs::RunOptions options;
  options.control = &control;

  cs::MonitorSummary summary;
  if (!a.run.empty()) {
    if (config.source.kind == cs::SourceKind::kLive) config.source.target_pid.reset();
    auto result = cs::AttachProtected(SplitCommand(a.run), config, options);
    for (const auto& e : result.events) sink(e);
    summary = result.summary;
    std::cerr << "cacheshield: protected command exited with status " << result.exit_status
              << '\n';
  } else {
    summary = cs::RunMonitor(config, sink, options);
  }
  if (summary.error) {
    std::cerr << "cacheshield: error: " << *summary.error << '\n';
    return kExitError;
  }
  return summary.alarmed ? kExitAlarm : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cache-attack detection from per-process LLC miss counts"};
  app.require_subcommand(1);

  // monitor
  MonitorArgs margs;
  auto* monitor = app.add_subcommand("monitor", "Monitor a process, trace or scenario");
  auto* pid_opt = monitor->add_option("--pid", margs.pid, "Attach to a running process");
  auto* run_opt = monitor->add_option("--run", margs.run, "Spawn and protect a command");
  auto* replay_opt = monitor->add_option("--replay", margs.replay, "Replay a trace CSV");
  auto* scenario_opt =
      monitor->add_option("--scenario", margs.scenario, "Generate samples from a scenario file");
  pid_opt->excludes(run_opt)->excludes(replay_opt)->excludes(scenario_opt);
  replay_opt->excludes(scenario_opt);
  monitor->add_flag("--paced", margs.paced, "Pace synthetic samples in real time");
  monitor->add_option("--rate-us", margs.rate_us, "Sampling period in microseconds")
      ->capture_default_str();
  monitor->add_option("--beta", margs.beta, "EWMA smoothing factor")->capture_default_str();
  monitor->add_option("--mu0", margs.mu0, "Initial attack-cluster mean")->capture_default_str();
  monitor->add_option("--tau", margs.tau, "Detection delay target in samples")
      ->capture_default_str();
  monitor->add_option("--compare", margs.compare, "Threshold comparison")
      ->check(CLI::IsMember({"ge", "gt"}))
      ->capture_default_str();
  monitor->add_option("--reaction", margs.reaction, "log | notify | stop | hook:PATH")
      ->capture_default_str();
  monitor->add_option("--idle-cycles", margs.idle_cycles, "Cycles below which an interval is idle")
      ->capture_default_str();
  monitor->add_option("--idle-intervals", margs.idle_intervals,
                      "Consecutive idle intervals before pausing")
      ->capture_default_str();
  monitor->add_option("--report-every", margs.report_every,
                      "Samples between overhead reports (0 = at exit only)")
      ->capture_default_str();
  monitor->add_option("--events-out", margs.events_out,
                      "Event log path (default: $CACHESHIELD_EVENTS_OUT, else stdout)");

  // rank
  std::string metric = "infogain";
  std::size_t bins = 10;
  std::size_t iterations = 0;
  std::uint64_t rank_seed = 0;
  std::string dataset_path;
  auto* rank = app.add_subcommand("rank", "Rank counters of a labeled dataset");
  rank->add_option("--metric", metric)->check(CLI::IsMember({"infogain", "relief"}))
      ->capture_default_str();
  rank->add_option("--bins", bins, "InfoGain bins")->capture_default_str();
  rank->add_option("--iterations", iterations, "Relief iterations (0 = every row once)")
      ->capture_default_str();
  rank->add_option("--seed", rank_seed)->capture_default_str();
  rank->add_option("FILE", dataset_path, "Dataset CSV")->required();

  // eval
  std::string corpus_path;
  std::string report_out;
  std::string report_format = "csv";
  unsigned threads = 0;
  auto* eval = app.add_subcommand("eval", "Evaluate the detector over a corpus");
  eval->add_option("--corpus", corpus_path)->required();
  eval->add_option("--out", report_out)->required();
  eval->add_option("--format", report_format)->check(CLI::IsMember({"csv", "jsonl"}))
      ->capture_default_str();
  eval->add_option("--threads", threads, "Worker threads (0 = all cores)");

  // sweep
  std::uint32_t sets = 8192;
  std::string victim_range;
  std::string bitmap_out;
  std::uint64_t sweep_samples = 200;
  std::uint64_t sweep_seed = 1;
  auto* sweep = app.add_subcommand("sweep", "Alarm bitmap over a profiling sweep");
  sweep->add_option("--sets", sets)->capture_default_str();
  sweep->add_option("--victim-range", victim_range, "Victim sets A:B, half-open")->required();
  sweep->add_option("--samples", sweep_samples, "Samples per set")->capture_default_str();
  sweep->add_option("--seed", sweep_seed)->capture_default_str();
  sweep->add_option("--out", bitmap_out)->required();

  // farcurve
  std::string grid_path;
  std::string curve_out;
  auto* farcurve = app.add_subcommand("farcurve", "False-alarm rate over a noise grid");
  farcurve->add_option("--grid", grid_path)->required();
  farcurve->add_option("--out", curve_out)->required();
  farcurve->add_option("--threads", threads, "Worker threads (0 = all cores)");

  // simulate
  std::string sim_scenario;
  std::string sim_out;
  std::optional<std::uint64_t> sim_seed;
  auto* simulate = app.add_subcommand("simulate", "Write a labeled trace for a scenario");
  simulate->add_option("--scenario", sim_scenario)->required();
  simulate->add_option("--seed", sim_seed, "Override the scenario seed");
  simulate->add_option("--out", sim_out)->required();

  // dataset
  std::size_t rows = 1000;
  std::uint64_t ds_seed = 1;
  std::string ds_out;
  auto* dataset = app.add_subcommand("dataset", "Write a simulated multi-counter dataset");
  dataset->add_option("--rows-per-class", rows)->capture_default_str();
  dataset->add_option("--seed", ds_seed)->capture_default_str();
  dataset->add_option("--out", ds_out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    if (monitor->parsed()) return RunMonitorCommand(margs);

    if (rank->parsed()) {
      const auto ds = cs::ReadDataset(dataset_path);
      cs::RankingParams params{bins, iterations, rank_seed};
      const auto report = cs::RankAttributes(
          ds, metric == "relief" ? cs::RankMetric::kRelief : cs::RankMetric::kInfoGain, params);
      std::cout << "rank,attribute,infogain_bits,relief_weight\n";
      for (std::size_t i = 0; i < report.ordering.size(); ++i) {
        for (const auto& s : report.per_attribute) {
          if (s.name != report.ordering[i]) continue;
          std::cout << i + 1 << ',' << s.name << ',' << cs::FormatDouble(s.infogain_bits) << ','
                    << cs::FormatDouble(s.relief_weight) << '\n';
        }
      }
      return kExitOk;
    }

    if (eval->parsed()) {
      const auto report = cs::EvaluateCorpus(cs::LoadCorpus(corpus_path), {threads});
      cs::ExportReport(report, cs::ParseReportFormat(report_format), report_out);
      const auto& o = report.overall;
      std::cerr << "traces " << o.traces << ", detection rate "
                << (o.detection_rate ? cs::FormatDouble(*o.detection_rate) : "n/a")
                << ", add_ms " << (o.add_ms ? cs::FormatDouble(*o.add_ms) : "n/a")
                << ", far/sample " << cs::FormatDouble(o.far_per_sample) << ", far/trace "
                << cs::FormatDouble(o.far_per_trace) << ", early alarms " << o.early_alarms
                << '\n';
      return kExitOk;
    }

    if (sweep->parsed()) {
      const auto colon = victim_range.find(':');
      if (colon == std::string::npos) {
        throw cs::Error(cs::ErrorCode::kInvalidArgument, "--victim-range must be A:B");
      }
      const cs::ConfigEntry lo{"victim-range", victim_range.substr(0, colon), 1};
      const cs::ConfigEntry hi{"victim-range", victim_range.substr(colon + 1), 1};
      const auto a = cs::ToUint(lo);
      const auto b = cs::ToUint(hi);
      if (b < a) throw cs::Error(cs::ErrorCode::kInvalidArgument, "--victim-range needs A <= B");
      cs::SweepSpec spec;
      spec.n_sets = sets;
      spec.samples_per_set = sweep_samples;
      spec.seed = sweep_seed;
      for (auto s = a; s < b; ++s) spec.victim_sets.push_back(static_cast<std::uint32_t>(s));
      const auto traces = cs::GenerateProfilingSweep(spec);
      const auto bitmap = cs::EvaluateSweep(traces, cs::DetectorConfig{});
      auto out = OpenOut(bitmap_out);
      cs::WriteSweepBitmap(out, traces, bitmap);
      return kExitOk;
    }

    if (farcurve->parsed()) {
      const auto curve = cs::NoiseFarCurve(cs::LoadNoiseGrid(grid_path), {threads});
      auto out = OpenOut(curve_out);
      cs::WriteFarCurve(out, curve);
      return kExitOk;
    }

    if (simulate->parsed()) {
      auto spec = cs::LoadScenario(sim_scenario);
      if (sim_seed) spec.seed = *sim_seed;
      const auto lt = cs::GenerateTrace(spec);
      auto out = OpenOut(sim_out);
      cs::WriteTrace(out, lt.trace, &lt.label);
      return kExitOk;
    }

    if (dataset->parsed()) {
      auto out = OpenOut(ds_out);
      cs::WriteDataset(out, cs::GenerateCounterDataset(rows, ds_seed));
      return kExitOk;
    }
  } catch (const std::exception& e) {
    std::cerr << "cacheshield: error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
