// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The CacheShield Authors
//
// Batch evaluation of the detector over generated or recorded trace corpora.
//
// Index convention: samples are numbered from 0 and lambda is the index of
// the first sample the attack may affect. An alarm at index t with t >= lambda
// is a detection with delay t - lambda + 1 samples (the alarming sample is
// counted), so an alarm on the very first attacked sample has delay 1. Alarms
// with t < lambda are early alarms: they count as false positives and never
// contribute to the average detection delay.
//
// False alarms are counted on attack-free traces with renewal: the detector
// is reset after every alarm and keeps running to the end of the trace.
//
// Corpus file (key = value, see config_file.hpp):
//
//   period_us = 100
//   detector.beta = 0.05
//   detector.mu_a_init = 12.5
//   detector.tau_e = 10
//   detector.comparison = ge        # ge | gt
//
//   [scenario]
//   name = fr-1line
//   repetitions = 1000
//   workload = aes-like
//   attack.family = flush-reload
//
//   [trace]
//   name = captured
//   path = traces/run1.csv          # relative to the corpus file
//
// Scenario sections take every scenario key; repetition r of a scenario uses
// seed MixSeed(seed, r). Trace sections replay a labeled or unlabeled trace
// CSV once.
//
// Noise grid file: base scenario keys, `repetitions`, `period_us` and
// `detector.*` at the top, then one `[level]` section per grid point holding
// `name` and `noise.*` keys. A level without noise keys is noise free.
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cacheshield/detector.hpp"
#include "cacheshield/scenario.hpp"
#include "cacheshield/trace.hpp"
#include "cacheshield/trace_sim.hpp"

namespace cacheshield {

struct CorpusEntry {
  std::string name;
  std::optional<ScenarioSpec> scenario;         // generated entries
  std::optional<std::filesystem::path> trace;   // recorded entries
  std::uint32_t repetitions = 1;

  friend bool operator==(const CorpusEntry&, const CorpusEntry&) = default;
};

struct CorpusSpec {
  std::vector<CorpusEntry> entries;
  DetectorConfig detector;
  std::uint32_t period_us = 100;

  // Throws Error(kInvalidSpec).
  void Validate() const;
};

// Throws Error(kMalformedInput) or Error(kInvalidSpec) with line numbers.
// Relative trace paths are resolved against `base_dir`.
CorpusSpec ParseCorpus(std::string_view text, const std::filesystem::path& base_dir = {});
CorpusSpec LoadCorpus(const std::filesystem::path& path);

struct TraceResult {
  std::string scenario;
  std::uint32_t repetition = 0;
  std::uint64_t seed = 0;
  std::uint64_t samples = 0;
  std::optional<std::uint64_t> lambda;       // attack traces only
  std::optional<std::uint64_t> first_alarm;  // 0-based sample index
  std::uint64_t alarms = 0;                  // with renewal; attack-free traces only
  std::uint64_t run_samples = 0;             // samples inside runs that ended in an alarm

  bool is_attack() const { return lambda.has_value(); }
  bool detected() const;
  bool early_alarm() const;
  std::optional<std::uint64_t> delay_samples() const;

  friend bool operator==(const TraceResult&, const TraceResult&) = default;
};

struct EvalSummary {
  std::string scenario;  // "*" for the whole corpus
  std::uint64_t traces = 0;
  std::uint64_t attack_traces = 0;
  std::uint64_t attack_free_traces = 0;
  std::uint64_t detected = 0;
  std::uint64_t early_alarms = 0;
  std::optional<double> add_samples;     // no detections: absent
  std::optional<double> add_ms;
  std::optional<double> detection_rate;  // no attack traces: absent
  std::uint64_t attack_free_samples = 0;
  std::uint64_t false_alarms = 0;
  std::uint64_t alarmed_attack_free_traces = 0;
  double far_per_sample = 0.0;  // false alarms / attack-free samples
  double far_run_length = 0.0;  // 1 / mean completed run length to alarm
  double far_per_trace = 0.0;   // attack-free traces with >= 1 alarm

  friend bool operator==(const EvalSummary&, const EvalSummary&) = default;
};

struct EvalReport {
  std::uint32_t period_us = 100;
  EvalSummary overall;
  std::vector<EvalSummary> per_scenario;
  std::vector<TraceResult> traces;

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

struct EvalOptions {
  unsigned threads = 0;  // 0 = hardware concurrency
};

// Runs the detector over one trace. `lambda` marks an attack trace.
TraceResult EvaluateTrace(const Trace& trace, std::optional<std::uint64_t> lambda,
                          const DetectorConfig& detector);

// Aggregates in the order given; `period_us` converts delays to ms.
EvalSummary Summarize(std::string scenario, const std::vector<TraceResult>& traces,
                      std::uint32_t period_us);

// Deterministic for a given spec regardless of thread count.
EvalReport EvaluateCorpus(const CorpusSpec& spec, const EvalOptions& options = {});

// One entry per set, true when the set's trace raised an alarm.
std::vector<bool> EvaluateSweep(const std::vector<SweepTrace>& sweep,
                                const DetectorConfig& detector);
void WriteSweepBitmap(std::ostream& out, const std::vector<SweepTrace>& sweep,
                      const std::vector<bool>& bitmap);

struct NoiseLevel {
  std::string name;
  std::optional<NoiseSpec> noise;

  friend bool operator==(const NoiseLevel&, const NoiseLevel&) = default;
};

struct NoiseGrid {
  ScenarioSpec base;  // attack must be absent
  std::vector<NoiseLevel> levels;
  std::uint32_t repetitions = 500;
  DetectorConfig detector;
  std::uint32_t period_us = 100;

  // Throws Error(kInvalidSpec).
  void Validate() const;
};

NoiseGrid ParseNoiseGrid(std::string_view text);
NoiseGrid LoadNoiseGrid(const std::filesystem::path& path);

struct FarPoint {
  NoiseLevel level;
  EvalSummary summary;
};

std::vector<FarPoint> NoiseFarCurve(const NoiseGrid& grid, const EvalOptions& options = {});
void WriteFarCurve(std::ostream& out, const std::vector<FarPoint>& curve);

enum class ReportFormat { kCsv, kJsonl };

ReportFormat ParseReportFormat(std::string_view text);

// Rows: one "summary" row, one "scenario" row per scenario and one "trace"
// row per trace, all with the same columns in a fixed order.
void WriteReport(std::ostream& out, const EvalReport& report, ReportFormat format);
// Throws Error(kIoError) when the file cannot be written.
void ExportReport(const EvalReport& report, ReportFormat format,
                  const std::filesystem::path& path);
// Detects the format from the first line. Throws Error(kMalformedInput) with
// the line number.
EvalReport ReadReport(std::istream& in);
EvalReport ReadReport(const std::filesystem::path& path);

}  // namespace cacheshield
