// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The CacheShield Authors
//
// Sample sources: live per-process hardware counters, trace replay and
// in-process synthetic generation behind one interface.
//
// Live backend event mapping (Linux perf_event, user-space only):
//   misses  PERF_TYPE_HARDWARE / PERF_COUNT_HW_CACHE_MISSES (LLC misses)
//   cycles  PERF_TYPE_HARDWARE / PERF_COUNT_HW_CPU_CYCLES
// Both counters are opened for the target PID on any CPU, so they only count
// while that process runs. Other platforms report counters-unavailable.
#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string_view>

#include "cacheshield/sample.hpp"
#include "cacheshield/scenario.hpp"

namespace cacheshield {

enum class SourceKind { kLive, kReplay, kSynthetic };

std::string_view ToString(SourceKind kind);

inline constexpr std::uint32_t kMinPeriodUs = 10;

struct SourceDescriptor {
  SourceKind kind = SourceKind::kReplay;
  std::optional<int> target_pid;                // live only
  std::optional<std::filesystem::path> path;    // replay only
  std::optional<ScenarioSpec> scenario;         // synthetic only
  std::uint32_t period_us = 100;
  bool paced = false;  // synthetic only; live is always paced, replay never

  // Throws Error(kInvalidConfig).
  void Validate() const;

  static SourceDescriptor Live(int pid, std::uint32_t period_us = 100);
  static SourceDescriptor Replay(std::filesystem::path path, std::uint32_t period_us = 100);
  static SourceDescriptor Synthetic(ScenarioSpec scenario, std::uint32_t period_us = 100,
                                    bool paced = false);
};

struct SourceStatus {
  std::uint64_t samples_emitted = 0;
  std::uint64_t deadline_misses = 0;
  bool target_alive = true;
  // Pacing jitter: how late reads started relative to their period boundary.
  double max_lateness_us = 0.0;
  double total_lateness_us = 0.0;
};

// Single consumer. A source may be handed to another thread before the first
// read and must not be shared afterwards.
class SampleSource {
 public:
  virtual ~SampleSource() = default;

  // nullopt marks a normal end of stream. Live sources throw
  // Error(kTargetExited) once the target is gone and Error(kReadFailure) when
  // the counters cannot be read.
  virtual std::optional<CounterSample> NextSample() = 0;
  virtual SourceStatus Status() const = 0;
  virtual SourceKind kind() const = 0;
  virtual std::uint32_t period_us() const = 0;
  virtual std::optional<int> target_pid() const { return std::nullopt; }
  // Time the last NextSample call spent sleeping for its period boundary.
  virtual double last_wait_us() const { return 0.0; }

  virtual void OnPause() {}
  virtual void OnResume() {}

  // Recorded sources: discards upcoming samples while their cycle count stays
  // below `idle_threshold_cycles`. This is how a replay models the time a
  // paused monitor spends waiting for the target to run again. Returns the
  // number of discarded samples and, through `last_t_us`, the timestamp of the
  // last one.
  virtual std::uint64_t SkipIdle(std::uint64_t idle_threshold_cycles,
                                 std::uint64_t* last_t_us) {
    (void)idle_threshold_cycles;
    (void)last_t_us;
    return 0;
  }
};

// Sleeps to successive period boundaries and accounts for overruns. A call
// that arrives after its boundary has passed counts as a deadline miss; the
// sample then carries its true (later) timestamp and the schedule is
// re-anchored at the current time rather than trying to catch up.
class Pacer {
 public:
  explicit Pacer(std::uint32_t period_us);

  // Blocks until the next boundary; returns microseconds since construction.
  std::uint64_t WaitNext();
  std::uint64_t deadline_misses() const { return deadline_misses_; }
  double max_lateness_us() const { return max_lateness_us_; }
  double total_lateness_us() const { return total_lateness_us_; }
  double last_wait_us() const { return last_wait_us_; }
  void Restart();

 private:
  using Clock = std::chrono::steady_clock;
  std::chrono::microseconds period_;
  Clock::time_point start_;
  Clock::time_point next_;
  std::uint64_t last_t_us_ = 0;
  std::uint64_t deadline_misses_ = 0;
  double max_lateness_us_ = 0.0;
  double total_lateness_us_ = 0.0;
  double last_wait_us_ = 0.0;
};

// Throws Error with kNoSuchProcess, kCountersUnavailable, kFileNotFound,
// kMalformedTrace or kInvalidConfig.
std::unique_ptr<SampleSource> OpenSource(const SourceDescriptor& descriptor);

// Replays an in-memory trace, unpaced.
std::unique_ptr<SampleSource> MakeReplaySource(Trace trace, std::uint32_t period_us = 100);

// Implemented per platform in live_source.cpp.
std::unique_ptr<SampleSource> OpenLiveSource(int pid, std::uint32_t period_us);

}  // namespace cacheshield
