// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The CacheShield Authors
//
// Monitoring service: feeds one detector from one sample source, pauses when
// the target stops running, dispatches alarms to a reaction hook and measures
// its own per-sample cost.
#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "cacheshield/detector.hpp"
#include "cacheshield/source.hpp"

namespace cacheshield {

enum class ReactionKind { kLogOnly, kNotifyTarget, kStopTarget, kExecHook };

struct ReactionSpec {
  ReactionKind kind = ReactionKind::kLogOnly;
  std::string hook_path;  // kExecHook only

  friend bool operator==(const ReactionSpec&, const ReactionSpec&) = default;
};

// "log" | "notify" | "stop" | "hook:PATH"
ReactionSpec ParseReaction(std::string_view text);
std::string ToString(const ReactionSpec& reaction);

struct MonitorConfig {
  SourceDescriptor source;
  DetectorConfig detector;
  std::uint64_t idle_threshold_cycles = 1000;
  std::uint32_t idle_intervals_to_pause = 50;
  ReactionSpec reaction;
  std::uint64_t overhead_report_every = 10000;  // samples; 0 = at shutdown only

  // Throws Error(kInvalidConfig).
  void Validate() const;
};

// Loop-time histogram bucket upper bounds, in microseconds. counts has one
// extra trailing bucket for everything slower.
inline constexpr double kLoopHistogramBoundsUs[] = {1, 2, 5, 10, 20, 50, 100, 200, 500};

struct OverheadStats {
  std::uint64_t samples = 0;
  double mean_loop_us = 0.0;
  double utilization = 0.0;  // mean_loop_us / period_us
  std::uint64_t deadline_misses = 0;
  std::vector<std::uint64_t> histogram;

  friend bool operator==(const OverheadStats&, const OverheadStats&) = default;
};

enum class EventKind {
  kStarted,
  kAlarm,
  kPaused,
  kResumed,
  kTargetExited,
  kOverheadReport,
  kReactionFailed,
  kError,
};

std::string_view ToString(EventKind kind);

struct StartedPayload {
  std::string source;
  std::uint32_t period_us = 0;
  std::optional<int> target_pid;
  friend bool operator==(const StartedPayload&, const StartedPayload&) = default;
};

struct AlarmPayload {
  std::uint64_t sample_index = 0;  // 0-based index of the alarming sample
  Decision decision;
  friend bool operator==(const AlarmPayload&, const AlarmPayload&) = default;
};

struct PausedPayload {
  std::uint64_t sample_index = 0;  // last sample consumed before pausing
  friend bool operator==(const PausedPayload&, const PausedPayload&) = default;
};

struct ResumedPayload {
  std::uint64_t skipped = 0;  // recorded samples discarded while paused
  friend bool operator==(const ResumedPayload&, const ResumedPayload&) = default;
};

struct ExitedPayload {
  std::uint64_t samples = 0;
  std::string reason;  // "end-of-stream", "target-exited" or "stopped"
  friend bool operator==(const ExitedPayload&, const ExitedPayload&) = default;
};

struct MessagePayload {
  std::string message;
  friend bool operator==(const MessagePayload&, const MessagePayload&) = default;
};

using EventPayload = std::variant<StartedPayload, AlarmPayload, PausedPayload,
                                  ResumedPayload, ExitedPayload, OverheadStats,
                                  MessagePayload>;

struct MonitorEvent {
  EventKind kind = EventKind::kStarted;
  std::uint64_t t_us = 0;
  EventPayload payload;

  friend bool operator==(const MonitorEvent&, const MonitorEvent&) = default;
};

// JSON-lines event log: {"kind": ..., "t_us": ..., "payload": {...}}.
std::string EventToJson(const MonitorEvent& event);
// Throws Error(kMalformedInput) carrying `line`.
MonitorEvent EventFromJson(std::string_view json, std::size_t line = 1);
void WriteEvents(std::ostream& out, const std::vector<MonitorEvent>& events);
std::vector<MonitorEvent> ReadEvents(std::istream& in);
std::vector<MonitorEvent> ReadEvents(const std::filesystem::path& path);

using EventSink = std::function<void(const MonitorEvent&)>;

// Runs on the reaction worker, never on the sampling loop. Throwing reports a
// reaction failure without stopping monitoring.
class ReactionHook {
 public:
  virtual ~ReactionHook() = default;
  virtual void React(const MonitorEvent& alarm, std::optional<int> target_pid) = 0;
};

std::shared_ptr<ReactionHook> MakeReactionHook(const ReactionSpec& spec);

enum class MonitorState { kNotStarted, kRunning, kPaused, kFinished };

// Synchronous monitoring core. Events are emitted on the calling thread in
// timestamp order; reactions run on a private worker thread.
class Monitor {
 public:
  Monitor(MonitorConfig config, std::unique_ptr<SampleSource> source, EventSink sink,
          std::shared_ptr<ReactionHook> hook = nullptr,
          std::optional<int> reaction_target = std::nullopt);
  ~Monitor();
  Monitor(const Monitor&) = delete;
  Monitor& operator=(const Monitor&) = delete;

  // Consumes at most one sample.
  MonitorState Step();
  // Steps until the monitor pauses or finishes.
  MonitorState Run();
  // Leaves the paused state. Recorded sources first discard the rest of the
  // idle stretch. Throws Error(kNotPaused) in any other state.
  void Resume();
  // Finishes after the current step with reason "stopped". Thread-safe.
  void RequestStop() { stop_requested_ = true; }
  // Clears the detector and re-arms the reaction.
  void ResetDetector();

  MonitorState state() const { return state_; }
  const DetectorState& detector_state() const { return detector_.state(); }
  std::optional<std::uint64_t> first_alarm_index() const { return first_alarm_; }
  std::uint64_t samples_consumed() const { return consumed_; }
  OverheadStats overhead() const;
  const SampleSource& source() const { return *source_; }

 private:
  class Dispatcher;

  void Emit(EventKind kind, EventPayload payload);
  void Finish(std::string reason);
  void DrainReactionFailures();

  MonitorConfig config_;
  std::unique_ptr<SampleSource> source_;
  EventSink sink_;
  std::optional<int> reaction_target_;
  CusumDetector detector_;
  std::unique_ptr<Dispatcher> dispatcher_;

  MonitorState state_ = MonitorState::kNotStarted;
  std::atomic<bool> stop_requested_{false};
  std::uint64_t consumed_ = 0;
  std::uint64_t idle_run_ = 0;
  std::uint64_t last_t_us_ = 0;
  bool reacted_ = false;
  std::optional<std::uint64_t> first_alarm_;

  double loop_us_total_ = 0.0;
  std::vector<std::uint64_t> histogram_;
};

// Control endpoint for a monitor running on its own thread: the message-based
// stand-in for the resume / stop signals a protected process would send.
class MonitorControl {
 public:
  // Throws Error(kNotPaused) unless the monitor is currently paused.
  void Resume();
  void Stop();
  bool paused() const;
  bool stop_requested() const;

  // Sampling-thread side.
  void SetPaused(bool paused);
  // Blocks while paused; returns false once a stop was requested.
  bool WaitForResume();

 private:
  mutable std::mutex mu_;
  std::condition_variable cv_;
  bool paused_ = false;
  bool resume_ = false;
  bool stop_ = false;
};

struct MonitorSummary {
  bool alarmed = false;
  std::optional<std::uint64_t> first_alarm_index;
  std::uint64_t samples = 0;
  OverheadStats overhead;
  std::optional<std::string> error;
};

struct RunOptions {
  std::shared_ptr<ReactionHook> hook;      // default: built from config.reaction
  std::optional<int> reaction_target_pid;  // default: the source's target
  MonitorControl* control = nullptr;
};

// Opens the configured source and runs the sampling loop on a dedicated
// thread. Events travel through an ordered channel and reach `sink` on the
// calling thread. Recorded sources resume automatically once the target is
// active again; live sources wait for MonitorControl::Resume. Source errors
// end the run with an error event.
MonitorSummary RunMonitor(const MonitorConfig& config, const EventSink& sink,
                          const RunOptions& options = {});
MonitorSummary RunMonitor(const MonitorConfig& config, std::unique_ptr<SampleSource> source,
                          const EventSink& sink, const RunOptions& options = {});

struct AttachResult {
  int exit_status = 0;  // exit code, or 128 + signal number
  std::vector<MonitorEvent> events;
  MonitorSummary summary;
};

// Spawns `argv`, monitors it until it exits and reaps it. A child still
// stopped by a stop reaction when monitoring ends is killed. A live source is
// pointed at the child; replay and synthetic sources supply the samples while
// the child remains the reaction target.
// Errors: kSpawnFailure, kPlatformUnsupported (live counters unavailable).
AttachResult AttachProtected(const std::vector<std::string>& argv, MonitorConfig config,
                             const RunOptions& options = {});

}  // namespace cacheshield
