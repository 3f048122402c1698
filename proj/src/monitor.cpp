// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The CacheShield Authors
#include "cacheshield/monitor.hpp"

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <deque>
#include <exception>
#include <fstream>
#include <istream>
#include <ostream>
#include <thread>
#include <utility>

#include "cacheshield/config_file.hpp"
#include "cacheshield/error.hpp"
#include "channel.hpp"
#include "json.hpp"

#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

extern char** environ;

namespace cacheshield {
namespace {

using Json = nlohmann::json;
using Clock = std::chrono::steady_clock;

constexpr std::size_t kHistogramBuckets = std::size(kLoopHistogramBoundsUs) + 1;

std::size_t BucketFor(double us) {
  std::size_t i = 0;
  while (i < std::size(kLoopHistogramBoundsUs) && us > kLoopHistogramBoundsUs[i]) ++i;
  return i;
}

int DecodeWaitStatus(int status) {
  if (WIFEXITED(status)) return WEXITSTATUS(status);
  if (WIFSIGNALED(status)) return 128 + WTERMSIG(status);
  return 1;
}

// Spawns argv with extra environment entries. Returns the child pid.
pid_t Spawn(const std::vector<std::string>& argv, const std::vector<std::string>& extra_env) {
  if (argv.empty()) throw Error(ErrorCode::kSpawnFailure, "empty command");
  std::vector<char*> args;
  for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
  args.push_back(nullptr);
  std::vector<char*> env;
  for (char** e = environ; e && *e; ++e) env.push_back(*e);
  for (const auto& e : extra_env) env.push_back(const_cast<char*>(e.c_str()));
  env.push_back(nullptr);
  pid_t pid = 0;
  const int rc = ::posix_spawnp(&pid, args[0], nullptr, nullptr, args.data(), env.data());
  if (rc != 0) {
    throw Error(ErrorCode::kSpawnFailure, argv[0] + ": " + std::strerror(rc));
  }
  return pid;
}

int WaitChild(pid_t pid) {
  int status = 0;
  while (::waitpid(pid, &status, 0) < 0) {
    if (errno != EINTR) return 1;
  }
  return DecodeWaitStatus(status);
}

// Like WaitChild, but a child left stopped by a stop reaction is killed
// instead of waited on forever.
int ReapProtected(pid_t pid) {
  int status = 0;
  for (;;) {
    if (::waitpid(pid, &status, WUNTRACED) < 0) {
      if (errno == EINTR) continue;
      return 1;
    }
    if (!WIFSTOPPED(status)) return DecodeWaitStatus(status);
    ::kill(pid, SIGKILL);
  }
}

class LogOnlyHook final : public ReactionHook {
 public:
  void React(const MonitorEvent&, std::optional<int>) override {}
};

class SignalHook final : public ReactionHook {
 public:
  explicit SignalHook(int signo) : signo_(signo) {}

  void React(const MonitorEvent&, std::optional<int> target_pid) override {
    if (!target_pid) throw Error(ErrorCode::kInvalidConfig, "reaction needs a target process");
    if (::kill(*target_pid, signo_) != 0) {
      throw Error(ErrorCode::kNoSuchProcess, "signal to pid " + std::to_string(*target_pid) +
                                                 ": " + std::strerror(errno));
    }
  }

 private:
  int signo_;
};

class ExecHook final : public ReactionHook {
 public:
  explicit ExecHook(std::string path) : path_(std::move(path)) {}

  void React(const MonitorEvent& alarm, std::optional<int> target_pid) override {
    std::vector<std::string> env = {"CACHESHIELD_EVENT=alarm",
                                    "CACHESHIELD_T_US=" + std::to_string(alarm.t_us)};
    if (const auto* p = std::get_if<AlarmPayload>(&alarm.payload)) {
      env.push_back("CACHESHIELD_SAMPLE_INDEX=" + std::to_string(p->sample_index));
      env.push_back("CACHESHIELD_G=" + FormatDouble(p->decision.g));
      env.push_back("CACHESHIELD_H=" + FormatDouble(p->decision.h));
      env.push_back("CACHESHIELD_MU_A=" + FormatDouble(p->decision.mu_a));
    }
    if (target_pid) env.push_back("CACHESHIELD_TARGET_PID=" + std::to_string(*target_pid));
    const int status = WaitChild(Spawn({path_}, env));
    if (status != 0) {
      throw Error(ErrorCode::kSpawnFailure, path_ + " exited with status " + std::to_string(status));
    }
  }

 private:
  std::string path_;
};

Json PayloadToJson(const EventPayload& payload) {
  return std::visit(
      [](const auto& p) -> Json {
        using T = std::decay_t<decltype(p)>;
        Json j = Json::object();
        if constexpr (std::is_same_v<T, StartedPayload>) {
          j["source"] = p.source;
          j["period_us"] = p.period_us;
          if (p.target_pid) j["target_pid"] = *p.target_pid;
        } else if constexpr (std::is_same_v<T, AlarmPayload>) {
          j["sample_index"] = p.sample_index;
          j["alarm"] = p.decision.alarm;
          j["g"] = p.decision.g;
          j["h"] = p.decision.h;
          j["mu_a"] = p.decision.mu_a;
        } else if constexpr (std::is_same_v<T, PausedPayload>) {
          j["sample_index"] = p.sample_index;
        } else if constexpr (std::is_same_v<T, ResumedPayload>) {
          j["skipped"] = p.skipped;
        } else if constexpr (std::is_same_v<T, ExitedPayload>) {
          j["samples"] = p.samples;
          j["reason"] = p.reason;
        } else if constexpr (std::is_same_v<T, OverheadStats>) {
          j["samples"] = p.samples;
          j["mean_loop_us"] = p.mean_loop_us;
          j["utilization"] = p.utilization;
          j["deadline_misses"] = p.deadline_misses;
          j["histogram_bounds_us"] = std::vector<double>(std::begin(kLoopHistogramBoundsUs),
                                                         std::end(kLoopHistogramBoundsUs));
          j["histogram"] = p.histogram;
        } else {
          j["message"] = p.message;
        }
        return j;
      },
      payload);
}

EventKind ParseEventKind(const std::string& text, std::size_t line) {
  for (auto k : {EventKind::kStarted, EventKind::kAlarm, EventKind::kPaused, EventKind::kResumed,
                 EventKind::kTargetExited, EventKind::kOverheadReport,
                 EventKind::kReactionFailed, EventKind::kError}) {
    if (ToString(k) == text) return k;
  }
  throw Error(ErrorCode::kMalformedInput, "unknown event kind '" + text + "'", line);
}

std::uint64_t U64(const Json& j, const char* key, std::size_t line) {
  const Json& v = j.at(key);
  if (!v.is_number_unsigned()) {
    throw Error(ErrorCode::kMalformedInput, std::string("'") + key + "' must be a non-negative integer",
                line);
  }
  return v.get<std::uint64_t>();
}

EventPayload PayloadFromJson(EventKind kind, const Json& j, std::size_t line) {
  switch (kind) {
    case EventKind::kStarted: {
      StartedPayload p;
      p.source = j.at("source").get<std::string>();
      const auto period = U64(j, "period_us", line);
      if (period > 0xffffffffULL) throw Error(ErrorCode::kMalformedInput, "period_us out of range", line);
      p.period_us = static_cast<std::uint32_t>(period);
      if (j.contains("target_pid")) p.target_pid = j.at("target_pid").get<int>();
      return p;
    }
    case EventKind::kAlarm: {
      AlarmPayload p;
      p.sample_index = U64(j, "sample_index", line);
      p.decision.alarm = j.at("alarm").get<bool>();
      p.decision.g = j.at("g").get<double>();
      p.decision.h = j.at("h").get<double>();
      p.decision.mu_a = j.at("mu_a").get<double>();
      return p;
    }
    case EventKind::kPaused:
      return PausedPayload{U64(j, "sample_index", line)};
    case EventKind::kResumed:
      return ResumedPayload{U64(j, "skipped", line)};
    case EventKind::kTargetExited:
      return ExitedPayload{U64(j, "samples", line),
                           j.at("reason").get<std::string>()};
    case EventKind::kOverheadReport: {
      OverheadStats p;
      p.samples = U64(j, "samples", line);
      p.mean_loop_us = j.at("mean_loop_us").get<double>();
      p.utilization = j.at("utilization").get<double>();
      p.deadline_misses = U64(j, "deadline_misses", line);
      for (const auto& c : j.at("histogram")) {
        if (!c.is_number_unsigned()) {
          throw Error(ErrorCode::kMalformedInput, "histogram counts must be non-negative integers", line);
        }
        p.histogram.push_back(c.get<std::uint64_t>());
      }
      return p;
    }
    case EventKind::kReactionFailed:
    case EventKind::kError:
      return MessagePayload{j.at("message").get<std::string>()};
  }
  return MessagePayload{};
}

bool IsRecorded(SourceKind kind) { return kind != SourceKind::kLive; }

}  // namespace

ReactionSpec ParseReaction(std::string_view text) {
  if (text == "log") return {ReactionKind::kLogOnly, {}};
  if (text == "notify") return {ReactionKind::kNotifyTarget, {}};
  if (text == "stop") return {ReactionKind::kStopTarget, {}};
  constexpr std::string_view kHook = "hook:";
  if (text.substr(0, kHook.size()) == kHook && text.size() > kHook.size()) {
    return {ReactionKind::kExecHook, std::string(text.substr(kHook.size()))};
  }
  throw Error(ErrorCode::kInvalidConfig, "unknown reaction '" + std::string(text) + "'");
}

std::string ToString(const ReactionSpec& reaction) {
  switch (reaction.kind) {
    case ReactionKind::kLogOnly: return "log";
    case ReactionKind::kNotifyTarget: return "notify";
    case ReactionKind::kStopTarget: return "stop";
    case ReactionKind::kExecHook: return "hook:" + reaction.hook_path;
  }
  return "?";
}

void MonitorConfig::Validate() const {
  source.Validate();
  detector.Validate();
  if (idle_intervals_to_pause < 1) {
    throw Error(ErrorCode::kInvalidConfig, "idle_intervals_to_pause must be at least 1");
  }
  if (reaction.kind == ReactionKind::kExecHook && reaction.hook_path.empty()) {
    throw Error(ErrorCode::kInvalidConfig, "exec-hook reaction needs a path");
  }
}

std::string_view ToString(EventKind kind) {
  switch (kind) {
    case EventKind::kStarted: return "started";
    case EventKind::kAlarm: return "alarm";
    case EventKind::kPaused: return "paused";
    case EventKind::kResumed: return "resumed";
    case EventKind::kTargetExited: return "target-exited";
    case EventKind::kOverheadReport: return "overhead-report";
    case EventKind::kReactionFailed: return "reaction-failed";
    case EventKind::kError: return "error";
  }
  return "?";
}

std::string EventToJson(const MonitorEvent& event) {
  Json j;
  j["kind"] = ToString(event.kind);
  j["t_us"] = event.t_us;
  j["payload"] = PayloadToJson(event.payload);
  return j.dump();
}

MonitorEvent EventFromJson(std::string_view json, std::size_t line) {
  try {
    const Json j = Json::parse(json);
    if (!j.is_object()) throw Error(ErrorCode::kMalformedInput, "event is not an object", line);
    MonitorEvent e;
    e.kind = ParseEventKind(j.at("kind").get<std::string>(), line);
    e.t_us = U64(j, "t_us", line);
    e.payload = PayloadFromJson(e.kind, j.at("payload"), line);
    return e;
  } catch (const Json::exception& ex) {
    throw Error(ErrorCode::kMalformedInput, ex.what(), line);
  }
}

void WriteEvents(std::ostream& out, const std::vector<MonitorEvent>& events) {
  for (const auto& e : events) out << EventToJson(e) << '\n';
}

std::vector<MonitorEvent> ReadEvents(std::istream& in) {
  std::vector<MonitorEvent> events;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    events.push_back(EventFromJson(line, n));
  }
  return events;
}

std::vector<MonitorEvent> ReadEvents(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kFileNotFound, path.string());
  return ReadEvents(in);
}

std::shared_ptr<ReactionHook> MakeReactionHook(const ReactionSpec& spec) {
  switch (spec.kind) {
    case ReactionKind::kLogOnly: return std::make_shared<LogOnlyHook>();
    case ReactionKind::kNotifyTarget: return std::make_shared<SignalHook>(SIGUSR1);
    case ReactionKind::kStopTarget: return std::make_shared<SignalHook>(SIGSTOP);
    case ReactionKind::kExecHook: return std::make_shared<ExecHook>(spec.hook_path);
  }
  return std::make_shared<LogOnlyHook>();
}

// Runs reactions on a worker thread and collects their failures.
class Monitor::Dispatcher {
 public:
  Dispatcher(std::shared_ptr<ReactionHook> hook, std::optional<int> target)
      : hook_(std::move(hook)), target_(target), worker_([this] { Loop(); }) {}

  ~Dispatcher() {
    {
      std::lock_guard lock(mu_);
      closing_ = true;
    }
    cv_.notify_all();
    worker_.join();
  }

  void Post(MonitorEvent alarm) {
    {
      std::lock_guard lock(mu_);
      queue_.push_back(std::move(alarm));
    }
    cv_.notify_all();
  }

  // Blocks until every posted reaction has completed.
  void Flush() {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return queue_.empty() && !busy_; });
  }

  std::vector<std::string> TakeFailures() {
    std::lock_guard lock(mu_);
    return std::exchange(failures_, {});
  }

 private:
  void Loop() {
    std::unique_lock lock(mu_);
    for (;;) {
      cv_.wait(lock, [&] { return !queue_.empty() || closing_; });
      if (queue_.empty()) return;
      MonitorEvent alarm = std::move(queue_.front());
      queue_.pop_front();
      busy_ = true;
      lock.unlock();
      std::optional<std::string> failure;
      try {
        if (hook_) hook_->React(alarm, target_);
      } catch (const std::exception& e) {
        failure = e.what();
      }
      lock.lock();
      busy_ = false;
      if (failure) failures_.push_back(std::move(*failure));
      cv_.notify_all();
    }
  }

  std::shared_ptr<ReactionHook> hook_;
  std::optional<int> target_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<MonitorEvent> queue_;
  std::vector<std::string> failures_;
  bool busy_ = false;
  bool closing_ = false;
  std::thread worker_;
};

Monitor::Monitor(MonitorConfig config, std::unique_ptr<SampleSource> source, EventSink sink,
                 std::shared_ptr<ReactionHook> hook, std::optional<int> reaction_target)
    : config_(std::move(config)),
      source_(std::move(source)),
      sink_(std::move(sink)),
      reaction_target_(reaction_target),
      detector_(config_.detector),
      histogram_(kHistogramBuckets, 0) {
  config_.detector.Validate();
  if (config_.idle_intervals_to_pause < 1) {
    throw Error(ErrorCode::kInvalidConfig, "idle_intervals_to_pause must be at least 1");
  }
  if (!source_) throw Error(ErrorCode::kInvalidConfig, "monitor needs a source");
  if (!reaction_target_) reaction_target_ = source_->target_pid();
  if (!hook) hook = MakeReactionHook(config_.reaction);
  dispatcher_ = std::make_unique<Dispatcher>(std::move(hook), reaction_target_);
}

Monitor::~Monitor() = default;

void Monitor::Emit(EventKind kind, EventPayload payload) {
  if (sink_) sink_(MonitorEvent{kind, last_t_us_, std::move(payload)});
}

void Monitor::DrainReactionFailures() {
  for (auto& msg : dispatcher_->TakeFailures()) {
    Emit(EventKind::kReactionFailed, MessagePayload{std::move(msg)});
  }
}

OverheadStats Monitor::overhead() const {
  OverheadStats s;
  s.samples = consumed_;
  s.mean_loop_us = consumed_ ? loop_us_total_ / static_cast<double>(consumed_) : 0.0;
  s.utilization = s.mean_loop_us / static_cast<double>(source_->period_us());
  s.deadline_misses = source_->Status().deadline_misses;
  s.histogram = histogram_;
  return s;
}

void Monitor::Finish(std::string reason) {
  dispatcher_->Flush();
  DrainReactionFailures();
  Emit(EventKind::kOverheadReport, overhead());
  Emit(EventKind::kTargetExited, ExitedPayload{consumed_, std::move(reason)});
  state_ = MonitorState::kFinished;
}

MonitorState Monitor::Step() {
  if (state_ == MonitorState::kFinished) return state_;
  if (state_ == MonitorState::kNotStarted) {
    state_ = MonitorState::kRunning;
    Emit(EventKind::kStarted,
         StartedPayload{std::string(ToString(source_->kind())), source_->period_us(),
                        source_->target_pid()});
  }
  if (stop_requested_) {
    Finish("stopped");
    return state_;
  }
  if (state_ == MonitorState::kPaused) return state_;
  DrainReactionFailures();

  const auto start = Clock::now();
  std::optional<CounterSample> sample;
  try {
    sample = source_->NextSample();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kTargetExited) {
      Finish("target-exited");
    } else {
      Emit(EventKind::kError, MessagePayload{e.what()});
      Finish("error");
    }
    return state_;
  }
  if (!sample) {
    Finish("end-of-stream");
    return state_;
  }

  const std::uint64_t index = consumed_++;
  last_t_us_ = std::max(last_t_us_, sample->t_us);
  const Decision d = detector_.Update(*sample);
  if (d.alarm && !reacted_) {
    reacted_ = true;
    if (!first_alarm_) first_alarm_ = index;
    MonitorEvent alarm{EventKind::kAlarm, last_t_us_, AlarmPayload{index, d}};
    if (sink_) sink_(alarm);
    dispatcher_->Post(std::move(alarm));
  }
  idle_run_ = sample->cycles < config_.idle_threshold_cycles ? idle_run_ + 1 : 0;

  const double elapsed = std::chrono::duration<double, std::micro>(Clock::now() - start).count();
  const double loop_us = std::max(0.0, elapsed - source_->last_wait_us());
  loop_us_total_ += loop_us;
  ++histogram_[BucketFor(loop_us)];

  if (config_.overhead_report_every > 0 && consumed_ % config_.overhead_report_every == 0) {
    Emit(EventKind::kOverheadReport, overhead());
  }
  if (idle_run_ >= config_.idle_intervals_to_pause) {
    idle_run_ = 0;
    state_ = MonitorState::kPaused;
    source_->OnPause();
    Emit(EventKind::kPaused, PausedPayload{index});
  }
  return state_;
}

MonitorState Monitor::Run() {
  for (;;) {
    const auto s = Step();
    if (s == MonitorState::kPaused || s == MonitorState::kFinished) return s;
  }
}

void Monitor::Resume() {
  if (state_ != MonitorState::kPaused) throw Error(ErrorCode::kNotPaused, "monitor is not paused");
  std::uint64_t t = last_t_us_;
  const std::uint64_t skipped = source_->SkipIdle(config_.idle_threshold_cycles, &t);
  last_t_us_ = std::max(last_t_us_, t);
  source_->OnResume();
  state_ = MonitorState::kRunning;
  Emit(EventKind::kResumed, ResumedPayload{skipped});
}

void Monitor::ResetDetector() {
  detector_.Reset();
  reacted_ = false;
}

void MonitorControl::Resume() {
  {
    std::lock_guard lock(mu_);
    if (!paused_) throw Error(ErrorCode::kNotPaused, "monitor is not paused");
    resume_ = true;
  }
  cv_.notify_all();
}

void MonitorControl::Stop() {
  {
    std::lock_guard lock(mu_);
    stop_ = true;
  }
  cv_.notify_all();
}

bool MonitorControl::paused() const {
  std::lock_guard lock(mu_);
  return paused_;
}

bool MonitorControl::stop_requested() const {
  std::lock_guard lock(mu_);
  return stop_;
}

void MonitorControl::SetPaused(bool paused) {
  std::lock_guard lock(mu_);
  paused_ = paused;
  resume_ = false;
}

bool MonitorControl::WaitForResume() {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [&] { return resume_ || stop_; });
  paused_ = false;
  resume_ = false;
  return !stop_;
}

MonitorSummary RunMonitor(const MonitorConfig& config, const EventSink& sink,
                          const RunOptions& options) {
  config.Validate();
  std::unique_ptr<SampleSource> source;
  try {
    source = OpenSource(config.source);
  } catch (const Error& e) {
    const MonitorEvent err{EventKind::kError, 0, MessagePayload{e.what()}};
    if (sink) sink(err);
    MonitorSummary summary;
    summary.error = e.what();
    return summary;
  }
  return RunMonitor(config, std::move(source), sink, options);
}

MonitorSummary RunMonitor(const MonitorConfig& config, std::unique_ptr<SampleSource> source,
                          const EventSink& sink, const RunOptions& options) {
  internal::Channel<MonitorEvent> channel;
  MonitorSummary summary;
  std::exception_ptr failure;
  MonitorControl* control = options.control;

  std::thread sampler([&] {
    try {
      const bool recorded = IsRecorded(source->kind());
      // Mark the control paused before the event leaves this thread so that a
      // consumer reacting to it can always resume.
      auto forward = [&](const MonitorEvent& e) {
        if (e.kind == EventKind::kError) summary.error = std::get<MessagePayload>(e.payload).message;
        if (e.kind == EventKind::kPaused && control && !recorded) control->SetPaused(true);
        channel.Push(e);
      };
      Monitor monitor(config, std::move(source), forward, options.hook,
                      options.reaction_target_pid);
      for (;;) {
        if (control && control->stop_requested()) monitor.RequestStop();
        const auto state = monitor.Step();
        if (state == MonitorState::kFinished) break;
        if (state != MonitorState::kPaused) continue;
        if (recorded || !control) {
          monitor.Resume();
        } else if (control->WaitForResume()) {
          monitor.Resume();
        } else {
          monitor.RequestStop();
        }
      }
      summary.alarmed = monitor.first_alarm_index().has_value();
      summary.first_alarm_index = monitor.first_alarm_index();
      summary.samples = monitor.samples_consumed();
      summary.overhead = monitor.overhead();
    } catch (...) {
      failure = std::current_exception();
    }
    channel.Close();
  });

  while (auto e = channel.Pop()) {
    if (sink) sink(*e);
  }
  sampler.join();
  if (failure) std::rethrow_exception(failure);
  return summary;
}

AttachResult AttachProtected(const std::vector<std::string>& argv, MonitorConfig config,
                             const RunOptions& options) {
  const bool live = config.source.kind == SourceKind::kLive;
  if (live) config.source.target_pid = 1;  // placeholder so validation passes
  config.Validate();

  const pid_t pid = Spawn(argv, {});
  std::unique_ptr<SampleSource> source;
  try {
    if (live) {
      config.source.target_pid = pid;
      source = OpenSource(config.source);
    } else {
      source = OpenSource(config.source);
    }
  } catch (const Error& e) {
    ::kill(pid, SIGKILL);
    WaitChild(pid);
    if (e.code() == ErrorCode::kCountersUnavailable) {
      throw Error(ErrorCode::kPlatformUnsupported, e.what());
    }
    throw;
  }

  AttachResult result;
  RunOptions opts = options;
  if (!opts.reaction_target_pid) opts.reaction_target_pid = pid;
  try {
    result.summary = RunMonitor(
        config, std::move(source), [&](const MonitorEvent& e) { result.events.push_back(e); },
        opts);
  } catch (...) {
    ::kill(pid, SIGKILL);
    WaitChild(pid);
    throw;
  }
  result.exit_status = ReapProtected(pid);
  return result;
}

}  // namespace cacheshield
