// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The CacheShield Authors
#include <signal.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <iostream>
#include <atomic>
#include <random>
#include <sstream>
#include <thread>

#include "cacheshield/monitor.hpp"
#include "cacheshield/trace_sim.hpp"
#include "doctest.h"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace cacheshield;

namespace {

MonitorConfig ReplayConfig() {
  MonitorConfig cfg;
  cfg.source = SourceDescriptor::Replay("unused.csv");
  return cfg;
}

std::vector<MonitorEvent> RunToEnd(Monitor& m, std::vector<MonitorEvent>& events) {
  for (;;) {
    const auto s = m.Run();
    if (s == MonitorState::kFinished) break;
    m.Resume();
  }
  return events;
}

std::size_t Count(const std::vector<MonitorEvent>& events, EventKind kind) {
  std::size_t n = 0;
  for (const auto& e : events) n += e.kind == kind;
  return n;
}

class CountingHook final : public ReactionHook {
 public:
  void React(const MonitorEvent&, std::optional<int>) override { ++calls; }
  std::atomic<int> calls{0};
};

class FailingHook final : public ReactionHook {
 public:
  void React(const MonitorEvent&, std::optional<int>) override {
    throw Error(ErrorCode::kSpawnFailure, "hook broke");
  }
};

// Replays a trace but reports itself as a live source, so RunMonitor waits
// on MonitorControl while paused.
class FakeLiveSource final : public SampleSource {
 public:
  explicit FakeLiveSource(Trace t) : inner_(MakeReplaySource(std::move(t))) {}
  std::optional<CounterSample> NextSample() override { return inner_->NextSample(); }
  SourceStatus Status() const override { return inner_->Status(); }
  SourceKind kind() const override { return SourceKind::kLive; }
  std::uint32_t period_us() const override { return 100; }

 private:
  std::unique_ptr<SampleSource> inner_;
};

Trace ConstantTrace(std::size_t n, std::uint64_t misses, std::uint64_t cycles,
                    std::uint64_t t0 = 0) {
  Trace t;
  for (std::size_t i = 0; i < n; ++i) t.push_back({(t0 + i) * 100, misses, cycles});
  return t;
}

Trace Concat(std::initializer_list<Trace> parts) {
  Trace out;
  for (const auto& p : parts) {
    for (auto s : p) {
      s.t_us = out.size() * 100;
      out.push_back(s);
    }
  }
  return out;
}

std::filesystem::path WriteScript(const testutil::TempDir& dir, const std::string& body) {
  const auto path = dir / "hook.sh";
  testutil::WriteFile(path, "#!/bin/sh\n" + body);
  ::chmod(path.c_str(), 0755);
  return path;
}

}  // namespace

TEST_CASE("reaction specs") {
  CHECK(ParseReaction("log").kind == ReactionKind::kLogOnly);
  CHECK(ParseReaction("notify").kind == ReactionKind::kNotifyTarget);
  CHECK(ParseReaction("stop").kind == ReactionKind::kStopTarget);
  const auto hook = ParseReaction("hook:/usr/bin/true");
  CHECK(hook.kind == ReactionKind::kExecHook);
  CHECK(hook.hook_path == "/usr/bin/true");
  CHECK(ToString(hook) == "hook:/usr/bin/true");
  CHECK_ERROR_CODE(ParseReaction("hook:"), ErrorCode::kInvalidConfig);
  CHECK_ERROR_CODE(ParseReaction("explode"), ErrorCode::kInvalidConfig);
}

TEST_CASE("monitor config validation") {
  auto cfg = ReplayConfig();
  cfg.idle_intervals_to_pause = 0;
  CHECK_ERROR_CODE(cfg.Validate(), ErrorCode::kInvalidConfig);
  cfg = ReplayConfig();
  cfg.detector.beta = 2;
  CHECK_ERROR_CODE(cfg.Validate(), ErrorCode::kInvalidConfig);
}

TEST_CASE("quiet replay produces no alarm") {
  ScenarioSpec spec = DefaultScenario(Workload::kRsaLike);
  const auto lt = GenerateTrace(spec);
  std::vector<MonitorEvent> events;
  auto cfg = ReplayConfig();
  cfg.overhead_report_every = 500;
  Monitor m(cfg, MakeReplaySource(lt.trace), [&](const MonitorEvent& e) { events.push_back(e); });
  RunToEnd(m, events);
  CHECK(events.front().kind == EventKind::kStarted);
  CHECK(events.back().kind == EventKind::kTargetExited);
  CHECK(Count(events, EventKind::kAlarm) == 0);
  CHECK(Count(events, EventKind::kOverheadReport) == 5);
  CHECK(std::get<ExitedPayload>(events.back().payload).reason == "end-of-stream");
  CHECK(std::get<ExitedPayload>(events.back().payload).samples == lt.trace.size());
  CHECK_FALSE(m.first_alarm_index().has_value());
}

TEST_CASE("attack replay alarms where the standalone detector does") {
  for (auto family : {AttackFamily::kFlushReload, AttackFamily::kFlushFlush,
                      AttackFamily::kPrimeProbe}) {
    ScenarioSpec spec = DefaultScenario(Workload::kAesLike);
    spec.attack = DefaultAttack(family, 1, 500);
    const auto lt = GenerateTrace(spec);
    std::vector<MonitorEvent> events;
    Monitor m(ReplayConfig(), MakeReplaySource(lt.trace),
              [&](const MonitorEvent& e) { events.push_back(e); });
    RunToEnd(m, events);
    const auto want = oracle::FirstAlarm(oracle::Misses(lt.trace));
    REQUIRE(want.has_value());
    REQUIRE(m.first_alarm_index().has_value());
    CHECK(*m.first_alarm_index() == *want);
    CHECK(*m.first_alarm_index() >= 500);
    CHECK(*m.first_alarm_index() <= 500 + 100);
    CHECK(Count(events, EventKind::kAlarm) == 1);
  }
}

TEST_CASE("idle scenario pauses") {
  ScenarioSpec spec = DefaultScenario(Workload::kIdle);
  spec.duration_samples = 200;
  auto cfg = ReplayConfig();
  std::vector<MonitorEvent> events;
  Monitor m(cfg, OpenSource(SourceDescriptor::Synthetic(spec)),
            [&](const MonitorEvent& e) { events.push_back(e); });
  CHECK(m.Run() == MonitorState::kPaused);
  CHECK(m.samples_consumed() == 50);
  CHECK(events.back().kind == EventKind::kPaused);
  CHECK(std::get<PausedPayload>(events.back().payload).sample_index == 49);
}

TEST_CASE("resume only when paused") {
  const Trace t = Concat({ConstantTrace(60, 0, 10), ConstantTrace(10, 0, 5000)});
  std::vector<MonitorEvent> events;
  Monitor m(ReplayConfig(), MakeReplaySource(t),
            [&](const MonitorEvent& e) { events.push_back(e); });
  m.Step();
  CHECK_ERROR_CODE(m.Resume(), ErrorCode::kNotPaused);
  REQUIRE(m.Run() == MonitorState::kPaused);
  m.Resume();
  CHECK(events.back().kind == EventKind::kResumed);
  CHECK(std::get<ResumedPayload>(events.back().payload).skipped == 10);
  CHECK(m.state() == MonitorState::kRunning);
  CHECK(m.Run() == MonitorState::kFinished);
  CHECK(m.samples_consumed() == 60);
}

TEST_CASE("detector state survives a pause") {
  const Trace t = Concat({ConstantTrace(5, 12, 5000), ConstantTrace(80, 0, 3),
                          ConstantTrace(5, 12, 5000)});
  std::vector<MonitorEvent> events;
  Monitor m(ReplayConfig(), MakeReplaySource(t), [&](const MonitorEvent& e) { events.push_back(e); });
  REQUIRE(m.Run() == MonitorState::kPaused);
  const auto before = m.detector_state();
  m.Resume();
  CHECK(m.detector_state() == before);
}

TEST_CASE("pause and resume match the gap-excised trace") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    Trace t;
    std::uint64_t i = 0;
    for (int seg = 0; seg < 12; ++seg) {
      const bool idle = rng() % 3 == 0;
      const int len = 5 + static_cast<int>(rng() % 120);
      const double mean = rng() % 4 == 0 ? 15.0 : 0.5;
      std::poisson_distribution<int> pois(mean);
      for (int k = 0; k < len; ++k, ++i) {
        const std::uint64_t misses = idle ? 0 : static_cast<std::uint64_t>(pois(rng));
        const std::uint64_t cycles = idle ? rng() % 200 : 5000 + rng() % 1000;
        t.push_back({i * 100, misses, cycles});
      }
    }
    std::vector<std::size_t> pauses;
    const auto excised = oracle::ExciseIdleGaps(t, 1000, 50, &pauses);

    std::vector<MonitorEvent> events;
    Monitor m(ReplayConfig(), MakeReplaySource(t),
              [&](const MonitorEvent& e) { events.push_back(e); });
    RunToEnd(m, events);

    CHECK(m.samples_consumed() == excised.size());
    CHECK(m.first_alarm_index() == oracle::FirstAlarm(oracle::Misses(excised)));
    std::vector<std::size_t> got_pauses;
    for (const auto& e : events) {
      if (e.kind == EventKind::kPaused) got_pauses.push_back(std::get<PausedPayload>(e.payload).sample_index);
    }
    CHECK(got_pauses == pauses);
    for (std::size_t k = 1; k < events.size(); ++k) REQUIRE(events[k].t_us >= events[k - 1].t_us);
  }
}

TEST_CASE("one reaction per latched alarm") {
  const Trace t = Concat({ConstantTrace(30, 12, 5000), ConstantTrace(30, 0, 5000),
                          ConstantTrace(30, 12, 5000)});
  auto hook = std::make_shared<CountingHook>();
  std::vector<MonitorEvent> events;
  {
    Monitor m(ReplayConfig(), MakeReplaySource(t),
              [&](const MonitorEvent& e) { events.push_back(e); }, hook);
    RunToEnd(m, events);
  }
  CHECK(hook->calls == 1);
  CHECK(Count(events, EventKind::kAlarm) == 1);

  auto hook2 = std::make_shared<CountingHook>();
  {
    Monitor m(ReplayConfig(), MakeReplaySource(t), nullptr, hook2);
    while (m.samples_consumed() < 45) m.Step();
    m.ResetDetector();
    RunToEnd(m, events);
  }
  CHECK(hook2->calls == 2);
}

TEST_CASE("reaction failures are reported and monitoring continues") {
  const Trace t = Concat({ConstantTrace(30, 12, 5000), ConstantTrace(200, 0, 5000)});
  std::vector<MonitorEvent> events;
  Monitor m(ReplayConfig(), MakeReplaySource(t), [&](const MonitorEvent& e) { events.push_back(e); },
            std::make_shared<FailingHook>());
  RunToEnd(m, events);
  CHECK(Count(events, EventKind::kReactionFailed) == 1);
  CHECK(m.samples_consumed() == t.size());
  CHECK(events.back().kind == EventKind::kTargetExited);
}

TEST_CASE("signal reactions without a target fail softly") {
  auto cfg = ReplayConfig();
  cfg.reaction = ParseReaction("stop");
  std::vector<MonitorEvent> events;
  Monitor m(cfg, MakeReplaySource(ConstantTrace(40, 12, 5000)),
            [&](const MonitorEvent& e) { events.push_back(e); });
  RunToEnd(m, events);
  CHECK(Count(events, EventKind::kReactionFailed) == 1);
}

TEST_CASE("overhead accounting") {
  const Trace t = ConstantTrace(20000, 1, 5000);
  std::vector<MonitorEvent> events;
  Monitor m(ReplayConfig(), MakeReplaySource(t), [&](const MonitorEvent& e) { events.push_back(e); });
  RunToEnd(m, events);
  const auto o = m.overhead();
  CHECK(o.samples == 20000);
  CHECK(o.utilization == doctest::Approx(o.mean_loop_us / 100.0).epsilon(1e-12));
  std::uint64_t total = 0;
  for (auto c : o.histogram) total += c;
  CHECK(total == 20000);
  CHECK(o.histogram.size() == std::size(kLoopHistogramBoundsUs) + 1);
  CHECK(o.deadline_misses == 0);
  CHECK(Count(events, EventKind::kOverheadReport) == 3);
}

TEST_CASE("event JSON round-trip") {
  std::vector<MonitorEvent> events = {
      {EventKind::kStarted, 0, StartedPayload{"live", 100, 42}},
      {EventKind::kStarted, 0, StartedPayload{"replay", 250, std::nullopt}},
      {EventKind::kAlarm, 900, AlarmPayload{9, Decision{true, 26.026157, 26.02615, 12.5}}},
      {EventKind::kPaused, 1000, PausedPayload{10}},
      {EventKind::kResumed, 5000, ResumedPayload{40}},
      {EventKind::kOverheadReport, 6000, OverheadStats{60, 0.123456789, 0.00123456789, 2,
                                                      {1, 2, 3, 4, 5, 6, 7, 8, 9, 10}}},
      {EventKind::kReactionFailed, 6000, MessagePayload{"hook \"x\" failed"}},
      {EventKind::kError, 6000, MessagePayload{"read-failure"}},
      {EventKind::kTargetExited, 6100, ExitedPayload{61, "target-exited"}},
  };
  std::stringstream buf;
  WriteEvents(buf, events);
  CHECK(ReadEvents(buf) == events);
  for (const auto& e : events) CHECK(EventFromJson(EventToJson(e)) == e);
}

TEST_CASE("malformed event logs report the line") {
  std::stringstream bad1(R"({"kind":"started","t_us":0,"payload":{"source":"replay","period_us":100}}
{"kind":"alarm","t_us":5}
)");
  CHECK_ERROR_LINE(ReadEvents(bad1), ErrorCode::kMalformedInput, 2);
  std::stringstream bad2("\n{not json\n");
  CHECK_ERROR_LINE(ReadEvents(bad2), ErrorCode::kMalformedInput, 2);
  std::stringstream bad3(R"({"kind":"exploded","t_us":0,"payload":{}})");
  CHECK_ERROR_LINE(ReadEvents(bad3), ErrorCode::kMalformedInput, 1);
  std::stringstream bad4(R"({"kind":"paused","t_us":-3,"payload":{"sample_index":1}})");
  CHECK_ERROR_LINE(ReadEvents(bad4), ErrorCode::kMalformedInput, 1);
}

TEST_CASE("run monitor delivers ordered events on the caller thread") {
  ScenarioSpec spec = DefaultScenario(Workload::kAesLike);
  spec.attack = DefaultAttack(AttackFamily::kFlushReload, 4, 300);
  auto cfg = ReplayConfig();
  cfg.source = SourceDescriptor::Synthetic(spec);
  const auto caller = std::this_thread::get_id();
  std::vector<MonitorEvent> events;
  const auto summary = RunMonitor(cfg, [&](const MonitorEvent& e) {
    CHECK(std::this_thread::get_id() == caller);
    events.push_back(e);
  });
  CHECK(summary.alarmed);
  CHECK(summary.samples == spec.duration_samples);
  const auto want = oracle::FirstAlarm(oracle::Misses(GenerateTrace(spec).trace));
  CHECK(summary.first_alarm_index == want);
  for (std::size_t k = 1; k < events.size(); ++k) REQUIRE(events[k].t_us >= events[k - 1].t_us);
}

TEST_CASE("run monitor reports source errors as events") {
  auto cfg = ReplayConfig();
  cfg.source = SourceDescriptor::Replay("/nonexistent/t.csv");
  std::vector<MonitorEvent> events;
  const auto summary = RunMonitor(cfg, [&](const MonitorEvent& e) { events.push_back(e); });
  CHECK(summary.error.has_value());
  REQUIRE(events.size() == 1);
  CHECK(events[0].kind == EventKind::kError);
}

TEST_CASE("live-kind monitor waits for an explicit resume") {
  const Trace t = Concat({ConstantTrace(60, 0, 10), ConstantTrace(20, 0, 5000)});
  auto cfg = ReplayConfig();
  MonitorControl control;
  CHECK_ERROR_CODE(control.Resume(), ErrorCode::kNotPaused);
  RunOptions opts;
  opts.control = &control;
  std::vector<MonitorEvent> events;
  const auto summary = RunMonitor(cfg, std::make_unique<FakeLiveSource>(t),
                                  [&](const MonitorEvent& e) {
                                    events.push_back(e);
                                    if (e.kind == EventKind::kPaused) {
                                      CHECK(control.paused());
                                      control.Resume();
                                    }
                                  },
                                  opts);
  CHECK(Count(events, EventKind::kPaused) == 1);
  CHECK(Count(events, EventKind::kResumed) == 1);
  // a live source cannot skip, so every sample is read after resuming
  CHECK(summary.samples == 80);
}

TEST_CASE("stop while paused ends the run") {
  const Trace t = Concat({ConstantTrace(60, 0, 10), ConstantTrace(20, 0, 5000)});
  MonitorControl control;
  RunOptions opts;
  opts.control = &control;
  std::vector<MonitorEvent> events;
  RunMonitor(ReplayConfig(), std::make_unique<FakeLiveSource>(t),
             [&](const MonitorEvent& e) {
               events.push_back(e);
               if (e.kind == EventKind::kPaused) control.Stop();
             },
             opts);
  REQUIRE_FALSE(events.empty());
  CHECK(events.back().kind == EventKind::kTargetExited);
  CHECK(std::get<ExitedPayload>(events.back().payload).reason == "stopped");
}

TEST_CASE("attach to a nonexistent binary") {
  auto cfg = ReplayConfig();
  cfg.source = SourceDescriptor::Live(1);
  CHECK_ERROR_CODE(AttachProtected({"/nonexistent/binary"}, cfg), ErrorCode::kSpawnFailure);
}

TEST_CASE("attach with a replayed attack trace runs the hook once") {
  testutil::TempDir dir;
  const auto log = dir / "hook.log";
  const auto script = WriteScript(dir, "echo \"$CACHESHIELD_SAMPLE_INDEX $CACHESHIELD_TARGET_PID\" >> " +
                                           log.string() + "\n");
  ScenarioSpec spec = DefaultScenario(Workload::kAesLike);
  spec.attack = DefaultAttack(AttackFamily::kPrimeProbe, 1, 100);
  WriteTrace(dir / "attack.csv", GenerateTrace(spec).trace);

  MonitorConfig cfg;
  cfg.source = SourceDescriptor::Replay(dir / "attack.csv");
  cfg.reaction = ParseReaction("hook:" + script.string());
  const auto result = AttachProtected({"sh", "-c", "exit 3"}, cfg);
  CHECK(result.exit_status == 3);
  CHECK(result.summary.alarmed);
  CHECK(Count(result.events, EventKind::kAlarm) == 1);
  CHECK(Count(result.events, EventKind::kReactionFailed) == 0);
  const auto text = testutil::ReadFile(log);
  CHECK(std::count(text.begin(), text.end(), '\n') == 1);
  CHECK(text.rfind(std::to_string(*result.summary.first_alarm_index) + " ", 0) == 0);
}

TEST_CASE("failing hook is reported") {
  testutil::TempDir dir;
  const auto script = WriteScript(dir, "exit 4\n");
  MonitorConfig cfg;
  cfg.source = SourceDescriptor::Replay("unused.csv");
  cfg.reaction = ParseReaction("hook:" + script.string());
  std::vector<MonitorEvent> events;
  RunMonitor(cfg, MakeReplaySource(ConstantTrace(40, 12, 5000)),
             [&](const MonitorEvent& e) { events.push_back(e); });
  CHECK(Count(events, EventKind::kReactionFailed) == 1);
}

TEST_CASE("notify and stop reactions signal the protected process") {
  testutil::TempDir dir;
  WriteTrace(dir / "attack.csv", ConstantTrace(40, 12, 5000));
  MonitorConfig cfg;
  cfg.source = SourceDescriptor::Replay(dir / "attack.csv");

  cfg.reaction = ParseReaction("notify");
  auto r = AttachProtected({"sleep", "5"}, cfg);
  CHECK(r.exit_status == 128 + SIGUSR1);

  cfg.reaction = ParseReaction("stop");
  r = AttachProtected({"sleep", "5"}, cfg);
  CHECK(r.exit_status == 128 + SIGKILL);
  CHECK(Count(r.events, EventKind::kReactionFailed) == 0);
}

TEST_CASE("attach with live counters") {
  MonitorConfig cfg;
  cfg.source.kind = SourceKind::kLive;
  try {
    const auto r = AttachProtected({"sh", "-c", "i=0; while [ $i -lt 20000 ]; do i=$((i+1)); done"},
                                   cfg);
    std::cout << "live attach: samples=" << r.summary.samples
              << " utilization=" << r.summary.overhead.utilization << '\n';
    CHECK(r.exit_status == 0);
    CHECK(r.events.front().kind == EventKind::kStarted);
    CHECK(r.events.back().kind == EventKind::kTargetExited);
    CHECK_FALSE(r.summary.alarmed);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kPlatformUnsupported);
    std::cout << "live attach skipped: " << e.what() << '\n';
  }
}
