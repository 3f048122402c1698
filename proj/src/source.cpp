// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The CacheShield Authors
#include "cacheshield/source.hpp"

#include <algorithm>
#include <thread>
#include <utility>

#include "cacheshield/error.hpp"
#include "cacheshield/trace.hpp"
#include "cacheshield/trace_sim.hpp"

namespace cacheshield {
namespace {

class ReplaySource final : public SampleSource {
 public:
  ReplaySource(Trace trace, std::uint32_t period_us)
      : trace_(std::move(trace)), period_us_(period_us) {}

  std::optional<CounterSample> NextSample() override {
    if (pos_ >= trace_.size()) return std::nullopt;
    ++emitted_;
    return trace_[pos_++];
  }

  SourceStatus Status() const override {
    SourceStatus s;
    s.samples_emitted = emitted_;
    s.target_alive = pos_ < trace_.size();
    return s;
  }

  SourceKind kind() const override { return SourceKind::kReplay; }
  std::uint32_t period_us() const override { return period_us_; }

  std::uint64_t SkipIdle(std::uint64_t idle_threshold_cycles,
                         std::uint64_t* last_t_us) override {
    std::uint64_t skipped = 0;
    while (pos_ < trace_.size() && trace_[pos_].cycles < idle_threshold_cycles) {
      if (last_t_us) *last_t_us = trace_[pos_].t_us;
      ++pos_;
      ++skipped;
    }
    return skipped;
  }

 private:
  Trace trace_;
  std::uint32_t period_us_;
  std::size_t pos_ = 0;
  std::uint64_t emitted_ = 0;
};

class SyntheticSource final : public SampleSource {
 public:
  SyntheticSource(const ScenarioSpec& spec, std::uint32_t period_us, bool paced)
      : generator_(WithPeriod(spec, period_us)), period_us_(period_us) {
    if (paced) pacer_.emplace(period_us);
  }

  std::optional<CounterSample> NextSample() override {
    auto s = Pull();
    if (!s) return std::nullopt;
    if (pacer_) s->t_us = pacer_->WaitNext();
    ++emitted_;
    return s;
  }

  SourceStatus Status() const override {
    SourceStatus s;
    s.samples_emitted = emitted_;
    s.target_alive = generator_.produced() < generator_.spec().duration_samples ||
                     lookahead_.has_value();
    if (pacer_) {
      s.deadline_misses = pacer_->deadline_misses();
      s.max_lateness_us = pacer_->max_lateness_us();
      s.total_lateness_us = pacer_->total_lateness_us();
    }
    return s;
  }

  SourceKind kind() const override { return SourceKind::kSynthetic; }
  double last_wait_us() const override { return pacer_ ? pacer_->last_wait_us() : 0.0; }
  std::uint32_t period_us() const override { return period_us_; }

  void OnResume() override {
    if (pacer_) pacer_->Restart();
  }

  std::uint64_t SkipIdle(std::uint64_t idle_threshold_cycles,
                         std::uint64_t* last_t_us) override {
    std::uint64_t skipped = 0;
    while (auto s = Pull()) {
      if (s->cycles >= idle_threshold_cycles) {
        lookahead_ = s;
        break;
      }
      if (last_t_us) *last_t_us = s->t_us;
      ++skipped;
    }
    return skipped;
  }

 private:
  static ScenarioSpec WithPeriod(ScenarioSpec spec, std::uint32_t period_us) {
    spec.period_us = period_us;
    return spec;
  }

  std::optional<CounterSample> Pull() {
    if (lookahead_) return std::exchange(lookahead_, std::nullopt);
    return generator_.Next();
  }

  TraceGenerator generator_;
  std::uint32_t period_us_;
  std::optional<Pacer> pacer_;
  std::optional<CounterSample> lookahead_;
  std::uint64_t emitted_ = 0;
};

}  // namespace

std::string_view ToString(SourceKind kind) {
  switch (kind) {
    case SourceKind::kLive: return "live";
    case SourceKind::kReplay: return "replay";
    case SourceKind::kSynthetic: return "synthetic";
  }
  return "?";
}

void SourceDescriptor::Validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::kInvalidConfig, msg); };
  if (period_us < kMinPeriodUs) fail("period_us must be at least 10");
  const bool live = kind == SourceKind::kLive;
  const bool replay = kind == SourceKind::kReplay;
  const bool synthetic = kind == SourceKind::kSynthetic;
  if (live != target_pid.has_value()) fail("target_pid is required for, and only for, live sources");
  if (replay != path.has_value()) fail("path is required for, and only for, replay sources");
  if (synthetic != scenario.has_value()) {
    fail("scenario is required for, and only for, synthetic sources");
  }
  if (paced && !synthetic) fail("only synthetic sources take the paced flag");
}

SourceDescriptor SourceDescriptor::Live(int pid, std::uint32_t period_us) {
  SourceDescriptor d;
  d.kind = SourceKind::kLive;
  d.target_pid = pid;
  d.period_us = period_us;
  return d;
}

SourceDescriptor SourceDescriptor::Replay(std::filesystem::path path, std::uint32_t period_us) {
  SourceDescriptor d;
  d.kind = SourceKind::kReplay;
  d.path = std::move(path);
  d.period_us = period_us;
  return d;
}

SourceDescriptor SourceDescriptor::Synthetic(ScenarioSpec scenario, std::uint32_t period_us,
                                             bool paced) {
  SourceDescriptor d;
  d.kind = SourceKind::kSynthetic;
  d.scenario = std::move(scenario);
  d.period_us = period_us;
  d.paced = paced;
  return d;
}

Pacer::Pacer(std::uint32_t period_us)
    : period_(period_us), start_(Clock::now()), next_(start_ + period_) {}

void Pacer::Restart() { next_ = Clock::now() + period_; }

std::uint64_t Pacer::WaitNext() {
  const auto now = Clock::now();
  if (now > next_) {
    // the previous read and its processing overran the period
    ++deadline_misses_;
    const double late = std::chrono::duration<double, std::micro>(now - next_).count();
    max_lateness_us_ = std::max(max_lateness_us_, late);
    total_lateness_us_ += late;
    next_ = now;
  } else {
    std::this_thread::sleep_until(next_);
  }
  const auto t = Clock::now();
  last_wait_us_ = std::chrono::duration<double, std::micro>(t - now).count();
  next_ += period_;
  const auto us = static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::microseconds>(t - start_).count());
  last_t_us_ = std::max(last_t_us_ + 1, us);
  return last_t_us_;
}

std::unique_ptr<SampleSource> MakeReplaySource(Trace trace, std::uint32_t period_us) {
  return std::make_unique<ReplaySource>(std::move(trace), period_us);
}

std::unique_ptr<SampleSource> OpenSource(const SourceDescriptor& descriptor) {
  descriptor.Validate();
  switch (descriptor.kind) {
    case SourceKind::kReplay:
      return MakeReplaySource(ReadTrace(*descriptor.path).trace, descriptor.period_us);
    case SourceKind::kSynthetic:
      return std::make_unique<SyntheticSource>(*descriptor.scenario, descriptor.period_us,
                                               descriptor.paced);
    case SourceKind::kLive:
      return OpenLiveSource(*descriptor.target_pid, descriptor.period_us);
  }
  throw Error(ErrorCode::kInvalidConfig, "unknown source kind");
}

}  // namespace cacheshield
