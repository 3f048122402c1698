// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The CacheShield Authors
#include <cerrno>
#include <cstring>
#include <fstream>
#include <string>

#include "cacheshield/error.hpp"
#include "cacheshield/source.hpp"

#if defined(__linux__)
#include <linux/perf_event.h>
#include <signal.h>
#include <sys/ioctl.h>
#include <sys/syscall.h>
#include <unistd.h>
#endif

namespace cacheshield {

#if defined(__linux__)
namespace {

// True while /proc/<pid> exists and the task is not a zombie.
bool ProcessAlive(int pid) {
  if (::kill(pid, 0) != 0 && errno == ESRCH) return false;
  std::ifstream stat("/proc/" + std::to_string(pid) + "/stat");
  if (!stat) return false;
  std::string line;
  std::getline(stat, line);
  const auto paren = line.rfind(')');
  if (paren == std::string::npos || paren + 2 >= line.size()) return true;
  const char state = line[paren + 2];
  return state != 'Z' && state != 'X';
}

std::string ParanoidLevel() {
  std::ifstream in("/proc/sys/kernel/perf_event_paranoid");
  std::string level;
  if (!(in >> level)) return "unknown";
  return level;
}

class PerfCounter {
 public:
  PerfCounter(int pid, std::uint64_t config, const char* name) {
    perf_event_attr attr{};
    attr.size = sizeof(attr);
    attr.type = PERF_TYPE_HARDWARE;
    attr.config = config;
    attr.disabled = 1;
    attr.exclude_kernel = 1;
    attr.exclude_hv = 1;
    fd_ = static_cast<int>(::syscall(SYS_perf_event_open, &attr, pid, -1, -1, 0));
    if (fd_ < 0) {
      const int err = errno;
      if (err == ESRCH) {
        throw Error(ErrorCode::kNoSuchProcess, "pid " + std::to_string(pid));
      }
      std::string why = std::string(name) + ": " + std::strerror(err);
      if (err == EACCES || err == EPERM) {
        why += " (kernel.perf_event_paranoid=" + ParanoidLevel() + ")";
      }
      throw Error(ErrorCode::kCountersUnavailable, why);
    }
  }
  PerfCounter(const PerfCounter&) = delete;
  PerfCounter& operator=(const PerfCounter&) = delete;
  ~PerfCounter() {
    if (fd_ >= 0) ::close(fd_);
  }

  void Enable() { ::ioctl(fd_, PERF_EVENT_IOC_ENABLE, 0); }

  std::uint64_t Read() {
    std::uint64_t value = 0;
    if (::read(fd_, &value, sizeof(value)) != static_cast<ssize_t>(sizeof(value))) {
      throw Error(ErrorCode::kReadFailure, std::string("counter read: ") + std::strerror(errno));
    }
    return value;
  }

 private:
  int fd_ = -1;
};

class LiveSource final : public SampleSource {
 public:
  LiveSource(int pid, std::uint32_t period_us)
      : pid_(pid),
        period_us_(period_us),
        misses_(pid, PERF_COUNT_HW_CACHE_MISSES, "LLC misses"),
        cycles_(pid, PERF_COUNT_HW_CPU_CYCLES, "cycles"),
        pacer_(period_us) {
    misses_.Enable();
    cycles_.Enable();
    Rebaseline();
  }

  std::optional<CounterSample> NextSample() override {
    const auto t = pacer_.WaitNext();
    if (!ProcessAlive(pid_)) {
      alive_ = false;
      throw Error(ErrorCode::kTargetExited, "pid " + std::to_string(pid_));
    }
    const auto m = misses_.Read();
    const auto c = cycles_.Read();
    CounterSample s{t, m - last_misses_, c - last_cycles_};
    last_misses_ = m;
    last_cycles_ = c;
    ++emitted_;
    return s;
  }

  SourceStatus Status() const override {
    SourceStatus s;
    s.samples_emitted = emitted_;
    s.deadline_misses = pacer_.deadline_misses();
    s.max_lateness_us = pacer_.max_lateness_us();
    s.total_lateness_us = pacer_.total_lateness_us();
    s.target_alive = alive_;
    return s;
  }

  SourceKind kind() const override { return SourceKind::kLive; }
  std::uint32_t period_us() const override { return period_us_; }
  std::optional<int> target_pid() const override { return pid_; }
  double last_wait_us() const override { return pacer_.last_wait_us(); }

  void OnResume() override {
    // the gap is not attributed to the first sample after resuming
    Rebaseline();
    pacer_.Restart();
  }

 private:
  void Rebaseline() {
    last_misses_ = misses_.Read();
    last_cycles_ = cycles_.Read();
  }

  int pid_;
  std::uint32_t period_us_;
  PerfCounter misses_;
  PerfCounter cycles_;
  Pacer pacer_;
  std::uint64_t last_misses_ = 0;
  std::uint64_t last_cycles_ = 0;
  std::uint64_t emitted_ = 0;
  bool alive_ = true;
};

}  // namespace

std::unique_ptr<SampleSource> OpenLiveSource(int pid, std::uint32_t period_us) {
  if (pid <= 0 || !ProcessAlive(pid)) {
    throw Error(ErrorCode::kNoSuchProcess, "pid " + std::to_string(pid));
  }
  return std::make_unique<LiveSource>(pid, period_us);
}

#else

std::unique_ptr<SampleSource> OpenLiveSource(int pid, std::uint32_t) {
  throw Error(ErrorCode::kCountersUnavailable,
              "no per-process counter backend on this platform (pid " +
                  std::to_string(pid) + ")");
}

#endif

}  // namespace cacheshield
