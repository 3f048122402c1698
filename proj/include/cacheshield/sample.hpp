// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The CacheShield Authors
#pragma once

#include <cstdint>
#include <vector>

namespace cacheshield {

// One sampling-interval reading for the monitored process.
struct CounterSample {
  std::uint64_t t_us = 0;    // microseconds since monitoring start
  std::uint64_t misses = 0;  // last-level cache misses in the interval
  std::uint64_t cycles = 0;  // CPU cycles the process consumed in the interval

  friend bool operator==(const CounterSample&, const CounterSample&) = default;
};

using Trace = std::vector<CounterSample>;

}  // namespace cacheshield
