// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The CacheShield Authors
//
// Trace CSV format, shared by replay sources, the simulator and the
// evaluation harness:
//
//   t_us,misses,cycles,label
//   100,7,30000,0
//
// The label column is optional (header `t_us,misses,cycles`); 1 marks an
// interval under attack. UTF-8, LF line endings, no quoting.
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include "cacheshield/sample.hpp"
#include "cacheshield/scenario.hpp"

namespace cacheshield {

struct TraceLabel {
  std::optional<std::uint64_t> lambda;  // first attacked sample index
  std::vector<bool> per_sample_attack;
  std::optional<ScenarioSpec> scenario;  // not persisted in CSV

  friend bool operator==(const TraceLabel&, const TraceLabel&) = default;
};

// Builds a label from per-sample flags; lambda is the first flagged index.
TraceLabel LabelFromFlags(std::vector<bool> flags);

struct LabeledTrace {
  Trace trace;
  TraceLabel label;
};

struct LoadedTrace {
  Trace trace;
  std::optional<TraceLabel> label;  // absent for unlabeled files
};

void WriteTrace(std::ostream& out, const Trace& trace, const TraceLabel* label);
void WriteTrace(const std::filesystem::path& path, const Trace& trace,
                const TraceLabel* label = nullptr);

// Throws Error(kMalformedTrace) with the offending line number, or
// Error(kFileNotFound) for the path overload.
LoadedTrace ReadTrace(std::istream& in);
LoadedTrace ReadTrace(const std::filesystem::path& path);

}  // namespace cacheshield
