// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The CacheShield Authors
//
// Scenario descriptions for the trace simulator.
//
// Scenario files are flat `key = value` documents. Recognised keys:
//
//   workload              aes-like | rsa-like | elgamal-like | idle
//   duration_samples      total trace length
//   warmup_samples        start-up transient length
//   warmup_miss_mean      mean misses in the first start-up interval
//   duty_cycle            fraction of intervals in which the victim runs
//   active_cycles_mean    cycles per interval while the victim runs
//   period_us             sampling period used for timestamps
//   seed
//   attack.family         flush-reload | flush-flush | prime-probe
//   attack.lines          lines targeted per period
//   attack.onset_sample   change point (sample index)
//   attack.miss_rate_mean
//   attack.miss_rate_jitter   coefficient of variation of induced misses
//   attack.distribution   lognormal | poisson
//   noise.profile         ycsb-like | streaming-like | randmem-like
//   noise.burst_rate      bursts per 1000 intervals
//   noise.burst_miss_mean
//   noise.burst_len_mean
//
// Unset keys take the workload, family or profile defaults, so
// `attack.family = prime-probe` alone yields a default-intensity attack.
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "cacheshield/config_file.hpp"

namespace cacheshield {

enum class Workload { kAesLike, kRsaLike, kElGamalLike, kIdle };
enum class AttackFamily { kFlushReload, kFlushFlush, kPrimeProbe };
enum class NoiseProfile { kYcsbLike, kStreamingLike, kRandmemLike };
enum class MissDistribution { kLogNormal, kPoisson };

std::string_view ToString(Workload w);
std::string_view ToString(AttackFamily f);
std::string_view ToString(NoiseProfile p);
std::string_view ToString(MissDistribution d);
Workload ParseWorkload(std::string_view s);
AttackFamily ParseAttackFamily(std::string_view s);
NoiseProfile ParseNoiseProfile(std::string_view s);
MissDistribution ParseMissDistribution(std::string_view s);

struct AttackSpec {
  AttackFamily family = AttackFamily::kFlushReload;
  std::uint32_t lines = 1;
  std::uint64_t onset_sample = 0;  // change point lambda
  double miss_rate_mean = 5.0;     // induced victim misses per interval
  double miss_rate_jitter = 0.3;   // coefficient of variation
  MissDistribution distribution = MissDistribution::kLogNormal;

  friend bool operator==(const AttackSpec&, const AttackSpec&) = default;
};

struct NoiseSpec {
  NoiseProfile profile = NoiseProfile::kYcsbLike;
  double burst_rate = 0.0;  // expected burst starts per 1000 intervals
  double burst_miss_mean = 0.0;
  double burst_len_mean = 1.0;

  friend bool operator==(const NoiseSpec&, const NoiseSpec&) = default;
};

struct ScenarioSpec {
  Workload workload = Workload::kAesLike;
  std::uint64_t warmup_samples = 10;
  double warmup_miss_mean = 8.0;
  double duty_cycle = 1.0;
  double active_cycles_mean = 7000.0;
  std::optional<AttackSpec> attack;
  std::optional<NoiseSpec> noise;
  std::uint64_t duration_samples = 2000;
  std::uint32_t period_us = 100;
  std::uint64_t seed = 1;

  // Throws Error(kInvalidSpec).
  void Validate() const;

  friend bool operator==(const ScenarioSpec&, const ScenarioSpec&) = default;
};

// Workload-typical defaults at a 100 us period: aes-like has short gaps
// between encryptions, the public-key workloads run without interruption.
ScenarioSpec DefaultScenario(Workload workload);

// Simulator calibration for 100 us intervals: flush-reload 5 misses for one
// line and 15 for four, flush-flush 4, prime-probe 20.
AttackSpec DefaultAttack(AttackFamily family, std::uint32_t lines = 1,
                         std::uint64_t onset_sample = 0);

// Profiles share a budget of 40 noisy intervals per 1000 and differ only in
// burst shape: randmem-like long and dense, streaming-like short and sparse.
NoiseSpec DefaultNoise(NoiseProfile profile);

ScenarioSpec ScenarioFromSection(const ConfigSection& section);
ScenarioSpec ParseScenario(std::string_view text);
ScenarioSpec LoadScenario(const std::filesystem::path& path);
std::string FormatScenario(const ScenarioSpec& spec);

// Returns true when `key` is one of the scenario keys listed above.
bool IsScenarioKey(std::string_view key);

}  // namespace cacheshield
