// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The CacheShield Authors
//
// Generative models for labeled counter traces.
//
// Per interval the victim is active with probability duty_cycle. Active
// intervals carry workload-typical cycles; inactive ones a few hundred at
// most. Misses are zero in the steady state and are built from three
// additive sources, all only while the victim runs:
//   - a start-up transient whose mean decays geometrically to 2% of
//     warmup_miss_mean over warmup_samples,
//   - attack-induced misses from onset_sample on,
//   - noise bursts from a renewal process with geometric burst lengths.
// Each source draws from its own seeded stream, so toggling one source never
// perturbs the others.
#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "cacheshield/dataset.hpp"
#include "cacheshield/sample.hpp"
#include "cacheshield/scenario.hpp"
#include "cacheshield/trace.hpp"

namespace cacheshield {

// splitmix64 finaliser over (seed, stream); used to derive independent seeds.
std::uint64_t MixSeed(std::uint64_t seed, std::uint64_t stream);

// Rounded draw with the given mean: log-normal with coefficient of variation
// `jitter`, or Poisson (jitter ignored).
std::uint64_t DrawMisses(double mean, double jitter, MissDistribution distribution,
                         std::mt19937_64& rng);

class TraceGenerator {
 public:
  explicit TraceGenerator(const ScenarioSpec& spec);

  // nullopt once duration_samples samples have been produced.
  std::optional<CounterSample> Next();
  // Attack flag of the sample most recently returned by Next().
  bool last_attacked() const { return last_attacked_; }
  std::uint64_t produced() const { return index_; }
  const ScenarioSpec& spec() const { return spec_; }

 private:
  ScenarioSpec spec_;
  std::uint64_t index_ = 0;
  bool last_attacked_ = false;
  double warmup_decay_ = 1.0;
  std::uint64_t burst_left_ = 0;
  std::mt19937_64 duty_rng_;
  std::mt19937_64 cycles_rng_;
  std::mt19937_64 warmup_rng_;
  std::mt19937_64 attack_rng_;
  std::mt19937_64 noise_rng_;
};

// Throws Error(kInvalidSpec).
LabeledTrace GenerateTrace(const ScenarioSpec& spec);

struct SweepSpec {
  std::uint32_t n_sets = 8192;
  std::vector<std::uint32_t> victim_sets;
  std::uint64_t samples_per_set = 200;
  std::uint64_t seed = 1;
  AttackSpec attack = DefaultAttack(AttackFamily::kPrimeProbe);
  Workload workload = Workload::kAesLike;
};

struct SweepTrace {
  std::uint32_t set_index = 0;
  Trace trace;
  TraceLabel label;
};

// One steady-state trace per cache set; only victim sets see induced misses.
std::vector<SweepTrace> GenerateProfilingSweep(const SweepSpec& spec);

// Names of the counters emitted by GenerateCounterDataset; the first is the
// LLC miss counter.
const std::vector<std::string>& SimulatedCounterNames();

// Balanced multi-counter dataset of steady-state intervals drawn from
// aes-like and rsa-like victims with and without attacks. Non-LLC counters
// shift only weakly under attack relative to their own spread.
LabeledDataset GenerateCounterDataset(std::size_t rows_per_class, std::uint64_t seed);

}  // namespace cacheshield
