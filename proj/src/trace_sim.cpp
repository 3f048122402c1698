// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The CacheShield Authors
#include "cacheshield/trace_sim.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "cacheshield/error.hpp"

namespace cacheshield {
namespace {

enum Stream : std::uint64_t { kDuty = 1, kCycles, kWarmup, kAttack, kNoise };

constexpr double kWarmupJitter = 0.5;
constexpr double kNoiseJitter = 0.5;
constexpr double kCyclesJitter = 0.1;
constexpr double kCyclesPerMiss = 60.0;
constexpr std::uint64_t kInactiveCyclesMax = 200;

double Uniform01(std::mt19937_64& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

}  // namespace

std::uint64_t MixSeed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t DrawMisses(double mean, double jitter, MissDistribution distribution,
                         std::mt19937_64& rng) {
  if (!(mean > 0.0)) return 0;
  if (distribution == MissDistribution::kPoisson) {
    return std::poisson_distribution<std::uint64_t>(mean)(rng);
  }
  // z is drawn even when jitter is 0 so streams stay aligned across specs
  const double z = std::normal_distribution<double>(0.0, 1.0)(rng);
  const double s2 = std::log1p(jitter * jitter);
  const double x = mean * std::exp(std::sqrt(s2) * z - 0.5 * s2);
  return static_cast<std::uint64_t>(std::llround(x));
}

TraceGenerator::TraceGenerator(const ScenarioSpec& spec)
    : spec_(spec),
      duty_rng_(MixSeed(spec.seed, kDuty)),
      cycles_rng_(MixSeed(spec.seed, kCycles)),
      warmup_rng_(MixSeed(spec.seed, kWarmup)),
      attack_rng_(MixSeed(spec.seed, kAttack)),
      noise_rng_(MixSeed(spec.seed, kNoise)) {
  spec_.Validate();
  if (spec_.warmup_samples > 0) {
    warmup_decay_ = std::pow(0.02, 1.0 / static_cast<double>(spec_.warmup_samples));
  }
}

std::optional<CounterSample> TraceGenerator::Next() {
  if (index_ >= spec_.duration_samples) return std::nullopt;
  const std::uint64_t i = index_++;

  bool active = spec_.workload != Workload::kIdle;
  if (spec_.duty_cycle < 1.0) {
    active = active && Uniform01(duty_rng_) < spec_.duty_cycle;
  }

  std::uint64_t misses = 0;
  if (i < spec_.warmup_samples) {
    const double mean = spec_.warmup_miss_mean * std::pow(warmup_decay_, static_cast<double>(i));
    const auto m = DrawMisses(mean, kWarmupJitter, MissDistribution::kLogNormal, warmup_rng_);
    if (active) misses += m;
  }

  last_attacked_ = spec_.attack && i >= spec_.attack->onset_sample;
  if (last_attacked_) {
    const auto& a = *spec_.attack;
    const auto m = DrawMisses(a.miss_rate_mean, a.miss_rate_jitter, a.distribution, attack_rng_);
    if (active) misses += m;
  }

  if (spec_.noise && spec_.noise->burst_rate > 0.0) {
    const auto& n = *spec_.noise;
    if (burst_left_ == 0 && Uniform01(noise_rng_) < n.burst_rate / 1000.0) {
      // geometric length with mean burst_len_mean
      std::geometric_distribution<std::uint64_t> extra(1.0 / n.burst_len_mean);
      burst_left_ = 1 + extra(noise_rng_);
    }
    if (burst_left_ > 0) {
      --burst_left_;
      const auto m = DrawMisses(n.burst_miss_mean, kNoiseJitter,
                                MissDistribution::kLogNormal, noise_rng_);
      if (active) misses += m;
    }
  }

  CounterSample s;
  s.t_us = i * spec_.period_us;
  s.misses = misses;
  if (active) {
    const double z = std::normal_distribution<double>(0.0, 1.0)(cycles_rng_);
    const double c = spec_.active_cycles_mean * (1.0 + kCyclesJitter * z) +
                     kCyclesPerMiss * static_cast<double>(misses);
    s.cycles = static_cast<std::uint64_t>(std::llround(std::max(0.0, c)));
  } else {
    s.cycles = std::uniform_int_distribution<std::uint64_t>(0, kInactiveCyclesMax)(cycles_rng_);
  }
  return s;
}

LabeledTrace GenerateTrace(const ScenarioSpec& spec) {
  TraceGenerator gen(spec);
  LabeledTrace out;
  out.trace.reserve(spec.duration_samples);
  std::vector<bool> flags;
  flags.reserve(spec.duration_samples);
  while (auto s = gen.Next()) {
    out.trace.push_back(*s);
    flags.push_back(gen.last_attacked());
  }
  out.label = LabelFromFlags(std::move(flags));
  out.label.scenario = spec;
  return out;
}

std::vector<SweepTrace> GenerateProfilingSweep(const SweepSpec& spec) {
  if (spec.n_sets == 0 || spec.samples_per_set == 0) {
    throw Error(ErrorCode::kInvalidSpec, "sweep needs n_sets > 0 and samples_per_set > 0");
  }
  const std::set<std::uint32_t> victims(spec.victim_sets.begin(), spec.victim_sets.end());
  if (!victims.empty() && *victims.rbegin() >= spec.n_sets) {
    throw Error(ErrorCode::kInvalidSpec, "victim set index outside [0, n_sets)");
  }
  ScenarioSpec base = DefaultScenario(spec.workload);
  base.warmup_samples = 0;
  base.duration_samples = spec.samples_per_set;

  std::vector<SweepTrace> out;
  out.reserve(spec.n_sets);
  for (std::uint32_t set = 0; set < spec.n_sets; ++set) {
    ScenarioSpec s = base;
    s.seed = MixSeed(spec.seed, set);
    if (victims.count(set)) {
      s.attack = spec.attack;
      s.attack->onset_sample = 0;
    }
    auto lt = GenerateTrace(s);
    out.push_back({set, std::move(lt.trace), std::move(lt.label)});
  }
  return out;
}

const std::vector<std::string>& SimulatedCounterNames() {
  static const std::vector<std::string> names = {
      "PAPI_L3_TCM", "PAPI_TOT_CYC", "PAPI_REF_CYC", "PAPI_CA_SNP",
      "PAPI_CA_INV", "PAPI_L3_TCR",  "PAPI_L2_TCM",  "PAPI_L2_ICM",
  };
  return names;
}

LabeledDataset GenerateCounterDataset(std::size_t rows_per_class, std::uint64_t seed) {
  LabeledDataset ds;
  ds.attributes = SimulatedCounterNames();
  std::mt19937_64 rng(MixSeed(seed, 0xda7a));
  std::normal_distribution<double> normal(0.0, 1.0);
  auto noisy = [&](double mean, double sd) {
    return std::max(0.0, std::round(mean + sd * normal(rng)));
  };

  const std::vector<AttackSpec> attacks = {
      DefaultAttack(AttackFamily::kFlushReload, 1),
      DefaultAttack(AttackFamily::kFlushReload, 4),
      DefaultAttack(AttackFamily::kFlushFlush),
      DefaultAttack(AttackFamily::kPrimeProbe),
  };
  const Workload workloads[] = {Workload::kAesLike, Workload::kRsaLike};

  for (int cls = 0; cls < 2; ++cls) {
    std::size_t produced = 0;
    std::uint64_t chunk = 0;
    while (produced < rows_per_class) {
      ScenarioSpec spec = DefaultScenario(workloads[chunk % 2]);
      spec.duty_cycle = 1.0;
      spec.seed = MixSeed(seed, (static_cast<std::uint64_t>(cls) << 32) | chunk);
      spec.duration_samples = spec.warmup_samples + 64;
      if (cls == 1) spec.attack = attacks[(chunk / 2) % attacks.size()];
      ++chunk;

      TraceGenerator gen(spec);
      while (auto s = gen.Next()) {
        if (gen.produced() <= spec.warmup_samples) continue;
        if (produced == rows_per_class) break;
        const double miss = static_cast<double>(s->misses);
        const double cyc = static_cast<double>(s->cycles);
        const double snoop = noisy(22.0 + 0.3 * miss, 6.0);
        ds.rows.push_back({
            miss,
            cyc,
            noisy(cyc / 10.0, 0.1 * cyc / 10.0),
            snoop,
            std::max(0.0, snoop + std::round(normal(rng))),
            noisy(25.0 + 0.2 * miss, 8.0),
            noisy(28.0 + 0.1 * miss, 8.0),
            noisy(15.0, 6.0),
        });
        ds.labels.push_back(cls);
        ++produced;
      }
    }
  }
  return ds;
}

}  // namespace cacheshield
