// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The CacheShield Authors
#include "cacheshield/scenario.hpp"

#include <array>
#include <cmath>
#include <sstream>

#include "cacheshield/error.hpp"

namespace cacheshield {
namespace {

constexpr std::array<std::string_view, 18> kScenarioKeys = {
    "workload",           "duration_samples",       "warmup_samples",
    "warmup_miss_mean",   "duty_cycle",             "active_cycles_mean",
    "period_us",          "seed",                   "attack.family",
    "attack.lines",       "attack.onset_sample",    "attack.miss_rate_mean",
    "attack.miss_rate_jitter", "attack.distribution", "noise.profile",
    "noise.burst_rate",   "noise.burst_miss_mean",  "noise.burst_len_mean",
};

[[noreturn]] void BadName(std::string_view what, std::string_view value) {
  throw Error(ErrorCode::kInvalidSpec,
              "unknown " + std::string(what) + " '" + std::string(value) + "'");
}

// Re-throws enum parse failures with the entry's line attached.
template <typename Parse>
auto ParseAt(const ConfigEntry& e, Parse parse) {
  try {
    return parse(e.value);
  } catch (const Error& err) {
    throw Error(err.code(), "'" + e.key + "': unrecognised value '" + e.value + "'",
                e.line);
  }
}

std::uint32_t ToU32(const ConfigEntry& e) {
  const auto v = ToUint(e);
  if (v > 0xffffffffULL) {
    throw Error(ErrorCode::kMalformedInput, "'" + e.key + "' is out of range", e.line);
  }
  return static_cast<std::uint32_t>(v);
}

}  // namespace

std::string_view ToString(Workload w) {
  switch (w) {
    case Workload::kAesLike: return "aes-like";
    case Workload::kRsaLike: return "rsa-like";
    case Workload::kElGamalLike: return "elgamal-like";
    case Workload::kIdle: return "idle";
  }
  return "?";
}

std::string_view ToString(AttackFamily f) {
  switch (f) {
    case AttackFamily::kFlushReload: return "flush-reload";
    case AttackFamily::kFlushFlush: return "flush-flush";
    case AttackFamily::kPrimeProbe: return "prime-probe";
  }
  return "?";
}

std::string_view ToString(NoiseProfile p) {
  switch (p) {
    case NoiseProfile::kYcsbLike: return "ycsb-like";
    case NoiseProfile::kStreamingLike: return "streaming-like";
    case NoiseProfile::kRandmemLike: return "randmem-like";
  }
  return "?";
}

std::string_view ToString(MissDistribution d) {
  return d == MissDistribution::kLogNormal ? "lognormal" : "poisson";
}

Workload ParseWorkload(std::string_view s) {
  for (auto w : {Workload::kAesLike, Workload::kRsaLike, Workload::kElGamalLike,
                 Workload::kIdle}) {
    if (ToString(w) == s) return w;
  }
  BadName("workload", s);
}

AttackFamily ParseAttackFamily(std::string_view s) {
  for (auto f : {AttackFamily::kFlushReload, AttackFamily::kFlushFlush,
                 AttackFamily::kPrimeProbe}) {
    if (ToString(f) == s) return f;
  }
  BadName("attack family", s);
}

NoiseProfile ParseNoiseProfile(std::string_view s) {
  for (auto p : {NoiseProfile::kYcsbLike, NoiseProfile::kStreamingLike,
                 NoiseProfile::kRandmemLike}) {
    if (ToString(p) == s) return p;
  }
  BadName("noise profile", s);
}

MissDistribution ParseMissDistribution(std::string_view s) {
  if (s == "lognormal") return MissDistribution::kLogNormal;
  if (s == "poisson") return MissDistribution::kPoisson;
  BadName("miss distribution", s);
}

void ScenarioSpec::Validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::kInvalidSpec, msg); };
  if (!(duty_cycle > 0.0 && duty_cycle <= 1.0)) fail("duty_cycle must lie in (0, 1]");
  if (warmup_samples >= duration_samples) {
    fail("warmup_samples must be smaller than duration_samples");
  }
  if (!(warmup_miss_mean >= 0.0) || !std::isfinite(warmup_miss_mean)) {
    fail("warmup_miss_mean must be non-negative");
  }
  if (!(active_cycles_mean >= 0.0)) fail("active_cycles_mean must be non-negative");
  if (period_us == 0) fail("period_us must be positive");
  if (attack) {
    if (!(attack->miss_rate_mean > 0.0) || !std::isfinite(attack->miss_rate_mean)) {
      fail("attack.miss_rate_mean must be positive");
    }
    if (!(attack->miss_rate_jitter >= 0.0)) fail("attack.miss_rate_jitter must be >= 0");
    if (attack->lines == 0) fail("attack.lines must be at least 1");
  }
  if (noise) {
    if (!(noise->burst_rate >= 0.0) || noise->burst_rate > 1000.0) {
      fail("noise.burst_rate must lie in [0, 1000]");
    }
    if (!(noise->burst_miss_mean >= 0.0)) fail("noise.burst_miss_mean must be >= 0");
    if (!(noise->burst_len_mean >= 1.0)) fail("noise.burst_len_mean must be >= 1");
  }
}

ScenarioSpec DefaultScenario(Workload workload) {
  ScenarioSpec spec;
  spec.workload = workload;
  switch (workload) {
    case Workload::kAesLike:
      spec.duty_cycle = 0.95;
      spec.active_cycles_mean = 7000.0;
      break;
    case Workload::kRsaLike:
    case Workload::kElGamalLike:
      spec.duty_cycle = 1.0;
      spec.active_cycles_mean = 30000.0;
      break;
    case Workload::kIdle:
      spec.duty_cycle = 1.0;
      spec.active_cycles_mean = 0.0;
      spec.warmup_samples = 0;
      spec.warmup_miss_mean = 0.0;
      break;
  }
  return spec;
}

AttackSpec DefaultAttack(AttackFamily family, std::uint32_t lines,
                         std::uint64_t onset_sample) {
  AttackSpec attack;
  attack.family = family;
  attack.lines = lines;
  attack.onset_sample = onset_sample;
  switch (family) {
    case AttackFamily::kFlushReload:
      // 5 misses for one line, 15 for four, linear in between
      attack.miss_rate_mean = 5.0 + (static_cast<double>(lines) - 1.0) * 10.0 / 3.0;
      break;
    case AttackFamily::kFlushFlush:
      attack.miss_rate_mean = 4.0 * lines;
      break;
    case AttackFamily::kPrimeProbe:
      attack.miss_rate_mean = 20.0;
      break;
  }
  return attack;
}

NoiseSpec DefaultNoise(NoiseProfile profile) {
  switch (profile) {
    case NoiseProfile::kRandmemLike: return {profile, 0.8, 20.0, 50.0};
    case NoiseProfile::kYcsbLike: return {profile, 5.0, 8.0, 8.0};
    case NoiseProfile::kStreamingLike: return {profile, 10.0, 6.0, 4.0};
  }
  return {};
}

bool IsScenarioKey(std::string_view key) {
  for (auto k : kScenarioKeys) {
    if (k == key) return true;
  }
  return false;
}

ScenarioSpec ScenarioFromSection(const ConfigSection& section) {
  const auto* workload = section.Find("workload");
  ScenarioSpec spec = DefaultScenario(
      workload ? ParseAt(*workload, ParseWorkload) : Workload::kAesLike);

  if (const auto* e = section.Find("duration_samples")) spec.duration_samples = ToUint(*e);
  if (const auto* e = section.Find("warmup_samples")) spec.warmup_samples = ToUint(*e);
  if (const auto* e = section.Find("warmup_miss_mean")) spec.warmup_miss_mean = ToDouble(*e);
  if (const auto* e = section.Find("duty_cycle")) spec.duty_cycle = ToDouble(*e);
  if (const auto* e = section.Find("active_cycles_mean")) {
    spec.active_cycles_mean = ToDouble(*e);
  }
  if (const auto* e = section.Find("period_us")) spec.period_us = ToU32(*e);
  if (const auto* e = section.Find("seed")) spec.seed = ToUint(*e);

  bool has_attack = false;
  bool has_noise = false;
  for (const auto& e : section.entries) {
    has_attack = has_attack || e.key.starts_with("attack.");
    has_noise = has_noise || e.key.starts_with("noise.");
  }
  if (has_attack) {
    const auto* fam = section.Find("attack.family");
    if (!fam) {
      throw Error(ErrorCode::kInvalidSpec, "attack.* keys require attack.family",
                  section.entries.front().line);
    }
    const auto* lines = section.Find("attack.lines");
    AttackSpec a = DefaultAttack(ParseAt(*fam, ParseAttackFamily),
                                 lines ? ToU32(*lines) : 1U);
    if (const auto* e = section.Find("attack.onset_sample")) a.onset_sample = ToUint(*e);
    if (const auto* e = section.Find("attack.miss_rate_mean")) a.miss_rate_mean = ToDouble(*e);
    if (const auto* e = section.Find("attack.miss_rate_jitter")) {
      a.miss_rate_jitter = ToDouble(*e);
    }
    if (const auto* e = section.Find("attack.distribution")) {
      a.distribution = ParseAt(*e, ParseMissDistribution);
    }
    spec.attack = a;
  }
  if (has_noise) {
    const auto* prof = section.Find("noise.profile");
    if (!prof) {
      throw Error(ErrorCode::kInvalidSpec, "noise.* keys require noise.profile",
                  section.entries.front().line);
    }
    NoiseSpec n = DefaultNoise(ParseAt(*prof, ParseNoiseProfile));
    if (const auto* e = section.Find("noise.burst_rate")) n.burst_rate = ToDouble(*e);
    if (const auto* e = section.Find("noise.burst_miss_mean")) n.burst_miss_mean = ToDouble(*e);
    if (const auto* e = section.Find("noise.burst_len_mean")) n.burst_len_mean = ToDouble(*e);
    spec.noise = n;
  }
  spec.Validate();
  return spec;
}

ScenarioSpec ParseScenario(std::string_view text) {
  const auto doc = ParseConfig(text);
  if (doc.sections.size() > 1) {
    throw Error(ErrorCode::kMalformedInput, "scenario files have no sections",
                doc.sections[1].line);
  }
  for (const auto& e : doc.sections[0].entries) {
    if (!IsScenarioKey(e.key)) {
      throw Error(ErrorCode::kMalformedInput, "unknown key '" + e.key + "'", e.line);
    }
  }
  return ScenarioFromSection(doc.sections[0]);
}

ScenarioSpec LoadScenario(const std::filesystem::path& path) {
  return ParseScenario(ReadTextFile(path));
}

std::string FormatScenario(const ScenarioSpec& spec) {
  std::ostringstream out;
  out << "workload = " << ToString(spec.workload) << '\n'
      << "duration_samples = " << spec.duration_samples << '\n'
      << "warmup_samples = " << spec.warmup_samples << '\n'
      << "warmup_miss_mean = " << FormatDouble(spec.warmup_miss_mean) << '\n'
      << "duty_cycle = " << FormatDouble(spec.duty_cycle) << '\n'
      << "active_cycles_mean = " << FormatDouble(spec.active_cycles_mean) << '\n'
      << "period_us = " << spec.period_us << '\n'
      << "seed = " << spec.seed << '\n';
  if (spec.attack) {
    const auto& a = *spec.attack;
    out << "attack.family = " << ToString(a.family) << '\n'
        << "attack.lines = " << a.lines << '\n'
        << "attack.onset_sample = " << a.onset_sample << '\n'
        << "attack.miss_rate_mean = " << FormatDouble(a.miss_rate_mean) << '\n'
        << "attack.miss_rate_jitter = " << FormatDouble(a.miss_rate_jitter) << '\n'
        << "attack.distribution = " << ToString(a.distribution) << '\n';
  }
  if (spec.noise) {
    const auto& n = *spec.noise;
    out << "noise.profile = " << ToString(n.profile) << '\n'
        << "noise.burst_rate = " << FormatDouble(n.burst_rate) << '\n'
        << "noise.burst_miss_mean = " << FormatDouble(n.burst_miss_mean) << '\n'
        << "noise.burst_len_mean = " << FormatDouble(n.burst_len_mean) << '\n';
  }
  return out.str();
}

}  // namespace cacheshield
