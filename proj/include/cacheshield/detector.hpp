// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The CacheShield Authors
//
// Streaming CUSUM change-point detector over per-interval LLC miss counts.
//
// Every sample is scored against two clusters: a non-attack cluster centred
// at zero misses and an attack cluster whose mean mu_a is tracked with an
// exponentially weighted moving average. The log-ratio of the (shifted)
// distances to the two clusters drives the recursion
//
//   g_k = max(0, g_{k-1} + ln((d_na + 1) / (d_a + 1)))
//
// and an alarm is raised once g_k reaches h = tau_e * ln(mu_a + 1), where
// tau_e is the smallest number of samples that can possibly trigger an alarm
// from g = 0.
#pragma once

#include <cstdint>
#include <string_view>

#include "cacheshield/sample.hpp"

namespace cacheshield {

enum class Comparison {
  kAtOrAbove,      // alarm when g >= h
  kStrictlyAbove,  // alarm when g > h
};

// "ge" | "gt". Throws Error(kInvalidConfig).
Comparison ParseComparison(std::string_view text);
std::string_view ToString(Comparison comparison);

struct DetectorConfig {
  double beta = 0.05;        // EWMA smoothing factor, in (0, 1)
  double mu_a_init = 12.5;   // initial attack-cluster mean, misses/interval
  std::uint32_t tau_e = 10;  // expected-detection-delay target, samples
  Comparison comparison = Comparison::kAtOrAbove;

  // Throws Error(kInvalidConfig) when beta is outside (0,1), mu_a_init <= 0
  // or tau_e < 1.
  void Validate() const;

  friend bool operator==(const DetectorConfig&, const DetectorConfig&) = default;
};

struct DetectorState {
  double g = 0.0;
  double mu_a = 0.0;
  double h = 0.0;
  std::uint64_t k = 0;  // samples consumed
  bool alarmed = false;  // latches until Reset

  friend bool operator==(const DetectorState&, const DetectorState&) = default;
};

struct Decision {
  bool alarm = false;  // this sample meets the threshold
  double g = 0.0;
  double h = 0.0;
  double mu_a = 0.0;

  friend bool operator==(const Decision&, const Decision&) = default;
};

struct Distances {
  double non_attack = 0.0;  // d_na = misses (the non-attack mean is 0)
  double attack = 0.0;      // d_a = |misses - mu_a|
};

// Relative slack applied to the threshold comparison. Summing k equal
// increments in floating point can land one ulp short of the product k * x,
// which would otherwise delay an alarm that is exactly due by one sample.
inline constexpr double kThresholdRelTolerance = 1e-12;

DetectorState NewDetector(const DetectorConfig& config);
DetectorState Reset(const DetectorConfig& config);

Distances ClusterDistances(double misses, double mu_a);

// ln((d_na + 1) / (d_a + 1)); never larger than ln(mu_a + 1).
double LlrIncrement(const Distances& d);

// h = tau_e * ln(mu_a + 1).
double ThresholdFor(double tau_e, double mu_a);

// h / ln(mu_a + 1), in samples. Throws Error(kInvalidArgument) unless
// h > 0 and mu_a > 0.
double MinExpectedDetectionTime(double h, double mu_a);

bool MeetsThreshold(double g, double h, Comparison comparison);

// One detector step. The mean and threshold are refreshed before the
// increment is computed, and only for samples with a non-zero miss count.
Decision Update(DetectorState& state, double misses, const DetectorConfig& config);
Decision Update(DetectorState& state, const CounterSample& sample,
                const DetectorConfig& config);

// Owning convenience wrapper around a config and its evolving state.
class CusumDetector {
 public:
  explicit CusumDetector(const DetectorConfig& config = {});

  Decision Update(const CounterSample& sample);
  Decision Update(double misses);
  void Reset();

  const DetectorConfig& config() const { return config_; }
  const DetectorState& state() const { return state_; }

 private:
  DetectorConfig config_;
  DetectorState state_;
};

}  // namespace cacheshield
