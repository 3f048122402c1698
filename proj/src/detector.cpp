// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The CacheShield Authors
#include "cacheshield/detector.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cacheshield/error.hpp"

namespace cacheshield {

Comparison ParseComparison(std::string_view text) {
  if (text == "ge") return Comparison::kAtOrAbove;
  if (text == "gt") return Comparison::kStrictlyAbove;
  throw Error(ErrorCode::kInvalidConfig, "comparison must be ge or gt, got '" + std::string(text) + "'");
}

std::string_view ToString(Comparison comparison) {
  return comparison == Comparison::kAtOrAbove ? "ge" : "gt";
}

void DetectorConfig::Validate() const {
  if (!(beta > 0.0 && beta < 1.0)) {
    throw Error(ErrorCode::kInvalidConfig,
                "beta must lie in (0, 1), got " + std::to_string(beta));
  }
  if (!(mu_a_init > 0.0) || !std::isfinite(mu_a_init)) {
    throw Error(ErrorCode::kInvalidConfig,
                "mu_a_init must be positive, got " + std::to_string(mu_a_init));
  }
  if (tau_e < 1) {
    throw Error(ErrorCode::kInvalidConfig, "tau_e must be at least 1");
  }
}

DetectorState NewDetector(const DetectorConfig& config) {
  config.Validate();
  DetectorState state;
  state.mu_a = config.mu_a_init;
  state.h = ThresholdFor(config.tau_e, config.mu_a_init);
  return state;
}

DetectorState Reset(const DetectorConfig& config) { return NewDetector(config); }

Distances ClusterDistances(double misses, double mu_a) {
  return {misses, std::abs(misses - mu_a)};
}

double LlrIncrement(const Distances& d) {
  return std::log((d.non_attack + 1.0) / (d.attack + 1.0));
}

double ThresholdFor(double tau_e, double mu_a) {
  return tau_e * std::log(mu_a + 1.0);
}

double MinExpectedDetectionTime(double h, double mu_a) {
  if (!(h > 0.0) || !(mu_a > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "minimum detection time needs h > 0 and mu_a > 0");
  }
  return h / std::log(mu_a + 1.0);
}

bool MeetsThreshold(double g, double h, Comparison comparison) {
  const double slack = kThresholdRelTolerance * std::abs(h);
  if (comparison == Comparison::kAtOrAbove) return g >= h - slack;
  return g > h + slack;
}

Decision Update(DetectorState& state, double misses, const DetectorConfig& config) {
  if (misses > 0.0) {
    // (1 - beta) * mu + beta * x, arranged so that x == mu leaves mu unchanged
    state.mu_a += config.beta * (misses - state.mu_a);
    state.h = ThresholdFor(config.tau_e, state.mu_a);
  }
  const double step = LlrIncrement(ClusterDistances(misses, state.mu_a));
  state.g = std::max(0.0, state.g + step);
  ++state.k;

  Decision decision;
  decision.alarm = MeetsThreshold(state.g, state.h, config.comparison);
  decision.g = state.g;
  decision.h = state.h;
  decision.mu_a = state.mu_a;
  state.alarmed = state.alarmed || decision.alarm;
  return decision;
}

Decision Update(DetectorState& state, const CounterSample& sample,
                const DetectorConfig& config) {
  return Update(state, static_cast<double>(sample.misses), config);
}

CusumDetector::CusumDetector(const DetectorConfig& config)
    : config_(config), state_(NewDetector(config)) {}

Decision CusumDetector::Update(const CounterSample& sample) {
  return cacheshield::Update(state_, sample, config_);
}

Decision CusumDetector::Update(double misses) {
  return cacheshield::Update(state_, misses, config_);
}

void CusumDetector::Reset() { state_ = cacheshield::Reset(config_); }

}  // namespace cacheshield
