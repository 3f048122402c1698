// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The CacheShield Authors
#include <cmath>
#include <random>

#include "cacheshield/detector.hpp"
#include "cacheshield/error.hpp"
#include "doctest.h"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace cacheshield;

TEST_CASE("new detector from defaults") {
  const auto s = NewDetector(DetectorConfig{});
  CHECK(s.g == 0.0);
  CHECK(s.mu_a == 12.5);
  CHECK(s.h == doctest::Approx(26.026).epsilon(1e-4));
  CHECK(s.h == 10 * std::log(13.5));
  CHECK_FALSE(s.alarmed);
}

TEST_CASE("new detector, unit threshold") {
  const auto s = NewDetector(DetectorConfig{0.5, 1.0, 1});
  CHECK(s.h == doctest::Approx(std::log(2.0)));
}

TEST_CASE("invalid configs") {
  CHECK_ERROR_CODE(NewDetector(DetectorConfig{0.05, 0.0, 10}), ErrorCode::kInvalidConfig);
  CHECK_ERROR_CODE(NewDetector(DetectorConfig{0.0, 12.5, 10}), ErrorCode::kInvalidConfig);
  CHECK_ERROR_CODE(NewDetector(DetectorConfig{1.0, 12.5, 10}), ErrorCode::kInvalidConfig);
  CHECK_ERROR_CODE(NewDetector(DetectorConfig{0.05, 12.5, 0}), ErrorCode::kInvalidConfig);
  CHECK_ERROR_CODE(NewDetector(DetectorConfig{0.05, -1.0, 10}), ErrorCode::kInvalidConfig);
}

TEST_CASE("cluster distances") {
  auto d = ClusterDistances(0, 12.5);
  CHECK(d.non_attack == 0.0);
  CHECK(d.attack == 12.5);
  d = ClusterDistances(12.5, 12.5);
  CHECK(d.non_attack == 12.5);
  CHECK(d.attack == 0.0);
  d = ClusterDistances(50, 14.375);
  CHECK(d.non_attack == 50.0);
  CHECK(d.attack == 35.625);
}

TEST_CASE("llr increment") {
  CHECK(LlrIncrement({0, 12.5}) == doctest::Approx(std::log(1 / 13.5)));
  CHECK(LlrIncrement({0, 12.5}) == doctest::Approx(-2.6026).epsilon(1e-4));
  CHECK(LlrIncrement({12.5, 0}) == doctest::Approx(2.6026).epsilon(1e-4));
  CHECK(LlrIncrement({5, 5}) == 0.0);
}

TEST_CASE("min expected detection time") {
  CHECK(MinExpectedDetectionTime(10 * std::log(13.5), 12.5) == doctest::Approx(10.0));
  CHECK(MinExpectedDetectionTime(26.026, 12.5) == doctest::Approx(10.0).epsilon(1e-4));
  CHECK(MinExpectedDetectionTime(std::log(2.0), 1) == doctest::Approx(1.0));
  CHECK_ERROR_CODE(MinExpectedDetectionTime(0.0, 12.5), ErrorCode::kInvalidArgument);
  CHECK_ERROR_CODE(MinExpectedDetectionTime(1.0, 0.0), ErrorCode::kInvalidArgument);
}

TEST_CASE("constant stream at the initial mean alarms on the tenth sample") {
  const DetectorConfig cfg;
  auto s = NewDetector(cfg);
  for (int k = 1; k <= 9; ++k) {
    const auto d = Update(s, 12.5, cfg);
    CHECK_FALSE(d.alarm);
    CHECK(d.mu_a == 12.5);
    CHECK(d.g == doctest::Approx(k * std::log(13.5)));
  }
  CHECK(Update(s, 12.5, cfg).alarm);
  CHECK(s.alarmed);
  CHECK(s.k == 10);

  const std::vector<double> xs(50, 12.5);
  CHECK(oracle::FirstAlarm(xs) == std::optional<std::size_t>(9));
}

TEST_CASE("strict comparison needs one more sample") {
  DetectorConfig cfg;
  cfg.comparison = Comparison::kStrictlyAbove;
  auto s = NewDetector(cfg);
  int first = -1;
  for (int k = 0; k < 20 && first < 0; ++k) {
    if (Update(s, 12.5, cfg).alarm) first = k;
  }
  CHECK(first == 10);
  CHECK(oracle::FirstAlarm(std::vector<double>(20, 12.5), 0.05, 12.5, 10, true) ==
        std::optional<std::size_t>(10));
}

TEST_CASE("single large sample from fresh defaults") {
  const DetectorConfig cfg;
  auto s = NewDetector(cfg);
  const auto d = Update(s, 50, cfg);
  CHECK(d.mu_a == doctest::Approx(14.375));
  CHECK(d.g == doctest::Approx(std::log(51 / 36.625)));
  CHECK(d.g == doctest::Approx(0.3310).epsilon(1e-3));
  CHECK(d.h == doctest::Approx(10 * std::log(15.375)));
  CHECK_FALSE(d.alarm);
}

TEST_CASE("zero misses keep g pinned at zero") {
  const DetectorConfig cfg;
  auto s = NewDetector(cfg);
  for (int i = 0; i < 10000; ++i) {
    const auto d = Update(s, CounterSample{static_cast<std::uint64_t>(i) * 100, 0, 5000}, cfg);
    REQUIRE(d.g == 0.0);
    REQUIRE_FALSE(d.alarm);
  }
  CHECK(s.mu_a == 12.5);
}

TEST_CASE("alarm latches until reset") {
  const DetectorConfig cfg;
  auto s = NewDetector(cfg);
  for (int i = 0; i < 10; ++i) Update(s, 12.5, cfg);
  REQUIRE(s.alarmed);
  for (int i = 0; i < 30; ++i) Update(s, 0, cfg);
  CHECK(s.g == 0.0);
  CHECK(s.alarmed);
  s = Reset(cfg);
  CHECK(s == NewDetector(cfg));
}

TEST_CASE("reset restores drifted mean and is idempotent on fresh state") {
  const DetectorConfig cfg;
  auto s = NewDetector(cfg);
  Update(s, 80, cfg);
  CHECK(s.mu_a != 12.5);
  CHECK(Reset(cfg).mu_a == 12.5);
  CHECK(Reset(cfg) == NewDetector(cfg));

  CusumDetector det(cfg);
  det.Update(80.0);
  det.Reset();
  CHECK(det.state() == NewDetector(cfg));
}

TEST_CASE("increment never exceeds ln(mu_a + 1)") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    DetectorConfig cfg;
    cfg.beta = std::uniform_real_distribution<double>(0.001, 0.999)(rng);
    cfg.mu_a_init = std::uniform_real_distribution<double>(0.01, 200)(rng);
    cfg.tau_e = std::uniform_int_distribution<std::uint32_t>(1, 50)(rng);
    auto s = NewDetector(cfg);
    std::geometric_distribution<int> geo(0.05);
    for (int i = 0; i < 2000; ++i) {
      const double before = s.g;
      const auto d = Update(s, static_cast<double>(geo(rng)), cfg);
      REQUIRE(d.g - before <= std::log(d.mu_a + 1) + 1e-12);
    }
  }
}

TEST_CASE("matches the scalar oracle step by step") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    DetectorConfig cfg;
    cfg.beta = std::uniform_real_distribution<double>(0.01, 0.5)(rng);
    cfg.mu_a_init = std::uniform_real_distribution<double>(1, 40)(rng);
    cfg.tau_e = std::uniform_int_distribution<std::uint32_t>(1, 20)(rng);
    cfg.comparison = trial % 2 ? Comparison::kStrictlyAbove : Comparison::kAtOrAbove;
    oracle::Cusum ref(cfg.beta, cfg.mu_a_init, cfg.tau_e, trial % 2 == 1);
    CusumDetector det(cfg);
    std::poisson_distribution<int> pois(std::uniform_real_distribution<double>(0.1, 30)(rng));
    for (int i = 0; i < 500; ++i) {
      const double x = rng() % 3 == 0 ? 0.0 : static_cast<double>(pois(rng));
      const bool ref_alarm = ref.Step(x);
      const auto d = det.Update(x);
      REQUIRE(d.g == doctest::Approx(ref.g).epsilon(1e-9));
      REQUIRE(d.mu_a == doctest::Approx(ref.mu).epsilon(1e-9));
      REQUIRE(d.alarm == ref_alarm);
    }
  }
}

TEST_CASE("comparison parsing") {
  CHECK(ParseComparison("ge") == Comparison::kAtOrAbove);
  CHECK(ParseComparison("gt") == Comparison::kStrictlyAbove);
  CHECK(ToString(Comparison::kStrictlyAbove) == "gt");
  CHECK_ERROR_CODE(ParseComparison(">="), ErrorCode::kInvalidConfig);
}
