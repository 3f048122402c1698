// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The CacheShield Authors
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "cacheshield/feature_select.hpp"
#include "cacheshield/trace_sim.hpp"
#include "doctest.h"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace cacheshield;

namespace {

LabeledDataset RandomDataset(std::size_t n, std::size_t attrs, std::uint64_t seed,
                             bool integer_valued = false) {
  std::mt19937_64 rng(seed);
  LabeledDataset ds;
  for (std::size_t a = 0; a < attrs; ++a) ds.attributes.push_back("a" + std::to_string(a));
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(i % 2);
    std::vector<double> row;
    for (std::size_t a = 0; a < attrs; ++a) {
      double v = std::normal_distribution<double>(label * 0.5 * static_cast<double>(a), 1.0)(rng);
      if (integer_valued) v = std::round(v * 3);
      row.push_back(v);
    }
    ds.rows.push_back(row);
    ds.labels.push_back(label);
  }
  return ds;
}

LabeledDataset PerfectPlusNoise(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  LabeledDataset ds;
  ds.attributes = {"noise", "perfect"};
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(i % 2);
    ds.rows.push_back({std::uniform_real_distribution<double>(0, 1)(rng),
                       static_cast<double>(label)});
    ds.labels.push_back(label);
  }
  return ds;
}

}  // namespace

TEST_CASE("equal-frequency bins keep ties together") {
  const auto b = EqualFrequencyBins({5, 1, 1, 1, 2, 9, 9, 3, 4, 0}, 5);
  CHECK(b == std::vector<std::size_t>{3, 0, 0, 0, 2, 4, 4, 2, 3, 0});
}

TEST_CASE("perfect predictor gains one bit") {
  const auto ds = PerfectPlusNoise(1000, 1);
  CHECK(ClassEntropy(ds) == doctest::Approx(1.0));
  CHECK(InfoGain(ds, "perfect") == doctest::Approx(1.0));
}

TEST_CASE("independent attribute gains nothing") {
  LabeledDataset ds;
  ds.attributes = {"x"};
  for (int i = 0; i < 1000; ++i) {
    ds.rows.push_back({static_cast<double>(i / 2)});
    ds.labels.push_back(i % 2);
  }
  CHECK(InfoGain(ds, "x") == doctest::Approx(0.0).epsilon(1e-12));
  const auto noisy = PerfectPlusNoise(10000, 8);
  CHECK(InfoGain(noisy, "noise") < 0.01);
}

TEST_CASE("info gain matches the contingency-table oracle") {
  std::mt19937_64 rng(2);
  LabeledDataset ds;
  ds.attributes = {"x"};
  for (int i = 0; i < 10000; ++i) {
    const int label = i % 2;
    ds.rows.push_back({label * 10.0 + std::uniform_real_distribution<double>(0, 1)(rng)});
    ds.labels.push_back(label);
  }
  CHECK(std::fabs(InfoGain(ds, "x", 10) - oracle::InfoGain(ds.Column(0), ds.labels, 10)) < 1e-9);

  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto r = RandomDataset(50 + seed * 20, 3, seed, seed % 2 == 0);
    for (std::size_t a = 0; a < 3; ++a) {
      for (std::size_t bins : {2, 5, 10, 17}) {
        const double got = InfoGain(r, r.attributes[a], bins);
        const double want =
            oracle::InfoGain(r.Column(a), r.labels, static_cast<int>(bins));
        REQUIRE(std::fabs(got - want) < 1e-9);
        REQUIRE(got >= -1e-12);
        REQUIRE(got <= ClassEntropy(r) + 1e-12);
      }
    }
  }
}

TEST_CASE("info gain errors") {
  LabeledDataset empty;
  empty.attributes = {"x"};
  CHECK_ERROR_CODE(InfoGain(empty, "x"), ErrorCode::kEmptyDataset);
  const auto ds = PerfectPlusNoise(10, 1);
  CHECK_ERROR_CODE(InfoGain(ds, "nope"), ErrorCode::kUnknownAttribute);
  CHECK_ERROR_CODE(InfoGain(ds, "perfect", 1), ErrorCode::kInvalidArgument);
}

TEST_CASE("info gain invariances") {
  auto ds = RandomDataset(400, 2, 9);
  const double before = InfoGain(ds, "a1");
  auto shuffled = ds;
  std::mt19937_64 rng(4);
  std::vector<std::size_t> perm(ds.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  for (std::size_t i = 0; i < perm.size(); ++i) {
    shuffled.rows[i] = ds.rows[perm[i]];
    shuffled.labels[i] = ds.labels[perm[i]];
  }
  CHECK(InfoGain(shuffled, "a1") == doctest::Approx(before).epsilon(1e-12));
  auto transformed = ds;
  for (auto& r : transformed.rows) r[1] = std::exp(r[1]) * 3 + 7;
  CHECK(InfoGain(transformed, "a1") == doctest::Approx(before).epsilon(1e-12));
}

TEST_CASE("relief matches the brute-force oracle") {
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    const auto ds = RandomDataset(40 + seed * 35, 4, seed, seed % 3 == 0);
    for (std::size_t iters : {ds.size(), std::size_t{57}}) {
      const auto got = Relief(ds, iters, seed);
      const auto want = oracle::Relief(ds.rows, ds.labels, iters, seed);
      for (std::size_t a = 0; a < got.size(); ++a) {
        REQUIRE(std::fabs(got[a] - want[a]) < 1e-9);
        REQUIRE(got[a] >= -1.0);
        REQUIRE(got[a] <= 1.0);
      }
    }
  }
}

TEST_CASE("relief basics") {
  auto ds = PerfectPlusNoise(200, 3);
  ds.attributes.push_back("constant");
  for (auto& r : ds.rows) r.push_back(4.0);
  const auto w = Relief(ds, ds.size());
  CHECK(w[2] == 0.0);
  CHECK(w[1] > w[0]);
  CHECK(w[1] == doctest::Approx(1.0));
  CHECK(Relief(ds, 50, 7) == Relief(ds, 50, 7));
}

TEST_CASE("relief errors") {
  LabeledDataset one;
  one.attributes = {"x"};
  one.rows = {{1}, {2}};
  one.labels = {1, 1};
  CHECK_ERROR_CODE(Relief(one, 2), ErrorCode::kSingleClassDataset);
  LabeledDataset empty;
  empty.attributes = {"x"};
  CHECK_ERROR_CODE(Relief(empty, 1), ErrorCode::kEmptyDataset);
  CHECK_ERROR_CODE(Relief(PerfectPlusNoise(10, 1), 0), ErrorCode::kInvalidArgument);
}

TEST_CASE("relief invariances") {
  const auto ds = RandomDataset(150, 3, 21);
  const auto base = Relief(ds, ds.size());
  auto affine = ds;
  for (auto& r : affine.rows) r[2] = r[2] * 4.5 - 11;
  const auto w = Relief(affine, affine.size());
  for (std::size_t a = 0; a < 3; ++a) CHECK(w[a] == doctest::Approx(base[a]).epsilon(1e-9));

  auto shuffled = ds;
  std::reverse(shuffled.rows.begin(), shuffled.rows.end());
  std::reverse(shuffled.labels.begin(), shuffled.labels.end());
  const auto ws = Relief(shuffled, shuffled.size());
  for (std::size_t a = 0; a < 3; ++a) CHECK(ws[a] == doctest::Approx(base[a]).epsilon(1e-9));
}

TEST_CASE("ranking puts the perfect predictor first") {
  const auto ds = PerfectPlusNoise(300, 5);
  for (auto metric : {RankMetric::kInfoGain, RankMetric::kRelief}) {
    const auto report = RankAttributes(ds, metric);
    CHECK(report.ordering.front() == "perfect");
    CHECK(report.per_attribute.size() == 2);
  }
  LabeledDataset empty;
  empty.attributes = {"x"};
  CHECK_ERROR_CODE(RankAttributes(empty, RankMetric::kInfoGain), ErrorCode::kEmptyDataset);
}

TEST_CASE("simulated counters rank the LLC miss column first") {
  const auto ds = GenerateCounterDataset(500, 2);
  const auto ig = RankAttributes(ds, RankMetric::kInfoGain);
  const auto rl = RankAttributes(ds, RankMetric::kRelief);
  CHECK(ig.ordering.front() == "PAPI_L3_TCM");
  CHECK(rl.ordering.front() == "PAPI_L3_TCM");
  std::vector<double> weights;
  for (const auto& s : rl.per_attribute) weights.push_back(s.relief_weight);
  std::sort(weights.rbegin(), weights.rend());
  CHECK(weights[0] >= 3 * weights[1]);
}
