// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The CacheShield Authors
#include "cacheshield/feature_select.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "cacheshield/error.hpp"

namespace cacheshield {
namespace {

double EntropyBits(const std::vector<std::size_t>& counts, std::size_t total) {
  double h = 0.0;
  for (auto c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / static_cast<double>(total);
    h -= p * std::log2(p);
  }
  return h;
}

void RequireNonEmpty(const LabeledDataset& ds) {
  if (ds.size() == 0) throw Error(ErrorCode::kEmptyDataset, "dataset has no rows");
}

}  // namespace

std::vector<std::size_t> EqualFrequencyBins(const std::vector<double>& values,
                                            std::size_t bins) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<std::size_t> bin(n);
  std::size_t group_bin = 0;
  for (std::size_t r = 0; r < n; ++r) {
    if (r == 0 || values[order[r]] != values[order[r - 1]]) group_bin = r * bins / n;
    bin[order[r]] = group_bin;
  }
  return bin;
}

double ClassEntropy(const LabeledDataset& dataset) {
  RequireNonEmpty(dataset);
  std::vector<std::size_t> counts(2, 0);
  for (int l : dataset.labels) ++counts[static_cast<std::size_t>(l)];
  return EntropyBits(counts, dataset.size());
}

double InfoGain(const LabeledDataset& dataset, const std::string& attribute,
                std::size_t bins) {
  RequireNonEmpty(dataset);
  dataset.Validate();
  if (bins < 2) throw Error(ErrorCode::kInvalidArgument, "bins must be at least 2");
  const auto column = dataset.Column(dataset.AttributeIndex(attribute));
  const auto bin = EqualFrequencyBins(column, bins);

  std::vector<std::size_t> joint(bins * 2, 0);
  std::vector<std::size_t> marginal(bins, 0);
  for (std::size_t i = 0; i < bin.size(); ++i) {
    ++joint[bin[i] * 2 + static_cast<std::size_t>(dataset.labels[i])];
    ++marginal[bin[i]];
  }
  double conditional = 0.0;
  const double n = static_cast<double>(dataset.size());
  for (std::size_t b = 0; b < bins; ++b) {
    if (marginal[b] == 0) continue;
    std::vector<std::size_t> counts = {joint[b * 2], joint[b * 2 + 1]};
    conditional += static_cast<double>(marginal[b]) / n * EntropyBits(counts, marginal[b]);
  }
  // clamp rounding residue so the gain stays inside [0, H(Class)]
  return std::max(0.0, ClassEntropy(dataset) - conditional);
}

std::vector<double> Relief(const LabeledDataset& dataset, std::size_t iterations,
                           std::uint64_t seed) {
  RequireNonEmpty(dataset);
  dataset.Validate();
  if (iterations == 0) throw Error(ErrorCode::kInvalidArgument, "iterations must be >= 1");
  const auto ones = std::count(dataset.labels.begin(), dataset.labels.end(), 1);
  if (ones == 0 || static_cast<std::size_t>(ones) == dataset.size()) {
    throw Error(ErrorCode::kSingleClassDataset, "relief needs rows of both classes");
  }

  const std::size_t n = dataset.size();
  const std::size_t dims = dataset.attributes.size();
  std::vector<double> norm(n * dims);
  for (std::size_t a = 0; a < dims; ++a) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& r : dataset.rows) {
      lo = std::min(lo, r[a]);
      hi = std::max(hi, r[a]);
    }
    const double span = hi - lo;
    for (std::size_t i = 0; i < n; ++i) {
      norm[i * dims + a] = span > 0.0 ? (dataset.rows[i][a] - lo) / span : 0.0;
    }
  }
  auto at = [&](std::size_t row, std::size_t a) { return norm[row * dims + a]; };

  std::vector<double> weights(dims, 0.0);
  std::mt19937_64 rng(seed);
  const double m = static_cast<double>(iterations);
  for (std::size_t it = 0; it < iterations; ++it) {
    const std::size_t x = iterations == n ? it : static_cast<std::size_t>(rng() % n);
    std::size_t hit = n;
    std::size_t miss = n;
    double hit_d = std::numeric_limits<double>::infinity();
    double miss_d = hit_d;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == x) continue;
      double d2 = 0.0;
      for (std::size_t a = 0; a < dims; ++a) {
        const double diff = at(x, a) - at(j, a);
        d2 += diff * diff;
      }
      if (dataset.labels[j] == dataset.labels[x]) {
        if (d2 < hit_d) { hit_d = d2; hit = j; }
      } else if (d2 < miss_d) {
        miss_d = d2;
        miss = j;
      }
    }
    for (std::size_t a = 0; a < dims; ++a) {
      double delta = std::abs(at(x, a) - at(miss, a));
      // a lone member of its class has no nearest hit
      if (hit != n) delta -= std::abs(at(x, a) - at(hit, a));
      weights[a] += delta / m;
    }
  }
  return weights;
}

RankingReport RankAttributes(const LabeledDataset& dataset, RankMetric metric,
                             const RankingParams& params) {
  RequireNonEmpty(dataset);
  const auto relief = Relief(
      dataset, params.iterations == 0 ? dataset.size() : params.iterations, params.seed);

  RankingReport report;
  report.metric = metric;
  for (std::size_t a = 0; a < dataset.attributes.size(); ++a) {
    report.per_attribute.push_back(
        {dataset.attributes[a], InfoGain(dataset, dataset.attributes[a], params.bins),
         relief[a]});
  }
  std::vector<std::size_t> idx(report.per_attribute.size());
  std::iota(idx.begin(), idx.end(), 0);
  auto score = [&](std::size_t i) {
    const auto& s = report.per_attribute[i];
    return metric == RankMetric::kInfoGain ? s.infogain_bits : s.relief_weight;
  };
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return score(a) > score(b); });
  for (auto i : idx) report.ordering.push_back(report.per_attribute[i].name);
  return report;
}

}  // namespace cacheshield
