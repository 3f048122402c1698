// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The CacheShield Authors
//
// Attribute ranking for choosing which counter to monitor.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cacheshield/dataset.hpp"

namespace cacheshield {

// Equal-frequency discretisation. Values are ranked and the bin of a group of
// equal values is floor(r * bins / n), r being the rank of the group's first
// member. Ties therefore never straddle bins, which keeps the result invariant
// under row permutations and strictly monotone transforms.
std::vector<std::size_t> EqualFrequencyBins(const std::vector<double>& values,
                                            std::size_t bins);

// Shannon entropy, in bits, of the class column.
double ClassEntropy(const LabeledDataset& dataset);

// H(Class) - H(Class | binned attribute), in bits.
// Errors: kEmptyDataset, kUnknownAttribute, kInvalidArgument (bins < 2).
double InfoGain(const LabeledDataset& dataset, const std::string& attribute,
                std::size_t bins = 10);

// Single-nearest-neighbour Relief. Attributes are min-max normalised to
// [0, 1]; neighbours are found by Euclidean distance over the normalised
// attributes, with ties broken by the lower row index. When `iterations`
// equals the row count every row is visited once in order; otherwise rows
// are drawn uniformly with replacement from a generator seeded with `seed`.
// Errors: kEmptyDataset, kSingleClassDataset, kInvalidArgument.
std::vector<double> Relief(const LabeledDataset& dataset, std::size_t iterations,
                           std::uint64_t seed = 0);

enum class RankMetric { kInfoGain, kRelief };

struct RankingParams {
  std::size_t bins = 10;
  std::size_t iterations = 0;  // 0 = one pass over every row
  std::uint64_t seed = 0;
};

struct AttributeScore {
  std::string name;
  double infogain_bits = 0.0;
  double relief_weight = 0.0;
};

struct RankingReport {
  RankMetric metric = RankMetric::kInfoGain;
  std::vector<AttributeScore> per_attribute;  // dataset column order
  std::vector<std::string> ordering;          // best first
};

RankingReport RankAttributes(const LabeledDataset& dataset, RankMetric metric,
                             const RankingParams& params = {});

}  // namespace cacheshield
