// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The CacheShield Authors
#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace cacheshield {

// Rows of named counter values with a binary class (1 = attack).
// CSV form: header of attribute names followed by a final `class` column.
struct LabeledDataset {
  std::vector<std::string> attributes;
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;

  std::size_t size() const { return rows.size(); }
  // Throws Error(kInvalidArgument) when rows are ragged or labels not in {0,1}.
  void Validate() const;
  // Index of `name`; throws Error(kUnknownAttribute).
  std::size_t AttributeIndex(const std::string& name) const;
  std::vector<double> Column(std::size_t attribute) const;

  friend bool operator==(const LabeledDataset&, const LabeledDataset&) = default;
};

void WriteDataset(std::ostream& out, const LabeledDataset& dataset);
void WriteDataset(const std::filesystem::path& path, const LabeledDataset& dataset);
// Missing or non-numeric cells raise Error(kMalformedInput) with the line.
LabeledDataset ReadDataset(std::istream& in);
LabeledDataset ReadDataset(const std::filesystem::path& path);

}  // namespace cacheshield
