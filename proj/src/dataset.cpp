// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The CacheShield Authors
#include "cacheshield/dataset.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <string_view>

#include "cacheshield/config_file.hpp"
#include "cacheshield/error.hpp"

namespace cacheshield {
namespace {

std::vector<std::string_view> SplitCsv(std::string_view line) {
  std::vector<std::string_view> out;
  while (true) {
    const auto comma = line.find(',');
    out.push_back(line.substr(0, comma));
    if (comma == std::string_view::npos) break;
    line.remove_prefix(comma + 1);
  }
  return out;
}

}  // namespace

void LabeledDataset::Validate() const {
  if (rows.size() != labels.size()) {
    throw Error(ErrorCode::kInvalidArgument, "row and label counts differ");
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != attributes.size()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "row " + std::to_string(i) + " has the wrong number of values");
    }
    if (labels[i] != 0 && labels[i] != 1) {
      throw Error(ErrorCode::kInvalidArgument, "labels must be 0 or 1");
    }
    for (double v : rows[i]) {
      if (!std::isfinite(v)) {
        throw Error(ErrorCode::kInvalidArgument, "missing or non-finite value");
      }
    }
  }
}

std::size_t LabeledDataset::AttributeIndex(const std::string& name) const {
  for (std::size_t i = 0; i < attributes.size(); ++i) {
    if (attributes[i] == name) return i;
  }
  throw Error(ErrorCode::kUnknownAttribute, "no attribute named '" + name + "'");
}

std::vector<double> LabeledDataset::Column(std::size_t attribute) const {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.at(attribute));
  return out;
}

void WriteDataset(std::ostream& out, const LabeledDataset& dataset) {
  dataset.Validate();
  for (const auto& a : dataset.attributes) out << a << ',';
  out << "class\n";
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    for (double v : dataset.rows[i]) out << FormatDouble(v) << ',';
    out << dataset.labels[i] << '\n';
  }
}

void WriteDataset(const std::filesystem::path& path, const LabeledDataset& dataset) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  WriteDataset(out, dataset);
  if (!out) throw Error(ErrorCode::kIoError, "write failed for " + path.string());
}

LabeledDataset ReadDataset(std::istream& in) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) {
    throw Error(ErrorCode::kMalformedInput, "missing header", line_no);
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  auto header = SplitCsv(line);
  if (header.size() < 2 || header.back() != "class") {
    throw Error(ErrorCode::kMalformedInput,
                "header must list attributes followed by 'class'", line_no);
  }
  LabeledDataset ds;
  for (std::size_t i = 0; i + 1 < header.size(); ++i) {
    if (header[i].empty()) {
      throw Error(ErrorCode::kMalformedInput, "empty attribute name", line_no);
    }
    ds.attributes.emplace_back(header[i]);
  }
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = SplitCsv(line);
    if (cells.size() != header.size()) {
      throw Error(ErrorCode::kMalformedInput,
                  "expected " + std::to_string(header.size()) + " cells", line_no);
    }
    std::vector<double> row;
    row.reserve(ds.attributes.size());
    for (std::size_t i = 0; i + 1 < cells.size(); ++i) {
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(cells[i].data(), cells[i].data() + cells[i].size(), v);
      if (cells[i].empty() || ec != std::errc{} ||
          ptr != cells[i].data() + cells[i].size() || !std::isfinite(v)) {
        throw Error(ErrorCode::kMalformedInput,
                    "non-numeric cell in column '" + ds.attributes[i] + "'", line_no);
      }
      row.push_back(v);
    }
    const auto cls = cells.back();
    if (cls != "0" && cls != "1") {
      throw Error(ErrorCode::kMalformedInput, "class must be 0 or 1", line_no);
    }
    ds.rows.push_back(std::move(row));
    ds.labels.push_back(cls == "1" ? 1 : 0);
  }
  return ds;
}

LabeledDataset ReadDataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kFileNotFound, "cannot open " + path.string());
  return ReadDataset(in);
}

}  // namespace cacheshield
