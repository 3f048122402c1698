// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The CacheShield Authors
#include "cacheshield/trace.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>

#include "cacheshield/error.hpp"

namespace cacheshield {
namespace {

constexpr std::string_view kHeader = "t_us,misses,cycles";
constexpr std::string_view kLabeledHeader = "t_us,misses,cycles,label";

std::uint64_t ParseField(std::string_view field, std::string_view name,
                         std::size_t line_no) {
  std::uint64_t value = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (field.empty() || ec != std::errc{} || ptr != field.data() + field.size()) {
    throw Error(ErrorCode::kMalformedTrace,
                "field '" + std::string(name) + "' is not a non-negative integer: '" +
                    std::string(field) + "'",
                line_no);
  }
  return value;
}

}  // namespace

TraceLabel LabelFromFlags(std::vector<bool> flags) {
  TraceLabel label;
  const auto it = std::find(flags.begin(), flags.end(), true);
  if (it != flags.end()) label.lambda = static_cast<std::uint64_t>(it - flags.begin());
  label.per_sample_attack = std::move(flags);
  return label;
}

void WriteTrace(std::ostream& out, const Trace& trace, const TraceLabel* label) {
  if (label && label->per_sample_attack.size() != trace.size()) {
    throw Error(ErrorCode::kInvalidArgument, "label length differs from trace length");
  }
  out << (label ? kLabeledHeader : kHeader) << '\n';
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const auto& s = trace[i];
    out << s.t_us << ',' << s.misses << ',' << s.cycles;
    if (label) out << ',' << (label->per_sample_attack[i] ? '1' : '0');
    out << '\n';
  }
}

void WriteTrace(const std::filesystem::path& path, const Trace& trace,
                const TraceLabel* label) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  WriteTrace(out, trace, label);
  out.flush();
  if (!out) throw Error(ErrorCode::kIoError, "write failed for " + path.string());
}

LoadedTrace ReadTrace(std::istream& in) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) {
    throw Error(ErrorCode::kMalformedTrace, "missing header", line_no);
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  bool labeled = false;
  if (line == kLabeledHeader) {
    labeled = true;
  } else if (line != kHeader) {
    throw Error(ErrorCode::kMalformedTrace,
                "expected header '" + std::string(kLabeledHeader) + "'", line_no);
  }

  LoadedTrace result;
  std::vector<bool> flags;
  const std::size_t columns = labeled ? 4 : 3;
  std::array<std::string_view, 4> fields;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    std::string_view rest = line;
    std::size_t n = 0;
    while (true) {
      const auto comma = rest.find(',');
      if (n == fields.size()) {
        n = fields.size() + 1;  // too many columns
        break;
      }
      fields[n++] = rest.substr(0, comma);
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (n != columns) {
      throw Error(ErrorCode::kMalformedTrace,
                  "expected " + std::to_string(columns) + " fields", line_no);
    }
    CounterSample s;
    s.t_us = ParseField(fields[0], "t_us", line_no);
    s.misses = ParseField(fields[1], "misses", line_no);
    s.cycles = ParseField(fields[2], "cycles", line_no);
    if (!result.trace.empty() && s.t_us < result.trace.back().t_us) {
      throw Error(ErrorCode::kMalformedTrace, "timestamps must be non-decreasing",
                  line_no);
    }
    if (labeled) {
      const auto v = ParseField(fields[3], "label", line_no);
      if (v > 1) throw Error(ErrorCode::kMalformedTrace, "label must be 0 or 1", line_no);
      flags.push_back(v == 1);
    }
    result.trace.push_back(s);
  }
  if (labeled) result.label = LabelFromFlags(std::move(flags));
  return result;
}

LoadedTrace ReadTrace(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kFileNotFound, "cannot open " + path.string());
  return ReadTrace(in);
}

}  // namespace cacheshield
