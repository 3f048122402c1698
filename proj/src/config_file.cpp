// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The CacheShield Authors
#include "cacheshield/config_file.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <sstream>

#include "cacheshield/error.hpp"

namespace cacheshield {
namespace {

std::string_view Trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

const ConfigEntry* ConfigSection::Find(std::string_view key) const {
  // last assignment wins
  for (auto it = entries.rbegin(); it != entries.rend(); ++it) {
    if (it->key == key) return &*it;
  }
  return nullptr;
}

ConfigDocument ParseConfig(std::string_view text) {
  ConfigDocument doc;
  doc.sections.push_back({});
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);

    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = Trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) {
        throw Error(ErrorCode::kMalformedInput, "bad section header", line_no);
      }
      doc.sections.push_back(
          {std::string(Trim(line.substr(1, line.size() - 2))), line_no, {}});
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::kMalformedInput, "expected key = value", line_no);
    }
    const auto key = Trim(line.substr(0, eq));
    if (key.empty()) {
      throw Error(ErrorCode::kMalformedInput, "empty key", line_no);
    }
    doc.sections.back().entries.push_back(
        {std::string(key), std::string(Trim(line.substr(eq + 1))), line_no});
  }
  return doc;
}

ConfigDocument LoadConfig(const std::filesystem::path& path) {
  return ParseConfig(ReadTextFile(path));
}

double ToDouble(const ConfigEntry& entry) {
  double value = 0.0;
  const char* begin = entry.value.data();
  const char* end = begin + entry.value.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end) {
    throw Error(ErrorCode::kMalformedInput,
                "'" + entry.key + "' expects a decimal number, got '" + entry.value + "'",
                entry.line);
  }
  return value;
}

std::uint64_t ToUint(const ConfigEntry& entry) {
  std::uint64_t value = 0;
  const char* begin = entry.value.data();
  const char* end = begin + entry.value.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end) {
    throw Error(ErrorCode::kMalformedInput,
                "'" + entry.key + "' expects a non-negative integer, got '" +
                    entry.value + "'",
                entry.line);
  }
  return value;
}

std::string FormatDouble(double value) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), ptr);
}

std::string ReadTextFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kFileNotFound, "cannot open " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace cacheshield
