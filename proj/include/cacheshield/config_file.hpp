// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The CacheShield Authors
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cacheshield {

// Flat `key = value` documents with `#` comments and optional `[section]`
// headers. Keys before the first header belong to an unnamed section.
struct ConfigEntry {
  std::string key;
  std::string value;
  std::size_t line = 0;
};

struct ConfigSection {
  std::string name;  // empty for the leading unnamed section
  std::size_t line = 0;
  std::vector<ConfigEntry> entries;

  const ConfigEntry* Find(std::string_view key) const;
};

struct ConfigDocument {
  std::vector<ConfigSection> sections;  // sections[0] is always the unnamed one
};

ConfigDocument ParseConfig(std::string_view text);
ConfigDocument LoadConfig(const std::filesystem::path& path);

// Value conversions; failures raise Error(kMalformedInput) with the entry line.
double ToDouble(const ConfigEntry& entry);
std::uint64_t ToUint(const ConfigEntry& entry);

// Shortest decimal form that parses back to the same double.
std::string FormatDouble(double value);

std::string ReadTextFile(const std::filesystem::path& path);

}  // namespace cacheshield
