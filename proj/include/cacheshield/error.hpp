// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The CacheShield Authors
#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace cacheshield {

enum class ErrorCode {
  kInvalidConfig,
  kInvalidSpec,
  kInvalidArgument,
  kNoSuchProcess,
  kCountersUnavailable,
  kFileNotFound,
  kMalformedTrace,
  kMalformedInput,
  kIoError,
  kReadFailure,
  kTargetExited,
  kNotPaused,
  kUnknownAttribute,
  kEmptyDataset,
  kSingleClassDataset,
  kSpawnFailure,
  kPlatformUnsupported,
};

// Stable kebab-case identifier, e.g. "malformed-trace".
std::string_view ErrorCodeName(ErrorCode code);

// Every failure raised by the library. Parsers attach the 1-based line number
// of the offending input line.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::optional<std::size_t> line = std::nullopt);

  ErrorCode code() const noexcept { return code_; }
  std::optional<std::size_t> line() const noexcept { return line_; }

 private:
  ErrorCode code_;
  std::optional<std::size_t> line_;
};

}  // namespace cacheshield
