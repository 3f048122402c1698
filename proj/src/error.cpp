// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The CacheShield Authors
#include "cacheshield/error.hpp"

namespace cacheshield {
namespace {

std::string Format(ErrorCode code, const std::string& message,
                   std::optional<std::size_t> line) {
  std::string out(ErrorCodeName(code));
  if (line) out += " (line " + std::to_string(*line) + ")";
  if (!message.empty()) out += ": " + message;
  return out;
}

}  // namespace

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidConfig: return "invalid-config";
    case ErrorCode::kInvalidSpec: return "invalid-spec";
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kNoSuchProcess: return "no-such-process";
    case ErrorCode::kCountersUnavailable: return "counters-unavailable";
    case ErrorCode::kFileNotFound: return "file-not-found";
    case ErrorCode::kMalformedTrace: return "malformed-trace";
    case ErrorCode::kMalformedInput: return "malformed-input";
    case ErrorCode::kIoError: return "io-error";
    case ErrorCode::kReadFailure: return "read-failure";
    case ErrorCode::kTargetExited: return "target-exited";
    case ErrorCode::kNotPaused: return "not-paused";
    case ErrorCode::kUnknownAttribute: return "unknown-attribute";
    case ErrorCode::kEmptyDataset: return "empty-dataset";
    case ErrorCode::kSingleClassDataset: return "single-class-dataset";
    case ErrorCode::kSpawnFailure: return "spawn-failure";
    case ErrorCode::kPlatformUnsupported: return "platform-unsupported";
  }
  return "unknown";
}

Error::Error(ErrorCode code, const std::string& message,
             std::optional<std::size_t> line)
    : std::runtime_error(Format(code, message, line)), code_(code), line_(line) {}

}  // namespace cacheshield
