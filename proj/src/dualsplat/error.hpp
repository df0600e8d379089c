// Copyright 2026 The DualSplat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace dualsplat {

enum class ErrorCode {
  kContractViolation = 1,
  kDegenerateRotation,
  kParse,
  kTruncatedPayload,
  kUnknownVersion,
  kIntegrity,
  kIo,
  kConfig,
  kSchedule,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool condition, const std::string& message) {
  if (!condition) throw Error(ErrorCode::kContractViolation, message);
}

}  // namespace dualsplat
