// Copyright 2026 The DualSplat Authors
// SPDX-License-Identifier: Apache-2.0

#include "dualsplat/log.hpp"

#include <iostream>
#include <mutex>

#include "dualsplat/error.hpp"

namespace dualsplat {

namespace {
std::mutex g_sink_mutex;
LogSink g_sink;

void emit(LogLevel level, const std::string& message) {
  std::lock_guard lock(g_sink_mutex);
  if (g_sink) {
    g_sink(level, message);
    return;
  }
  std::cerr << (level == LogLevel::kWarning ? "[warn] " : "[info] ") << message << '\n';
}
}  // namespace

void set_log_sink(LogSink sink) {
  std::lock_guard lock(g_sink_mutex);
  g_sink = std::move(sink);
}

void log_info(const std::string& message) { emit(LogLevel::kInfo, message); }
void log_warning(const std::string& message) { emit(LogLevel::kWarning, message); }

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kContractViolation: return "contract violation";
    case ErrorCode::kDegenerateRotation: return "degenerate rotation";
    case ErrorCode::kParse: return "parse error";
    case ErrorCode::kTruncatedPayload: return "truncated payload";
    case ErrorCode::kUnknownVersion: return "unknown version";
    case ErrorCode::kIntegrity: return "integrity error";
    case ErrorCode::kIo: return "i/o error";
    case ErrorCode::kConfig: return "configuration error";
    case ErrorCode::kSchedule: return "schedule configuration error";
  }
  return "unknown error";
}

}  // namespace dualsplat
