/**
 * Copyright 2026 The hetmap Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hetmap {

enum class ErrorCode {
  kParse,
  kCycle,
  kDanglingEdge,
  kDuplicateTask,
  kDuplicateEdge,
  kInvalidValue,
  kMissingLatency,
  kUnknownReference,
  kAssignment,
  kPrecedence,
  kOverlap,
  kUnsupportedBatch,
  kMemory,
  kObjectiveMismatch,
  kInfeasible,
  kCapExceeded,
  kNotInterchangeable,
  kNotArticulation,
  kIntegrality,
  kBackend,
  kIo,
};

inline std::string_view code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kParse: return "parse";
    case ErrorCode::kCycle: return "cycle";
    case ErrorCode::kDanglingEdge: return "dangling_edge";
    case ErrorCode::kDuplicateTask: return "duplicate_task";
    case ErrorCode::kDuplicateEdge: return "duplicate_edge";
    case ErrorCode::kInvalidValue: return "invalid_value";
    case ErrorCode::kMissingLatency: return "missing_latency";
    case ErrorCode::kUnknownReference: return "unknown_reference";
    case ErrorCode::kAssignment: return "assignment";
    case ErrorCode::kPrecedence: return "precedence";
    case ErrorCode::kOverlap: return "overlap";
    case ErrorCode::kUnsupportedBatch: return "unsupported_batch";
    case ErrorCode::kMemory: return "memory";
    case ErrorCode::kObjectiveMismatch: return "objective_mismatch";
    case ErrorCode::kInfeasible: return "infeasible";
    case ErrorCode::kCapExceeded: return "cap_exceeded";
    case ErrorCode::kNotInterchangeable: return "not_interchangeable";
    case ErrorCode::kNotArticulation: return "not_articulation";
    case ErrorCode::kIntegrality: return "integrality";
    case ErrorCode::kBackend: return "backend";
    case ErrorCode::kIo: return "io";
  }
  return "unknown";
}

/// Every failure in the library surfaces as an Error carrying a
/// machine-readable code; the CLI prints `code_name(code())` on stderr.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace hetmap
