#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ghzqkd {

enum class ErrorCode {
  InvalidPartyCount,
  UnsupportedPartyCount,
  InvalidVisibility,
  InvalidState,
  ShapeError,
  InvalidSetting,
  InvalidRound,
  IncompleteCorrelators,
  InsufficientStatistics,
  ProtocolOrderViolation,
  InvalidStrategy,
  InvalidSpec,
  AttackUndefined,
  DomainError,
  NotACcTranscript,
  SizeLimit,
  InvalidConfig,
  ParseError,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidPartyCount: return "invalid-party-count";
    case ErrorCode::UnsupportedPartyCount: return "unsupported-party-count";
    case ErrorCode::InvalidVisibility: return "invalid-visibility";
    case ErrorCode::InvalidState: return "invalid-state";
    case ErrorCode::ShapeError: return "shape-error";
    case ErrorCode::InvalidSetting: return "invalid-setting";
    case ErrorCode::InvalidRound: return "invalid-round";
    case ErrorCode::IncompleteCorrelators: return "incomplete-correlators";
    case ErrorCode::InsufficientStatistics: return "insufficient-statistics";
    case ErrorCode::ProtocolOrderViolation: return "protocol-order-violation";
    case ErrorCode::InvalidStrategy: return "invalid-strategy";
    case ErrorCode::InvalidSpec: return "invalid-spec";
    case ErrorCode::AttackUndefined: return "attack-undefined";
    case ErrorCode::DomainError: return "domain-error";
    case ErrorCode::NotACcTranscript: return "not-a-cc-transcript";
    case ErrorCode::SizeLimit: return "size-limit";
    case ErrorCode::InvalidConfig: return "invalid-config";
    case ErrorCode::ParseError: return "parse-error";
  }
  return "unknown";
}

/// Library-wide exception. The code is stable and machine-readable; the
/// message carries the human detail.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace ghzqkd
