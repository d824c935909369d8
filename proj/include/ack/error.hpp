#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ack {

enum class ErrorCode {
  FileMissing,
  MalformedLine,
  NetworkError,
  ParseError,
  EmptyLabel,
  UnknownView,
  ZeroVector,
  DimensionMismatch,
  NonFiniteAngle,
  AllMasked,
  AsymmetricAdjacency,
  HeadsNotDivisible,
  MissingSpecialTokens,
  SequenceTooLong,
  EmptyCandidates,
  LengthMismatch,
  MissingDemonstratorAction,
  InvalidParams,
  NoValidGoal,
  UnreachableGoal,
  CountMismatch,
  InvalidConfig,
  CheckpointError,
};

std::string_view to_string(ErrorCode code);

// Every failure the library reports carries one of the codes above so callers
// (and the CLI exit-code mapping) can branch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace ack
