#include "ack/error.hpp"

namespace ack {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::FileMissing: return "FileMissing";
    case ErrorCode::MalformedLine: return "MalformedLine";
    case ErrorCode::NetworkError: return "NetworkError";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::EmptyLabel: return "EmptyLabel";
    case ErrorCode::UnknownView: return "UnknownView";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonFiniteAngle: return "NonFiniteAngle";
    case ErrorCode::AllMasked: return "AllMasked";
    case ErrorCode::AsymmetricAdjacency: return "AsymmetricAdjacency";
    case ErrorCode::HeadsNotDivisible: return "HeadsNotDivisible";
    case ErrorCode::MissingSpecialTokens: return "MissingSpecialTokens";
    case ErrorCode::SequenceTooLong: return "SequenceTooLong";
    case ErrorCode::EmptyCandidates: return "EmptyCandidates";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::MissingDemonstratorAction: return "MissingDemonstratorAction";
    case ErrorCode::InvalidParams: return "InvalidParams";
    case ErrorCode::NoValidGoal: return "NoValidGoal";
    case ErrorCode::UnreachableGoal: return "UnreachableGoal";
    case ErrorCode::CountMismatch: return "CountMismatch";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::CheckpointError: return "CheckpointError";
  }
  return "Unknown";
}

}  // namespace ack
