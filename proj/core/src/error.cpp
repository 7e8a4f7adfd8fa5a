#include "condcov/error.hpp"

namespace condcov {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonPositiveDiagonal: return "NonPositiveDiagonal";
    case ErrorCode::TooFewRows: return "TooFewRows";
    case ErrorCode::ZeroWeightSum: return "ZeroWeightSum";
    case ErrorCode::DegenerateColumn: return "DegenerateColumn";
    case ErrorCode::AllCandidatesInfeasible: return "AllCandidatesInfeasible";
    case ErrorCode::CholeskyFailure: return "CholeskyFailure";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::EmptyAfterFilter: return "EmptyAfterFilter";
    case ErrorCode::NonMonotoneTimestamps: return "NonMonotoneTimestamps";
    case ErrorCode::UnsupportedGrid: return "UnsupportedGrid";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace condcov
