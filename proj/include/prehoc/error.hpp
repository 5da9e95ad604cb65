#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace prehoc {

enum class ErrorCode {
  FileUnreadable,
  HeaderMissing,
  RaggedRow,
  TargetNotFound,
  DegenerateTarget,
  EmptyDataset,
  EmptyCounts,
  DimensionMismatch,
  NoRanks,
  UnknownConfig,
  SchemaViolation,
  GroundTruthMismatch,
  EmptyCorpus,
  DimensionInconsistent,
  ParseError,
  EmptyTrainingSet,
  ZeroVector,
  TooFewSamples,
  SingleClass,
  EmptyPairs,
  EndpointUnreachable,
  AuthFailure,
  RateLimited,
  MalformedResponse,
  HttpError,
  NoModelFound,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::FileUnreadable: return "FileUnreadable";
    case ErrorCode::HeaderMissing: return "HeaderMissing";
    case ErrorCode::RaggedRow: return "RaggedRow";
    case ErrorCode::TargetNotFound: return "TargetNotFound";
    case ErrorCode::DegenerateTarget: return "DegenerateTarget";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::EmptyCounts: return "EmptyCounts";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NoRanks: return "NoRanks";
    case ErrorCode::UnknownConfig: return "UnknownConfig";
    case ErrorCode::SchemaViolation: return "SchemaViolation";
    case ErrorCode::GroundTruthMismatch: return "GroundTruthMismatch";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::DimensionInconsistent: return "DimensionInconsistent";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::EmptyTrainingSet: return "EmptyTrainingSet";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::SingleClass: return "SingleClass";
    case ErrorCode::EmptyPairs: return "EmptyPairs";
    case ErrorCode::EndpointUnreachable: return "EndpointUnreachable";
    case ErrorCode::AuthFailure: return "AuthFailure";
    case ErrorCode::RateLimited: return "RateLimited";
    case ErrorCode::MalformedResponse: return "MalformedResponse";
    case ErrorCode::HttpError: return "HttpError";
    case ErrorCode::NoModelFound: return "NoModelFound";
  }
  return "Unknown";
}

/// Single exception type for the library. `location()` carries the row or
/// line number for errors that point into a file (RaggedRow, SchemaViolation,
/// DimensionInconsistent, ParseError); it is 1-based for lines and 0-based
/// for data rows.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail,
        std::optional<std::size_t> location = std::nullopt)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail),
        code_(code),
        location_(location) {}

  ErrorCode code() const noexcept { return code_; }
  std::optional<std::size_t> location() const noexcept { return location_; }

 private:
  ErrorCode code_;
  std::optional<std::size_t> location_;
};

}  // namespace prehoc
