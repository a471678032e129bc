#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace skg {

// Every failure the library reports, one code per condition.
enum class Errc {
  // schema / config
  MalformedConfig,
  DuplicateTypeName,
  InsufficientExamples,
  UnknownEndpointType,
  EmptyLabel,
  // ingest
  TransportError,
  NonTextContent,
  Timeout,
  EmptyAfterCleaning,
  SentenceExceedsBudget,
  // prompts
  EmptyNameList,
  // llm client
  RateLimited,
  FixtureMiss,
  TruncatedOutput,
  StorageError,
  // extraction parsing
  Unparseable,
  EmptyResponse,
  // disambiguation
  LengthMismatch,
  NonInteger,
  UncoveredNode,
  UnmappedEndpoint,
  // graph
  DanglingEdge,
  DuplicateNodeId,
  UnknownNode,
  WrongNodeType,
  SinkError,
  // eval
  EmptyJudgmentSet,
  DegenerateSeries,
  ZeroMeanCV,
  // cli / run config
  Ambiguous,
  NotFound,
  BadRunConfig,
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::MalformedConfig: return "MalformedConfig";
    case Errc::DuplicateTypeName: return "DuplicateTypeName";
    case Errc::InsufficientExamples: return "InsufficientExamples";
    case Errc::UnknownEndpointType: return "UnknownEndpointType";
    case Errc::EmptyLabel: return "EmptyLabel";
    case Errc::TransportError: return "TransportError";
    case Errc::NonTextContent: return "NonTextContent";
    case Errc::Timeout: return "Timeout";
    case Errc::EmptyAfterCleaning: return "EmptyAfterCleaning";
    case Errc::SentenceExceedsBudget: return "SentenceExceedsBudget";
    case Errc::EmptyNameList: return "EmptyNameList";
    case Errc::RateLimited: return "RateLimited";
    case Errc::FixtureMiss: return "FixtureMiss";
    case Errc::TruncatedOutput: return "TruncatedOutput";
    case Errc::StorageError: return "StorageError";
    case Errc::Unparseable: return "Unparseable";
    case Errc::EmptyResponse: return "EmptyResponse";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::NonInteger: return "NonInteger";
    case Errc::UncoveredNode: return "UncoveredNode";
    case Errc::UnmappedEndpoint: return "UnmappedEndpoint";
    case Errc::DanglingEdge: return "DanglingEdge";
    case Errc::DuplicateNodeId: return "DuplicateNodeId";
    case Errc::UnknownNode: return "UnknownNode";
    case Errc::WrongNodeType: return "WrongNodeType";
    case Errc::SinkError: return "SinkError";
    case Errc::EmptyJudgmentSet: return "EmptyJudgmentSet";
    case Errc::DegenerateSeries: return "DegenerateSeries";
    case Errc::ZeroMeanCV: return "ZeroMeanCV";
    case Errc::Ambiguous: return "Ambiguous";
    case Errc::NotFound: return "NotFound";
    case Errc::BadRunConfig: return "BadRunConfig";
  }
  return "UnknownError";
}

// Carries a code for programmatic handling and an optional detail payload
// (e.g. the raw model output that failed to parse).
class Error : public std::runtime_error {
public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

  Error(Errc code, const std::string& message, std::string detail)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message),
        code_(code),
        detail_(std::move(detail)) {}

  Errc code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

private:
  Errc code_;
  std::string detail_;
};

[[noreturn]] inline void fail(Errc code, const std::string& message) { throw Error(code, message); }

[[noreturn]] inline void fail(Errc code, const std::string& message, std::string detail) {
  throw Error(code, message, std::move(detail));
}

}  // namespace skg
