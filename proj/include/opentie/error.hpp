#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace opentie {

enum class ErrorCode {
  // input errors
  ParseError,
  BadCalibration,
  SizeMismatch,
  MissingProvenance,
  FileError,
  InvalidArgument,
  ProtocolError,
  // pipeline errors
  DegenerateInput,
  FrameMismatch,
  BehindCamera,
  NonPositiveDisparity,
  TooFewPoints,
  NoConsensus,
  LayersTooClose,
  RayParallel,
  NegativeDepth,
  NoAttempts,
  NoMatches,
  ConnectionLost,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::BadCalibration: return "BadCalibration";
    case ErrorCode::SizeMismatch: return "SizeMismatch";
    case ErrorCode::MissingProvenance: return "MissingProvenance";
    case ErrorCode::FileError: return "FileError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ProtocolError: return "ProtocolError";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::FrameMismatch: return "FrameMismatch";
    case ErrorCode::BehindCamera: return "BehindCamera";
    case ErrorCode::NonPositiveDisparity: return "NonPositiveDisparity";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::NoConsensus: return "NoConsensus";
    case ErrorCode::LayersTooClose: return "LayersTooClose";
    case ErrorCode::RayParallel: return "RayParallel";
    case ErrorCode::NegativeDepth: return "NegativeDepth";
    case ErrorCode::NoAttempts: return "NoAttempts";
    case ErrorCode::NoMatches: return "NoMatches";
    case ErrorCode::ConnectionLost: return "ConnectionLost";
  }
  return "Unknown";
}

/// True for errors caused by malformed or inconsistent inputs (CLI exit code 1);
/// everything else is a pipeline failure (exit code 2).
constexpr bool is_input_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::ParseError:
    case ErrorCode::BadCalibration:
    case ErrorCode::SizeMismatch:
    case ErrorCode::MissingProvenance:
    case ErrorCode::FileError:
    case ErrorCode::InvalidArgument:
    case ErrorCode::ProtocolError:
      return true;
    default:
      return false;
  }
}

/// Exception carrying a stable error code and the module that raised it.
/// what() reads "<module>: <Code>[: detail]".
class Error : public std::runtime_error {
 public:
  Error(std::string_view module, ErrorCode code, std::string_view detail = {})
      : std::runtime_error(format(module, code, detail)),
        module_(module),
        code_(code),
        detail_(detail) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& module() const noexcept { return module_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  static std::string format(std::string_view module, ErrorCode code,
                            std::string_view detail) {
    std::string msg(module);
    msg += ": ";
    msg += to_string(code);
    if (!detail.empty()) {
      msg += ": ";
      msg += detail;
    }
    return msg;
  }

  std::string module_;
  ErrorCode code_;
  std::string detail_;
};

/// Parse failure with the 1-based line number of the offending line.
class ParseError : public Error {
 public:
  ParseError(std::string_view module, std::size_t line, std::string_view what)
      : Error(module, ErrorCode::ParseError,
              "line " + std::to_string(line) + ": " + std::string(what)),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace opentie
