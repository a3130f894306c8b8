#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace votepose {

/// Base class for every error raised by the library. `code()` is a stable,
/// machine-readable identifier used by the CLI error line.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& message) : Error("invalid_argument", message) {}
};

/// A heatmap, joint or field carries no probability mass where some is required.
class NoEvidence : public Error {
 public:
  explicit NoEvidence(const std::string& message) : Error("no_evidence", message) {}
};

/// Conditioning a joint table on a location that received no votes.
class UnsupportedCondition : public Error {
 public:
  explicit UnsupportedCondition(const std::string& message)
      : Error("unsupported_condition", message) {}
};

class ParseError : public Error {
 public:
  ParseError(std::size_t offset, const std::string& message)
      : Error("parse_error", message + " (at byte " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class StageError : public Error {
 public:
  StageError(int stage, const std::string& message)
      : Error("stage_failed", "stage " + std::to_string(stage) + ": " + message), stage_(stage) {}
  int stage() const noexcept { return stage_; }

 private:
  int stage_;
};

}  // namespace votepose
