#pragma once

#include <stdexcept>
#include <string>

namespace trackmine {

enum class ErrorKind {
  SizeMismatch,
  DanglingId,
  DegenerateBatch,
  InsufficientClasses,
  EmptyTrack,
  ZeroVector,
  TooFewPoints,
  LengthMismatch,
  EmptyRemainder,
  OutOfBounds,
  MissingPositions,
  InconsistentInputs,
  Io,
  Parse,
  Usage,
  Invariant,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what);

  ErrorKind kind() const noexcept { return kind_; }
  // what() without the kind prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorKind kind_;
  std::string message_;
};

// Process exit code for an error: 2 usage, 3 data, 4 internal invariant.
int exit_code_for(ErrorKind kind);

}  // namespace trackmine
