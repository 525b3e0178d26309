#include "trackmine/error.hpp"

namespace trackmine {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::SizeMismatch: return "SizeMismatch";
    case ErrorKind::DanglingId: return "DanglingId";
    case ErrorKind::DegenerateBatch: return "DegenerateBatch";
    case ErrorKind::InsufficientClasses: return "InsufficientClasses";
    case ErrorKind::EmptyTrack: return "EmptyTrack";
    case ErrorKind::ZeroVector: return "ZeroVector";
    case ErrorKind::TooFewPoints: return "TooFewPoints";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::EmptyRemainder: return "EmptyRemainder";
    case ErrorKind::OutOfBounds: return "OutOfBounds";
    case ErrorKind::MissingPositions: return "MissingPositions";
    case ErrorKind::InconsistentInputs: return "InconsistentInputs";
    case ErrorKind::Io: return "Io";
    case ErrorKind::Parse: return "Parse";
    case ErrorKind::Usage: return "Usage";
    case ErrorKind::Invariant: return "Invariant";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind), message_(what) {}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Usage: return 2;
    case ErrorKind::Invariant: return 4;
    default: return 3;
  }
}

}  // namespace trackmine
