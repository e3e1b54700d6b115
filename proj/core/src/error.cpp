#include "cx/error.hpp"

namespace cx {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidInput: return "invalid-input";
    case ErrorKind::Shape: return "shape";
    case ErrorKind::DegenerateDirection: return "degenerate-direction";
    case ErrorKind::InvalidDistribution: return "invalid-distribution";
    case ErrorKind::DegenerateDistribution: return "degenerate-distribution";
    case ErrorKind::InvalidSpan: return "invalid-span";
    case ErrorKind::InvalidDataset: return "invalid-dataset";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::InvalidConcept: return "invalid-concept";
    case ErrorKind::NoConcept: return "no-concept";
    case ErrorKind::MissingPair: return "missing-pair";
    case ErrorKind::InvalidPair: return "invalid-pair";
    case ErrorKind::Collision: return "collision";
    case ErrorKind::TrainingFailure: return "training-failure";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

bool Error::numerical() const noexcept {
  switch (kind_) {
    case ErrorKind::DegenerateDirection:
    case ErrorKind::InvalidDistribution:
    case ErrorKind::DegenerateDistribution:
    case ErrorKind::TrainingFailure:
      return true;
    default:
      return false;
  }
}

}  // namespace cx
