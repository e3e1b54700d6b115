#pragma once

#include <stdexcept>
#include <string>

namespace cx {

enum class ErrorKind {
  InvalidInput,
  Shape,
  DegenerateDirection,
  InvalidDistribution,
  DegenerateDistribution,
  InvalidSpan,
  InvalidDataset,
  Parse,
  InvalidConcept,
  NoConcept,
  MissingPair,
  InvalidPair,
  Collision,
  TrainingFailure,
};

const char* to_string(ErrorKind kind) noexcept;

/// Every failure raised by the library carries a kind so that callers (the CLI
/// in particular) can map it onto an exit status without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

  /// True for failures of the math rather than of the inputs' shape or syntax.
  bool numerical() const noexcept;

 private:
  ErrorKind kind_;
};

}  // namespace cx
