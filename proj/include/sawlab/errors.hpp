#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace sawlab {

// Base class for every error raised by the library. The CLI maps
// BudgetError subclasses to exit code 2 and everything else to 1.
class SawError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public SawError {
 public:
  using SawError::SawError;
};

class BudgetError : public SawError {
 public:
  using SawError::SawError;
};

class NotSelfAvoiding : public SawError {
 public:
  // index is the vertex index (1-based step count) of the first repeat.
  explicit NotSelfAvoiding(std::size_t index)
      : SawError("path is not self-avoiding: vertex " + std::to_string(index) +
                 " repeats an earlier vertex"),
        index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

class BadDirection : public SawError {
 public:
  BadDirection(std::size_t position, int code, int dimension)
      : SawError("direction code " + std::to_string(code) + " at position " +
                 std::to_string(position) + " is out of range for d=" +
                 std::to_string(dimension)) {}
};

class ShiftOutOfRange : public SawError {
 public:
  using SawError::SawError;
};

class DimensionMismatch : public SawError {
 public:
  using SawError::SawError;
};

class PatternLongerThanPath : public SawError {
 public:
  using SawError::SawError;
};

class BudgetExceeded : public BudgetError {
 public:
  using BudgetError::BudgetError;
};

class RejectionBudgetExceeded : public BudgetError {
 public:
  explicit RejectionBudgetExceeded(std::uint64_t attempts)
      : BudgetError("rejection budget exceeded after " +
                    std::to_string(attempts) + " attempts"),
        attempts_(attempts) {}
  std::uint64_t attempts() const noexcept { return attempts_; }

 private:
  std::uint64_t attempts_;
};

class NoEscaperExists : public SawError {
 public:
  using SawError::SawError;
};

class ImpossiblePrefix : public SawError {
 public:
  using SawError::SawError;
};

class ZeroTotalMass : public SawError {
 public:
  using SawError::SawError;
};

class NoConvergence : public SawError {
 public:
  using SawError::SawError;
};

class StartsDisagree : public SawError {
 public:
  using SawError::SawError;
};

class CorruptCache : public SawError {
 public:
  using SawError::SawError;
};

class BadMagic : public SawError {
 public:
  using SawError::SawError;
};

class TruncatedRecord : public SawError {
 public:
  using SawError::SawError;
};

class UsageError : public SawError {
 public:
  using SawError::SawError;
};

}  // namespace sawlab
