#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pocr {

// Base of every error raised by the toolkit. Subclasses name the failure kind
// so callers (and the CLI exit-code mapping) can dispatch on type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define POCR_DEFINE_ERROR(Name)        \
  class Name : public Error {          \
   public:                             \
    using Error::Error;                \
  }

POCR_DEFINE_ERROR(UnsupportedCharacter);
POCR_DEFINE_ERROR(InvalidStyle);
POCR_DEFINE_ERROR(PartitionError);
POCR_DEFINE_ERROR(MissingAsset);
POCR_DEFINE_ERROR(DecodeError);
POCR_DEFINE_ERROR(ShapeError);
POCR_DEFINE_ERROR(NoBoundaryError);
POCR_DEFINE_ERROR(ConfigError);
POCR_DEFINE_ERROR(NumericsError);
POCR_DEFINE_ERROR(ContractError);
POCR_DEFINE_ERROR(IoError);
POCR_DEFINE_ERROR(EmptyLexicon);
POCR_DEFINE_ERROR(UsageError);

#undef POCR_DEFINE_ERROR

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class TrainingDiverged : public Error {
 public:
  explicit TrainingDiverged(int epoch)
      : Error("training diverged (non-finite loss) in epoch " + std::to_string(epoch)),
        epoch_(epoch) {}
  int epoch() const noexcept { return epoch_; }

 private:
  int epoch_;
};

}  // namespace pocr
