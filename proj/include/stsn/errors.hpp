#pragma once

#include <stdexcept>
#include <string>

namespace stsn {

/// Base class for every error raised by the library. `category()` is the
/// machine-readable tag reported by the command-line tool.
class Error : public std::runtime_error {
 public:
  Error(std::string category, const std::string& message)
      : std::runtime_error(message), category_(std::move(category)) {}

  const std::string& category() const noexcept { return category_; }

 private:
  std::string category_;
};

#define STSN_DEFINE_ERROR(Name, Category)                                 \
  class Name : public Error {                                             \
   public:                                                                \
    explicit Name(const std::string& message) : Error(Category, message) {} \
  }

// Tagging codec.
STSN_DEFINE_ERROR(OverlapArityError, "codec");
STSN_DEFINE_ERROR(BoundsError, "codec");
STSN_DEFINE_ERROR(InvalidTransitionError, "codec");
STSN_DEFINE_ERROR(VocabularyError, "vocabulary");

// Data loading.
STSN_DEFINE_ERROR(ParseError, "parse");
STSN_DEFINE_ERROR(ValidationError, "validation");
STSN_DEFINE_ERROR(IoError, "io");

// Model.
STSN_DEFINE_ERROR(AlignmentError, "alignment");
STSN_DEFINE_ERROR(ShapeError, "shape");
STSN_DEFINE_ERROR(ConfigError, "config");
STSN_DEFINE_ERROR(VocabularyMismatch, "vocabulary");
STSN_DEFINE_ERROR(NonFiniteLoss, "numeric");

// Checkpoints.
STSN_DEFINE_ERROR(VersionMismatch, "checkpoint");
STSN_DEFINE_ERROR(CorruptCheckpoint, "checkpoint");

// Command line.
STSN_DEFINE_ERROR(UsageError, "usage");

#undef STSN_DEFINE_ERROR

}  // namespace stsn
