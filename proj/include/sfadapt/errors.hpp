#pragma once

#include <stdexcept>
#include <string>

namespace sfa {

// Base for every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A precondition on an argument was violated (shape, range, rank...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

enum class FormatErrorKind {
  kBadMagic,
  kMalformedHeader,
  kTruncatedPayload,
  kPayloadLengthMismatch,
  kProbabilityOutOfRange,
  kUnsupportedVariant,
  kNotRepresentable,
};

// Malformed or unsupported file contents. `kind()` distinguishes the failure
// so callers (and tests) do not have to match on message text.
class FormatError : public Error {
 public:
  FormatError(FormatErrorKind kind, const std::string& what)
      : Error(what), kind_(kind) {}
  FormatErrorKind kind() const noexcept { return kind_; }

 private:
  FormatErrorKind kind_;
};

}  // namespace sfa
