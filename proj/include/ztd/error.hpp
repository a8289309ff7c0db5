#pragma once

#include <stdexcept>
#include <string>

namespace ztd {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;

  /// Short machine-readable tag, e.g. "ZeroLikelihood".
  virtual const char* kind() const noexcept { return "Error"; }
};

#define ZTD_DEFINE_ERROR(Name)                                     \
  class Name : public Error {                                      \
   public:                                                         \
    using Error::Error;                                            \
    const char* kind() const noexcept override { return #Name; }  \
  }

ZTD_DEFINE_ERROR(InvalidArgument);
ZTD_DEFINE_ERROR(ZeroLikelihood);
ZTD_DEFINE_ERROR(HorizonTooLarge);
ZTD_DEFINE_ERROR(MeanOutOfSupport);
ZTD_DEFINE_ERROR(ValidityExhausted);
ZTD_DEFINE_ERROR(DegenerateHistogram);
ZTD_DEFINE_ERROR(NegativeCount);
ZTD_DEFINE_ERROR(ParseError);

#undef ZTD_DEFINE_ERROR

/// Configuration value out of range. Carries the offending field and,
/// when known, the 1-based line of the config file it came from.
class ValidationError : public Error {
 public:
  ValidationError(std::string field, std::string reason, int line = 0)
      : Error(format(field, reason, line)),
        field_(std::move(field)),
        reason_(std::move(reason)),
        line_(line) {}

  const char* kind() const noexcept override { return "ValidationError"; }
  const std::string& field() const noexcept { return field_; }
  const std::string& reason() const noexcept { return reason_; }
  int line() const noexcept { return line_; }

 private:
  static std::string format(const std::string& field, const std::string& reason, int line) {
    std::string msg = "field=" + field + " reason=" + reason;
    if (line > 0) msg += " line=" + std::to_string(line);
    return msg;
  }

  std::string field_;
  std::string reason_;
  int line_;
};

}  // namespace ztd
