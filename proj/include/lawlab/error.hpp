#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lawlab {

/// Base of every error raised by the library. `code()` is a stable
/// machine-readable tag used in CLI error objects.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t row, const std::string& reason)
      : Error("ParseError", "row " + std::to_string(row) + ": " + reason),
        row_(row),
        reason_(reason) {}

  std::size_t row() const noexcept { return row_; }
  const std::string& reason() const noexcept { return reason_; }

 private:
  std::size_t row_;
  std::string reason_;
};

#define LAWLAB_DEFINE_ERROR(Name)                                   \
  class Name : public Error {                                       \
   public:                                                          \
    explicit Name(const std::string& what) : Error(#Name, what) {} \
  }

LAWLAB_DEFINE_ERROR(SchemaError);
LAWLAB_DEFINE_ERROR(MissingField);
LAWLAB_DEFINE_ERROR(MissingArch);
LAWLAB_DEFINE_ERROR(UnknownArch);
LAWLAB_DEFINE_ERROR(OverflowError);
LAWLAB_DEFINE_ERROR(DomainError);
LAWLAB_DEFINE_ERROR(ConfigError);
LAWLAB_DEFINE_ERROR(ObjectiveMismatch);
LAWLAB_DEFINE_ERROR(NonFinite);
LAWLAB_DEFINE_ERROR(EmptyInit);
LAWLAB_DEFINE_ERROR(DegenerateResamples);
LAWLAB_DEFINE_ERROR(OutOfRange);
LAWLAB_DEFINE_ERROR(NoInteriorMinimum);
LAWLAB_DEFINE_ERROR(Degenerate);
LAWLAB_DEFINE_ERROR(EmptySplit);
LAWLAB_DEFINE_ERROR(EmptyReports);
LAWLAB_DEFINE_ERROR(HashMismatch);

#undef LAWLAB_DEFINE_ERROR

}  // namespace lawlab
