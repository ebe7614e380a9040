#pragma once

#include <stdexcept>
#include <string>

namespace stlrrt {

/// Base of every library error. `code()` is a stable identifier used in
/// machine-readable error reports.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

#define STLRRT_DEFINE_ERROR(Name)                                       \
  class Name : public Error {                                           \
   public:                                                              \
    explicit Name(const std::string& message) : Error(#Name, message) {} \
  }

STLRRT_DEFINE_ERROR(DimensionMismatch);
STLRRT_DEFINE_ERROR(InvalidArgument);
STLRRT_DEFINE_ERROR(FragmentViolation);
STLRRT_DEFINE_ERROR(InvalidCount);
STLRRT_DEFINE_ERROR(Unbounded);
STLRRT_DEFINE_ERROR(DimensionTooLarge);
STLRRT_DEFINE_ERROR(EmptyInterval);
STLRRT_DEFINE_ERROR(EmptySet);
STLRRT_DEFINE_ERROR(FreeTimeOutOfRange);
STLRRT_DEFINE_ERROR(OutOfDomain);
STLRRT_DEFINE_ERROR(ParametersUnbound);
STLRRT_DEFINE_ERROR(NotASwitchTime);
STLRRT_DEFINE_ERROR(SolverFailure);
STLRRT_DEFINE_ERROR(Infeasible);
STLRRT_DEFINE_ERROR(AllInfeasible);
STLRRT_DEFINE_ERROR(QpInfeasible);
STLRRT_DEFINE_ERROR(PreconditionViolation);
STLRRT_DEFINE_ERROR(NoEligibleNode);
STLRRT_DEFINE_ERROR(ZeroDuration);
STLRRT_DEFINE_ERROR(NoSolution);
STLRRT_DEFINE_ERROR(CoverageError);
STLRRT_DEFINE_ERROR(SchemaError);
STLRRT_DEFINE_ERROR(SemanticError);

#undef STLRRT_DEFINE_ERROR

/// Parse failure with the byte offset of the offending token and the tokens
/// that would have been accepted there.
class SyntaxError : public Error {
 public:
  SyntaxError(std::size_t position, std::string expected, const std::string& found)
      : Error("SyntaxError", "at position " + std::to_string(position) + ": expected " +
                                 expected + ", found " + found),
        position_(position),
        expected_(std::move(expected)) {}

  std::size_t position() const noexcept { return position_; }
  const std::string& expected() const noexcept { return expected_; }

 private:
  std::size_t position_;
  std::string expected_;
};

}  // namespace stlrrt
