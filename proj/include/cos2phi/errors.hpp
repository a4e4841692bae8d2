#ifndef COS2PHI_ERRORS_HPP
#define COS2PHI_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace cos2phi {

// Base of every library error. `kind()` is the machine-readable tag the CLI
// reports; `exit_code()` follows the CLI contract (3 validation, 4 numerical).
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
    virtual const char *kind() const noexcept = 0;
    virtual int exit_code() const noexcept = 0;
};

class ValidationError : public Error {
  public:
    ValidationError(std::string field, const std::string &what)
        : Error(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}
    const std::string &field() const noexcept { return field_; }
    const char *kind() const noexcept override { return "validation"; }
    int exit_code() const noexcept override { return 3; }

  private:
    std::string field_;
};

class UsageError : public Error {
  public:
    using Error::Error;
    const char *kind() const noexcept override { return "usage"; }
    int exit_code() const noexcept override { return 2; }
};

class NumericalError : public Error {
  public:
    using Error::Error;
    const char *kind() const noexcept override { return "numerical"; }
    int exit_code() const noexcept override { return 4; }
};

class DecompositionError : public NumericalError {
  public:
    DecompositionError(const std::string &what, double residual)
        : NumericalError(what), residual_(residual) {}
    double residual() const noexcept { return residual_; }
    const char *kind() const noexcept override { return "decomposition"; }

  private:
    double residual_;
};

}  // namespace cos2phi

#endif  // COS2PHI_ERRORS_HPP
