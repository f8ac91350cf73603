#ifndef BSV_ERRORS_HPP
#define BSV_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace bsv
{

/// Base of every error raised by the library. Callers that only need to
/// distinguish "numerical failure" from "bad input" can catch this.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

// quantum_field
class BranchAmbiguity : public Error { public: using Error::Error; };

// tunneling_solver
class NonConvergedQuadrature : public Error { public: using Error::Error; };
class NoValidWindow : public Error { public: using Error::Error; };
class NotConverged : public Error { public: using Error::Error; };
class SignViolation : public Error { public: using Error::Error; };
class NegativeImAction : public Error { public: using Error::Error; };

// ensemble
class QuadratureNotConverged : public Error { public: using Error::Error; };
class NoInteriorMax : public Error { public: using Error::Error; };
class RootNotBracketed : public Error { public: using Error::Error; };
class DivisionByZeroField : public Error { public: using Error::Error; };

// config
class ParseError : public Error
{
public:
  ParseError(const std::string& what, int line = 0)
    : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line)
  {}
  int line() const { return line_; }

private:
  int line_;
};

class ValidationError : public Error { public: using Error::Error; };

// output files
class ConfigHashMismatch : public Error { public: using Error::Error; };

} // namespace bsv

#endif
