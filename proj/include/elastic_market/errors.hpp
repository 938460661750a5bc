#ifndef ELASTIC_MARKET_ERRORS_HPP
#define ELASTIC_MARKET_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace elastic_market {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument lies outside the domain of a model or operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A quantity is undefined at the requested point (e.g. all bids zero).
class DegenerateError : public Error {
 public:
  using Error::Error;
};

/// An iterative method hit its iteration cap without meeting its tolerance.
class NonConvergence : public Error {
 public:
  using Error::Error;
};

/// The operation does not apply to this kind of model.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// A worst-case instance cannot be built for the requested parameters.
class InfeasibleError : public Error {
 public:
  InfeasibleError(const std::string& what, long min_users = 0)
      : Error(what), min_users_(min_users) {}
  /// Smallest user count that makes the construction feasible, 0 if none.
  long min_users() const noexcept { return min_users_; }

 private:
  long min_users_;
};

/// Model parameters or scenario fields violate a constraint.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Scenario text could not be parsed.
class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace elastic_market

#endif  // ELASTIC_MARKET_ERRORS_HPP
