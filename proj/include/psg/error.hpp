#pragma once

#include <stdexcept>
#include <string>

namespace psg {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data (instances, configs, plans).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

/// A configured memory or state-count cap would be exceeded.
class ResourceError : public Error {
 public:
  using Error::Error;
};

/// Requested duration or window lies beyond the available horizon.
class HorizonError : public Error {
 public:
  using Error::Error;
};

class ReducibleChainError : public Error {
 public:
  ReducibleChainError(int from, int to)
      : Error("chain is reducible: site " + std::to_string(to) +
              " is unreachable from site " + std::to_string(from)),
        from_(from),
        to_(to) {}
  int from() const { return from_; }
  int to() const { return to_; }

 private:
  int from_;
  int to_;
};

class TruncationError : public Error {
 public:
  TruncationError(int from, int to, double tail)
      : Error("first-visit horizon too short: pair (" + std::to_string(from) +
              "," + std::to_string(to) + ") has tail mass " +
              std::to_string(tail)),
        from_(from),
        to_(to),
        tail_(tail) {}
  int from() const { return from_; }
  int to() const { return to_; }
  double tail() const { return tail_; }

 private:
  int from_;
  int to_;
  double tail_;
};

class NoFeasibleSchedule : public Error {
 public:
  using Error::Error;
};

}  // namespace psg
