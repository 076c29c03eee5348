#pragma once

#include <stdexcept>
#include <string>

namespace delaysync {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

// Agent model violates one of the standing hypotheses (weak instability,
// stabilizability, detectability). `check()` names the failed test.
class ModelAssumptionError : public Error {
 public:
  ModelAssumptionError(std::string check, const std::string& what)
      : Error(what), check_(std::move(check)) {}
  const std::string& check() const { return check_; }

 private:
  std::string check_;
};

// Requested reference lies outside the set of attainable constant outputs.
class InfeasibleReferenceError : public Error {
 public:
  InfeasibleReferenceError(const std::string& what, int component,
                           double distance)
      : Error(what), component_(component), distance_(distance) {}
  int component() const { return component_; }
  double distance() const { return distance_; }

 private:
  int component_;
  double distance_;
};

// An identity that holds by construction failed numerically.
class SynthesisIntegrityError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  using Error::Error;
};

class UnrootedGraphError : public Error {
 public:
  using Error::Error;
};

class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, long tick)
      : Error(what), tick_(tick) {}
  long tick() const { return tick_; }

 private:
  long tick_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace delaysync
