#pragma once

#include <stdexcept>
#include <string>

namespace efm {

class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed or inconsistent input: bad CSV rows, schema violations,
// degenerate splits, unseen test levels.
class DataError : public Error {
public:
  using Error::Error;
};

// A forecast touched a parameter that was never defined for the active level.
class MissingParameterError : public DataError {
public:
  using DataError::DataError;
};

class ConfigError : public Error {
public:
  using Error::Error;
};

// Training produced a non-finite objective or parameter.
class DivergenceError : public Error {
public:
  DivergenceError(const std::string& what, long iteration, double eta)
      : Error(what), iteration(iteration), eta(eta) {}

  long iteration;
  double eta;
};

}  // namespace efm
