#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace flowadmm {

// Error taxonomy. Everything derives from std::runtime_error so callers can
// catch coarsely; the CLI maps the concrete types onto exit codes.

class InvalidShapeError : public std::runtime_error {
 public:
  explicit InvalidShapeError(const std::string& what) : std::runtime_error(what) {}
};

class ParameterError : public std::runtime_error {
 public:
  explicit ParameterError(const std::string& what) : std::runtime_error(what) {}
};

// Iterative solver failed to reach its tolerance within the iteration budget.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double residual, std::size_t iterations)
      : std::runtime_error(what), residual(residual), iterations(iterations) {}
  double residual;
  std::size_t iterations;
};

// An iterate left the admissible region (non-finite or norm blow-up).
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, std::size_t iteration)
      : std::runtime_error(what), iteration(iteration) {}
  std::size_t iteration;
};

class TrainingDivergedError : public std::runtime_error {
 public:
  TrainingDivergedError(const std::string& what, std::size_t step)
      : std::runtime_error(what), step(step) {}
  std::size_t step;
};

class UnsupportedError : public std::runtime_error {
 public:
  explicit UnsupportedError(const std::string& what) : std::runtime_error(what) {}
};

// A theoretical statement was queried outside its hypotheses (e.g. Prop. 1
// with xi >= 1). Distinct from ParameterError so callers can report
// "hypotheses unmet" instead of failing.
class AssumptionError : public std::runtime_error {
 public:
  explicit AssumptionError(const std::string& what) : std::runtime_error(what) {}
};

class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace flowadmm
