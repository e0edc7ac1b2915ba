#pragma once

#include <stdexcept>
#include <string>

namespace cvqkd {

// Configuration / usage problems: CLI maps these to exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Numerical / signal-processing failures: CLI maps these to exit code 3.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NonPositiveShotNoise : NumericalError {
  NonPositiveShotNoise() : NumericalError("vacuum variance does not exceed electronic variance; captures mis-ordered or detector model broken") {}
};

struct InsufficientSamples : ConfigError {
  explicit InsufficientSamples(const std::string& what) : ConfigError(what) {}
};

struct InvalidOrder : ConfigError {
  explicit InvalidOrder(const std::string& what) : ConfigError(what) {}
};

struct MissingCoefficient : ConfigError {
  explicit MissingCoefficient(const std::string& what) : ConfigError(what) {}
};

struct AmbiguousPeak : NumericalError {
  explicit AmbiguousPeak(const std::string& what) : NumericalError(what) {}
};

struct TimingNotFound : NumericalError {
  explicit TimingNotFound(const std::string& what) : NumericalError(what) {}
};

struct Diverged : NumericalError {
  explicit Diverged(const std::string& what) : NumericalError(what) {}
};

struct NegativeTransmittance : NumericalError {
  explicit NegativeTransmittance(const std::string& what) : NumericalError(what) {}
};

struct NumericalInstability : NumericalError {
  explicit NumericalInstability(const std::string& what) : NumericalError(what) {}
};

struct DomainError : NumericalError {
  explicit DomainError(const std::string& what) : NumericalError(what) {}
};

struct FitDiverged : NumericalError {
  explicit FitDiverged(const std::string& what) : NumericalError(what) {}
};

} // namespace cvqkd
