#pragma once

#include <stdexcept>
#include <string>

namespace deepo {

// Base class for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid user input: bad configuration values, malformed flags.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Operands with incompatible shapes.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// A closed-loop matrix with spectral radius at or beyond the stability margin.
class UnstableError : public Error {
 public:
  UnstableError(const std::string& what, double spectral_radius)
      : Error(what), spectral_radius_(spectral_radius) {}
  double spectral_radius() const { return spectral_radius_; }

 private:
  double spectral_radius_;
};

// A gradient step left the stability region (stepsize too large).
class StepUnstableError : public UnstableError {
 public:
  StepUnstableError(const std::string& what, double spectral_radius, long iteration)
      : UnstableError(what, spectral_radius), iteration_(iteration) {}
  long iteration() const { return iteration_; }

 private:
  long iteration_;
};

// A linear system or eigenvalue decomposition failed numerically.
class SolveError : public Error {
 public:
  using Error::Error;
};

// An iterative solver hit its iteration cap before reaching tolerance.
class NoConvergenceError : public Error {
 public:
  NoConvergenceError(const std::string& what, long iterations, double residual)
      : Error(what), iterations_(iterations), residual_(residual) {}
  long iterations() const { return iterations_; }
  double residual() const { return residual_; }

 private:
  long iterations_;
  double residual_;
};

// A matrix required to have full row rank does not.
class RankDeficientError : public Error {
 public:
  RankDeficientError(const std::string& what, double sigma_min)
      : Error(what), sigma_min_(sigma_min) {}
  double sigma_min() const { return sigma_min_; }

 private:
  double sigma_min_;
};

// A matrix required to be positive semi-definite has a negative eigenvalue.
class NotPsdError : public Error {
 public:
  NotPsdError(const std::string& what, double lambda_min)
      : Error(what), lambda_min_(lambda_min) {}
  double lambda_min() const { return lambda_min_; }

 private:
  double lambda_min_;
};

// Fewer data columns than the rank condition can possibly satisfy.
class InsufficientDataError : public Error {
 public:
  InsufficientDataError(const std::string& what, long length, long required)
      : Error(what), length_(length), required_(required) {}
  long length() const { return length_; }
  long required() const { return required_; }

 private:
  long length_;
  long required_;
};

// A policy violating the linear data constraint X_- G = I.
class InfeasibleError : public Error {
 public:
  InfeasibleError(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

// The (L, Sigma) change of variables hit a numerically singular Sigma.
class SingularSigmaError : public Error {
 public:
  SingularSigmaError(const std::string& what, double lambda_min)
      : Error(what), lambda_min_(lambda_min) {}
  double lambda_min() const { return lambda_min_; }

 private:
  double lambda_min_;
};

// Random generation exhausted its retry budget.
class GenerationError : public Error {
 public:
  using Error::Error;
};

// Filesystem access failed.
class IoError : public Error {
 public:
  using Error::Error;
};

// A data or trace file is malformed.
class ParseError : public Error {
 public:
  using Error::Error;
};

// A finite-difference probe left the feasible region even after shrinking h.
class InfeasiblePerturbationError : public Error {
 public:
  using Error::Error;
};

}  // namespace deepo
