#pragma once

#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace kdvlab {

using cd = std::complex<double>;
using Vec = Eigen::VectorXd;
using CVec = Eigen::VectorXcd;

inline constexpr double kPi = std::numbers::pi;
inline constexpr cd kI{0.0, 1.0};

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An input violated a documented precondition.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// An iterative procedure stopped before reaching its tolerance.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// The cubic r^3 + r + i*lambda has a repeated root at this lambda.
class DegenerateCubic : public Error {
 public:
  explicit DegenerateCubic(double lambda);
  double lambda;
};

/// A numerical audit (support, reality, conditioning) failed.
class AuditError : public Error {
 public:
  using Error::Error;
};

/// A time stepper produced non-finite values.
class SolverError : public Error {
 public:
  using Error::Error;
};

/// A usage error from configuration or command-line parsing.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Trapezoid-rule integral of uniformly spaced samples.
double trapezoid(const std::vector<double>& y, double dx);

}  // namespace kdvlab
