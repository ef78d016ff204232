#pragma once

#include <string>
#include <vector>

#include "kdvlab/common.h"

namespace kdvlab {

/// A function of t sampled on the uniform grid t_i = i*T/N, i = 0..N.
struct TimeSignal {
  double horizon = 0.0;
  std::vector<cd> values;
  double max_imag = 0.0;  // largest |Im| seen before realification
  std::string label;

  TimeSignal() = default;
  TimeSignal(double T, std::vector<cd> v, std::string name = {});
  static TimeSignal zeros(double T, int steps, std::string name = {});
  static TimeSignal from_real(double T, const std::vector<double>& v, std::string name = {});

  int steps() const { return static_cast<int>(values.size()) - 1; }
  double dt() const { return horizon / steps(); }
  double time(int i) const { return horizon * i / steps(); }
  /// Linear interpolation; zero outside [0, T].
  cd at(double t) const;
  std::vector<double> real() const;
  std::vector<double> imag() const;
  /// L2(0, T) norm by the trapezoid rule.
  double l2_norm() const;
  double max_abs() const;
  /// Samples on another uniform grid by linear interpolation.
  TimeSignal resampled(int steps) const;
  /// Drops the imaginary part after checking max|Im| <= tol * max|Re|.
  /// Records max|Im| in max_imag. Throws AuditError otherwise.
  void realify(double tol = 1e-6);
};

TimeSignal operator+(const TimeSignal& a, const TimeSignal& b);
TimeSignal operator-(const TimeSignal& a, const TimeSignal& b);
TimeSignal operator*(double s, const TimeSignal& a);

/// int_0^T v(t) exp(i*lambda*t) dt for each lambda, integrating the
/// piecewise degree-7 Lagrange interpolant of the samples exactly against
/// the exponential.
std::vector<cd> signal_moments(const TimeSignal& v, const std::vector<double>& lambdas);

/// Relative L2 distance ||a - b|| / ||b|| (absolute when ||b|| = 0), after
/// resampling a onto b's grid if needed.
double relative_distance(const TimeSignal& a, const TimeSignal& b);

}  // namespace kdvlab
