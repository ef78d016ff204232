#pragma once

#include <vector>

#include "kdvlab/common.h"

namespace kdvlab {

struct WindowParams {
  double mu = 0.5;
  double nu = 0.0;
  double beta = 0.0;
  double gamma_param = 0.0;
  double alpha0 = 0.0;
};

/// Parameters for horizon T: beta = T/2, nu = gamma/beta, alpha0 from the
/// normalization H(0) = 1.
WindowParams make_window_params(double T, double gamma_param, double mu = 0.5);

/// exp(-nu^mu/(1-t)^mu - nu^mu/(1+t)^mu) on |t| < 1, zero elsewhere.
double sigma(double t, double nu, double mu);

/// H(z) = alpha0 * int_{-1}^{1} sigma(t) exp(-i*beta*z*t) dt by the
/// trapezoid rule on (-1, 1); sigma is flat at the endpoints, so the rule
/// converges spectrally once the node spacing resolves beta*|x|.
class Window {
 public:
  /// x_max is the largest |Re z| the caller intends to evaluate.
  explicit Window(const WindowParams& params, double x_max = 0.0);
  /// Uses exactly the given number of trapezoid intervals (a power of two).
  static Window with_intervals(const WindowParams& params, int intervals);

  const WindowParams& params() const { return params_; }
  int intervals() const { return intervals_; }
  double operator()(double x) const;
  cd operator()(cd z) const;
  /// H(x0 + m*dx) for m = -count..count. Uses one FFT when dx matches the
  /// node spacing (beta*dx*2/M = 2*pi/P for a power of two P), direct sums
  /// otherwise.
  std::vector<double> sample_grid(double x0, double dx, int count) const;
  /// |H(x) - H_2M(x)| at the given abscissas against a rule with twice the nodes.
  double quadrature_error(const std::vector<double>& xs) const;
  /// Smallest X such that block maxima of |H| stay below eps on
  /// [X, X + span]; scans up to x_cap and throws ConvergenceError beyond.
  double decay_cutoff(double eps, double x_cap) const;

 private:
  void build(int intervals);
  WindowParams params_;
  int intervals_ = 0;
  std::vector<double> t_;   // nonnegative nodes
  std::vector<double> ws_;  // alpha0 * weight * sigma, folded for t > 0
};

/// One-off evaluation; prefer a Window object when evaluating repeatedly.
cd window_H(cd z, const WindowParams& params);

struct DecayFit {
  double exponent = 0.0;  // p in ln|H| = -C|x|^p + D + E ln|x|
  double r2 = 0.0;
  double coefficient = 0.0;
  int samples = 0;
};

/// Fits the envelope of ln|H(x)| on (0, x_max] between the levels hi and lo.
DecayFit fit_window_decay(const Window& w, double x_max, double hi = 1e-1, double lo = 1e-13);

}  // namespace kdvlab
