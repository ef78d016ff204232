#pragma once

#include <vector>

#include "kdvlab/grid.h"
#include "kdvlab/signal.h"
#include "kdvlab/spectral.h"
#include "kdvlab/window.h"

namespace kdvlab {

/// Truncated moment problem int_0^T v(t) exp(i lambda_k t) dt = d_k for
/// k = -K..-1, 1..K, plus an optional check band K < |k| <= K_check whose
/// targets are not imposed but measure leakage.
struct MomentProblem {
  double horizon = 0.0;
  int count = 0;
  std::vector<int> indices;
  std::vector<double> frequencies;
  std::vector<cd> targets;
  std::vector<int> check_indices;
  std::vector<double> check_frequencies;
  std::vector<cd> check_targets;
  double asymptotic_a = 0.0;  // lambda_k ~ a k^3 beyond the computed modes
  // Provenance: the pairing p_k = int phi_k y dx and the slope used for d_k.
  std::vector<cd> pairings;
  std::vector<cd> slopes;
  double state_norm = 0.0;
  double projection_tail = 0.0;
  std::string source;

  /// Position of index k in the moment list.
  int position(int k) const;
  double max_target() const;
};

/// Real grid function sum_k coeff_k phi_k (symmetric pairs must be supplied
/// with conjugate coefficients); imaginary rounding is dropped.
GridFunction sample_modes(const Spectrum& spec, const std::vector<std::pair<int, cd>>& terms, int n);

/// p_k(y) = int_0^L phi_k y dx by the trapezoid rule on the grid.
cd pairing(const EigenMode& m, const GridFunction& y);

/// d_k = -p_k(y0)/phi_k'(L) for |k| <= K; modes of spec beyond K form the
/// check band. Requires spec.count >= K.
MomentProblem assemble_moment_problem(const GridFunction& y0, const Spectrum& spec, double T,
                                      int K, double slope_threshold = 1e-6);

/// Targets for steering 0 to yT: d_k = exp(i lambda_k T) p_k(yT)/phi_k'(L).
MomentProblem reach_moment_problem(const GridFunction& yT, const Spectrum& spec, double T, int K,
                                   double slope_threshold = 1e-6);

/// Frequencies entering the infinite products: exact for |k| <= K, a*|k|^3
/// with the sign of k beyond, truncated at |k| <= n_prod.
struct ProductFrequencies {
  std::vector<double> exact;  // lambda_1..lambda_K; negative branch by symmetry
  double a = 0.0;
  int n_prod = 200;
  double lambda(int k) const;
};

ProductFrequencies product_frequencies(const MomentProblem& problem, int n_prod);

struct ProductValue {
  cd value;
  double log_tail;  // estimate of |log| of the omitted factors
};

/// Phi_n(z) = prod_{k != 0, n; |k| <= n_prod} (1 - z/(lambda_k - lambda_n)).
ProductValue product_Phi(int n, cd z, const ProductFrequencies& freqs);

/// g_n(z) = Psi_n(-z) H(z + lambda_n) with Psi_n(z) = Phi_n(z - lambda_n).
cd g_fun(int n, cd z, const ProductFrequencies& freqs, const Window& window);

struct SynthesisSettings {
  int n_prod = 200;
  double band_width = 4000.0;  // half-width of each sampled band around -lambda_n
  double band_tol = 1e-10;     // |W| at the band edge relative to max|W|
  double tail_bound = 1e-6;    // Paley-Wiener tail mass bound
  double imag_tol = 1e-6;
  int min_samples = 4096;
};

struct SynthesisAudit {
  double tail_mass = 0.0;
  double max_imag = 0.0;
  double xi_max = 0.0;
  double dxi = 0.0;
  double band_half_width = 0.0;
  double edge_ratio = 0.0;
  int fft_size = 0;
  int samples = 0;
};

struct WindowControl {
  TimeSignal v;
  SynthesisAudit audit;
};

WindowControl synthesize_control(const MomentProblem& problem, const WindowParams& params,
                                 const SynthesisSettings& settings = {});

struct GramianControl {
  TimeSignal v;
  std::vector<cd> amplitudes;  // v(t) = sum_j a_j exp(-i lambda_j t)
  double condition = 0.0;
};

/// Closed-form Gram matrix G_kj = int_0^T exp(i(lambda_k - lambda_j)t) dt.
Eigen::MatrixXcd gram_matrix(const std::vector<double>& lambdas, double T);

GramianControl minimal_norm_control(const MomentProblem& problem, double cond_cap = 1e12,
                                    int min_samples = 4096);

struct MomentResiduals {
  std::vector<cd> moments;
  std::vector<double> residuals;
  double max_residual = 0.0;
  std::vector<double> check_residuals;
  double max_check_residual = 0.0;
};

MomentResiduals verify_moments(const TimeSignal& v, const MomentProblem& problem);

struct CalibrationStep {
  double gamma = 0.0;
  double off_diagonal = 0.0;
  double envelope = 0.0;
  bool passed = false;
};

struct Calibration {
  WindowParams params;
  std::vector<CalibrationStep> trace;
};

/// Largest |g_n(-lambda_k) - delta_nk| over the moment set and check band.
double interpolation_error(const MomentProblem& problem, const Window& window, int n_prod,
                           bool include_check = true);

/// Largest |g_n(x)| over |x + lambda_n| in [X, 2X], X = half_width.
double envelope_tail(const MomentProblem& problem, const Window& window, int n_prod,
                     double half_width);

Calibration calibrate_gamma(const MomentProblem& problem, double start,
                            const SynthesisSettings& settings = {}, int max_doublings = 20);

/// Time samples needed to resolve every frequency of the problem.
int resolving_samples(const MomentProblem& problem, double extra_band, int min_samples);

}  // namespace kdvlab
