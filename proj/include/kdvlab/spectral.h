#pragma once

#include <array>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Sparse>

#include "kdvlab/common.h"

namespace kdvlab {

/// Members of the critical set 2*pi*sqrt((k^2 + k*l + l^2)/3), k, l >= 1,
/// not exceeding l_max, ascending and deduplicated.
std::vector<double> critical_lengths(double l_max);

struct CriticalCheck {
  bool critical = false;
  double nearest = 0.0;
  double distance = 0.0;
  long quadratic_form = 0;  // k^2 + k*l + l^2 of the nearest member
};

CriticalCheck is_critical(double length, double tol = 1e-9);

/// Roots of r^3 + r + i*lambda = 0. Throws DegenerateCubic when two roots
/// coincide (lambda = +-2/(3*sqrt(3))).
std::array<cd, 3> cubic_roots(double lambda);

/// Determinant of the row-normalized boundary matrix for
/// w(0) = 0, w(L) = 0, w'(0) = w'(L) on the exponential basis.
cd char_determinant(double lambda, double length);

/// Real characteristic function in the parametrization lambda = 8a^3 - 2a,
/// a > 1/2. Its zeros are the positive eigen-frequencies.
double reduced_characteristic(double a, double length);

/// One eigenpair of A_m w = -w''' - w' on the domain
/// w(0) = w(L) = 0, w'(0) = w'(L).
///
/// The eigenfunction is stored as sum_j coeff_j * exp(r_j * (x - shift_j)),
/// with shift_j = L when Re r_j > 0 so that no term overflows.
struct EigenMode {
  int k = 0;
  double lambda = 0.0;
  double length = 0.0;
  std::array<cd, 3> roots{};
  std::array<cd, 3> scaled_coeffs{};
  std::array<double, 3> shifts{};
  cd slope0{};
  cd slopeL{};
  double l2_norm = 1.0;

  /// Amplitudes c_j of the unshifted representation sum_j c_j exp(r_j x).
  std::array<cd, 3> coeffs() const;
  /// d^order/dx^order phi at x.
  cd eval(double x, int order = 0) const;
  /// The mode of index -k.
  EigenMode conjugate() const;
};

struct Spectrum {
  double length = 0.0;
  int count = 0;
  std::vector<EigenMode> modes;  // k = -K..-1, 1..K

  const EigenMode& mode(int k) const;
  /// lambda_k for k = -K..-1, 1..K.
  std::vector<double> frequencies() const;
  std::vector<int> indices() const;
};

enum class ModeSeeding { kScan, kLambdaHat, kAsymptoticA };

struct ModeOptions {
  double critical_tol = 1e-9;
  ModeSeeding seeding = ModeSeeding::kScan;
  int max_iter = 200;
};

/// Computes modes k = +-1..+-count. Negative modes are conjugates.
Spectrum solve_modes(double length, int count, const ModeOptions& opts = {});

/// Refines a single root of the reduced characteristic function starting
/// from the given value of a, returning the converged a.
double refine_root(double a_seed, double length, int max_iter = 200);

struct AsymptoticMode {
  double lambda_hat = 0.0;
  double a_k = 0.0;
  double alpha = 0.0;
  std::function<cd(double)> phi_hat;
};

AsymptoticMode asymptotic_mode(int k, double length);

struct SlopeReport {
  std::vector<int> k;
  std::vector<double> slope;  // |phi_k'(L)|
  std::vector<double> ratio;  // |phi_k'(L)| / |k|
  double min_slope = 0.0;
  double min_ratio = 0.0;
  std::vector<int> degenerate;
  double threshold = 1e-6;
};

SlopeReport boundary_slope_check(const Spectrum& spec, double threshold = 1e-6);

struct GapReport {
  double alpha = 3.0;
  double a = 0.0;
  double b = 0.0;
  double gamma = 0.0;
  double Gamma1 = 0.0;
  double Gamma2 = 0.0;
};

GapReport gap_report(const Spectrum& spec);
/// Same report from an explicit symmetric list: positive[k-1] = lambda_k,
/// negative[k-1] = lambda_{-k}.
GapReport gap_report(const std::vector<double>& positive,
                     const std::vector<double>& negative);

struct ModeResiduals {
  double boundary = 0.0;     // max |phi(0)|, |phi(L)|, |phi'(0) - phi'(L)|
  double equation = 0.0;     // ||-phi''' - phi' - i lambda phi|| / ||phi||
  double orthonormal = 0.0;  // max |<phi_j, phi_k> - delta_jk|
};

ModeResiduals mode_residuals(const Spectrum& spec);

/// Exact inner product int_0^L phi_j conj(phi_k) dx of two modes.
cd mode_inner(const EigenMode& a, const EigenMode& b);

/// Skew-symmetric finite-difference matrix of A_m on n interior points.
Eigen::SparseMatrix<double> fd_operator_am(double length, int n);

/// Positive frequencies of the FD discretization of A_m, ascending, at most
/// count of them, from a dense Hermitian eigensolve.
std::vector<double> fd_frequencies_am(double length, int n, int count);

struct OriginalSpectrumReport {
  int n = 0;
  std::vector<cd> eigenvalues;  // nearest the origin, ascending modulus
  double eigvec_condition = 0.0;
};

/// FD eigensolve of A with domain phi(0) = phi(L) = phi'(0) = 0.
OriginalSpectrumReport solve_modes_original(double length, int count,
                                            int n = 400);

}  // namespace kdvlab
