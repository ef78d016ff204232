#pragma once

#include <memory>
#include <vector>

#include "kdvlab/control.h"

namespace kdvlab {

enum class HumDesign {
  /// Gramian on the exact frequencies and moment targets.
  kExact,
  /// Gramian on the simulator's own modes: eigenpairs of the FD operator
  /// nearest the exact ones, propagated by the Crank-Nicolson recurrence.
  kDiscrete
};

struct DiscreteReach;

/// Shared discretization for the reach and null-control loops.
struct NonlinearSetup {
  const Spectrum* spec = nullptr;
  double horizon = 1.0;
  int K = 8;
  int n_x = 1600;
  double dt_max = 2.5e-5;
  double cond_cap = 1e12;
  /// reach_map_P warns when ||u||_{L2(0,T)} exceeds this.
  double control_warning = 10.0;
  StepperOptions stepper;
  HumDesign design = HumDesign::kDiscrete;
  /// Discrete design data, built on first use for the current grid.
  mutable std::shared_ptr<const DiscreteReach> cache;

  Grid grid() const;
};

/// Discrete modes of the jump system on one grid: S q_j = i omega_j q_j with
/// h q_j^H q_j = 1, and the map from grid controls to final modal content.
struct DiscreteReach {
  Grid grid;
  std::vector<int> indices;
  std::vector<double> omega;
  Eigen::MatrixXcd vectors;  // n_x x 2K
  Eigen::MatrixXcd kappa;    // 2K x (n_t + 1): c_j(T) = sum_n kappa_jn v_n
  Eigen::MatrixXcd gram;
  double condition = 0.0;
  double max_residual = 0.0;  // max_j ||S q_j - i omega_j q_j|| / |omega_j|
};

DiscreteReach build_discrete_reach(const Spectrum& spec, const Grid& grid, int K);

struct HumControl {
  TimeSignal u;  // Neumann control on the grid times
  TimeSignal v;  // jump control from the Gramian
  double condition = 0.0;
};

/// Minimal-norm control steering 0 to yT for the linear Neumann system on
/// the K-mode truncation: Gramian jump control, then u = v + y_x(., 0).
HumControl hum_reach(const GridFunction& yT, const NonlinearSetup& setup);

/// Final state of the nonlinear system from rest under u.
GridFunction reach_map_P(const TimeSignal& u, const NonlinearSetup& setup);

struct ReachResult {
  double target_norm = 0.0;
  std::vector<double> iterate_norms;  // ||y~^(j)||
  std::vector<double> residuals;      // ||P L y~^(j) - yT||
  std::vector<double> span_residuals; // same, projected on the K controlled modes
  std::vector<double> ratios;         // span_residual(j+1)/span_residual(j)
  TimeSignal control;
  GridFunction final_state;
  bool converged = false;
  int iterations = 0;

  double mean_ratio() const;
};

/// Iterates y~ <- y~ - (P L y~ - yT) from y~ = yT until the in-span residual
/// stops contracting or falls below 1e-9 ||yT||; converged when the final
/// full residual is at most tol ||yT||. Modes above K are not controlled, so
/// the full residual has a floor set by their leakage.
ReachResult fixed_point_reach(const GridFunction& yT, const NonlinearSetup& setup, double tol,
                              int max_iter);

struct NullResult {
  double initial_norm = 0.0;
  std::vector<double> residuals;  // ||F(u^(j))||
  std::vector<double> control_norms;
  TimeSignal control;
  bool converged = false;
  int iterations = 0;
};

/// Newton-Picard loop u <- u - hum_reach(F(u)) with F(u) the nonlinear
/// final state from y0, starting from the linear null control.
NullResult null_control_nonlinear(const GridFunction& y0, const NonlinearSetup& setup, double tol,
                                  int max_iter);

struct RemainderFit {
  std::vector<double> scales;
  std::vector<double> gaps;  // ||P(s u) - linear final state of s u||
  double exponent = 0.0;
};

/// Fits gap ~ s^p for the nonlinear-minus-linear final states under s*u.
RemainderFit quadratic_remainder(const TimeSignal& u, const NonlinearSetup& setup,
                                 const std::vector<double>& scales);

}  // namespace kdvlab
