#pragma once

#include <functional>
#include <string>
#include <vector>

#include "kdvlab/grid.h"
#include "kdvlab/signal.h"
#include "kdvlab/spectral.h"

namespace kdvlab {

/// Right-hand side f(t, x); an empty function is the zero source.
struct SourceTerm {
  std::function<double(double, double)> f;

  static SourceTerm zero() { return {}; }
  bool is_zero() const { return !f; }
  /// f(t, x_i) at the interior nodes of an n-point grid on (0, L).
  Vec sample(double t, double length, int n) const;
};

enum class JumpMethod { kFiniteDifference, kModal };

enum class NonlinearTreatment { kExplicit, kPicard };

struct StepperOptions {
  /// Steps between stored snapshots; 0 picks about 200 snapshots.
  int stride = 0;
  /// Implicit Euler half-steps before Crank-Nicolson (0 or an even count).
  int startup_half_steps = 0;
  NonlinearTreatment nonlinear = NonlinearTreatment::kExplicit;
  /// Advective bound dt * max|y| / h <= cfl for the explicit nonlinear term.
  double cfl = 0.5;
  double picard_tol = 1e-12;
  int picard_max_iter = 30;
  /// Modal solves reject y0 whose relative projection tail exceeds this.
  double projection_tol = 1e-3;
};

/// Solution of one of the KdV systems on a Grid.
///
/// Series (traces, control, energy, H1 seminorm) hold one value per time
/// level, n = 0..n_t. States are kept every `stride` steps plus the last.
struct Trajectory {
  Grid grid;
  std::string system;
  int stride = 1;
  std::vector<int> snapshot_steps;
  std::vector<Vec> snapshots;
  std::vector<double> trace0;   // y_x(t_n, 0)
  std::vector<double> traceL;   // y_x(t_n, L)
  std::vector<double> control;  // applied boundary datum
  std::vector<double> energy;   // int y^2 dx
  std::vector<double> h1;       // int y_x^2 dx
  double projection_tail = 0.0;

  GridFunction state(size_t snapshot) const { return {grid.length, snapshots.at(snapshot)}; }
  GridFunction final_state() const { return state(snapshots.size() - 1); }
  GridFunction initial_state() const { return state(0); }
};

enum class TraceEnd { kLeft, kRight };

/// Neumann-controlled system y_t + y_x + y_xxx = f, y(0) = y(L) = 0,
/// y_x(L) = h. Crank-Nicolson in time, second-order centered differences.
Trajectory solve_neumann(const GridFunction& y0, const SourceTerm& f, const TimeSignal& h_ctrl,
                         const Grid& grid, const StepperOptions& opts = {});

/// Jump-controlled system with y_x(L) - y_x(0) = v. The modal method needs a
/// spectrum and represents y on its modes; the FD method ignores `spec`.
Trajectory solve_jump(const GridFunction& y0, const SourceTerm& f, const TimeSignal& v_ctrl,
                      const Grid& grid, JumpMethod method = JumpMethod::kFiniteDifference,
                      const Spectrum* spec = nullptr, const StepperOptions& opts = {});

/// y_t + y_x + y_xxx + y y_x = 0 with Neumann datum u at x = L.
Trajectory solve_nonlinear(const GridFunction& y0, const TimeSignal& u_ctrl, const Grid& grid,
                           const StepperOptions& opts = {});

/// Stored boundary-derivative trace as a signal on the grid times.
TimeSignal trace_slope(const Trajectory& traj, TraceEnd end);

struct TrajectoryNorms {
  double sup_l2 = 0.0;       // max_n ||y(t_n)||_{L2}
  double h1_l2t = 0.0;       // (int_0^T int y_x^2 dx dt)^{1/2}
  double trace0_l2 = 0.0;    // ||y_x(., 0)||_{L2(0,T)}
  double traceL_l2 = 0.0;    // ||y_x(., L)||_{L2(0,T)}
};

TrajectoryNorms norms(const Trajectory& traj);

/// Largest ||a(t) - b(t)|| over shared snapshots, relative to max ||b(t)||.
double trajectory_discrepancy(const Trajectory& a, const Trajectory& b);

/// Modes of the FD jump operator nearest the exact ones: S q_j = i omega_j q_j
/// with h q_j^H q_j = 1, for j = -K..-1, 1..K (q_{-k} = conj q_k).
struct DiscreteModes {
  std::vector<int> indices;
  std::vector<double> omega;
  Eigen::MatrixXcd vectors;  // n_x x 2K
  double max_residual = 0.0;  // max_j ||S q_j - i omega_j q_j|| / (|omega_j| ||q_j||)
};

DiscreteModes discrete_modes(const Spectrum& spec, double length, int n_x, int K);

/// Rows r_j such that, for the linear Crank-Nicolson scheme without startup
/// steps, h p_j^H y(T) = h p_j^H y_free(T) + sum_n r_jn c_n, where c is the
/// grid control (u for Neumann, v for jump) and p_j are the columns of probes.
Eigen::MatrixXcd control_sensitivity(bool neumann, const Grid& grid, const Eigen::MatrixXcd& probes);

/// The control sampled at the n_t + 1 grid times (linear interpolation when
/// the signal uses another grid).
std::vector<double> sample_control(const TimeSignal& s, const Grid& grid);

}  // namespace kdvlab
