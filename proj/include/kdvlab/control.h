#pragma once

#include <optional>
#include <string>
#include <vector>

#include "kdvlab/moment.h"
#include "kdvlab/pde.h"

namespace kdvlab {

enum class SynthesisMethod { kWindow, kGramian };

const char* method_name(SynthesisMethod m);
SynthesisMethod parse_method(const std::string& s);

struct ControlOptions {
  int n_x = 1600;
  double dt_max = 2.5e-5;
  /// Fixed window parameter; calibrated from gamma_start when unset.
  std::optional<double> gamma;
  double gamma_start = 0.5;
  SynthesisSettings synthesis;
  double cond_cap = 1e12;
  double residual_bound = 1e-2;
  StepperOptions stepper;
};

struct SynthesisReport {
  SynthesisMethod method = SynthesisMethod::kGramian;
  int K = 0;
  double gamma_param = 0.0;
  double condition = 0.0;  // Gram condition number (Gramian method)
  MomentProblem problem;
  MomentResiduals moments;
  std::optional<SynthesisAudit> audit;
  TimeSignal v;  // jump control on the grid times
  TimeSignal u;  // Neumann control u = v + y_x(., 0)
  double residual = 0.0;     // ||y(T)|| / ||y0|| under u
  double discrepancy = 0.0;  // jump versus Neumann trajectories
  double norm_u = 0.0;
  double norm_v = 0.0;
  bool passed = false;
  Grid grid;
};

/// Null control of the linear Neumann system: moment targets for y0, jump
/// control v by the chosen method, FD jump solve, u = v + y_x(., 0), and an
/// independent Neumann verification.
SynthesisReport null_control_linear(const GridFunction& y0, const Spectrum& spec, double T, int K,
                                    SynthesisMethod method, const ControlOptions& opts = {});

/// v = u - y_x(., 0) from the Neumann solve driven by u.
TimeSignal transfer_from_neumann(const TimeSignal& u, const GridFunction& y0, const Grid& grid,
                                 const StepperOptions& opts = {});

/// u = v + y_x(., 0) from the jump solve driven by v.
TimeSignal transfer_from_jump(const TimeSignal& v, const GridFunction& y0, const Grid& grid,
                              const StepperOptions& opts = {});

struct NullCheck {
  double residual = 0.0;
  bool absolute = false;  // set when ||y0|| = 0 and the plain norm is returned
};

NullCheck verify_null(const GridFunction& y0, const TimeSignal& u, const Grid& grid,
                      const StepperOptions& opts = {});

struct CostEntry {
  double T = 0.0;
  double norm_u = 0.0;
  double norm_v = 0.0;
  double residual = 0.0;
  double condition = 0.0;
  double gamma_param = 0.0;
  bool ok = false;
  std::string error;
};

struct CostFit {
  double slope = 0.0;  // c in ln||u|| = c * T^{-p} + d
  double intercept = 0.0;
  double r2 = 0.0;
  double exponent = 0.5;
  std::vector<double> residuals;
};

struct CostCurve {
  SynthesisMethod method = SynthesisMethod::kGramian;
  int K = 0;
  std::vector<CostEntry> entries;  // decreasing T
  CostFit fit;                     // fixed exponent 1/2
  CostFit free_fit;                // best exponent on a scan
};

/// ln y = c * T^{-p} + d by least squares over the usable entries.
CostFit fit_cost(const std::vector<double>& T, const std::vector<double>& norms, double p);
/// Scans p in [0.05, 2] and returns the fit with the largest R^2.
CostFit fit_cost_free(const std::vector<double>& T, const std::vector<double>& norms);

/// Runs null_control_linear for each T (workers in parallel) and fits the
/// cost curve. y0 is rebuilt on each grid from its modal content.
CostCurve cost_sweep(const std::vector<std::pair<int, cd>>& y0_modes, const Spectrum& spec,
                     const std::vector<double>& T_list, int K, SynthesisMethod method,
                     const ControlOptions& opts = {}, int workers = 1);

}  // namespace kdvlab
