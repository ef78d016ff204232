#include "kdvlab/acceptance.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <thread>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>
#include <fmt/ranges.h>

#include "kdvlab/control.h"
#include "kdvlab/moment.h"
#include "kdvlab/nonlinear.h"
#include "kdvlab/pde.h"
#include "kdvlab/spectral.h"
#include "kdvlab/window.h"

namespace kdvlab {

namespace {

struct Verdict {
  bool passed = false;
  std::string detail;
};

using Check = Verdict (*)();

struct Criterion {
  int id;
  const char* name;
  double budget;
  Check run;
};

int workers() { return std::max(1u, std::thread::hardware_concurrency()); }

GridFunction scaled(GridFunction y, double norm) {
  y.values *= norm / y.l2_norm();
  return y;
}

Verdict critical_set() {
  const std::vector<double> got = critical_lengths(10.0);
  const std::vector<double> want{2.0 * kPi, 2.0 * kPi * std::sqrt(7.0 / 3.0)};
  bool same = got.size() == want.size();
  for (size_t i = 0; same && i < got.size(); ++i) same = std::abs(got[i] - want[i]) <= 1e-14 * want[i];
  const bool one = is_critical(1.0, 1e-9).critical;
  const bool two_pi = is_critical(2.0 * kPi, 1e-9).critical;
  return {same && !one && two_pi,
          fmt::format("set {{{:.15g}}}, critical(1) = {}, critical(2pi) = {}", fmt::join(got, ", "), one,
                      two_pi)};
}

Verdict spectrum() {
  const Spectrum spec = solve_modes(1.0, 8);
  const std::vector<double> fd = fd_frequencies_am(1.0, 2000, 8);
  double rel = 0.0;
  for (int k = 1; k <= 8; ++k) {
    rel = std::max(rel, std::abs(spec.mode(k).lambda - fd.at(k - 1)) / std::abs(spec.mode(k).lambda));
  }
  // Asymptotic gap |lambda_k/(8 pi^3 k^3) - 1| for k >= 3: least-squares slope.
  std::vector<double> gap;
  for (int k = 3; k <= 8; ++k) {
    gap.push_back(std::abs(spec.mode(k).lambda / (8.0 * kPi * kPi * kPi * k * k * k) - 1.0));
  }
  const double n = gap.size();
  double mx = 0.0, my = 0.0, sxy = 0.0, sxx = 0.0;
  for (size_t i = 0; i < gap.size(); ++i) {
    mx += i / n;
    my += gap[i] / n;
  }
  for (size_t i = 0; i < gap.size(); ++i) {
    sxy += (i - mx) * (gap[i] - my);
    sxx += (i - mx) * (i - mx);
  }
  const bool trend = sxy / sxx < 0.0 && gap.back() < gap.front();
  const ModeResiduals res = mode_residuals(spec);
  const bool ok = rel <= 1e-3 && trend && res.boundary <= 1e-10 && res.equation <= 1e-10 &&
                  res.orthonormal <= 1e-8;
  return {ok, fmt::format("FD rel {:.2e}, gap k=3 {:.3e} -> k=8 {:.3e}, boundary {:.1e}, equation {:.1e}, "
                          "orthonormality {:.1e}",
                          rel, gap.front(), gap.back(), res.boundary, res.equation, res.orthonormal)};
}

Verdict skew_adjoint() {
  const int n = 400;
  const Eigen::MatrixXd s = Eigen::MatrixXd(fd_operator_am(1.0, n));
  const double asym = (s + s.transpose()).cwiseAbs().maxCoeff();
  Eigen::EigenSolver<Eigen::MatrixXd> es(s, false);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    const cd mu = es.eigenvalues()(i);
    worst = std::max(worst, std::abs(mu.real()) / (1.0 + std::abs(mu)));
  }
  return {asym == 0.0 && worst <= 1e-8,
          fmt::format("max |S + S^T| = {:.1e}, max |Re mu|/(1+|mu|) = {:.2e}", asym, worst)};
}

MomentProblem standard_problem(const Spectrum& spec, double T) {
  const GridFunction y0 = sample_modes(spec, {{1, 1.0}, {-1, 1.0}}, 1600);
  return assemble_moment_problem(y0, spec, T, 8);
}

Verdict biorthogonality() {
  const Spectrum spec = solve_modes(1.0, 16);
  const MomentProblem p = standard_problem(spec, 1.0);
  const Calibration cal = calibrate_gamma(p, 0.5);
  double span = 0.0;
  for (double a : p.frequencies) {
    for (double b : p.frequencies) span = std::max(span, std::abs(a - b));
  }
  const double err = interpolation_error(p, Window(cal.params, span), 200, false);
  return {err <= 1e-8, fmt::format("gamma = {}, max |g_n(-lambda_k) - delta_nk| = {:.2e}",
                                   cal.params.gamma_param, err)};
}

Verdict window_function() {
  const WindowParams params = make_window_params(1.0, 1.0);
  const double x_max = 4000.0;
  const Window w(params, x_max);
  const double h0 = std::abs(w(cd(0.0)) - 1.0);
  double asym = 0.0;
  for (int i = 1; i <= 400; ++i) {
    const double x = x_max * i / 400.0;
    const cd hp = w(cd(x)), hm = w(cd(-x));
    asym = std::max({asym, std::abs(hp.imag()), std::abs(hm.imag()), std::abs(hp.real() - hm.real())});
  }
  const DecayFit fit = fit_window_decay(w, x_max);
  const bool ok = h0 <= 1e-12 && asym <= 1e-12 && fit.exponent >= 0.28 && fit.exponent <= 0.38 &&
                  fit.r2 >= 0.9;
  return {ok, fmt::format("|H(0) - 1| = {:.1e}, parity/reality {:.1e}, decay exponent {:.3f} (R^2 {:.4f})",
                          h0, asym, fit.exponent, fit.r2)};
}

Verdict moment_residuals() {
  const Spectrum spec = solve_modes(1.0, 16);
  const MomentProblem p = standard_problem(spec, 1.0);
  const double scale = std::max(p.max_target(), 1.0);
  const Calibration cal = calibrate_gamma(p, 0.5);
  const WindowControl w = synthesize_control(p, cal.params);
  const MomentResiduals rw = verify_moments(w.v, p);
  const GramianControl g = minimal_norm_control(p);
  const MomentResiduals rg = verify_moments(g.v, p);
  const double imag_w = w.audit.max_imag;
  const double imag_g = g.v.max_imag / std::max(g.v.max_abs(), 1e-300);
  const bool ok = rw.max_residual <= 1e-6 * scale && rg.max_residual <= 1e-6 * scale &&
                  w.audit.tail_mass <= 1e-6 && imag_w <= 1e-6 && imag_g <= 1e-6;
  return {ok, fmt::format("window residual {:.1e}, tail {:.1e}, imag {:.1e}; gramian residual {:.1e}, "
                          "imag {:.1e}",
                          rw.max_residual, w.audit.tail_mass, imag_w, rg.max_residual, imag_g)};
}

Verdict linear_null() {
  const Spectrum spec = solve_modes(1.0, 16);
  const GridFunction y0 = sample_modes(spec, {{1, 1.0}, {-1, 1.0}}, 1600);
  std::string detail;
  bool ok = true;
  for (auto method : {SynthesisMethod::kGramian, SynthesisMethod::kWindow}) {
    const SynthesisReport r = null_control_linear(y0, spec, 1.0, 8, method);
    ok = ok && r.residual <= 1e-2 && r.discrepancy <= 1e-3;
    detail += fmt::format("{}{}: residual {:.2e}, discrepancy {:.1e}, |u| {:.3f}", detail.empty() ? "" : "; ",
                          method_name(method), r.residual, r.discrepancy, r.norm_u);
  }
  return {ok, detail};
}

Verdict cost_blowup() {
  const Spectrum spec = solve_modes(1.0, 16);
  const std::vector<double> Ts{1.0, 0.5, 0.25, 0.125};
  const CostCurve c = cost_sweep({{1, 1.0}, {-1, 1.0}}, spec, Ts, 8, SynthesisMethod::kGramian, {}, workers());
  std::vector<double> ts, us, vs;
  for (const CostEntry& e : c.entries) {
    if (!e.error.empty() && e.norm_v == 0.0) throw Error(fmt::format("sweep entry T = {}: {}", e.T, e.error));
    ts.push_back(e.T);
    us.push_back(e.norm_u);
    vs.push_back(e.norm_v);
  }
  bool v_up = true;
  for (size_t i = 1; i < vs.size(); ++i) v_up = v_up && vs[i] > vs[i - 1];
  const CostFit fu = fit_cost(ts, us, 0.5);
  const CostFit fv = fit_cost(ts, vs, 0.5);
  const bool ok = v_up && fu.slope > 0.0 && fu.r2 >= 0.9;
  return {ok, fmt::format("|v| = {:.3f}: increasing {}; ln|u| fit c = {:.3f}, R^2 = {:.3f} (|u| = {:.3f}); "
                          "ln|v| fit c = {:.3f}, R^2 = {:.3f}",
                          fmt::join(vs, ", "), v_up, fu.slope, fu.r2, fmt::join(us, ", "), fv.slope, fv.r2)};
}

Verdict conservation() {
  const Spectrum spec = solve_modes(1.0, 8);
  const GridFunction y0 = sample_modes(spec, {{1, 1.0}, {-1, 1.0}, {3, cd(0.4, 0.2)}, {-3, cd(0.4, -0.2)}}, 1600);
  const Grid grid = Grid::make(1.0, 1.0, 1600, 2.5e-5);
  const Trajectory jump = solve_jump(y0, SourceTerm::zero(), TimeSignal{}, grid);
  double drift = 0.0;
  for (double e : jump.energy) drift = std::max(drift, std::abs(e - jump.energy[0]) / jump.energy[0]);
  const Trajectory neu = solve_neumann(y0, SourceTerm::zero(), TimeSignal{}, grid);
  double rise = 0.0;
  for (size_t n = 1; n < neu.energy.size(); ++n) {
    rise = std::max(rise, (neu.energy[n] - neu.energy[n - 1]) / neu.energy[0]);
  }
  return {drift <= 1e-6 && rise <= 1e-10,
          fmt::format("jump energy drift {:.2e}; largest Neumann step increase {:.2e} (final ratio {:.2e})", drift,
                      rise, neu.energy.back() / neu.energy[0])};
}

// y = cos(3t) sin(pi x/L) + t sin(2 pi x/L), forced to solve y_t + y_x + y_xxx = f.
Verdict manufactured() {
  const double L = 1.0, T = 0.25;
  const double k1 = kPi / L, k2 = 2.0 * kPi / L;
  auto exact = [&](double t, double x) { return std::cos(3 * t) * std::sin(k1 * x) + t * std::sin(k2 * x); };
  SourceTerm f;
  f.f = [&](double t, double x) {
    const double yt = -3.0 * std::sin(3 * t) * std::sin(k1 * x) + std::sin(k2 * x);
    const double yx = std::cos(3 * t) * k1 * std::cos(k1 * x) + t * k2 * std::cos(k2 * x);
    const double yxxx = -std::cos(3 * t) * k1 * k1 * k1 * std::cos(k1 * x) - t * k2 * k2 * k2 * std::cos(k2 * x);
    return yt + yx + yxxx;
  };
  StepperOptions opts;
  opts.startup_half_steps = 4;
  std::vector<double> errors, steps;
  for (int n : {100, 200, 400, 800}) {
    const Grid grid = Grid::make(L, T, n, 2.5e-5);
    const double h = grid.h();
    Vec y0(n), yT(n);
    for (int i = 0; i < n; ++i) {
      y0(i) = exact(0.0, (i + 1) * h);
      yT(i) = exact(T, (i + 1) * h);
    }
    std::vector<double> u(grid.n_t + 1);
    for (int s = 0; s <= grid.n_t; ++s) {
      const double t = grid.time(s);
      u[s] = std::cos(3 * t) * k1 * std::cos(k1 * L) + t * k2 * std::cos(k2 * L);
    }
    const Trajectory tr =
        solve_neumann({L, y0}, f, TimeSignal::from_real(T, u, "u"), grid, opts);
    errors.push_back(GridFunction(L, tr.final_state().values - yT).l2_norm());
    steps.push_back(h);
  }
  std::vector<double> orders;
  for (size_t i = 1; i < errors.size(); ++i) {
    orders.push_back(std::log(errors[i - 1] / errors[i]) / std::log(steps[i - 1] / steps[i]));
  }
  const double worst = *std::min_element(orders.begin(), orders.end());
  return {worst >= 1.8, fmt::format("errors {:.3e}; orders {:.3f}", fmt::join(errors, ", "), fmt::join(orders, ", "))};
}

GridFunction band_limited_target(const Spectrum& spec) {
  return scaled(sample_modes(spec, {{1, 1.0}, {-1, 1.0}, {2, cd(0.3, 0.2)}, {-2, cd(0.3, -0.2)}}, 1600), 1e-2);
}

Verdict nonlinear_reach() {
  const Spectrum spec = solve_modes(1.0, 16);
  NonlinearSetup setup;
  setup.spec = &spec;
  const GridFunction yT = band_limited_target(spec);
  const ReachResult r = fixed_point_reach(yT, setup, 1e-3, 20);
  // Independent check: fresh solve with the implicit nonlinear treatment.
  StepperOptions picard = setup.stepper;
  picard.nonlinear = NonlinearTreatment::kPicard;
  const GridFunction reached =
      solve_nonlinear(GridFunction::zeros(1.0, setup.n_x), r.control, setup.grid(), picard).final_state();
  const double indep = GridFunction(1.0, reached.values - yT.values).l2_norm() / yT.l2_norm();
  const RemainderFit q = quadratic_remainder(r.control, setup, {1.0, 2.0, 4.0});
  const double ratio = r.mean_ratio();
  const bool ok = r.converged && r.iterations <= 20 && !r.ratios.empty() && ratio < 1.0 && indep <= 1e-3 &&
                  q.exponent >= 1.8 && q.exponent <= 2.2;
  return {ok, fmt::format("converged {} after {} iterations, mean contraction {:.2e}, independent residual "
                          "{:.2e}, remainder exponent {:.3f}",
                          r.converged, r.iterations, ratio, indep, q.exponent)};
}

Verdict nonlinear_null() {
  const Spectrum spec = solve_modes(1.0, 16);
  const GridFunction y0 = scaled(sample_modes(spec, {{1, 1.0}, {-1, 1.0}}, 1600), 1e-2);
  std::vector<double> norms, residuals;
  bool converged = true;
  for (double T : {1.0, 0.5, 0.25}) {
    NonlinearSetup setup;
    setup.spec = &spec;
    setup.horizon = T;
    const NullResult r = null_control_nonlinear(y0, setup, 1e-3, 20);
    converged = converged && r.converged && r.residuals.back() <= 1e-3 * r.initial_norm;
    norms.push_back(r.control.l2_norm());
    residuals.push_back(r.residuals.back() / r.initial_norm);
  }
  const bool grows = norms[1] > norms[0] && norms[2] > norms[1];
  return {converged && grows,
          fmt::format("T = 1, 0.5, 0.25: residuals {:.2e}; |u| {:.4f}; growing {}", fmt::join(residuals, ", "),
                      fmt::join(norms, ", "), grows)};
}

Verdict near_critical() {
  const double Lc = 2.0 * kPi - 1e-3;
  const SlopeReport far = boundary_slope_check(solve_modes(1.0, 8));
  const SlopeReport near = boundary_slope_check(solve_modes(Lc, 8));
  const double factor = far.min_slope / near.min_slope;
  return {factor >= 10.0, fmt::format("min |phi_k'(L)|: L = 1 {:.3e}, L = 2pi - 1e-3 {:.3e}, ratio {:.1f}",
                                      far.min_slope, near.min_slope, factor)};
}

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all{
      {1, "critical set", 1.0, critical_set},
      {2, "spectrum", 60.0, spectrum},
      {3, "skew-adjointness", 30.0, skew_adjoint},
      {4, "biorthogonality", 60.0, biorthogonality},
      {5, "window function", 10.0, window_function},
      {6, "moment residuals", 60.0, moment_residuals},
      {7, "linear null control", 300.0, linear_null},
      {8, "cost blow-up", 900.0, cost_blowup},
      {9, "conservation and dissipation", 60.0, conservation},
      {10, "manufactured solution", 120.0, manufactured},
      {11, "nonlinear fixed point", 600.0, nonlinear_reach},
      {12, "nonlinear null control", 900.0, nonlinear_null},
      {13, "near-critical degradation", 60.0, near_critical},
  };
  return all;
}

}  // namespace

std::vector<int> criterion_ids() {
  std::vector<int> ids;
  for (const auto& c : criteria()) ids.push_back(c.id);
  return ids;
}

CriterionResult run_criterion(int id) {
  const auto& all = criteria();
  auto it = std::find_if(all.begin(), all.end(), [&](const Criterion& c) { return c.id == id; });
  if (it == all.end()) throw UsageError(fmt::format("no acceptance criterion {}", id));
  CriterionResult r;
  r.id = id;
  r.name = it->name;
  r.budget = it->budget;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const Verdict v = it->run();
    r.passed = v.passed;
    r.detail = v.detail;
  } catch (const Error& e) {
    r.passed = false;
    r.detail = fmt::format("error: {}", e.what());
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (r.seconds >= r.budget) {
    r.passed = false;
    r.detail += fmt::format(" [over budget]");
  }
  return r;
}

std::vector<CriterionResult> run_acceptance(const std::vector<int>& ids,
                                            const std::function<void(const CriterionResult&)>& on_done) {
  std::vector<CriterionResult> out;
  for (int id : ids) {
    out.push_back(run_criterion(id));
    if (on_done) on_done(out.back());
  }
  return out;
}

std::string format_result(const CriterionResult& r) {
  return fmt::format("[{}] {:02d} {} ({:.1f} s / {:.0f} s): {}", r.passed ? "PASS" : "FAIL", r.id, r.name,
                     r.seconds, r.budget, r.detail);
}

}  // namespace kdvlab
