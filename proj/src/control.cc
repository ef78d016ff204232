#include "kdvlab/control.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include <fmt/format.h>

namespace kdvlab {

const char* method_name(SynthesisMethod m) {
  return m == SynthesisMethod::kWindow ? "window" : "gramian";
}

SynthesisMethod parse_method(const std::string& s) {
  if (s == "window") return SynthesisMethod::kWindow;
  if (s == "gramian") return SynthesisMethod::kGramian;
  throw UsageError(fmt::format("unknown method '{}' (expected window or gramian)", s));
}

namespace {

TimeSignal on_grid(const std::vector<double>& values, const Grid& grid, std::string label) {
  return TimeSignal::from_real(grid.horizon, values, std::move(label));
}

std::string stage_error(const char* stage, const std::exception& e) {
  return fmt::format("[{}] {}", stage, e.what());
}

template <typename F>
auto staged(const char* stage, F&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const PreconditionError& e) {
    throw PreconditionError(stage_error(stage, e));
  } catch (const ConvergenceError& e) {
    throw ConvergenceError(stage_error(stage, e));
  } catch (const AuditError& e) {
    throw AuditError(stage_error(stage, e));
  } catch (const SolverError& e) {
    throw SolverError(stage_error(stage, e));
  }
}

}  // namespace

TimeSignal transfer_from_neumann(const TimeSignal& u, const GridFunction& y0, const Grid& grid,
                                 const StepperOptions& opts) {
  const Trajectory traj = solve_neumann(y0, SourceTerm::zero(), u, grid, opts);
  std::vector<double> v(traj.control.size());
  for (size_t i = 0; i < v.size(); ++i) v[i] = traj.control[i] - traj.trace0[i];
  return on_grid(v, grid, "v");
}

TimeSignal transfer_from_jump(const TimeSignal& v, const GridFunction& y0, const Grid& grid,
                              const StepperOptions& opts) {
  const Trajectory traj = solve_jump(y0, SourceTerm::zero(), v, grid, JumpMethod::kFiniteDifference,
                                     nullptr, opts);
  std::vector<double> u(traj.control.size());
  for (size_t i = 0; i < u.size(); ++i) u[i] = traj.control[i] + traj.trace0[i];
  return on_grid(u, grid, "u");
}

NullCheck verify_null(const GridFunction& y0, const TimeSignal& u, const Grid& grid,
                      const StepperOptions& opts) {
  const Trajectory traj = solve_neumann(y0, SourceTerm::zero(), u, grid, opts);
  NullCheck out;
  const double final_norm = traj.final_state().l2_norm();
  const double n0 = y0.l2_norm();
  if (n0 == 0.0) {
    out.absolute = true;
    out.residual = final_norm;
  } else {
    out.residual = final_norm / n0;
  }
  return out;
}

SynthesisReport null_control_linear(const GridFunction& y0, const Spectrum& spec, double T, int K,
                                    SynthesisMethod method, const ControlOptions& opts) {
  const CriticalCheck crit = is_critical(spec.length);
  if (crit.critical) {
    throw PreconditionError(fmt::format("L = {} is critical (nearest {})", spec.length, crit.nearest));
  }
  SynthesisReport rep;
  rep.method = method;
  rep.K = K;
  rep.grid = Grid::make(spec.length, T, opts.n_x, opts.dt_max);
  if (y0.n() != rep.grid.n_x) {
    throw PreconditionError(
        fmt::format("initial state has {} points, grid has {}", y0.n(), rep.grid.n_x));
  }
  rep.problem = staged("moments", [&] { return assemble_moment_problem(y0, spec, T, K); });
  if (method == SynthesisMethod::kGramian) {
    const GramianControl g =
        staged("gramian", [&] { return minimal_norm_control(rep.problem, opts.cond_cap); });
    rep.v = g.v;
    rep.condition = g.condition;
  } else {
    WindowParams params;
    if (opts.gamma) {
      params = make_window_params(T, *opts.gamma);
    } else {
      params = staged("calibrate", [&] {
                 return calibrate_gamma(rep.problem, opts.gamma_start, opts.synthesis);
               }).params;
    }
    rep.gamma_param = params.gamma_param;
    const WindowControl w =
        staged("synthesis", [&] { return synthesize_control(rep.problem, params, opts.synthesis); });
    rep.v = w.v;
    rep.audit = w.audit;
  }
  rep.moments = verify_moments(rep.v, rep.problem);
  const Trajectory jump = staged("jump", [&] {
    return solve_jump(y0, SourceTerm::zero(), rep.v, rep.grid, JumpMethod::kFiniteDifference,
                      nullptr, opts.stepper);
  });
  std::vector<double> u(jump.control.size());
  for (size_t i = 0; i < u.size(); ++i) u[i] = jump.control[i] + jump.trace0[i];
  rep.u = on_grid(u, rep.grid, "u");
  const Trajectory neumann = staged("verify", [&] {
    return solve_neumann(y0, SourceTerm::zero(), rep.u, rep.grid, opts.stepper);
  });
  const double n0 = y0.l2_norm();
  const double nT = neumann.final_state().l2_norm();
  rep.residual = n0 > 0.0 ? nT / n0 : nT;
  rep.discrepancy = trajectory_discrepancy(jump, neumann);
  rep.norm_u = rep.u.l2_norm();
  rep.norm_v = rep.v.l2_norm();
  rep.passed = rep.residual <= opts.residual_bound;
  return rep;
}

CostFit fit_cost(const std::vector<double>& T, const std::vector<double>& norms, double p) {
  CostFit fit;
  fit.exponent = p;
  const size_t n = T.size();
  if (n < 2) return fit;
  std::vector<double> x(n), y(n);
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < n; ++i) {
    x[i] = std::pow(T[i], -p);
    y[i] = std::log(norms[i]);
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) return fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double sse = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double r = y[i] - (fit.slope * x[i] + fit.intercept);
    fit.residuals.push_back(r);
    sse += r * r;
  }
  fit.r2 = syy > 0.0 ? 1.0 - sse / syy : 1.0;
  return fit;
}

CostFit fit_cost_free(const std::vector<double>& T, const std::vector<double>& norms) {
  CostFit best;
  best.r2 = -1e300;
  for (int i = 0; i <= 195; ++i) {
    const CostFit f = fit_cost(T, norms, 0.05 + 0.01 * i);
    if (f.r2 > best.r2) best = f;
  }
  return best;
}

CostCurve cost_sweep(const std::vector<std::pair<int, cd>>& y0_modes, const Spectrum& spec,
                     const std::vector<double>& T_list, int K, SynthesisMethod method,
                     const ControlOptions& opts, int workers) {
  if (T_list.empty()) throw PreconditionError("cost_sweep: empty T list");
  for (size_t i = 0; i < T_list.size(); ++i) {
    if (!(T_list[i] > 0.0)) throw PreconditionError("cost_sweep: T must be positive");
    if (i > 0 && !(T_list[i] < T_list[i - 1])) {
      throw PreconditionError("cost_sweep: T list must be strictly decreasing");
    }
  }
  const GridFunction y0 = sample_modes(spec, y0_modes, opts.n_x);
  CostCurve curve;
  curve.method = method;
  curve.K = K;
  curve.entries.resize(T_list.size());
  std::atomic<size_t> next{0};
  auto work = [&] {
    for (size_t i = next++; i < T_list.size(); i = next++) {
      CostEntry& e = curve.entries[i];
      e.T = T_list[i];
      try {
        const SynthesisReport r = null_control_linear(y0, spec, e.T, K, method, opts);
        e.norm_u = r.norm_u;
        e.norm_v = r.norm_v;
        e.residual = r.residual;
        e.condition = r.condition;
        e.gamma_param = r.gamma_param;
        e.ok = r.passed;
        if (!r.passed) e.error = fmt::format("residual {:.3e} above bound", r.residual);
      } catch (const Error& ex) {
        e.error = ex.what();
      }
    }
  };
  const int nw = std::clamp<int>(workers, 1, static_cast<int>(T_list.size()));
  std::vector<std::thread> pool;
  for (int w = 1; w < nw; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  std::vector<double> ts, us;
  for (const auto& e : curve.entries) {
    if (e.ok && e.norm_u > 0.0) {
      ts.push_back(e.T);
      us.push_back(e.norm_u);
    }
  }
  curve.fit = fit_cost(ts, us, 0.5);
  curve.free_fit = fit_cost_free(ts, us);
  return curve;
}

}  // namespace kdvlab
