#include "kdvlab/nonlinear.h"

#include <cmath>
#include <cstdio>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <fmt/format.h>

namespace kdvlab {

Grid NonlinearSetup::grid() const {
  if (spec == nullptr) throw PreconditionError("nonlinear setup has no spectrum");
  return Grid::make(spec->length, horizon, n_x, dt_max);
}

namespace {

int increases_in_a_row(const std::vector<double>& r) {
  int run = 0;
  for (size_t i = 1; i < r.size(); ++i) run = r[i] > r[i - 1] ? run + 1 : 0;
  return run;
}

std::string trace_text(const std::vector<double>& r) {
  std::string s;
  for (double x : r) s += fmt::format(" {:.3e}", x);
  return s;
}

}  // namespace

DiscreteReach build_discrete_reach(const Spectrum& spec, const Grid& grid, int K) {
  grid.validate();
  if (K < 1 || K > spec.count) throw PreconditionError("discrete reach: need 1 <= K <= spectrum count");
  const int n = grid.n_x;
  const double h = grid.h();
  const double dt = grid.dt();
  const int nt = grid.n_t;
  const DiscreteModes dm = discrete_modes(spec, grid.length, n, K);
  DiscreteReach out;
  out.grid = grid;
  const int nm = 2 * K;
  out.indices = dm.indices;
  out.omega = dm.omega;
  out.vectors = dm.vectors;
  out.max_residual = dm.max_residual;
  Vec b = Vec::Zero(n);
  b(0) = 1.0 / (2.0 * h * h);
  b(n - 1) = -1.0 / (2.0 * h * h);
  // c_j = h q_j^H y obeys CN: c_{n+1}(1 - i w dt/2) = c_n(1 + i w dt/2) + dt/2 beta (v_n + v_{n+1}).
  out.kappa.resize(nm, nt + 1);
  for (int j = 0; j < nm; ++j) {
    const double w = out.omega[j];
    const cd beta = h * out.vectors.col(j).dot(b.cast<cd>());
    const cd den(1.0, -0.5 * w * dt);
    const cd rho = cd(1.0, 0.5 * w * dt) / den;
    const cd eta = 0.5 * dt * beta / den;
    // pw = rho^(nt-1-n) walking n downward.
    std::vector<cd> pw(nt + 1);
    cd p = 1.0;
    for (int m = 0; m <= nt; ++m) {
      pw[m] = p;  // rho^m
      p *= rho;
    }
    for (int s = 0; s <= nt; ++s) {
      cd kv = 0.0;
      if (s <= nt - 1) kv += pw[nt - 1 - s];
      if (s >= 1) kv += pw[nt - s];
      out.kappa(j, s) = eta * kv;
    }
  }
  Vec winv = Vec::Constant(nt + 1, 1.0 / dt);
  winv(0) = winv(nt) = 2.0 / dt;
  out.gram = out.kappa * winv.asDiagonal() * out.kappa.adjoint();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(out.gram, Eigen::EigenvaluesOnly);
  out.condition = es.eigenvalues()(nm - 1) / es.eigenvalues()(0);
  return out;
}

namespace {

const DiscreteReach& discrete_data(const NonlinearSetup& setup, const Grid& grid) {
  if (!setup.cache || setup.cache->grid.n_x != grid.n_x || setup.cache->grid.n_t != grid.n_t ||
      setup.cache->grid.horizon != grid.horizon || setup.cache->grid.length != grid.length ||
      static_cast<int>(setup.cache->omega.size()) != 2 * setup.K) {
    setup.cache = std::make_shared<const DiscreteReach>(build_discrete_reach(*setup.spec, grid, setup.K));
  }
  return *setup.cache;
}

double span_norm(const DiscreteReach& dr, const Vec& y, double h) {
  return (h * (dr.vectors.adjoint() * y.cast<cd>())).norm();
}

HumControl hum_reach_discrete(const GridFunction& yT, const NonlinearSetup& setup, const Grid& grid) {
  const DiscreteReach& dr = discrete_data(setup, grid);
  if (!(dr.condition <= setup.cond_cap)) {
    throw AuditError(fmt::format("discrete Gram condition number {:.3e} exceeds cap {:.1e}",
                                 dr.condition, setup.cond_cap));
  }
  const double h = grid.h();
  const CVec target = h * (dr.vectors.adjoint() * yT.values.cast<cd>());
  Eigen::LLT<Eigen::MatrixXcd> llt(dr.gram);
  if (llt.info() != Eigen::Success) throw AuditError("discrete Gram matrix is not positive definite");
  CVec a = llt.solve(target);
  a += llt.solve(target - dr.gram * a);
  const double dt = grid.dt();
  CVec v = dr.kappa.adjoint() * a / dt;
  v(0) *= 2.0;
  v(grid.n_t) *= 2.0;
  HumControl out;
  out.condition = dr.condition;
  out.v = TimeSignal(grid.horizon, std::vector<cd>(v.data(), v.data() + v.size()), "v");
  out.v.realify(1e-6);
  out.u = transfer_from_jump(out.v, GridFunction::zeros(yT.length, grid.n_x), grid, setup.stepper);
  return out;
}

}  // namespace

HumControl hum_reach(const GridFunction& yT, const NonlinearSetup& setup) {
  const Grid grid = setup.grid();
  if (yT.n() != grid.n_x) throw PreconditionError("hum_reach: target does not match the grid");
  HumControl out;
  if (yT.values.isZero(0.0)) {
    out.u = TimeSignal::zeros(grid.horizon, grid.n_t, "u");
    out.v = TimeSignal::zeros(grid.horizon, grid.n_t, "v");
    return out;
  }
  if (setup.design == HumDesign::kDiscrete) return hum_reach_discrete(yT, setup, grid);
  const MomentProblem p = reach_moment_problem(yT, *setup.spec, setup.horizon, setup.K);
  const GramianControl g = minimal_norm_control(p, setup.cond_cap);
  out.v = g.v;
  out.condition = g.condition;
  out.u = transfer_from_jump(g.v, GridFunction::zeros(yT.length, grid.n_x), grid, setup.stepper);
  return out;
}

GridFunction reach_map_P(const TimeSignal& u, const NonlinearSetup& setup) {
  const Grid grid = setup.grid();
  const double norm = u.values.empty() ? 0.0 : u.l2_norm();
  if (norm > setup.control_warning) {
    fmt::print(stderr, "warning: reach map applied to a large control (||u|| = {:.3e})\n", norm);
  }
  const Trajectory traj =
      solve_nonlinear(GridFunction::zeros(grid.length, grid.n_x), u, grid, setup.stepper);
  return traj.final_state();
}

double ReachResult::mean_ratio() const {
  if (ratios.empty()) return 0.0;
  double s = 0.0;
  for (double r : ratios) s += std::log(r);
  return std::exp(s / ratios.size());
}

ReachResult fixed_point_reach(const GridFunction& yT, const NonlinearSetup& setup, double tol,
                              int max_iter) {
  if (!(tol > 0.0)) throw PreconditionError("fixed_point_reach: tol must be positive");
  const Grid grid = setup.grid();
  ReachResult res;
  res.target_norm = yT.l2_norm();
  res.control = TimeSignal::zeros(grid.horizon, grid.n_t, "u");
  res.final_state = GridFunction::zeros(yT.length, grid.n_x);
  if (res.target_norm == 0.0) {
    res.converged = true;
    res.residuals.push_back(0.0);
    res.iterate_norms.push_back(0.0);
    return res;
  }
  const DiscreteReach& dr = discrete_data(setup, grid);
  GridFunction iterate = yT;
  for (int j = 0; j <= max_iter; ++j) {
    const HumControl hc = hum_reach(iterate, setup);
    const GridFunction reached = reach_map_P(hc.u, setup);
    const Vec diff = reached.values - yT.values;
    const double r = GridFunction(yT.length, diff).l2_norm();
    const double rs = span_norm(dr, diff, grid.h());
    res.iterate_norms.push_back(iterate.l2_norm());
    if (!res.span_residuals.empty()) res.ratios.push_back(rs / res.span_residuals.back());
    res.residuals.push_back(r);
    res.span_residuals.push_back(rs);
    res.control = hc.u;
    res.final_state = reached;
    res.iterations = j;
    if (increases_in_a_row(res.span_residuals) >= 3) {
      throw ConvergenceError("fixed_point_reach diverged; in-span residuals:" +
                             trace_text(res.span_residuals));
    }
    const bool floor = rs <= 1e-9 * res.target_norm;
    const bool stalled = !res.ratios.empty() && res.ratios.back() > 0.9;
    if (floor || stalled || j == max_iter) break;
    iterate.values -= diff;
  }
  res.converged = res.residuals.back() <= tol * res.target_norm;
  return res;
}

NullResult null_control_nonlinear(const GridFunction& y0, const NonlinearSetup& setup, double tol,
                                  int max_iter) {
  if (!(tol > 0.0)) throw PreconditionError("null_control_nonlinear: tol must be positive");
  const Grid grid = setup.grid();
  NullResult res;
  res.initial_norm = y0.l2_norm();
  if (res.initial_norm == 0.0) {
    res.control = TimeSignal::zeros(grid.horizon, grid.n_t, "u");
    res.converged = true;
    res.residuals.push_back(0.0);
    res.control_norms.push_back(0.0);
    return res;
  }
  ControlOptions copts;
  copts.n_x = setup.n_x;
  copts.dt_max = setup.dt_max;
  copts.cond_cap = setup.cond_cap;
  copts.stepper = setup.stepper;
  TimeSignal u = null_control_linear(y0, *setup.spec, setup.horizon, setup.K,
                                     SynthesisMethod::kGramian, copts)
                     .u;
  for (int j = 0; j <= max_iter; ++j) {
    const GridFunction final_state = solve_nonlinear(y0, u, grid, setup.stepper).final_state();
    const double r = final_state.l2_norm();
    res.residuals.push_back(r);
    res.control_norms.push_back(u.l2_norm());
    res.control = u;
    res.iterations = j;
    if (r <= tol * res.initial_norm) {
      res.converged = true;
      return res;
    }
    if (increases_in_a_row(res.residuals) >= 3) {
      throw ConvergenceError("null_control_nonlinear diverged; residuals:" +
                             trace_text(res.residuals));
    }
    if (j == max_iter) break;
    u = u - hum_reach(final_state, setup).u;
    u.label = "u";
  }
  return res;
}

RemainderFit quadratic_remainder(const TimeSignal& u, const NonlinearSetup& setup,
                                 const std::vector<double>& scales) {
  const Grid grid = setup.grid();
  const GridFunction zero = GridFunction::zeros(grid.length, grid.n_x);
  RemainderFit fit;
  fit.scales = scales;
  for (double s : scales) {
    const TimeSignal us = s * u;
    const GridFunction nl = reach_map_P(us, setup);
    const GridFunction lin =
        solve_neumann(zero, SourceTerm::zero(), us, grid, setup.stepper).final_state();
    fit.gaps.push_back(GridFunction(grid.length, nl.values - lin.values).l2_norm());
  }
  const size_t n = scales.size();
  if (n < 2) return fit;
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < n; ++i) {
    mx += std::log(scales[i]);
    my += std::log(fit.gaps[i]);
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double dx = std::log(scales[i]) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(fit.gaps[i]) - my);
  }
  fit.exponent = sxx > 0.0 ? sxy / sxx : 0.0;
  return fit;
}

}  // namespace kdvlab
