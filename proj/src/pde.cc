#include "kdvlab/pde.h"

#include <algorithm>
#include <cmath>

#include <Eigen/SparseLU>
#include <fmt/format.h>

namespace kdvlab {

void Grid::validate() const {
  if (!(length > 0.0) || !(horizon > 0.0)) throw PreconditionError("grid: L and T must be positive");
  if (n_x < 16) throw PreconditionError(fmt::format("grid: n_x = {} below 16", n_x));
  if (n_x % 2 != 0) {
    throw PreconditionError(fmt::format("grid: n_x = {} is odd; the difference operator then has a stationary "
                                        "sawtooth mode that the boundary cannot damp",
                                        n_x));
  }
  if (n_t < 16) throw PreconditionError(fmt::format("grid: n_t = {} below 16", n_t));
}

Grid Grid::make(double L, double T, int n_x, double dt_max) {
  if (!(dt_max > 0.0)) throw PreconditionError("grid: dt_max must be positive");
  Grid g;
  g.length = L;
  g.horizon = T;
  g.n_x = n_x;
  g.n_t = std::max(16, static_cast<int>(std::ceil(T / dt_max - 1e-9)));
  g.validate();
  return g;
}

Vec SourceTerm::sample(double t, double length, int n) const {
  Vec out = Vec::Zero(n);
  if (is_zero()) return out;
  const double h = length / (n + 1);
  for (int i = 0; i < n; ++i) out(i) = f(t, (i + 1) * h);
  return out;
}

std::vector<double> sample_control(const TimeSignal& s, const Grid& grid) {
  std::vector<double> out(grid.n_t + 1, 0.0);
  if (s.values.empty()) return out;
  if (std::abs(s.horizon - grid.horizon) > 1e-12 * grid.horizon) {
    throw PreconditionError(fmt::format("control horizon {} differs from grid horizon {}",
                                        s.horizon, grid.horizon));
  }
  if (s.steps() == grid.n_t) {
    for (int n = 0; n <= grid.n_t; ++n) out[n] = s.values[n].real();
  } else {
    for (int n = 0; n <= grid.n_t; ++n) out[n] = s.at(grid.time(n)).real();
  }
  return out;
}

namespace {

enum class System { kNeumann, kJump };

struct Recorder {
  Trajectory traj;

  Recorder(const Grid& grid, std::string system, int stride) {
    traj.grid = grid;
    traj.system = std::move(system);
    traj.stride = stride > 0 ? stride : std::max(1, grid.n_t / 200);
    const size_t levels = grid.n_t + 1;
    traj.trace0.reserve(levels);
    traj.traceL.reserve(levels);
    traj.control.reserve(levels);
    traj.energy.reserve(levels);
    traj.h1.reserve(levels);
  }

  void record(int n, const Vec& y, double tr0, double trL, double ctrl) {
    const double h = traj.grid.h();
    if (!y.allFinite()) {
      throw SolverError(fmt::format("{} solver: non-finite state at step {}", traj.system, n));
    }
    double dsum = y(0) * y(0) + y(y.size() - 1) * y(y.size() - 1);
    for (Eigen::Index i = 0; i + 1 < y.size(); ++i) dsum += (y(i + 1) - y(i)) * (y(i + 1) - y(i));
    traj.trace0.push_back(tr0);
    traj.traceL.push_back(trL);
    traj.control.push_back(ctrl);
    traj.energy.push_back(h * y.squaredNorm());
    traj.h1.push_back(dsum / h);
    if (n % traj.stride == 0 || n == traj.grid.n_t) {
      traj.snapshot_steps.push_back(n);
      traj.snapshots.push_back(y);
    }
  }
};

// Boundary vector b = (e_1 - e_N)/(2h^2) carrying the derivative jump.
Vec jump_vector(int n, double h) {
  Vec b = Vec::Zero(n);
  b(0) = 1.0 / (2.0 * h * h);
  b(n - 1) = -1.0 / (2.0 * h * h);
  return b;
}

// m = (y_1 - y_N)/(2h), the discrete mean of the two boundary slopes.
double mean_slope(const Vec& y, double h) { return (y(0) - y(y.size() - 1)) / (2.0 * h); }

Eigen::SparseMatrix<double> system_matrix(System sys, double length, int n) {
  Eigen::SparseMatrix<double> m = fd_operator_am(length, n);
  if (sys == System::kNeumann) {
    const double h = length / (n + 1);
    const double c = 1.0 / (2.0 * h * h * h);
    // S - 2 b (h b)^T with b supported on rows 1 and N.
    m.coeffRef(0, 0) -= c;
    m.coeffRef(0, n - 1) += c;
    m.coeffRef(n - 1, 0) += c;
    m.coeffRef(n - 1, n - 1) -= c;
  }
  m.makeCompressed();
  return m;
}

// (y_{i+1}^2 - y_{i-1}^2)/(4h) with zero boundary values.
Vec convective(const Vec& y, double h) {
  const Eigen::Index n = y.size();
  Vec out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double r = i + 1 < n ? y(i + 1) : 0.0;
    const double l = i > 0 ? y(i - 1) : 0.0;
    out(i) = (r * r - l * l) / (4.0 * h);
  }
  return out;
}

struct Traces {
  double t0, tL;
};

Traces traces(System sys, const Vec& y, double h, double ctrl) {
  const double m = mean_slope(y, h);
  if (sys == System::kNeumann) return {2.0 * m - ctrl, ctrl};
  return {m - 0.5 * ctrl, m + 0.5 * ctrl};
}

// Crank-Nicolson for y' = M y + c(t) b + f(t) - N(y), with c = 2u (Neumann)
// or c = v (jump). The same factorization serves the startup half-steps,
// since I - (dt/2) M is the implicit Euler matrix for step dt/2.
Trajectory run_fd(System sys, bool nonlinear, const GridFunction& y0, const SourceTerm& f,
                  const TimeSignal& ctrl_signal, const Grid& grid, const StepperOptions& opts,
                  std::string name) {
  grid.validate();
  const int n = grid.n_x;
  if (y0.n() != n) {
    throw PreconditionError(
        fmt::format("{}: initial state has {} points, grid has {}", name, y0.n(), n));
  }
  if (!y0.values.allFinite()) throw PreconditionError(name + ": initial state not finite");
  if (opts.startup_half_steps % 2 != 0 || opts.startup_half_steps < 0) {
    throw PreconditionError("startup_half_steps must be a nonnegative even count");
  }
  const double h = grid.h();
  const double dt = grid.dt();
  const std::vector<double> ctrl = sample_control(ctrl_signal, grid);
  const double gain = sys == System::kNeumann ? 2.0 : 1.0;
  const Vec b = jump_vector(n, h);
  const Eigen::SparseMatrix<double> m = system_matrix(sys, grid.length, n);
  Eigen::SparseMatrix<double> id(n, n);
  id.setIdentity();
  const Eigen::SparseMatrix<double> lhs = id - 0.5 * dt * m;
  const Eigen::SparseMatrix<double> rhs_op = id + 0.5 * dt * m;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(lhs);
  if (lu.info() != Eigen::Success) throw SolverError(name + ": factorization failed");

  auto forcing = [&](double t, double c) -> Vec {
    Vec g = (gain * c) * b;
    if (!f.is_zero()) g += f.sample(t, grid.length, n);
    return g;
  };
  auto control_at = [&](double t) { return ctrl_signal.values.empty() ? 0.0 : ctrl_signal.at(t).real(); };

  Recorder rec(grid, name, opts.stride);
  Vec y = y0.values;
  {
    const Traces tr = traces(sys, y, h, ctrl[0]);
    rec.record(0, y, tr.t0, tr.tL, ctrl[0]);
  }
  const double scale = std::max(1.0, y.cwiseAbs().maxCoeff());
  Vec nl_prev;
  int start = 0;
  if (opts.startup_half_steps > 0) {
    double t = 0.0;
    for (int s = 0; s < opts.startup_half_steps; ++s) {
      t += 0.5 * dt;
      Vec rhs = y + 0.5 * dt * forcing(t, control_at(t));
      if (nonlinear) rhs -= 0.5 * dt * convective(y, h);
      y = lu.solve(rhs);
      if (s % 2 == 1) {
        const int level = (s + 1) / 2;
        const Traces tr = traces(sys, y, h, ctrl[level]);
        rec.record(level, y, tr.t0, tr.tL, ctrl[level]);
      }
    }
    start = opts.startup_half_steps / 2;
  }
  Vec g_prev = forcing(grid.time(start), ctrl[start]);
  for (int step = start; step < grid.n_t; ++step) {
    const Vec g_next = forcing(grid.time(step + 1), ctrl[step + 1]);
    Vec rhs = rhs_op * y + 0.5 * dt * (g_prev + g_next);
    if (nonlinear) {
      const Vec nl = convective(y, h);
      if (opts.nonlinear == NonlinearTreatment::kExplicit) {
        const double courant = dt * y.cwiseAbs().maxCoeff() / h;
        if (courant > opts.cfl) {
          throw SolverError(fmt::format(
              "nonlinear solver: advective Courant number {:.3e} exceeds {} at step {}; use Picard",
              courant, opts.cfl, step));
        }
        const Vec extrap = nl_prev.size() == 0 ? nl : Vec(1.5 * nl - 0.5 * nl_prev);
        rhs -= dt * extrap;
        y = lu.solve(rhs);
      } else {
        Vec guess = y;
        bool done = false;
        for (int it = 0; it < opts.picard_max_iter; ++it) {
          const Vec next = lu.solve(rhs - 0.5 * dt * (nl + convective(guess, h)));
          const double change = (next - guess).cwiseAbs().maxCoeff();
          guess = next;
          if (change <= opts.picard_tol * std::max(1.0, guess.cwiseAbs().maxCoeff())) {
            done = true;
            break;
          }
        }
        if (!done) {
          throw ConvergenceError(fmt::format("nonlinear solver: Picard iteration stalled at step {}", step));
        }
        y = guess;
      }
      nl_prev = nl;
    } else {
      y = lu.solve(rhs);
    }
    if (nonlinear && y.cwiseAbs().maxCoeff() > 1e8 * scale) {
      throw SolverError(fmt::format("nonlinear solver: blow-up detected at step {}", step + 1));
    }
    const Traces tr = traces(sys, y, h, ctrl[step + 1]);
    rec.record(step + 1, y, tr.t0, tr.tL, ctrl[step + 1]);
    g_prev = g_next;
  }
  return std::move(rec.traj);
}

// Exact modal law m_k' = -i lambda_k m_k + phi_k'(L) v(t) + p_k(f), with v
// and f linear on each step.
Trajectory run_modal(const GridFunction& y0, const SourceTerm& f, const TimeSignal& v_signal,
                     const Grid& grid, const Spectrum& spec, const StepperOptions& opts) {
  grid.validate();
  const int n = grid.n_x;
  if (y0.n() != n) throw PreconditionError("modal solver: initial state does not match the grid");
  if (std::abs(spec.length - grid.length) > 1e-12 * grid.length) {
    throw PreconditionError("modal solver: spectrum length differs from grid length");
  }
  const double h = grid.h();
  const double dt = grid.dt();
  const std::vector<double> ctrl = sample_control(v_signal, grid);
  const int nm = static_cast<int>(spec.modes.size());
  Eigen::MatrixXcd phi(n, nm);
  CVec slope(nm), dslope0(nm), dslopeL(nm);
  std::vector<int> partner(nm);
  for (int j = 0; j < nm; ++j) {
    const EigenMode& md = spec.modes[j];
    for (int i = 0; i < n; ++i) phi(i, j) = md.eval((i + 1) * h);
    slope(j) = md.slopeL;
    dslope0(j) = md.slope0;
    dslopeL(j) = md.slopeL;
    for (int q = 0; q < nm; ++q) {
      if (spec.modes[q].k == -md.k) partner[j] = q;
    }
  }
  // Pairings p_k(y) = h sum phi_k(x_i) y_i.
  auto project = [&](const Vec& y) -> CVec { return h * (phi.transpose() * y.cast<cd>()); };

  CVec m = project(y0.values);
  double captured = 0.0;
  for (int j = 0; j < nm; ++j) captured += std::norm(m(j));
  const double norm0 = y0.l2_norm();
  Trajectory out;
  const double tail = std::sqrt(std::max(0.0, norm0 * norm0 - captured));
  if (norm0 > 0.0 && tail > opts.projection_tol * norm0) {
    throw PreconditionError(fmt::format(
        "modal solver: {} modes leave a projection tail {:.3e} (relative {:.3e})", nm / 2, tail,
        tail / norm0));
  }

  CVec decay(nm), w0(nm), w1(nm);
  for (int j = 0; j < nm; ++j) {
    const cd z(0.0, -spec.modes[j].lambda * dt);
    decay(j) = std::exp(z);
    // I0 = (e^z - 1)/z, I1 = (e^z - 1 - z)/z^2, both times dt.
    cd i0, i1;
    if (std::abs(z) < 1e-3) {
      i0 = 1.0 + z / 2.0 + z * z / 6.0 + z * z * z / 24.0;
      i1 = 0.5 + z / 6.0 + z * z / 24.0 + z * z * z / 120.0;
    } else {
      i0 = (decay(j) - 1.0) / z;
      i1 = (decay(j) - 1.0 - z) / (z * z);
    }
    w0(j) = dt * (i0 - i1);
    w1(j) = dt * i1;
  }

  auto reconstruct = [&](const CVec& mm) -> Vec {
    CVec c(nm);
    for (int j = 0; j < nm; ++j) c(j) = mm(partner[j]);
    return (phi * c).real();
  };
  auto slopes = [&](const CVec& mm, double& t0, double& tL) {
    cd s0 = 0.0, sL = 0.0;
    for (int j = 0; j < nm; ++j) {
      s0 += mm(partner[j]) * dslope0(j);
      sL += mm(partner[j]) * dslopeL(j);
    }
    t0 = s0.real();
    tL = sL.real();
  };

  Recorder rec(grid, "jump-modal", opts.stride);
  rec.traj.projection_tail = tail;
  {
    double t0, tL;
    slopes(m, t0, tL);
    rec.record(0, reconstruct(m), t0, tL, ctrl[0]);
  }
  CVec src_prev = f.is_zero() ? CVec::Zero(nm) : project(f.sample(0.0, grid.length, n));
  for (int step = 0; step < grid.n_t; ++step) {
    CVec src_next = CVec::Zero(nm);
    if (!f.is_zero()) src_next = project(f.sample(grid.time(step + 1), grid.length, n));
    for (int j = 0; j < nm; ++j) {
      const cd drive0 = slope(j) * ctrl[step] + src_prev(j);
      const cd drive1 = slope(j) * ctrl[step + 1] + src_next(j);
      m(j) = decay(j) * m(j) + w0(j) * drive0 + w1(j) * drive1;
    }
    double t0, tL;
    slopes(m, t0, tL);
    rec.record(step + 1, reconstruct(m), t0, tL, ctrl[step + 1]);
    src_prev = src_next;
  }
  return std::move(rec.traj);
}

}  // namespace

Trajectory solve_neumann(const GridFunction& y0, const SourceTerm& f, const TimeSignal& h_ctrl,
                         const Grid& grid, const StepperOptions& opts) {
  return run_fd(System::kNeumann, false, y0, f, h_ctrl, grid, opts, "neumann");
}

Trajectory solve_jump(const GridFunction& y0, const SourceTerm& f, const TimeSignal& v_ctrl,
                      const Grid& grid, JumpMethod method, const Spectrum* spec,
                      const StepperOptions& opts) {
  if (method == JumpMethod::kModal) {
    if (spec == nullptr) throw PreconditionError("modal jump solver needs a spectrum");
    return run_modal(y0, f, v_ctrl, grid, *spec, opts);
  }
  return run_fd(System::kJump, false, y0, f, v_ctrl, grid, opts, "jump");
}

Trajectory solve_nonlinear(const GridFunction& y0, const TimeSignal& u_ctrl, const Grid& grid,
                           const StepperOptions& opts) {
  return run_fd(System::kNeumann, true, y0, SourceTerm::zero(), u_ctrl, grid, opts, "nonlinear");
}

TimeSignal trace_slope(const Trajectory& traj, TraceEnd end) {
  const auto& src = end == TraceEnd::kLeft ? traj.trace0 : traj.traceL;
  return TimeSignal::from_real(traj.grid.horizon, src,
                               end == TraceEnd::kLeft ? "trace0" : "traceL");
}

TrajectoryNorms norms(const Trajectory& traj) {
  TrajectoryNorms out;
  for (double e : traj.energy) out.sup_l2 = std::max(out.sup_l2, std::sqrt(e));
  const double dt = traj.grid.dt();
  out.h1_l2t = std::sqrt(trapezoid(traj.h1, dt));
  std::vector<double> sq0(traj.trace0.size()), sqL(traj.traceL.size());
  for (size_t i = 0; i < sq0.size(); ++i) sq0[i] = traj.trace0[i] * traj.trace0[i];
  for (size_t i = 0; i < sqL.size(); ++i) sqL[i] = traj.traceL[i] * traj.traceL[i];
  out.trace0_l2 = std::sqrt(trapezoid(sq0, dt));
  out.traceL_l2 = std::sqrt(trapezoid(sqL, dt));
  return out;
}

double trajectory_discrepancy(const Trajectory& a, const Trajectory& b) {
  double worst = 0.0, ref = 0.0;
  size_t ia = 0;
  for (size_t ib = 0; ib < b.snapshot_steps.size(); ++ib) {
    while (ia < a.snapshot_steps.size() && a.snapshot_steps[ia] < b.snapshot_steps[ib]) ++ia;
    ref = std::max(ref, b.snapshots[ib].norm());
    if (ia < a.snapshot_steps.size() && a.snapshot_steps[ia] == b.snapshot_steps[ib]) {
      worst = std::max(worst, (a.snapshots[ia] - b.snapshots[ib]).norm());
    }
  }
  return ref > 0.0 ? worst / ref : worst;
}

DiscreteModes discrete_modes(const Spectrum& spec, double length, int n_x, int K) {
  if (K < 1 || K > spec.count) throw PreconditionError("discrete modes: need 1 <= K <= spectrum count");
  const double h = length / (n_x + 1);
  const Eigen::SparseMatrix<cd> herm = cd(0.0, -1.0) * fd_operator_am(length, n_x).cast<cd>();
  Eigen::SparseMatrix<cd> id(n_x, n_x);
  id.setIdentity();
  DiscreteModes out;
  out.vectors.resize(n_x, 2 * K);
  out.omega.assign(2 * K, 0.0);
  out.indices.assign(2 * K, 0);
  for (int k = 1; k <= K; ++k) {
    // Rayleigh quotient iteration seeded by the exact mode.
    const EigenMode& md = spec.mode(k);
    CVec x(n_x);
    for (int i = 0; i < n_x; ++i) x(i) = md.eval((i + 1) * h);
    x /= x.norm();
    double sigma = md.lambda;
    double res = 1.0;
    for (int it = 0; it < 8 && res > 1e-13; ++it) {
      Eigen::SparseLU<Eigen::SparseMatrix<cd>> lu;
      lu.compute(herm - sigma * id);
      if (lu.info() != Eigen::Success) break;  // shift is an eigenvalue to working precision
      x = lu.solve(x);
      x /= x.norm();
      const CVec hx = herm * x;
      sigma = x.dot(hx).real();
      res = (hx - sigma * x).norm() / std::abs(sigma);
    }
    out.max_residual = std::max(out.max_residual, res);
    x *= std::polar(1.0 / std::sqrt(h), -std::arg(x(0)));
    const int ip = K + k - 1, im = K - k;
    out.indices[ip] = k;
    out.indices[im] = -k;
    out.omega[ip] = sigma;
    out.omega[im] = -sigma;
    out.vectors.col(ip) = x;
    out.vectors.col(im) = x.conjugate();
  }
  return out;
}

Eigen::MatrixXcd control_sensitivity(bool neumann, const Grid& grid, const Eigen::MatrixXcd& probes) {
  grid.validate();
  const int n = grid.n_x;
  if (probes.rows() != n) throw PreconditionError("control_sensitivity: probe length differs from grid");
  const double h = grid.h();
  const double dt = grid.dt();
  const int nt = grid.n_t;
  const double gain = neumann ? 2.0 : 1.0;
  const Eigen::SparseMatrix<double> m =
      system_matrix(neumann ? System::kNeumann : System::kJump, grid.length, n);
  Eigen::SparseMatrix<double> id(n, n);
  id.setIdentity();
  const Eigen::SparseMatrix<double> lhs_t = Eigen::SparseMatrix<double>((id - 0.5 * dt * m).transpose());
  const Eigen::SparseMatrix<double> rhs_t = Eigen::SparseMatrix<double>((id + 0.5 * dt * m).transpose());
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(lhs_t);
  if (lu.info() != Eigen::Success) throw SolverError("control_sensitivity: factorization failed");
  const Vec b = jump_vector(n, h);
  const int p = static_cast<int>(probes.cols());
  // w_k = (A^T)^k p with A = P^{-1} Q, carried as real and imaginary columns.
  Eigen::MatrixXd w(n, 2 * p);
  w << probes.real(), probes.imag();
  std::vector<CVec> s(nt);
  for (int k = 0; k < nt; ++k) {
    const Eigen::MatrixXd z = lu.solve(w);
    const Eigen::VectorXd zb = z.transpose() * b;
    CVec sk(p);
    for (int j = 0; j < p; ++j) sk(j) = cd(zb(j), -zb(p + j));
    s[k] = (0.5 * dt * gain * h) * sk;
    w = rhs_t * z;
  }
  Eigen::MatrixXcd r = Eigen::MatrixXcd::Zero(p, nt + 1);
  for (int c = 0; c <= nt; ++c) {
    if (c <= nt - 1) r.col(c) += s[nt - 1 - c];
    if (c >= 1) r.col(c) += s[nt - c];
  }
  return r;
}

}  // namespace kdvlab
