#include "kdvlab/moment.h"

#include <algorithm>
#include <cmath>
#include <map>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <fmt/format.h>
#include <unsupported/Eigen/FFT>

namespace kdvlab {

int MomentProblem::position(int k) const {
  for (size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] == k) return static_cast<int>(i);
  }
  throw PreconditionError(fmt::format("moment problem has no index {}", k));
}

double MomentProblem::max_target() const {
  double m = 0.0;
  for (const auto& d : targets) m = std::max(m, std::abs(d));
  return m;
}

GridFunction sample_modes(const Spectrum& spec, const std::vector<std::pair<int, cd>>& terms,
                          int n) {
  GridFunction g = GridFunction::zeros(spec.length, n);
  for (int i = 0; i < n; ++i) {
    cd s = 0.0;
    for (const auto& [k, c] : terms) s += c * spec.mode(k).eval(g.x(i));
    g.values(i) = s.real();
  }
  return g;
}

cd pairing(const EigenMode& m, const GridFunction& y) {
  cd s = 0.0;
  for (int i = 0; i < y.n(); ++i) s += m.eval(y.x(i)) * y.values(i);
  return s * y.h();
}

namespace {

double asymptotic_coefficient(const Spectrum& spec, int K) {
  if (K >= 2) {
    std::vector<double> pos, neg;
    for (int k = 1; k <= K; ++k) {
      pos.push_back(spec.mode(k).lambda);
      neg.push_back(spec.mode(-k).lambda);
    }
    return gap_report(pos, neg).a;
  }
  return spec.mode(1).lambda;
}

enum class TargetKind { kNull, kReach };

MomentProblem build_problem(const GridFunction& y, const Spectrum& spec, double T, int K,
                            double slope_threshold, TargetKind kind) {
  if (!(T > 0.0)) throw PreconditionError("moment problem: horizon must be positive");
  if (K < 1 || K > spec.count) {
    throw PreconditionError(fmt::format("moment problem: need 1 <= K <= {}", spec.count));
  }
  if (std::abs(y.length - spec.length) > 1e-12 * spec.length) {
    throw PreconditionError("moment problem: grid length differs from spectrum length");
  }
  MomentProblem p;
  p.horizon = T;
  p.count = K;
  p.asymptotic_a = asymptotic_coefficient(spec, K);
  p.state_norm = y.l2_norm();
  p.source = kind == TargetKind::kNull ? "null" : "reach";
  double captured = 0.0;
  for (const auto& m : spec.modes) {
    const cd pk = pairing(m, y);
    const cd slope = m.slopeL;
    if (std::abs(slope) < slope_threshold) {
      throw AuditError(fmt::format(
          "mode {}: |phi'(L)| = {:.3e} below degeneracy threshold; moment problem ill-posed", m.k,
          std::abs(slope)));
    }
    const cd d = kind == TargetKind::kNull ? -pk / slope
                                           : std::exp(cd(0.0, m.lambda * T)) * pk / slope;
    if (std::abs(m.k) <= K) {
      p.indices.push_back(m.k);
      p.frequencies.push_back(m.lambda);
      p.targets.push_back(d);
      p.pairings.push_back(pk);
      p.slopes.push_back(slope);
      captured += std::norm(pk);
    } else {
      p.check_indices.push_back(m.k);
      p.check_frequencies.push_back(m.lambda);
      p.check_targets.push_back(d);
    }
  }
  p.projection_tail = std::sqrt(std::max(0.0, p.state_norm * p.state_norm - captured));
  const double scale = std::max(p.max_target(), 1e-300);
  for (int k = 1; k <= K; ++k) {
    const cd dp = p.targets[p.position(k)];
    const cd dm = p.targets[p.position(-k)];
    if (std::abs(dm - std::conj(dp)) > 1e-12 * scale) {
      throw AuditError(fmt::format("moment targets break conjugate symmetry at k = {}", k));
    }
  }
  return p;
}

// Reciprocals 1/(lambda_k - lambda_n) for the product, k != 0, n.
std::vector<double> product_denominators(int n, const ProductFrequencies& f) {
  std::vector<double> out;
  out.reserve(2 * f.n_prod);
  const double ln = f.lambda(n);
  for (int k = -f.n_prod; k <= f.n_prod; ++k) {
    if (k == 0 || k == n) continue;
    out.push_back(f.lambda(k) - ln);
  }
  return out;
}

int next_pow2(double x) {
  int p = 1;
  while (p < x) p *= 2;
  return p;
}

}  // namespace

MomentProblem assemble_moment_problem(const GridFunction& y0, const Spectrum& spec, double T,
                                      int K, double slope_threshold) {
  return build_problem(y0, spec, T, K, slope_threshold, TargetKind::kNull);
}

MomentProblem reach_moment_problem(const GridFunction& yT, const Spectrum& spec, double T, int K,
                                   double slope_threshold) {
  return build_problem(yT, spec, T, K, slope_threshold, TargetKind::kReach);
}

double ProductFrequencies::lambda(int k) const {
  const int ak = std::abs(k);
  const int K = static_cast<int>(exact.size());
  const double mag = ak <= K ? exact[ak - 1] : a * ak * static_cast<double>(ak) * ak;
  return k > 0 ? mag : -mag;
}

ProductFrequencies product_frequencies(const MomentProblem& problem, int n_prod) {
  if (n_prod < problem.count) throw PreconditionError("product truncation below K");
  ProductFrequencies f;
  f.a = problem.asymptotic_a;
  f.n_prod = n_prod;
  for (int k = 1; k <= problem.count; ++k) f.exact.push_back(problem.frequencies[problem.position(k)]);
  // Computed check-band modes replace the asymptotic law where available.
  for (int k = problem.count + 1; k <= n_prod; ++k) {
    bool found = false;
    for (size_t i = 0; i < problem.check_indices.size(); ++i) {
      if (problem.check_indices[i] == k) {
        f.exact.push_back(problem.check_frequencies[i]);
        found = true;
      }
    }
    if (!found) break;
  }
  return f;
}

ProductValue product_Phi(int n, cd z, const ProductFrequencies& freqs) {
  cd v = 1.0;
  const double ln = freqs.lambda(n);
  for (int k = -freqs.n_prod; k <= freqs.n_prod; ++k) {
    if (k == 0 || k == n) continue;
    v *= 1.0 - z / (freqs.lambda(k) - ln);
  }
  const double N = freqs.n_prod;
  return {v, std::abs(z) / (freqs.a * N * N)};
}

cd g_fun(int n, cd z, const ProductFrequencies& freqs, const Window& window) {
  const double ln = freqs.lambda(n);
  return product_Phi(n, -z - ln, freqs).value * window(z + ln);
}

int resolving_samples(const MomentProblem& problem, double extra_band, int min_samples) {
  double top = 0.0;
  for (double l : problem.frequencies) top = std::max(top, std::abs(l));
  return next_pow2(std::max<double>(min_samples, 4.0 * problem.horizon * (top + extra_band) / kPi));
}

WindowControl synthesize_control(const MomentProblem& problem, const WindowParams& params,
                                 const SynthesisSettings& settings) {
  const double T = problem.horizon;
  if (std::abs(params.beta - T / 2.0) > 1e-12 * T) {
    throw PreconditionError("synthesize_control: window beta must equal T/2");
  }
  const ProductFrequencies freqs = product_frequencies(problem, settings.n_prod);
  const int nk = static_cast<int>(problem.indices.size());
  std::vector<cd> c(nk);
  double cmax = 0.0;
  for (int i = 0; i < nk; ++i) {
    c[i] = std::exp(cd(0.0, -problem.frequencies[i] * T / 2.0)) * problem.targets[i];
    cmax = std::max(cmax, std::abs(c[i]));
  }
  WindowControl out;
  const double dxi = kPi / (4.0 * T);
  out.audit.dxi = dxi;
  if (cmax == 0.0) {
    out.v = TimeSignal::zeros(T, settings.min_samples, "v_window");
    return out;
  }
  double half_width = settings.band_width;
  for (int attempt = 0; attempt < 3; ++attempt, half_width *= 1.5) {
    const int count = static_cast<int>(std::ceil(half_width / dxi));
    // Node count with P = 8M matching dxi; at least the accuracy requirement.
    int window_intervals = 4096;
    while (window_intervals * 4 < 2 * count + 1) window_intervals *= 2;
    const Window window = Window::with_intervals(params, window_intervals);

    double xi_eff = 0.0;
    for (int i = 0; i < nk; ++i) {
      if (std::abs(c[i]) > 1e-9 * cmax) {
        xi_eff = std::max(xi_eff, std::abs(problem.frequencies[i]) + half_width);
      }
    }
    const int samples = resolving_samples(problem, half_width, settings.min_samples);
    const int fft_size = 8 * samples;
    if (xi_eff / dxi + 1 >= fft_size / 2) throw Error("synthesize_control: FFT grid too small");

    std::vector<cd> wspec(fft_size, 0.0);
    double wmax = 0.0, edge = 0.0;
    for (int i = 0; i < nk; ++i) {
      if (std::abs(c[i]) <= 1e-9 * cmax) continue;
      const int n = problem.indices[i];
      const double ln = problem.frequencies[i];
      const long mc = std::lround(-ln / dxi);
      const double x0 = mc * dxi + ln;
      const std::vector<double> hv = window.sample_grid(x0, dxi, count);
      const std::vector<double> den = product_denominators(n, freqs);
      for (int m = -count; m <= count; ++m) {
        const double x = x0 + m * dxi;  // xi + lambda_n
        const double hx = hv[m + count];
        if (hx == 0.0) continue;
        // Psi_n(-xi) = Phi_n(-xi - lambda_n) = Phi_n(-x).
        cd psi = 1.0;
        for (double dk : den) psi *= 1.0 + x / dk;
        const cd term = c[i] * psi * hx;
        const long gm = mc + m;
        wspec[(gm % fft_size + fft_size) % fft_size] += term;
        if (std::abs(m) >= count - count / 10) edge = std::max(edge, std::abs(term));
      }
    }
    for (const auto& w : wspec) wmax = std::max(wmax, std::abs(w));
    out.audit.edge_ratio = edge / wmax;
    out.audit.band_half_width = half_width;
    out.audit.xi_max = xi_eff;
    out.audit.fft_size = fft_size;
    out.audit.samples = samples;
    if (out.audit.edge_ratio > settings.band_tol) continue;

    Eigen::FFT<double> fft;
    std::vector<cd> w;
    fft.inv(w, wspec);  // (1/P) sum_m W_m exp(2 pi i m j / P)
    const double factor = dxi / (2.0 * kPi) * fft_size;
    const double dt = T / samples;
    double inside = 0.0, outside = 0.0;
    for (int j = 0; j < fft_size; ++j) {
      const int jj = j < fft_size / 2 ? j : j - fft_size;
      const double t = jj * dt;
      const double mag = std::norm(w[j] * factor);
      if (std::abs(t) > T / 2.0 + 2.0 * dt) {
        outside += mag;
      } else {
        inside += mag;
      }
    }
    out.audit.tail_mass = outside / (inside + outside);
    if (out.audit.tail_mass > settings.tail_bound) {
      throw AuditError(fmt::format(
          "Paley-Wiener support check failed: tail mass {:.3e} outside [-T/2, T/2] exceeds {:.1e}",
          out.audit.tail_mass, settings.tail_bound));
    }
    std::vector<cd> v(samples + 1);
    for (int i = 0; i <= samples; ++i) {
      const int jj = i - samples / 2;
      v[i] = w[(jj % fft_size + fft_size) % fft_size] * factor;
    }
    out.v = TimeSignal(T, std::move(v), "v_window");
    out.v.realify(settings.imag_tol);
    out.audit.max_imag = out.v.max_imag;
    return out;
  }
  throw AuditError(fmt::format("synthesize_control: |W| at band edge stays at {:.3e} of max",
                               out.audit.edge_ratio));
}

Eigen::MatrixXcd gram_matrix(const std::vector<double>& lambdas, double T) {
  const int n = static_cast<int>(lambdas.size());
  Eigen::MatrixXcd g(n, n);
  for (int k = 0; k < n; ++k) {
    for (int j = 0; j < n; ++j) {
      const double d = lambdas[k] - lambdas[j];
      if (k == j || d == 0.0) {
        g(k, j) = T;
        continue;
      }
      const cd w(0.0, d * T);
      cd phi;
      if (std::abs(w) < 0.5) {
        cd term = 1.0;
        phi = 1.0;
        for (int m = 2; m < 30; ++m) {
          term *= w / static_cast<double>(m);
          phi += term;
        }
      } else {
        phi = (std::exp(w) - 1.0) / w;
      }
      g(k, j) = T * phi;
    }
  }
  return g;
}

GramianControl minimal_norm_control(const MomentProblem& problem, double cond_cap,
                                    int min_samples) {
  const double T = problem.horizon;
  const Eigen::MatrixXcd g = gram_matrix(problem.frequencies, T);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(g, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  GramianControl out;
  out.condition = ev(ev.size() - 1) / ev(0);
  if (!(ev(0) > 0.0) || out.condition > cond_cap) {
    throw AuditError(fmt::format(
        "Gram matrix condition number {:.3e} exceeds cap {:.1e}; use a larger T or smaller K",
        out.condition, cond_cap));
  }
  const int n = static_cast<int>(problem.targets.size());
  Eigen::VectorXcd d(n);
  for (int i = 0; i < n; ++i) d(i) = problem.targets[i];
  Eigen::LLT<Eigen::MatrixXcd> llt(g);
  if (llt.info() != Eigen::Success) throw AuditError("Gram matrix is not positive definite");
  Eigen::VectorXcd a = llt.solve(d);
  a += llt.solve(d - g * a);
  out.amplitudes.assign(a.data(), a.data() + n);
  const int samples = resolving_samples(problem, 0.0, min_samples);
  std::vector<cd> v(samples + 1, 0.0);
  for (int i = 0; i <= samples; ++i) {
    const double t = T * i / samples;
    cd s = 0.0;
    for (int j = 0; j < n; ++j) s += a(j) * std::polar(1.0, -problem.frequencies[j] * t);
    v[i] = s;
  }
  out.v = TimeSignal(T, std::move(v), "v_gramian");
  out.v.realify(1e-6);
  return out;
}

MomentResiduals verify_moments(const TimeSignal& v, const MomentProblem& problem) {
  if (std::abs(v.horizon - problem.horizon) > 1e-12 * problem.horizon) {
    throw PreconditionError("verify_moments: signal horizon differs from the problem's");
  }
  MomentResiduals r;
  r.moments = signal_moments(v, problem.frequencies);
  for (size_t i = 0; i < r.moments.size(); ++i) {
    r.residuals.push_back(std::abs(r.moments[i] - problem.targets[i]));
    r.max_residual = std::max(r.max_residual, r.residuals.back());
  }
  if (!problem.check_frequencies.empty()) {
    const auto cm = signal_moments(v, problem.check_frequencies);
    for (size_t i = 0; i < cm.size(); ++i) {
      r.check_residuals.push_back(std::abs(cm[i] - problem.check_targets[i]));
      r.max_check_residual = std::max(r.max_check_residual, r.check_residuals.back());
    }
  }
  return r;
}

double interpolation_error(const MomentProblem& problem, const Window& window, int n_prod,
                           bool include_check) {
  const ProductFrequencies freqs = product_frequencies(problem, n_prod);
  std::vector<std::pair<int, double>> targets;
  for (size_t i = 0; i < problem.indices.size(); ++i) {
    targets.emplace_back(problem.indices[i], problem.frequencies[i]);
  }
  if (include_check) {
    for (size_t i = 0; i < problem.check_indices.size(); ++i) {
      targets.emplace_back(problem.check_indices[i], problem.check_frequencies[i]);
    }
  }
  double err = 0.0;
  for (int n : problem.indices) {
    for (const auto& [k, lk] : targets) {
      const cd g = g_fun(n, cd(-lk, 0.0), freqs, window);
      err = std::max(err, std::abs(g - (k == n ? 1.0 : 0.0)));
    }
  }
  return err;
}

double envelope_tail(const MomentProblem& problem, const Window& window, int n_prod,
                     double half_width) {
  const ProductFrequencies freqs = product_frequencies(problem, n_prod);
  const double X = half_width;
  const int samples = 256;
  double worst = 0.0;
  for (int n : problem.indices) {
    const double ln = freqs.lambda(n);
    for (int side = -1; side <= 1; side += 2) {
      for (int i = 0; i <= samples; ++i) {
        const double x = side * X * (1.0 + static_cast<double>(i) / samples);
        worst = std::max(worst, std::abs(g_fun(n, cd(x - ln, 0.0), freqs, window)));
      }
    }
  }
  return worst;
}

Calibration calibrate_gamma(const MomentProblem& problem, double start,
                            const SynthesisSettings& settings, int max_doublings) {
  if (!(start > 0.0)) throw PreconditionError("calibrate_gamma: start must be positive");
  const double T = problem.horizon;
  double span = 0.0;
  for (double a : problem.frequencies) {
    for (double b : problem.frequencies) span = std::max(span, std::abs(a - b));
    for (double b : problem.check_frequencies) span = std::max(span, std::abs(a - b));
  }
  Calibration cal;
  double gamma = start;
  for (int i = 0; i <= max_doublings; ++i, gamma *= 2.0) {
    CalibrationStep step;
    step.gamma = gamma;
    WindowParams params;
    try {
      params = make_window_params(T, gamma);
    } catch (const Error&) {
      break;  // sigma underflows: larger gamma cannot help
    }
    const double band = settings.band_width;
    step.off_diagonal =
        interpolation_error(problem, Window(params, span), settings.n_prod);
    step.envelope = envelope_tail(problem, Window(params, 2.0 * band), settings.n_prod,
                                  settings.band_width);
    step.passed = step.off_diagonal <= 1e-8 && step.envelope <= settings.band_tol;
    cal.trace.push_back(step);
    if (step.passed) {
      cal.params = params;
      return cal;
    }
  }
  throw ConvergenceError(
      fmt::format("calibrate_gamma: no passing gamma after {} doublings from {}", max_doublings, start));
}

}  // namespace kdvlab
