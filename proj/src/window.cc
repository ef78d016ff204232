#include "kdvlab/window.h"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>
#include <unsupported/Eigen/FFT>

namespace kdvlab {

namespace {

constexpr int kMinIntervals = 4096;
constexpr int kMaxIntervals = 1 << 22;

int intervals_for(double beta, double x_max) {
  // Aliased copies of H sit at x +- pi*M/beta; keep them beyond 2*x_max + margin.
  const double need = beta * (2.0 * x_max + 2000.0 / std::max(beta, 1e-3)) / kPi;
  int m = kMinIntervals;
  while (m < need && m < kMaxIntervals) m *= 2;
  return m;
}

}  // namespace

double sigma(double t, double nu, double mu) {
  if (!(std::abs(t) < 1.0)) return 0.0;
  const double num = std::pow(nu, mu);
  return std::exp(-num / std::pow(1.0 - t, mu) - num / std::pow(1.0 + t, mu));
}

WindowParams make_window_params(double T, double gamma_param, double mu) {
  if (!(T > 0.0) || !(gamma_param > 0.0) || !(mu > 0.0)) {
    throw PreconditionError("window parameters must be positive");
  }
  WindowParams p;
  p.mu = mu;
  p.beta = T / 2.0;
  p.gamma_param = gamma_param;
  p.nu = gamma_param / p.beta;
  Window w(p);
  p.alpha0 = w.params().alpha0;
  return p;
}

Window::Window(const WindowParams& params, double x_max) : params_(params) {
  build(intervals_for(params.beta, x_max));
}

Window Window::with_intervals(const WindowParams& params, int intervals) {
  Window w(params);
  if (intervals != w.intervals_) w.build(intervals);
  return w;
}

std::vector<double> Window::sample_grid(double x0, double dx, int count) const {
  std::vector<double> out(2 * count + 1);
  const double delta = 2.0 / intervals_;
  const double p_real = 2.0 * kPi / (params_.beta * dx * delta);
  const long p = std::lround(p_real);
  const bool pow2 = p > 0 && (p & (p - 1)) == 0;
  if (!pow2 || std::abs(p_real - p) > 1e-9 * p_real || p < 2 * count + 1 || p <= intervals_) {
    for (int m = -count; m <= count; ++m) out[m + count] = (*this)(x0 + m * dx);
    return out;
  }
  // H(x0 + m dx) = sum_j a_j exp(-2 pi i m j / P), a_j = w_j exp(-i beta x0 t_j).
  std::vector<cd> a(p, 0.0), f;
  for (size_t j = 0; j < t_.size(); ++j) {
    if (ws_[j] == 0.0) break;
    const double weight = j == 0 ? ws_[0] : 0.5 * ws_[j];
    const cd e = std::polar(1.0, -params_.beta * x0 * t_[j]);
    a[j] += weight * e;
    if (j > 0) a[p - j] += weight * std::conj(e);
  }
  Eigen::FFT<double> fft;
  fft.fwd(f, a);
  for (int m = -count; m <= count; ++m) out[m + count] = f[(m % p + p) % p].real();
  return out;
}

void Window::build(int intervals) {
  intervals_ = intervals;
  const int half = intervals / 2;
  const double dt = 2.0 / intervals;
  t_.assign(half, 0.0);
  ws_.assign(half, 0.0);
  double total = 0.0;
  for (int j = 0; j < half; ++j) {
    const double t = j * dt;
    const double s = sigma(t, params_.nu, params_.mu);
    t_[j] = t;
    ws_[j] = (j == 0 ? 1.0 : 2.0) * dt * s;
    total += ws_[j];
  }
  if (!(total > 1e-280)) throw Error("window: sigma underflows; gamma too large");
  params_.alpha0 = 1.0 / total;
  for (auto& w : ws_) w *= params_.alpha0;
}

double Window::operator()(double x) const {
  const double bx = params_.beta * x;
  double s = 0.0;
  for (size_t j = 0; j < t_.size(); ++j) {
    if (ws_[j] == 0.0) break;
    s += ws_[j] * std::cos(bx * t_[j]);
  }
  return s;
}

cd Window::operator()(cd z) const {
  if (z.imag() == 0.0) return (*this)(z.real());
  const cd bz = params_.beta * z;
  cd s = 0.0;
  for (size_t j = 0; j < t_.size(); ++j) {
    if (ws_[j] == 0.0) break;
    s += ws_[j] * std::cos(bz * t_[j]);
  }
  return s;
}

double Window::quadrature_error(const std::vector<double>& xs) const {
  Window fine(params_);
  fine.build(std::min(2 * intervals_, kMaxIntervals));
  double e = 0.0;
  for (double x : xs) e = std::max(e, std::abs((*this)(x)-fine(x)));
  return e;
}

double Window::decay_cutoff(double eps, double x_cap) const {
  const double block = 4.0 * kPi / params_.beta;
  const int samples = 32;
  int quiet = 0;
  double start = -1.0;
  for (double x0 = 0.0; x0 <= x_cap; x0 += block) {
    double mx = 0.0;
    for (int i = 0; i < samples; ++i) mx = std::max(mx, std::abs((*this)(x0 + block * i / samples)));
    if (mx <= eps) {
      if (quiet == 0) start = x0;
      if (++quiet >= 4) return start;
    } else {
      quiet = 0;
    }
  }
  throw ConvergenceError(
      fmt::format("window envelope stays above {:.1e} up to x = {:.3e} (gamma = {})", eps, x_cap,
                  params_.gamma_param));
}

cd window_H(cd z, const WindowParams& params) {
  Window w(params, std::abs(z.real()));
  return w(z);
}

DecayFit fit_window_decay(const Window& w, double x_max, double hi, double lo) {
  const double block = 2.0 * kPi / w.params().beta;
  const int per_block = 40;
  std::vector<double> xs, ls;
  for (double x0 = block; x0 + block <= x_max; x0 += block) {
    double best = 0.0, bx = x0;
    for (int i = 0; i < per_block; ++i) {
      const double x = x0 + block * i / per_block;
      const double a = std::abs(w(x));
      if (a > best) {
        best = a;
        bx = x;
      }
    }
    if (best < hi && best > lo) {
      xs.push_back(bx);
      ls.push_back(std::log(best));
    }
  }
  DecayFit fit;
  fit.samples = static_cast<int>(xs.size());
  if (xs.size() < 4) return fit;
  const int n = static_cast<int>(xs.size());
  double ymean = 0.0;
  for (double y : ls) ymean += y;
  ymean /= n;
  double sst = 0.0;
  for (double y : ls) sst += (y - ymean) * (y - ymean);
  fit.r2 = -1.0;
  for (int ip = 0; ip <= 450; ++ip) {
    const double p = 0.15 + 0.001 * ip;
    Eigen::MatrixXd a(n, 3);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
      a(i, 0) = std::pow(xs[i], p);
      a(i, 1) = 1.0;
      a(i, 2) = std::log(xs[i]);
      y(i) = ls[i];
    }
    const Eigen::VectorXd c = a.colPivHouseholderQr().solve(y);
    const double sse = (a * c - y).squaredNorm();
    const double r2 = 1.0 - sse / sst;
    if (r2 > fit.r2) {
      fit.r2 = r2;
      fit.exponent = p;
      fit.coefficient = -c(0);
    }
  }
  return fit;
}

}  // namespace kdvlab
