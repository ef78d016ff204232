#include "kdvlab/signal.h"

#include <algorithm>
#include <array>
#include <cmath>

#include <boost/math/quadrature/gauss.hpp>
#include <fmt/format.h>

namespace kdvlab {

TimeSignal::TimeSignal(double T, std::vector<cd> v, std::string name)
    : horizon(T), values(std::move(v)), label(std::move(name)) {
  if (!(T > 0.0)) throw PreconditionError("TimeSignal: horizon must be positive");
  if (values.size() < 2) throw PreconditionError("TimeSignal: need at least two samples");
}

TimeSignal TimeSignal::zeros(double T, int steps, std::string name) {
  return TimeSignal(T, std::vector<cd>(steps + 1, 0.0), std::move(name));
}

TimeSignal TimeSignal::from_real(double T, const std::vector<double>& v, std::string name) {
  std::vector<cd> c(v.begin(), v.end());
  return TimeSignal(T, std::move(c), std::move(name));
}

cd TimeSignal::at(double t) const {
  if (t < 0.0 || t > horizon) return 0.0;
  const double s = t / dt();
  const int n = steps();
  int i = static_cast<int>(std::floor(s));
  if (i >= n) return values[n];
  const double f = s - i;
  return (1.0 - f) * values[i] + f * values[i + 1];
}

std::vector<double> TimeSignal::real() const {
  std::vector<double> r;
  r.reserve(values.size());
  for (const auto& v : values) r.push_back(v.real());
  return r;
}

std::vector<double> TimeSignal::imag() const {
  std::vector<double> r;
  r.reserve(values.size());
  for (const auto& v : values) r.push_back(v.imag());
  return r;
}

double TimeSignal::l2_norm() const {
  std::vector<double> sq;
  sq.reserve(values.size());
  for (const auto& v : values) sq.push_back(std::norm(v));
  return std::sqrt(trapezoid(sq, dt()));
}

double TimeSignal::max_abs() const {
  double m = 0.0;
  for (const auto& v : values) m = std::max(m, std::abs(v));
  return m;
}

TimeSignal TimeSignal::resampled(int n) const {
  if (n == steps()) return *this;
  std::vector<cd> out(n + 1);
  for (int i = 0; i <= n; ++i) out[i] = at(horizon * i / n);
  TimeSignal s(horizon, std::move(out), label);
  s.max_imag = max_imag;
  return s;
}

void TimeSignal::realify(double tol) {
  double mre = 0.0, mim = 0.0;
  for (const auto& v : values) {
    mre = std::max(mre, std::abs(v.real()));
    mim = std::max(mim, std::abs(v.imag()));
  }
  max_imag = mim;
  if (mim > tol * mre && mim > 0.0) {
    throw AuditError(fmt::format("{}: imaginary residue {:.3e} exceeds {:.1e} * max|Re| = {:.3e}",
                                 label.empty() ? "signal" : label, mim, tol, tol * mre));
  }
  for (auto& v : values) v = cd(v.real(), 0.0);
}

namespace {

void check_same_grid(const TimeSignal& a, const TimeSignal& b) {
  if (a.horizon != b.horizon || a.values.size() != b.values.size()) {
    throw PreconditionError("signal arithmetic needs identical grids");
  }
}

constexpr int kStencil = 8;

// W[j] = int_0^1 l_j(s) exp(i theta s) ds for Lagrange basis on nodes o..o+7.
std::array<cd, kStencil> panel_weights(int o, double theta) {
  std::array<cd, kStencil> w{};
  for (int j = 0; j < kStencil; ++j) {
    auto f = [&](double s) {
      double l = 1.0;
      for (int m = 0; m < kStencil; ++m) {
        if (m == j) continue;
        l *= (s - (o + m)) / static_cast<double>(j - m);
      }
      return l * std::exp(cd(0.0, theta * s));
    };
    if (std::abs(theta) <= 20.0) {
      w[j] = boost::math::quadrature::gauss<double, 30>::integrate(f, 0.0, 1.0);
    } else {
      const int pieces = static_cast<int>(std::ceil(std::abs(theta) / 20.0));
      cd s = 0.0;
      for (int p = 0; p < pieces; ++p) {
        s += boost::math::quadrature::gauss<double, 30>::integrate(
            f, static_cast<double>(p) / pieces, static_cast<double>(p + 1) / pieces);
      }
      w[j] = s;
    }
  }
  return w;
}

// Low-order fallback for very short signals: trapezoid of the linear
// interpolant, integrated exactly.
cd linear_moment(const TimeSignal& v, double lambda) {
  const double h = v.dt();
  const double th = lambda * h;
  cd w0, w1;  // int_0^1 (1-s) e^{i th s}, int_0^1 s e^{i th s}
  if (std::abs(th) < 1e-3) {
    w0 = cd(0.5, th / 6.0);
    w1 = cd(0.5, th / 3.0);
  } else {
    const cd e = std::exp(cd(0.0, th));
    const cd it(0.0, th);
    w1 = e / it - (e - 1.0) / (it * it);
    w0 = (e - 1.0) / it - w1;
  }
  cd s = 0.0;
  for (int p = 0; p < v.steps(); ++p) {
    s += std::exp(cd(0.0, lambda * p * h)) * (w0 * v.values[p] + w1 * v.values[p + 1]);
  }
  return s * h;
}

}  // namespace

TimeSignal operator+(const TimeSignal& a, const TimeSignal& b) {
  check_same_grid(a, b);
  std::vector<cd> v(a.values.size());
  for (size_t i = 0; i < v.size(); ++i) v[i] = a.values[i] + b.values[i];
  return TimeSignal(a.horizon, std::move(v));
}

TimeSignal operator-(const TimeSignal& a, const TimeSignal& b) {
  check_same_grid(a, b);
  std::vector<cd> v(a.values.size());
  for (size_t i = 0; i < v.size(); ++i) v[i] = a.values[i] - b.values[i];
  return TimeSignal(a.horizon, std::move(v));
}

TimeSignal operator*(double s, const TimeSignal& a) {
  std::vector<cd> v(a.values.size());
  for (size_t i = 0; i < v.size(); ++i) v[i] = s * a.values[i];
  return TimeSignal(a.horizon, std::move(v), a.label);
}

std::vector<cd> signal_moments(const TimeSignal& v, const std::vector<double>& lambdas) {
  const int n = v.steps();
  const double h = v.dt();
  std::vector<cd> out;
  out.reserve(lambdas.size());
  for (double lam : lambdas) {
    if (n < kStencil) {
      out.push_back(linear_moment(v, lam));
      continue;
    }
    const double theta = lam * h;
    std::array<std::array<cd, kStencil>, 2 * kStencil> wcache;
    std::array<bool, 2 * kStencil> have{};
    auto weights = [&](int o) -> const std::array<cd, kStencil>& {
      const int slot = o + kStencil;
      if (!have[slot]) {
        wcache[slot] = panel_weights(o, theta);
        have[slot] = true;
      }
      return wcache[slot];
    };
    cd sum = 0.0;
    const cd step = std::exp(cd(0.0, theta));
    cd phase = 1.0;
    for (int p = 0; p < n; ++p) {
      if (p % 1024 == 0) phase = std::exp(cd(0.0, lam * p * h));
      int o = -3;
      if (p + o < 0) o = -p;
      if (p + o + kStencil - 1 > n) o = n - (kStencil - 1) - p;
      const auto& w = weights(o);
      cd panel = 0.0;
      for (int j = 0; j < kStencil; ++j) panel += w[j] * v.values[p + o + j];
      sum += phase * panel;
      phase *= step;
    }
    out.push_back(sum * h);
  }
  return out;
}

double relative_distance(const TimeSignal& a, const TimeSignal& b) {
  const TimeSignal ar = a.steps() == b.steps() ? a : a.resampled(b.steps());
  std::vector<double> sq(b.values.size());
  for (size_t i = 0; i < sq.size(); ++i) sq[i] = std::norm(ar.values[i] - b.values[i]);
  const double d = std::sqrt(trapezoid(sq, b.dt()));
  const double nb = b.l2_norm();
  return nb > 0.0 ? d / nb : d;
}

}  // namespace kdvlab
