#include "kdvlab/spectral.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <boost/math/tools/roots.hpp>
#include <Eigen/Eigenvalues>
#include <fmt/format.h>

namespace kdvlab {

DegenerateCubic::DegenerateCubic(double lam)
    : Error(fmt::format("cubic r^3 + r + i*lambda has a repeated root at lambda = {}", lam)),
      lambda(lam) {}

double trapezoid(const std::vector<double>& y, double dx) {
  if (y.size() < 2) return 0.0;
  double s = 0.5 * (y.front() + y.back());
  for (size_t i = 1; i + 1 < y.size(); ++i) s += y[i];
  return s * dx;
}

namespace {

constexpr double kTwoPi = 2.0 * kPi;

double member_value(long q) { return kTwoPi * std::sqrt(static_cast<double>(q) / 3.0); }

std::set<long> quadratic_forms_upto(double l_max) {
  std::set<long> out;
  const double bound = 3.0 * (l_max / kTwoPi) * (l_max / kTwoPi);
  const long qmax = static_cast<long>(std::floor(bound)) + 1;
  for (long k = 1; k * k <= qmax; ++k) {
    for (long l = 1; k * k + k * l + l * l <= qmax; ++l) {
      const long q = k * k + k * l + l * l;
      if (member_value(q) <= l_max) out.insert(q);
    }
  }
  return out;
}

// (e^w - 1) / w, accurate near w = 0.
cd phi1(cd w) {
  if (std::abs(w) < 0.5) {
    cd term = 1.0, sum = 1.0;
    for (int j = 2; j < 30; ++j) {
      term *= w / static_cast<double>(j);
      sum += term;
      if (std::abs(term) < 1e-18 * std::abs(sum)) break;
    }
    return sum;
  }
  return (std::exp(w) - 1.0) / w;
}

// int_0^L exp(z x + c0) dx.
cd exp_integral(cd z, cd c0, double length) {
  const cd w = z * length;
  if (std::abs(w) < 0.5) return std::exp(c0) * length * phi1(w);
  return (std::exp(c0 + w) - std::exp(c0)) / z;
}

using Coeffs = std::array<cd, 3>;

// Inner product of two shifted exponential sums on (0, L).
cd exp_sum_inner(const Coeffs& ra, const Coeffs& ca, const std::array<double, 3>& sa,
                 const Coeffs& rb, const Coeffs& cb, const std::array<double, 3>& sb,
                 double length) {
  cd s = 0.0;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      const cd z = ra[i] + std::conj(rb[j]);
      const cd c0 = -ra[i] * sa[i] - std::conj(rb[j]) * sb[j];
      s += ca[i] * std::conj(cb[j]) * exp_integral(z, c0, length);
    }
  }
  return s;
}

std::array<double, 3> shifts_for(const Coeffs& r, double length) {
  std::array<double, 3> s{};
  for (int j = 0; j < 3; ++j) s[j] = r[j].real() > 0.0 ? length : 0.0;
  return s;
}

Eigen::Matrix3cd boundary_matrix(const Coeffs& r, const std::array<double, 3>& s,
                                 double length) {
  Eigen::Matrix3cd m;
  for (int j = 0; j < 3; ++j) {
    const cd at0 = std::exp(-r[j] * s[j]);
    const cd atL = std::exp(r[j] * (length - s[j]));
    m(0, j) = at0;
    m(1, j) = atL;
    m(2, j) = r[j] * (at0 - atL);
  }
  for (int i = 0; i < 3; ++i) {
    const double mx = m.row(i).cwiseAbs().maxCoeff();
    if (mx > 0.0) m.row(i) /= mx;
  }
  return m;
}

// Largest real root of s^3 - s - lam for lam >= 0.
double largest_real_root(double lam) {
  double s = std::max(1.0, std::cbrt(lam) + 1.0);
  for (int it = 0; it < 100; ++it) {
    const double f = s * s * s - s - lam;
    const double df = 3.0 * s * s - 1.0;
    const double ds = f / df;
    s -= ds;
    if (std::abs(ds) <= 1e-16 * std::abs(s)) break;
  }
  return s;
}

Coeffs roots_from_a(double a) {
  const cd disc = std::sqrt(cd(3.0 * a * a - 1.0, 0.0));
  return {cd(0.0, 2.0 * a), cd(0.0, -a) + disc, cd(0.0, -a) - disc};
}

EigenMode build_mode(int k, double a, double length) {
  EigenMode m;
  m.k = k;
  m.length = length;
  m.lambda = 8.0 * a * a * a - 2.0 * a;
  m.roots = roots_from_a(a);
  m.shifts = shifts_for(m.roots, length);
  const Eigen::Matrix3cd bm = boundary_matrix(m.roots, m.shifts, length);
  Eigen::JacobiSVD<Eigen::Matrix3cd> svd(bm, Eigen::ComputeFullV);
  Eigen::Vector3cd c = svd.matrixV().col(2);
  const double mag = std::abs(c(0));
  if (mag == 0.0) throw Error(fmt::format("mode {}: oscillatory coefficient vanishes", k));
  c *= std::conj(c(0)) / mag;
  for (int j = 0; j < 3; ++j) m.scaled_coeffs[j] = c(j);
  const double nrm2 = exp_sum_inner(m.roots, m.scaled_coeffs, m.shifts, m.roots,
                                    m.scaled_coeffs, m.shifts, length)
                          .real();
  const double nrm = std::sqrt(nrm2);
  for (auto& cj : m.scaled_coeffs) cj /= nrm;
  m.l2_norm = std::sqrt(exp_sum_inner(m.roots, m.scaled_coeffs, m.shifts, m.roots,
                                      m.scaled_coeffs, m.shifts, length)
                            .real());
  m.slope0 = m.eval(0.0, 1);
  m.slopeL = m.eval(length, 1);
  return m;
}

double h_branch(double a, double length) {
  const double b2 = 3.0 * a * a - 1.0;
  const double sa = std::sin(a * length), ca = std::cos(a * length);
  const double c2a = std::cos(2.0 * a * length);
  if (b2 > 0.0) {
    const double b = std::sqrt(b2);
    const double bl = b * length;
    const double tanh_over_b = bl < 1e-4 ? length * (1.0 - bl * bl / 3.0) : std::tanh(bl) / b;
    const double sech = bl > 700.0 ? 0.0 : 1.0 / std::cosh(bl);
    return 3.0 * a * tanh_over_b * sa + ca - c2a * sech;
  }
  const double be = std::sqrt(-b2);
  const double bl = be * length;
  const double sin_over_b = bl < 1e-4 ? length * (1.0 - bl * bl / 6.0) : std::sin(bl) / be;
  return 3.0 * a * sin_over_b * sa + std::cos(bl) * ca - c2a;
}

double brent(double lo, double hi, double flo, double fhi, double length, int max_iter) {
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  boost::uintmax_t iters = static_cast<boost::uintmax_t>(max_iter);
  auto f = [length](double a) { return h_branch(a, length); };
  auto res = boost::math::tools::toms748_solve(
      f, lo, hi, flo, fhi, boost::math::tools::eps_tolerance<double>(52), iters);
  if (iters >= static_cast<boost::uintmax_t>(max_iter)) {
    throw ConvergenceError(fmt::format("root refinement did not converge in [{}, {}]", lo, hi));
  }
  return 0.5 * (res.first + res.second);
}

double scan_step(double length) { return kPi / (64.0 * length); }

}  // namespace

std::vector<double> critical_lengths(double l_max) {
  if (!(l_max > 0.0)) throw PreconditionError("critical_lengths: l_max must be positive");
  std::vector<double> out;
  for (long q : quadratic_forms_upto(l_max)) out.push_back(member_value(q));
  return out;
}

CriticalCheck is_critical(double length, double tol) {
  if (!(length > 0.0) || !(tol > 0.0)) {
    throw PreconditionError("is_critical: length and tol must be positive");
  }
  CriticalCheck res;
  res.distance = std::numeric_limits<double>::infinity();
  for (long q : quadratic_forms_upto(length + kTwoPi)) {
    const double d = std::abs(length - member_value(q));
    if (d < res.distance) {
      res.distance = d;
      res.nearest = member_value(q);
      res.quadratic_form = q;
    }
  }
  res.critical = res.distance <= tol;
  return res;
}

std::array<cd, 3> cubic_roots(double lambda) {
  const double disc = 4.0 - 27.0 * lambda * lambda;
  if (std::abs(disc) <= 1e-12) throw DegenerateCubic(lambda);
  const double s0 = lambda >= 0.0 ? largest_real_root(lambda) : -largest_real_root(-lambda);
  // r = i s with s^3 - s - lambda = 0; deflate the real root s0.
  const cd q = std::sqrt(cd(4.0 - 3.0 * s0 * s0, 0.0));
  const cd s1 = (-s0 + q) / 2.0, s2 = (-s0 - q) / 2.0;
  return {kI * s0, kI * s1, kI * s2};
}

cd char_determinant(double lambda, double length) {
  if (!(length > 0.0)) throw PreconditionError("char_determinant: length must be positive");
  const auto r = cubic_roots(lambda);
  return boundary_matrix(r, shifts_for(r, length), length).determinant();
}

double reduced_characteristic(double a, double length) { return h_branch(a, length); }

std::array<cd, 3> EigenMode::coeffs() const {
  std::array<cd, 3> c{};
  for (int j = 0; j < 3; ++j) c[j] = scaled_coeffs[j] * std::exp(-roots[j] * shifts[j]);
  return c;
}

cd EigenMode::eval(double x, int order) const {
  cd s = 0.0;
  for (int j = 0; j < 3; ++j) {
    cd f = scaled_coeffs[j] * std::exp(roots[j] * (x - shifts[j]));
    for (int o = 0; o < order; ++o) f *= roots[j];
    s += f;
  }
  return s;
}

EigenMode EigenMode::conjugate() const {
  EigenMode m = *this;
  m.k = -k;
  m.lambda = -lambda;
  for (int j = 0; j < 3; ++j) {
    m.roots[j] = std::conj(roots[j]);
    m.scaled_coeffs[j] = std::conj(scaled_coeffs[j]);
  }
  m.slope0 = std::conj(slope0);
  m.slopeL = std::conj(slopeL);
  return m;
}

const EigenMode& Spectrum::mode(int k) const {
  if (k == 0 || std::abs(k) > count) throw PreconditionError(fmt::format("no mode {}", k));
  return k < 0 ? modes[count + k] : modes[count + k - 1];
}

std::vector<double> Spectrum::frequencies() const {
  std::vector<double> f;
  for (const auto& m : modes) f.push_back(m.lambda);
  return f;
}

std::vector<int> Spectrum::indices() const {
  std::vector<int> k;
  for (const auto& m : modes) k.push_back(m.k);
  return k;
}

double refine_root(double a_seed, double length, int max_iter) {
  const double step = scan_step(length) / 4.0;
  const double a0 = std::max(a_seed, 0.5);
  const double f0 = h_branch(a0, length);
  if (f0 == 0.0) return a0;
  double up = a0, fup = f0, dn = a0, fdn = f0;
  for (int i = 0; i < 100000; ++i) {
    const double u1 = up + step;
    const double fu1 = h_branch(u1, length);
    if (fu1 * fup <= 0.0) return brent(up, u1, fup, fu1, length, max_iter);
    up = u1;
    fup = fu1;
    if (dn - step >= 0.5) {
      const double d1 = dn - step;
      const double fd1 = h_branch(d1, length);
      if (fd1 * fdn <= 0.0) return brent(d1, dn, fd1, fdn, length, max_iter);
      dn = d1;
      fdn = fd1;
    }
  }
  throw ConvergenceError(fmt::format("no sign change found near a = {}", a_seed));
}

Spectrum solve_modes(double length, int count, const ModeOptions& opts) {
  if (!(length > 0.0)) throw PreconditionError("solve_modes: length must be positive");
  if (count < 1) throw PreconditionError("solve_modes: count must be >= 1");
  const auto crit = is_critical(length, opts.critical_tol);
  if (crit.critical) {
    throw PreconditionError(fmt::format(
        "solve_modes: L = {} is critical (distance {} to {})", length, crit.distance, crit.nearest));
  }
  std::vector<double> as;
  if (opts.seeding == ModeSeeding::kScan) {
    const double step = scan_step(length);
    double a = 0.5, fa = h_branch(a, length);
    while (static_cast<int>(as.size()) < count) {
      const double b = a + step;
      const double fb = h_branch(b, length);
      if (fa == 0.0 && a > 0.5) {
        as.push_back(a);
      } else if (fa * fb < 0.0) {
        as.push_back(brent(a, b, fa, fb, length, opts.max_iter));
      }
      a = b;
      fa = fb;
    }
  } else {
    for (int k = 1; k <= count; ++k) {
      double seed;
      if (opts.seeding == ModeSeeding::kLambdaHat) {
        const double lam_hat = 8.0 * kPi * kPi * kPi * k * k * k / (length * length * length);
        seed = largest_real_root(lam_hat) / 2.0;
      } else {
        // The asymptotic a-law counts from zero; mode k sits at index k - 1.
        seed = 5.0 * kPi / (6.0 * length) + (k - 1) * kPi / length;
      }
      const double a = refine_root(seed, length, opts.max_iter);
      for (double prev : as) {
        if (std::abs(prev - a) <= 1e-9 * a) {
          throw ConvergenceError(fmt::format("seed for mode {} converged to an earlier root", k));
        }
      }
      as.push_back(a);
    }
    std::sort(as.begin(), as.end());
  }
  Spectrum spec;
  spec.length = length;
  spec.count = count;
  std::vector<EigenMode> pos;
  for (int k = 1; k <= count; ++k) pos.push_back(build_mode(k, as[k - 1], length));
  for (int k = count; k >= 1; --k) spec.modes.push_back(pos[k - 1].conjugate());
  for (auto& m : pos) spec.modes.push_back(m);
  return spec;
}

AsymptoticMode asymptotic_mode(int k, double length) {
  if (k < 1) throw PreconditionError("asymptotic_mode: k must be >= 1");
  AsymptoticMode m;
  m.lambda_hat = 8.0 * kPi * kPi * kPi * k * k * k / (length * length * length);
  m.a_k = 5.0 * kPi / (6.0 * length) + k * kPi / length;
  m.alpha = 1.0 / std::sqrt(length);
  const double a = m.a_k, alpha = m.alpha, L = length;
  const double b = std::sqrt(3.0 * a * a - 1.0);
  const cd e3 = std::exp(cd(0.0, 3.0 * a * L));
  const double em2 = std::exp(-2.0 * b * L);
  const double ebl = std::exp(-b * L);
  // cosh(bx) + C sinh(bx) with C = (e^{3iaL} - cosh bL)/sinh bL, written
  // without growing exponentials.
  m.phi_hat = [=](double x) {
    const cd grow = (e3 - ebl) * std::exp(b * (x - L)) / (1.0 - em2);
    const cd decay = (1.0 - e3 * ebl) * std::exp(-b * x) / (1.0 - em2);
    return alpha * (std::exp(cd(0.0, -a * x)) * (grow + decay) - std::exp(cd(0.0, 2.0 * a * x)));
  };
  return m;
}

SlopeReport boundary_slope_check(const Spectrum& spec, double threshold) {
  SlopeReport rep;
  rep.threshold = threshold;
  rep.min_slope = std::numeric_limits<double>::infinity();
  rep.min_ratio = std::numeric_limits<double>::infinity();
  for (const auto& m : spec.modes) {
    const double s = std::abs(m.slopeL);
    const double r = s / std::abs(m.k);
    rep.k.push_back(m.k);
    rep.slope.push_back(s);
    rep.ratio.push_back(r);
    rep.min_slope = std::min(rep.min_slope, s);
    rep.min_ratio = std::min(rep.min_ratio, r);
    if (s < threshold) rep.degenerate.push_back(m.k);
  }
  return rep;
}

GapReport gap_report(const std::vector<double>& positive, const std::vector<double>& negative) {
  if (positive.size() < 2 || positive.size() != negative.size()) {
    throw PreconditionError("gap_report: need K >= 2 on both branches");
  }
  GapReport g;
  std::vector<double> all(positive);
  all.insert(all.end(), negative.begin(), negative.end());
  std::sort(all.begin(), all.end());
  g.gamma = std::numeric_limits<double>::infinity();
  for (size_t i = 1; i < all.size(); ++i) g.gamma = std::min(g.gamma, all[i] - all[i - 1]);
  if (!(g.gamma > 0.0)) throw Error("gap_report: duplicate frequency (gap is zero)");
  auto fit = [](const std::vector<double>& lam) {
    double num = 0.0, den = 0.0;
    for (size_t i = 0; i < lam.size(); ++i) {
      const double k3 = std::pow(static_cast<double>(i + 1), 3);
      num += std::abs(lam[i]) * k3;
      den += k3 * k3;
    }
    return num / den;
  };
  g.a = fit(positive);
  g.b = fit(negative);
  for (size_t i = 0; i < positive.size(); ++i) {
    const double k = static_cast<double>(i + 1);
    const double k3 = k * k * k;
    g.Gamma1 = std::max(g.Gamma1, std::abs(positive[i] - g.a * k3) / (k * k));
    g.Gamma1 = std::max(g.Gamma1, std::abs(std::abs(negative[i]) - g.b * k3) / (k * k));
    g.Gamma2 = std::max(g.Gamma2, k3 / std::abs(positive[i]));
    g.Gamma2 = std::max(g.Gamma2, k3 / std::abs(negative[i]));
  }
  return g;
}

GapReport gap_report(const Spectrum& spec) {
  std::vector<double> pos, neg;
  for (int k = 1; k <= spec.count; ++k) {
    pos.push_back(spec.mode(k).lambda);
    neg.push_back(spec.mode(-k).lambda);
  }
  return gap_report(pos, neg);
}

cd mode_inner(const EigenMode& a, const EigenMode& b) {
  return exp_sum_inner(a.roots, a.scaled_coeffs, a.shifts, b.roots, b.scaled_coeffs, b.shifts,
                       a.length);
}

ModeResiduals mode_residuals(const Spectrum& spec) {
  ModeResiduals res;
  for (const auto& m : spec.modes) {
    res.boundary = std::max({res.boundary, std::abs(m.eval(0.0)), std::abs(m.eval(spec.length)),
                             std::abs(m.eval(0.0, 1) - m.eval(spec.length, 1))});
    Coeffs rc{};
    for (int j = 0; j < 3; ++j) {
      const cd r = m.roots[j];
      rc[j] = m.scaled_coeffs[j] * (-r * r * r - r - kI * m.lambda);
    }
    const double num =
        std::sqrt(std::abs(exp_sum_inner(m.roots, rc, m.shifts, m.roots, rc, m.shifts, m.length)));
    res.equation = std::max(res.equation, num / m.l2_norm);
  }
  for (const auto& a : spec.modes) {
    for (const auto& b : spec.modes) {
      const cd g = mode_inner(a, b);
      res.orthonormal = std::max(res.orthonormal, std::abs(g - (a.k == b.k ? 1.0 : 0.0)));
    }
  }
  return res;
}

Eigen::SparseMatrix<double> fd_operator_am(double length, int n) {
  if (n < 4) throw PreconditionError("fd_operator_am: need at least 4 points");
  const double h = length / (n + 1);
  const double h3 = h * h * h;
  // Coefficients of w_{i+d}, d = -2..2, in -(D3 + D1) w.
  const double coef[5] = {1.0 / (2.0 * h3), -1.0 / h3 + 1.0 / (2.0 * h), 0.0,
                          1.0 / h3 - 1.0 / (2.0 * h), -1.0 / (2.0 * h3)};
  const int ring = n + 1;
  std::vector<Eigen::Triplet<double>> trip;
  for (int i = 1; i <= n; ++i) {
    for (int d = -2; d <= 2; ++d) {
      if (d == 0) continue;
      const int j = ((i + d) % ring + ring) % ring;
      if (j == 0) continue;
      trip.emplace_back(i - 1, j - 1, coef[d + 2]);
    }
  }
  Eigen::SparseMatrix<double> s(n, n);
  s.setFromTriplets(trip.begin(), trip.end());
  return s;
}

std::vector<double> fd_frequencies_am(double length, int n, int count) {
  const Eigen::MatrixXd s = Eigen::MatrixXd(fd_operator_am(length, n));
  const Eigen::MatrixXcd herm = cd(0.0, -1.0) * s.cast<cd>();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(herm, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw Error("fd_frequencies_am: eigensolve failed");
  std::vector<double> out;
  const auto& ev = es.eigenvalues();
  for (Eigen::Index i = 0; i < ev.size() && static_cast<int>(out.size()) < count; ++i) {
    if (ev(i) > 0.0) out.push_back(ev(i));
  }
  return out;
}

OriginalSpectrumReport solve_modes_original(double length, int count, int n) {
  if (!(length > 0.0)) throw PreconditionError("solve_modes_original: length must be positive");
  if (n < 16) throw PreconditionError("solve_modes_original: need at least 16 points");
  const double h = length / (n + 1);
  const double h3 = h * h * h;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  // Stencil value of w at node j (0..n+2 with ghosts) expressed on interior unknowns.
  auto add = [&](int row, int node, double c) {
    if (node >= 1 && node <= n) {
      a(row, node - 1) += c;
    } else if (node == -1) {
      a(row, 0) += c;  // w'(0) = 0: w_{-1} = w_1
    } else if (node == n + 2) {
      // Quartic extrapolation through w_{n+1} = 0, w_n, ..., w_{n-3}.
      const double w[4] = {-10.0, 10.0, -5.0, 1.0};
      for (int q = 0; q < 4; ++q) a(row, n - 1 - q) += c * w[q];
    }
  };
  for (int i = 1; i <= n; ++i) {
    const int r = i - 1;
    add(r, i + 2, -1.0 / (2.0 * h3));
    add(r, i + 1, 1.0 / h3 - 1.0 / (2.0 * h));
    add(r, i - 1, -1.0 / h3 + 1.0 / (2.0 * h));
    add(r, i - 2, 1.0 / (2.0 * h3));
  }
  Eigen::EigenSolver<Eigen::MatrixXd> es(a, true);
  if (es.info() != Eigen::Success) throw Error("solve_modes_original: eigensolve failed");
  const Eigen::VectorXcd ev = es.eigenvalues();
  Eigen::MatrixXcd vecs = es.eigenvectors();
  for (Eigen::Index j = 0; j < vecs.cols(); ++j) vecs.col(j).normalize();
  std::vector<Eigen::Index> order(ev.size());
  for (Eigen::Index i = 0; i < ev.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index x, Eigen::Index y) { return std::abs(ev(x)) < std::abs(ev(y)); });
  OriginalSpectrumReport rep;
  rep.n = n;
  for (int i = 0; i < count && i < static_cast<int>(order.size()); ++i) {
    rep.eigenvalues.push_back(ev(order[i]));
  }
  Eigen::BDCSVD<Eigen::MatrixXcd> svd(vecs);
  const auto& sv = svd.singularValues();
  rep.eigvec_condition = sv(0) / sv(sv.size() - 1);
  return rep;
}

}  // namespace kdvlab
