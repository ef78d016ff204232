#include <cmath>
#include <random>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "doctest.h"

#include "kdvlab/moment.h"

using namespace kdvlab;

namespace {

const Spectrum& spec16() {
  static const Spectrum s = solve_modes(1.0, 16);
  return s;
}

MomentProblem phi1_problem(double T) {
  const GridFunction y0 = sample_modes(spec16(), {{1, 1.0}, {-1, 1.0}}, 1600);
  return assemble_moment_problem(y0, spec16(), T, 8);
}

const Calibration& calibration_T1() {
  static const Calibration c = calibrate_gamma(phi1_problem(1.0), 0.5);
  return c;
}

double slope_of(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

TEST_SUITE("moment") {
  TEST_CASE("product is one at the origin and vanishes at shifted frequencies") {
    const MomentProblem p = phi1_problem(1.0);
    const ProductFrequencies f = product_frequencies(p, 200);
    for (int n : {-8, -3, 1, 5, 8}) {
      CHECK(std::abs(product_Phi(n, 0.0, f).value - 1.0) == 0.0);
      for (int k : {-8, -1, 2, 7}) {
        if (k == n) continue;
        CHECK(product_Phi(n, cd(f.lambda(k) - f.lambda(n)), f).value == cd(0.0));
      }
    }
    CHECK(f.lambda(-3) == -f.lambda(3));
    CHECK(f.lambda(20) == doctest::Approx(p.asymptotic_a * 8000.0));
  }

  TEST_CASE("product growth is at most cube-root exponential") {
    const ProductFrequencies f = product_frequencies(phi1_problem(1.0), 200);
    std::vector<double> lx, ly;
    for (int b = 0; b < 6; ++b) {
      const double lo = 4e6 * std::pow(2.0, b), hi = 2 * lo;
      double best = -1e300;
      for (int i = 0; i <= 400; ++i) {
        const double x = lo + (hi - lo) * i / 400.0;
        best = std::max(best, std::log(std::abs(product_Phi(1, x, f).value)));
      }
      if (best > 1.0) {
        lx.push_back(std::log(hi));
        ly.push_back(std::log(best));
      }
    }
    REQUIRE(lx.size() == 6);
    CHECK(slope_of(lx, ly) <= 1.0 / 3.0 + 0.05);
  }

  TEST_CASE("multipliers interpolate the Kronecker delta") {
    const MomentProblem p = phi1_problem(1.0);
    const Calibration& cal = calibration_T1();
    const ProductFrequencies f = product_frequencies(p, 200);
    const Window w(cal.params, 2.0 * f.lambda(8));
    for (int n : {-8, -2, 1, 4, 8}) {
      CHECK(std::abs(g_fun(n, cd(-f.lambda(n)), f, w) - 1.0) <= 1e-12);
      for (int k = -8; k <= 8; ++k) {
        if (k == 0 || k == n) continue;
        CHECK(std::abs(g_fun(n, cd(-f.lambda(k)), f, w)) <= 1e-8);
      }
    }
    CHECK(interpolation_error(p, w, 200, false) <= 1e-8);
  }

  TEST_CASE("multipliers mirror across the origin") {
    const MomentProblem p = phi1_problem(1.0);
    const ProductFrequencies f = product_frequencies(p, 200);
    const Window w(calibration_T1().params, 4000.0);
    for (double x : {-900.0, -10.0, 35.0, 2500.0}) {
      CHECK(std::abs(g_fun(-3, cd(-x), f, w) - g_fun(3, cd(x), f, w)) <= 1e-10);
    }
  }

  TEST_CASE("multipliers decay away from their frequency") {
    const MomentProblem p = phi1_problem(1.0);
    const Window w(calibration_T1().params, 8000.0);
    CHECK(envelope_tail(p, w, 200, 4000.0) <= 1e-10);
  }

  TEST_CASE("targets of the first mode pair") {
    const MomentProblem p = phi1_problem(1.0);
    const double dmax = p.max_target();
    for (size_t i = 0; i < p.indices.size(); ++i) {
      const int k = p.indices[i];
      const cd expected = std::abs(k) == 1 ? -1.0 / spec16().mode(k).slopeL : cd(0.0);
      CHECK(std::abs(p.targets[i] - expected) <= 1e-5 * dmax);
    }
    CHECK(p.check_indices.size() == 16);
    CHECK(p.projection_tail <= 1e-4);
  }

  TEST_CASE("zero state has zero targets") {
    const MomentProblem p = assemble_moment_problem(GridFunction::zeros(1.0, 400), spec16(), 1.0, 8);
    for (const cd& d : p.targets) CHECK(d == cd(0.0));
    CHECK(p.max_target() == 0.0);
  }

  TEST_CASE("real states give conjugate targets") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> nd;
    std::vector<std::pair<int, cd>> terms;
    for (int k = 1; k <= 6; ++k) {
      const cd c(nd(rng), nd(rng));
      terms.push_back({k, c});
      terms.push_back({-k, std::conj(c)});
    }
    const GridFunction y0 = sample_modes(spec16(), terms, 800);
    const MomentProblem p = assemble_moment_problem(y0, spec16(), 0.5, 8);
    for (int k = 1; k <= 8; ++k) {
      CHECK(std::abs(p.targets[p.position(-k)] - std::conj(p.targets[p.position(k)])) <= 1e-12 * p.max_target());
      CHECK(p.frequencies[p.position(-k)] == -p.frequencies[p.position(k)]);
    }
  }

  TEST_CASE("reach targets carry the final-time phase") {
    const GridFunction yT = sample_modes(spec16(), {{2, 1.0}, {-2, 1.0}}, 1600);
    const double T = 0.7;
    const MomentProblem r = reach_moment_problem(yT, spec16(), T, 8);
    const MomentProblem n = assemble_moment_problem(yT, spec16(), T, 8);
    for (size_t i = 0; i < r.indices.size(); ++i) {
      CHECK(std::abs(r.targets[i] + std::exp(cd(0.0, r.frequencies[i] * T)) * n.targets[i]) <= 1e-14);
    }
  }

  TEST_CASE("degenerate slope is rejected") {
    Spectrum s = spec16();
    s.modes[s.modes.size() / 2].slopeL = 0.0;
    CHECK_THROWS_AS(assemble_moment_problem(GridFunction::zeros(1.0, 100), s, 1.0, 8), AuditError);
  }

  TEST_CASE("Gram matrix against numerical quadrature") {
    const std::vector<double> lam{-40.0, -3.0, 2.5, 19.0};
    const double T = 0.8;
    const Eigen::MatrixXcd G = gram_matrix(lam, T);
    for (int k = 0; k < 4; ++k) {
      CHECK(G(k, k) == cd(T));
      for (int j = 0; j < 4; ++j) {
        const double w = lam[k] - lam[j];
        const double re = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
            [w](double t) { return std::cos(w * t); }, 0.0, T, 10, 1e-14);
        const double im = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
            [w](double t) { return std::sin(w * t); }, 0.0, T, 10, 1e-14);
        CHECK(std::abs(G(k, j) - cd(re, im)) <= 1e-13);
      }
    }
  }

  TEST_CASE("zero targets give zero controls") {
    const MomentProblem p = assemble_moment_problem(GridFunction::zeros(1.0, 400), spec16(), 1.0, 8);
    const GramianControl g = minimal_norm_control(p);
    CHECK(g.v.max_abs() == 0.0);
    const WindowControl w = synthesize_control(p, calibration_T1().params);
    CHECK(w.v.max_abs() == 0.0);
  }

  TEST_CASE("both syntheses solve the moments and the Gramian is minimal") {
    const MomentProblem p = phi1_problem(1.0);
    const double scale = std::max(p.max_target(), 1.0);
    const WindowControl w = synthesize_control(p, calibration_T1().params);
    const GramianControl g = minimal_norm_control(p);
    const MomentResiduals rw = verify_moments(w.v, p);
    const MomentResiduals rg = verify_moments(g.v, p);
    CHECK(rw.max_residual <= 1e-6 * p.max_target());
    CHECK(rg.max_residual <= 1e-8 * scale);
    CHECK(g.v.l2_norm() <= w.v.l2_norm());
    CHECK(w.audit.tail_mass <= 1e-6);
    CHECK(w.audit.max_imag <= 1e-6);
    CHECK(rw.check_residuals.size() == p.check_indices.size());
  }

  TEST_CASE("shorter horizon needs a larger control") {
    const MomentProblem p1 = phi1_problem(1.0);
    const MomentProblem p4 = phi1_problem(0.25);
    const Calibration c4 = calibrate_gamma(p4, 0.5);
    const WindowControl w1 = synthesize_control(p1, calibration_T1().params);
    const WindowControl w4 = synthesize_control(p4, c4.params);
    CHECK(w4.v.l2_norm() > w1.v.l2_norm());
    CHECK(minimal_norm_control(p4).v.l2_norm() > minimal_norm_control(p1).v.l2_norm());
  }

  TEST_CASE("condition cap is enforced") {
    CHECK_THROWS_AS(minimal_norm_control(phi1_problem(0.125), 1.0), AuditError);
  }

  TEST_CASE("zero signal leaves the full targets as residual") {
    const MomentProblem p = phi1_problem(1.0);
    const MomentResiduals r = verify_moments(TimeSignal::zeros(1.0, 1000), p);
    CHECK(r.max_residual == doctest::Approx(p.max_target()).epsilon(1e-15));
  }

  TEST_CASE("a single mode calibrates at the starting value") {
    const GridFunction y0 = sample_modes(spec16(), {{1, 1.0}, {-1, 1.0}}, 1600);
    const MomentProblem p = assemble_moment_problem(y0, solve_modes(1.0, 2), 1.0, 1);
    const Calibration c = calibrate_gamma(p, 4.0);
    REQUIRE(c.trace.size() == 1);
    CHECK(c.trace[0].passed);
    CHECK(c.params.gamma_param == 4.0);
  }

  TEST_CASE("calibrated gamma is recorded") {
    const Calibration& c = calibration_T1();
    CHECK(c.params.gamma_param >= 0.5);
    CHECK(std::isfinite(c.params.gamma_param));
    CHECK(c.trace.back().passed);
    CHECK(c.params.beta == 0.5);
  }
  TEST_CASE("signal moments against Gauss-Kronrod quadrature") {
    const double T = 0.9;
    const int n = 512;
    std::vector<double> v(n + 1);
    auto f = [](double t) { return std::cos(3.0 * t) + t * t * t - 0.5 * t; };
    for (int i = 0; i <= n; ++i) v[i] = f(T * i / n);
    const TimeSignal s = TimeSignal::from_real(T, v);
    const std::vector<double> lam{-300.0, -2.0, 0.0, 17.0, 800.0};
    const auto m = signal_moments(s, lam);
    for (size_t j = 0; j < lam.size(); ++j) {
      const double l = lam[j];
      using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
      const double re = GK::integrate([&](double t) { return f(t) * std::cos(l * t); }, 0.0, T, 15, 1e-15);
      const double im = GK::integrate([&](double t) { return f(t) * std::sin(l * t); }, 0.0, T, 15, 1e-15);
      CHECK(std::abs(m[j] - cd(re, im)) <= 1e-10);
    }
  }

  TEST_CASE("time signal basics") {
    const TimeSignal c = TimeSignal::from_real(4.0, std::vector<double>(9, 2.0));
    CHECK(c.l2_norm() == doctest::Approx(4.0).epsilon(1e-15));
    CHECK(c.dt() == 0.5);
    CHECK(c.at(5.0) == cd(0.0));
    const TimeSignal r = TimeSignal::from_real(1.0, {0.0, 1.0, 0.0});
    CHECK(r.at(0.25) == cd(0.5));
    CHECK(r.resampled(4).values[1] == cd(0.5));
    CHECK(relative_distance(r, r) == 0.0);
    CHECK((r - r).max_abs() == 0.0);
    CHECK((2.0 * r).max_abs() == 2.0);
    CHECK_THROWS_AS(TimeSignal(0.0, {1.0, 1.0}), PreconditionError);
  }

  TEST_CASE("realification audits the imaginary residue") {
    TimeSignal ok(1.0, {cd(1.0, 1e-9), cd(-2.0, 0.0)});
    ok.realify();
    CHECK(ok.max_imag == doctest::Approx(1e-9));
    CHECK(ok.values[0].imag() == 0.0);
    TimeSignal bad(1.0, {cd(1.0, 1e-3), cd(-2.0, 0.0)});
    CHECK_THROWS_AS(bad.realify(), AuditError);
  }
}
