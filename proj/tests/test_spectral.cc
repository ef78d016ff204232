#include <algorithm>
#include <cmath>

#include "doctest.h"

#include "kdvlab/spectral.h"

using namespace kdvlab;

namespace {

// lambda_1..lambda_8 at L = 1: zeros of the unscaled 3x3 boundary
// determinant, located by golden-section search in 90-digit arithmetic.
constexpr double kLambdaL1[] = {139.0656920033837540196, 1518.728428537732533313, 5625.92420572425385342,
                                13949.99391207601549662, 27979.21848665999699986, 49201.8993189346943642,
                                79106.33765387494091409, 119180.8347574210231539};

const Spectrum& unit_spectrum() {
  static const Spectrum s = solve_modes(1.0, 8);
  return s;
}

}  // namespace

TEST_SUITE("spectral") {
  TEST_CASE("critical lengths below 7 and 10") {
    const auto c7 = critical_lengths(7.0);
    REQUIRE(c7.size() == 1);
    CHECK(c7[0] == doctest::Approx(2 * kPi).epsilon(1e-15));

    const auto c10 = critical_lengths(10.0);
    REQUIRE(c10.size() == 2);
    CHECK(c10[1] == doctest::Approx(2 * kPi * std::sqrt(7.0 / 3.0)).epsilon(1e-15));
    CHECK(c10[1] == doctest::Approx(9.59772).epsilon(1e-6));

    CHECK(critical_lengths(6.0).empty());
  }

  TEST_CASE("critical lengths are sorted and distinct") {
    const auto c = critical_lengths(60.0);
    CHECK(std::is_sorted(c.begin(), c.end()));
    CHECK(std::adjacent_find(c.begin(), c.end()) == c.end());
  }

  TEST_CASE("critical membership") {
    const CriticalCheck one = is_critical(1.0, 1e-9);
    CHECK_FALSE(one.critical);
    CHECK(one.nearest == doctest::Approx(2 * kPi));
    CHECK(one.distance == doctest::Approx(2 * kPi - 1.0));

    const CriticalCheck two_pi = is_critical(2 * kPi, 1e-9);
    CHECK(two_pi.critical);
    CHECK(two_pi.distance == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(two_pi.quadratic_form == 3);

    const CriticalCheck near = is_critical(2 * kPi * std::sqrt(7.0 / 3.0) + 1e-12, 1e-9);
    CHECK(near.critical);
    CHECK(near.quadratic_form == 7);
  }

  TEST_CASE("eigenvalues at L = 1 against the high-precision oracle") {
    const Spectrum& s = unit_spectrum();
    for (int k = 1; k <= 8; ++k) {
      CHECK(s.mode(k).lambda == doctest::Approx(kLambdaL1[k - 1]).epsilon(1e-11));
      CHECK(s.mode(-k).lambda == -s.mode(k).lambda);
    }
  }

  TEST_CASE("eigenvalues agree with the finite-difference operator") {
    const auto fd = fd_frequencies_am(1.0, 800, 4);
    REQUIRE(fd.size() == 4);
    for (int k = 1; k <= 4; ++k) CHECK(std::abs(fd[k - 1] / kLambdaL1[k - 1] - 1.0) < 1e-2);
  }

  TEST_CASE("determinant vanishes at eigenvalues only") {
    const Spectrum& s = unit_spectrum();
    for (int k = 1; k < 8; ++k) {
      CHECK(std::abs(char_determinant(s.mode(k).lambda, 1.0)) <= 1e-8);
      const double mid = 0.5 * (s.mode(k).lambda + s.mode(k + 1).lambda);
      CHECK(std::abs(char_determinant(mid, 1.0)) > 1e-3);
    }
  }

  TEST_CASE("repeated cubic root is signalled") {
    const double lam = 2.0 / (3.0 * std::sqrt(3.0));
    CHECK_THROWS_AS(cubic_roots(lam), DegenerateCubic);
    CHECK_THROWS_AS(cubic_roots(-lam), DegenerateCubic);
    CHECK_NOTHROW(cubic_roots(lam + 1e-3));
  }

  TEST_CASE("cubic roots solve r^3 + r + i lambda = 0") {
    for (double lam : {-50.0, 0.3, 7.0, 1e4}) {
      for (const cd& r : cubic_roots(lam)) CHECK(std::abs(r * r * r + r + kI * lam) <= 1e-9 * (1 + std::abs(lam)));
    }
  }

  TEST_CASE("critical length is rejected") {
    CHECK_THROWS_AS(solve_modes(2 * kPi, 4), PreconditionError);
    CHECK_THROWS_AS(solve_modes(1.0, 0), PreconditionError);
  }

  TEST_CASE("modes belong to the domain and are orthonormal") {
    const Spectrum& s = unit_spectrum();
    const ModeResiduals r = mode_residuals(s);
    CHECK(r.boundary <= 1e-10);
    CHECK(r.equation <= 1e-8);
    CHECK(r.orthonormal <= 1e-8);
  }

  TEST_CASE("negative modes are conjugates") {
    const Spectrum& s = unit_spectrum();
    for (int k = 1; k <= 8; ++k) {
      const EigenMode& p = s.mode(k);
      const EigenMode& m = s.mode(-k);
      for (double x : {0.1, 0.37, 0.8}) CHECK(std::abs(m.eval(x) - std::conj(p.eval(x))) <= 1e-12);
      CHECK(m.slopeL == std::conj(p.slopeL));
    }
  }

  TEST_CASE("frequencies strictly increase in k") {
    const auto f = unit_spectrum().frequencies();
    CHECK(std::adjacent_find(f.begin(), f.end(), std::greater_equal<>()) == f.end());
  }

  TEST_CASE("leading asymptotics") {
    const Spectrum& s = unit_spectrum();
    std::vector<double> dev;
    for (int k = 1; k <= 8; ++k) {
      dev.push_back(std::abs(s.mode(k).lambda / (8 * kPi * kPi * kPi * k * k * k) - 1.0));
      CHECK(dev.back() * k <= 1.0);
    }
    CHECK(dev.back() < dev[2]);
    CHECK(dev[7] < dev[5]);
  }

  TEST_CASE("seeding strategies converge to the same roots") {
    const Spectrum& scan = unit_spectrum();
    for (ModeSeeding seeding : {ModeSeeding::kLambdaHat, ModeSeeding::kAsymptoticA}) {
      ModeOptions o;
      o.seeding = seeding;
      const Spectrum s = solve_modes(1.0, 8, o);
      for (int k = 1; k <= 8; ++k) CHECK(s.mode(k).lambda == doctest::Approx(scan.mode(k).lambda).epsilon(1e-9));
    }
  }

  TEST_CASE("asymptotic mode") {
    CHECK(asymptotic_mode(1, 2 * kPi).lambda_hat == doctest::Approx(1.0).epsilon(1e-14));
    const AsymptoticMode m = asymptotic_mode(2, kPi);
    CHECK(m.a_k == doctest::Approx(17.0 / 6.0).epsilon(1e-14));
    CHECK(std::abs(m.phi_hat(0.0)) <= 1e-14);
    CHECK_THROWS_AS(asymptotic_mode(0, 1.0), PreconditionError);
  }

  TEST_CASE("boundary slopes at L = 1 are nondegenerate") {
    const SlopeReport r = boundary_slope_check(unit_spectrum());
    CHECK(r.degenerate.empty());
    CHECK(r.min_ratio > 0.1);
    CHECK(r.slope.size() == 16);
  }

  TEST_CASE("slope matches differentiation of the exponential representation") {
    const EigenMode& m = unit_spectrum().mode(3);
    const double d = 1e-5;
    const cd fd = (m.eval(1.0 - 2 * d) - 4.0 * m.eval(1.0 - d) + 3.0 * m.eval(1.0)) / (2 * d);
    CHECK(std::abs(fd - m.slopeL) <= 1e-4 * std::abs(m.slopeL));
    CHECK(std::abs(m.eval(1.0, 1) - m.slopeL) <= 1e-9 * std::abs(m.slopeL));
  }

  TEST_CASE("slopes shrink near the critical length") {
    const double at_one = boundary_slope_check(unit_spectrum()).min_slope;
    const double near = boundary_slope_check(solve_modes(2 * kPi - 1e-3, 8)).min_slope;
    CHECK(near * 10 <= at_one);
  }

  TEST_CASE("an injected zero slope is flagged") {
    Spectrum s = unit_spectrum();
    s.modes[3].slopeL = 0.0;
    const SlopeReport r = boundary_slope_check(s);
    REQUIRE(r.degenerate.size() == 1);
    CHECK(r.degenerate[0] == s.modes[3].k);
    CHECK(r.min_slope == 0.0);
  }

  TEST_CASE("gap report") {
    const GapReport g = gap_report(unit_spectrum());
    CHECK(g.gamma > 0.0);
    CHECK(g.alpha == 3.0);
    CHECK(std::isfinite(g.Gamma1));
    CHECK(std::isfinite(g.Gamma2));
    const double lead = 8 * kPi * kPi * kPi;
    CHECK(std::abs(g.a / lead - 1.0) < std::abs(gap_report(solve_modes(1.0, 4)).a / lead - 1.0));
    CHECK(std::abs(g.a / lead - 1.0) < 0.1);
    CHECK(g.a == g.b);

    const double c = 8 * kPi * kPi * kPi;
    const GapReport cubic = gap_report({c, 8 * c, 27 * c}, {-c, -8 * c, -27 * c});
    CHECK(cubic.a == doctest::Approx(c).epsilon(1e-15));
    CHECK(cubic.Gamma1 <= 1e-12 * c);

    CHECK_THROWS_AS(gap_report({1.0, 2.0, 2.0}, {-1.0, -2.0, -3.0}), Error);
  }

  TEST_CASE("finite-difference operator is skew-symmetric") {
    const Eigen::SparseMatrix<double> S = fd_operator_am(1.0, 200);
    const Eigen::SparseMatrix<double> St = S.transpose();
    CHECK((Eigen::MatrixXd(S) + Eigen::MatrixXd(St)).cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("operator with a clamped left slope has complex spectrum") {
    const OriginalSpectrumReport coarse = solve_modes_original(1.0, 5, 400);
    const OriginalSpectrumReport fine = solve_modes_original(1.0, 5, 800);
    REQUIRE(coarse.eigenvalues.size() == 5);
    REQUIRE(fine.eigenvalues.size() == 5);
    for (int i = 0; i < 5; ++i) {
      CHECK(coarse.eigenvalues[i].real() > 1.0);
      CHECK(std::abs(fine.eigenvalues[i] - coarse.eigenvalues[i]) < 1e-2 * std::abs(fine.eigenvalues[i]));
    }
  }
}
