#include <cmath>
#include <vector>

#include "doctest.h"

#include "kdvlab/nonlinear.h"

using namespace kdvlab;

namespace {

const Spectrum& spec16() {
  static const Spectrum s = solve_modes(1.0, 16);
  return s;
}

NonlinearSetup coarse_setup(double T = 1.0) {
  NonlinearSetup s;
  s.spec = &spec16();
  s.horizon = T;
  s.n_x = 400;
  s.dt_max = 1e-4;
  return s;
}

GridFunction target(int n, double norm) {
  GridFunction y = sample_modes(spec16(), {{1, 1.0}, {-1, 1.0}, {2, cd(0.3, 0.2)}, {-2, cd(0.3, -0.2)}}, n);
  y.values *= norm / y.l2_norm();
  return y;
}

double distance(const GridFunction& a, const GridFunction& b) {
  return GridFunction(a.length, a.values - b.values).l2_norm();
}

GridFunction linear_final(const TimeSignal& u, const NonlinearSetup& s) {
  return solve_neumann(GridFunction::zeros(1.0, s.n_x), SourceTerm::zero(), u, s.grid(), s.stepper).final_state();
}

}  // namespace

TEST_SUITE("nonlinear") {
  TEST_CASE("setup needs a spectrum") {
    NonlinearSetup s;
    CHECK_THROWS_AS(s.grid(), PreconditionError);
  }

  TEST_CASE("discrete reach map matches the adjoint sensitivity") {
    NonlinearSetup s = coarse_setup(0.05);
    s.n_x = 60;
    s.dt_max = 2.5e-4;
    const DiscreteReach dr = build_discrete_reach(spec16(), s.grid(), 4);
    REQUIRE(dr.kappa.rows() == 8);
    REQUIRE(dr.kappa.cols() == s.grid().n_t + 1);
    const Eigen::MatrixXcd R = control_sensitivity(false, s.grid(), dr.vectors);
    CHECK((R - dr.kappa).cwiseAbs().maxCoeff() <= 1e-9 * dr.kappa.cwiseAbs().maxCoeff());
    CHECK((dr.gram - dr.gram.adjoint()).cwiseAbs().maxCoeff() <= 1e-12 * dr.gram.cwiseAbs().maxCoeff());
    CHECK(dr.condition >= 1.0);
    CHECK(dr.max_residual <= 1e-10);
  }

  TEST_CASE("zero target needs no control") {
    const NonlinearSetup s = coarse_setup();
    const HumControl h = hum_reach(GridFunction::zeros(1.0, 400), s);
    CHECK(h.u.max_abs() == 0.0);
    CHECK(reach_map_P(TimeSignal::zeros(1.0, s.grid().n_t), s).values.cwiseAbs().maxCoeff() == 0.0);
    const ReachResult r = fixed_point_reach(GridFunction::zeros(1.0, 400), s, 1e-3, 20);
    CHECK(r.converged);
    CHECK(r.iterations == 0);
    CHECK(r.control.max_abs() == 0.0);
  }

  TEST_CASE("linear reach control is linear") {
    const NonlinearSetup s = coarse_setup();
    const GridFunction a = target(400, 1.0);
    GridFunction b = sample_modes(spec16(), {{3, cd(0.0, 1.0)}, {-3, cd(0.0, -1.0)}}, 400);
    GridFunction sum(1.0, a.values + b.values), twice(1.0, 2.0 * a.values);
    const TimeSignal ua = hum_reach(a, s).u, ub = hum_reach(b, s).u;
    const double scale = ua.max_abs() + ub.max_abs();
    CHECK((hum_reach(twice, s).u - 2.0 * ua).max_abs() <= 1e-10 * scale);
    CHECK((hum_reach(sum, s).u - (ua + ub)).max_abs() <= 1e-10 * scale);
  }

  TEST_CASE("linear reach control lands on the target") {
    const NonlinearSetup s = coarse_setup();
    const GridFunction yT = target(400, 1.0);
    const HumControl h = hum_reach(yT, s);
    CHECK(distance(linear_final(h.u, s), yT) <= 1e-2 * yT.l2_norm());
    CHECK(h.condition >= 1.0);
  }

  TEST_CASE("reach map departs quadratically from the linear map") {
    const NonlinearSetup s = coarse_setup();
    const TimeSignal u = hum_reach(target(400, 1.0), s).u;
    const double base = 1e-3 / u.l2_norm();
    std::vector<double> gaps;
    for (double f : {1.0, 2.0, 4.0}) {
      const TimeSignal v = (base * f) * u;
      gaps.push_back(distance(reach_map_P(v, s), linear_final(v, s)));
    }
    for (size_t i = 1; i < gaps.size(); ++i) {
      CHECK(std::log2(gaps[i] / gaps[i - 1]) == doctest::Approx(2.0).epsilon(0.1));
    }
    const TimeSignal v = base * u;
    const GridFunction p1 = reach_map_P(v, s), p2 = reach_map_P(2.0 * v, s);
    CHECK(distance(p2, GridFunction(1.0, 2.0 * p1.values)) <= 10.0 * gaps[0]);
  }

  TEST_CASE("remainder fit") {
    const NonlinearSetup s = coarse_setup();
    const TimeSignal u = hum_reach(target(400, 1e-2), s).u;
    const RemainderFit f = quadratic_remainder(u, s, {1.0, 2.0, 4.0});
    CHECK(f.gaps.size() == 3);
    CHECK(f.exponent >= 1.8);
    CHECK(f.exponent <= 2.2);
  }

  TEST_CASE("fixed point reaches a small target") {
    const NonlinearSetup s = coarse_setup();
    const GridFunction yT = target(400, 1e-2);
    const ReachResult r = fixed_point_reach(yT, s, 1e-3, 20);
    CHECK(r.converged);
    CHECK(r.iterations <= 20);
    REQUIRE_FALSE(r.ratios.empty());
    CHECK(r.mean_ratio() < 1.0);
    CHECK(r.residuals.size() == r.span_residuals.size());
    CHECK(r.ratios.size() + 1 == r.residuals.size());
    // Independent check with the implicit nonlinear treatment.
    StepperOptions picard = s.stepper;
    picard.nonlinear = NonlinearTreatment::kPicard;
    const GridFunction reached = solve_nonlinear(GridFunction::zeros(1.0, 400), r.control, s.grid(), picard).final_state();
    CHECK(distance(reached, yT) <= 1e-3 * yT.l2_norm());

    // A smaller target contracts at least as fast.
    const ReachResult small = fixed_point_reach(target(400, 1e-3), s, 1e-3, 20);
    CHECK(small.converged);
    REQUIRE_FALSE(small.ratios.empty());
    CHECK(small.ratios.front() < r.ratios.front());
  }

  TEST_CASE("reached state holds on a finer grid") {
    const NonlinearSetup s = coarse_setup();
    const GridFunction yT = target(400, 1e-2);
    const ReachResult r = fixed_point_reach(yT, s, 1e-3, 20);
    REQUIRE(r.converged);
    NonlinearSetup fine = s;
    fine.n_x = 800;
    fine.dt_max = s.dt_max / 2;
    const TimeSignal u = r.control.resampled(fine.grid().n_t);
    const GridFunction reached = reach_map_P(u, fine);
    CHECK(distance(reached, target(800, 1e-2)) <= 2e-3 * yT.l2_norm());
  }

  TEST_CASE("large targets are flagged") {
    NonlinearSetup s = coarse_setup();
    CHECK_THROWS_AS(fixed_point_reach(target(400, 30.0), s, 1e-3, 20), SolverError);
    s.stepper.nonlinear = NonlinearTreatment::kPicard;
    const ReachResult r = fixed_point_reach(target(400, 40.0), s, 1e-3, 20);
    CHECK_FALSE(r.converged);
    CHECK(r.residuals.back() > 0.1 * r.target_norm);
    CHECK(r.ratios.back() > 0.9);
  }

  TEST_CASE("iteration cap leaves an unconverged result") {
    const ReachResult r = fixed_point_reach(target(400, 3.0), coarse_setup(), 1e-6, 1);
    CHECK_FALSE(r.converged);
    CHECK(r.iterations == 1);
  }

  TEST_CASE("nonlinear null control") {
    const NonlinearSetup s = coarse_setup();
    const NullResult zero = null_control_nonlinear(GridFunction::zeros(1.0, 400), s, 1e-3, 20);
    CHECK(zero.converged);
    CHECK(zero.control.max_abs() == 0.0);

    const GridFunction y0 = target(400, 1e-2);
    const NullResult r = null_control_nonlinear(y0, s, 1e-3, 20);
    CHECK(r.converged);
    const GridFunction final_state = solve_nonlinear(y0, r.control, s.grid()).final_state();
    CHECK(final_state.l2_norm() <= 1e-3 * y0.l2_norm());
    CHECK(r.residuals.back() == doctest::Approx(final_state.l2_norm()).epsilon(1e-12));
  }

  TEST_CASE("tolerances must be positive") {
    const NonlinearSetup s = coarse_setup();
    CHECK_THROWS_AS(fixed_point_reach(target(400, 1e-2), s, 0.0, 5), PreconditionError);
    CHECK_THROWS_AS(null_control_nonlinear(target(400, 1e-2), s, -1.0, 5), PreconditionError);
  }
}
