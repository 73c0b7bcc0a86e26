#include <doctest.h>

#include <cmath>
#include <random>

#include "resgame/closed_form.hpp"
#include "resgame/error.hpp"
#include "resgame/fundamentals.hpp"
#include "resgame/model.hpp"
#include "support.hpp"

using namespace resgame;

namespace {

double x_max_for(const CoefficientModel& m, double r) { return 4.0 * extinction_bound(m, r); }

}  // namespace

TEST_SUITE("fundamentals") {

TEST_CASE("psi matches the exponential closed form") {
  const CoefficientModel m = testing::base_model();
  const FundamentalSolution psi = solve_psi(ShiftedDrift(m), 0.05, x_max_for(m, 0.05));
  const double a = testing::plus_root(4.0, 2.0, 0.05);
  const double b = testing::minus_root(4.0, 2.0, 0.05);
  CHECK(a == doctest::Approx(0.0124612).epsilon(1e-5));
  CHECK(b == doctest::Approx(-4.0124612).epsilon(1e-7));
  CHECK(psi.value(0.0) == 0.0);
  CHECK(psi.derivative(0.0) == 1.0);
  for (int k = 1; k <= 50; ++k) {
    const double x = 0.1 * k;
    const double exact = (std::exp(a * x) - std::exp(b * x)) / (a - b);
    REQUIRE(testing::rel_err(psi.value(x), exact) <= 1e-8);
  }
}

TEST_CASE("phi matches e^{gamma x}") {
  const CoefficientModel m = testing::base_model();
  const FundamentalSolution phi = solve_phi(ShiftedDrift(m, 0.1), 0.05, x_max_for(m, 0.05));
  const double g = testing::minus_root(3.9, 2.0, 0.05);
  CHECK(phi.value(0.0) == 1.0);
  for (int k = 0; k <= 50; ++k) {
    const double x = 0.1 * k;
    REQUIRE(testing::rel_err(phi.value(x), std::exp(g * x)) <= 1e-8);
  }
  CHECK(phi.truncation_delta() < 1e-8);
}

TEST_CASE("phi slope at zero for a 3.6 shift is -1/2") {
  const CoefficientModel m = testing::base_model();
  const FundamentalSolution phi = solve_phi(ShiftedDrift(m, 3.6), 0.05, x_max_for(m, 0.05));
  CHECK(phi.derivative(0.0) == doctest::Approx(-0.5).epsilon(1e-9));
}

TEST_CASE("random constant tuples agree with the closed forms on [0, 5]") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> umu(0.5, 8.0), us2(0.5, 4.0), ur(0.01, 0.2),
      ua(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const double mu = umu(rng), s2 = us2(rng), r = ur(rng), shift = ua(rng) * (mu + 2.0);
    CAPTURE(mu);
    CAPTURE(s2);
    CAPTURE(r);
    CAPTURE(shift);
    const CoefficientModel m = CoefficientModel::constant(mu, s2);
    const double xm = x_max_for(m, r);
    const ShiftedDrift d(m, shift);
    const FundamentalSolution psi = solve_psi(d, r, xm);
    const FundamentalSolution phi = solve_phi(d, r, xm);
    const double a = testing::plus_root(mu - shift, s2, r);
    const double b = testing::minus_root(mu - shift, s2, r);
    for (int k = 1; k <= 25; ++k) {
      const double x = 0.2 * k;
      const double psi_exact = (std::exp(a * x) - std::exp(b * x)) / (a - b);
      REQUIRE(testing::rel_err(psi.value(x), psi_exact) <= 1e-7);
      REQUIRE(testing::rel_err(phi.value(x), std::exp(b * x)) <= 1e-7);
    }
  }
}

TEST_CASE("shape: psi concave then convex, phi decreasing and convex") {
  const CoefficientModel m = CoefficientModel::affine(1.5, 0.02, 1.0, 0.05);
  const double xm = x_max_for(m, 0.05);
  const FundamentalSolution psi = solve_psi(ShiftedDrift(m), 0.05, xm);
  const FundamentalSolution phi = solve_phi(ShiftedDrift(m, 0.4), 0.05, xm);
  const double bstar = inflection_point(psi, extinction_bound(m, 0.05));
  CHECK(bstar > 0.0);
  CHECK(bstar <= extinction_bound(m, 0.05));
  for (std::size_t k = 0; k < psi.grid().size(); ++k) {
    const double x = psi.grid()[k];
    const ScaledPoint p = psi.at(x);
    REQUIRE(p.df > 0.0);
    if (x < bstar - 1e-6) REQUIRE(psi.curvature_ratio(x) < 0.0);
    if (x > bstar + 1e-6) REQUIRE(psi.curvature_ratio(x) > 0.0);
  }
  for (double x : phi.grid()) {
    const ScaledPoint p = phi.at(x);
    REQUIRE(p.f > 0.0);
    REQUIRE(p.df < 0.0);
    // f'' = f' * (f''/f'); positive iff the ratio is negative.
    REQUIRE(phi.curvature_ratio(x) < 0.0);
  }
}

TEST_CASE("ODE residual by finite differences") {
  const CoefficientModel m = CoefficientModel::affine(1.5, 0.02, 1.0, 0.05);
  const double xm = x_max_for(m, 0.05);
  const FundamentalSolution psi = solve_psi(ShiftedDrift(m), 0.05, xm);
  const double h = 1e-3;
  for (double x = 0.1; x < 20.0; x += 0.37) {
    const double f = psi.value(x);
    const double d2 = (psi.value(x + h) - 2.0 * f + psi.value(x - h)) / (h * h);
    const double res = 0.5 * d2 + m.mu(x) * psi.derivative(x) - 0.05 * f;
    REQUIRE(std::abs(res) <= 1e-6 * 0.05 * std::abs(f) + 1e-6 * std::abs(0.5 * d2));
  }
}

TEST_CASE("psi inflection point of the constant model") {
  const CoefficientModel m = testing::base_model();
  const FundamentalSolution psi = solve_psi(ShiftedDrift(m), 0.05, 200.0);
  const double b = inflection_point(psi, extinction_bound(m, 0.05));
  CHECK(b == doctest::Approx(2.8694).epsilon(1e-4));
  CHECK(b == doctest::Approx(closed_form::inflection_point(4.0, 2.0, 0.05)).epsilon(1e-9));
}

TEST_CASE("inflection point is zero when the drift at zero is not positive") {
  const CoefficientModel m = testing::base_model();
  const ShiftedDrift d(m, 0.0, {{0.0, 4.5}});
  const FundamentalSolution psi = solve_psi(d, 0.05, 200.0);
  CHECK(inflection_point(psi, 100.0) == 0.0);
}

TEST_CASE("values survive rescaling far out") {
  const CoefficientModel m = CoefficientModel::constant(0.5, 0.5);
  const FundamentalSolution psi = solve_psi(ShiftedDrift(m), 0.2, 2000.0);
  const double a = testing::plus_root(0.5, 0.5, 0.2);
  const ScaledPoint p = psi.at(1500.0);
  CHECK(p.ratio() == doctest::Approx(1.0 / a).epsilon(1e-8));
  CHECK(psi.log_scale().back() > 400.0);
}

TEST_CASE("piecewise drift: pasting is C1 across jumps") {
  const CoefficientModel m = testing::base_model();
  const ShiftedDrift d(m, 0.0, {{0.5212295, 0.1}});
  const FundamentalSolution psi = solve_psi(d, 0.05, 300.0);
  const double bj = 0.5212295;
  const double eps = 1e-7;
  CHECK(psi.value(bj - eps) == doctest::Approx(psi.value(bj + eps)).epsilon(1e-6));
  CHECK(psi.derivative(bj - eps) == doctest::Approx(psi.derivative(bj + eps)).epsilon(1e-6));
  bool node_at_jump = false;
  for (double x : psi.grid()) node_at_jump |= x == bj;
  CHECK(node_at_jump);
}

TEST_CASE("ratio f at zero and at the n = 1 threshold") {
  const CoefficientModel m = testing::base_model();
  const FundamentalSolution psi = solve_psi(ShiftedDrift(m), 0.05, 200.0);
  const FundamentalSolution phi = solve_phi(ShiftedDrift(m, 0.1), 0.05, 400.0);
  const RatioEvaluator ratios(psi, phi);
  CHECK(ratio_f(ratios, 0.0) == doctest::Approx(-1.0 / phi.derivative(0.0)).epsilon(1e-12));
  CHECK(ratio_f(ratios, 0.522084525042119) == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("ratio f increases while below nK / r") {
  const CoefficientModel m = testing::base_model();
  const FundamentalSolution psi = solve_psi(ShiftedDrift(m), 0.05, 200.0);
  const FundamentalSolution phi = solve_phi(ShiftedDrift(m, 3.0), 0.05, 400.0);
  const RatioEvaluator ratios(psi, phi);
  double prev = ratio_f(ratios, 0.0);
  for (double b = 0.01; b < 2.8; b += 0.01) {
    const double f = ratio_f(ratios, b);
    if (prev > 3.0 / 0.05) break;
    REQUIRE(f > prev);
    prev = f;
  }
}

}  // TEST_SUITE
