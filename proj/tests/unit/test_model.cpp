#include <doctest.h>

#include <cmath>
#include <random>

#include "resgame/error.hpp"
#include "resgame/model.hpp"
#include "support.hpp"

using namespace resgame;

TEST_SUITE("model") {

TEST_CASE("constant model passes every assumption") {
  const AssumptionReport rep =
      validate_assumptions(testing::base_model(), GameParams::symmetric(30, 0.05, 0.1));
  CHECK(rep.passed);
  CHECK(rep.violations.empty());
  CHECK_NOTHROW(rep.require_passed());
  CHECK(rep.linear_growth_constant > 0.0);
}

TEST_CASE("extinction bound is the positive root of r c^2 - mu c - 1") {
  const double c = extinction_bound(testing::base_model(), 0.05);
  const double root = (4.0 + std::sqrt(16.0 + 4.0 * 0.05)) / (2.0 * 0.05);
  CHECK(c == doctest::Approx(root).epsilon(1e-9));
  CHECK(c == doctest::Approx(80.2492).epsilon(1e-6));
  const AssumptionReport rep =
      validate_assumptions(testing::base_model(), GameParams::symmetric(1, 0.05, 0.1));
  CHECK(rep.c_bound == doctest::Approx(root).epsilon(1e-8));
}

TEST_CASE("extinction bound with negative constant drift") {
  // -1 <= x - 1/c for x >= c  iff  c^2 + c - 1 >= 0.
  const CoefficientModel m = CoefficientModel::constant(-1.0, 1.0);
  const double c = extinction_bound(m, 1.0);
  CHECK(c == doctest::Approx((std::sqrt(5.0) - 1.0) / 2.0).epsilon(1e-9));
}

TEST_CASE("extinction bound satisfies its inequality on a denser grid") {
  const CoefficientModel m = CoefficientModel::affine(2.0, 0.02, 1.5, 0.05);
  const double c = extinction_bound(m, 0.05);
  for (double x : hybrid_grid({1e4, 40001})) {
    if (x < c) continue;
    REQUIRE(m.mu(x) <= 0.05 * x - 1.0 / c + 1e-9 * (1.0 + x));
  }
}

TEST_CASE("drift derivative equal to r is rejected") {
  const double r = 0.05;
  const CoefficientModel m([r](double x) { return 1.0 + r * x; }, [r](double) { return r; },
                           [](double) { return 1.0; });
  const AssumptionReport rep = validate_assumptions(m, GameParams::symmetric(1, r, 0.1));
  CHECK_FALSE(rep.passed);
  try {
    rep.require_passed();
    FAIL("expected DriftDerivativeTooLarge");
  } catch (const SolverError& e) {
    CHECK(e.code() == ErrorCode::kDriftDerivativeTooLarge);
  }
  CHECK_THROWS_AS(CoefficientModel::affine(1.0, r, 1.0, r), SolverError);
}

TEST_CASE("nonpositive drift at zero and zero sigma are reported") {
  const AssumptionReport a4 = validate_assumptions(CoefficientModel::constant(-1.0, 1.0),
                                                   GameParams::symmetric(1, 1.0, 0.1));
  CHECK_FALSE(a4.passed);
  bool saw_a4 = false;
  for (const auto& v : a4.violations) saw_a4 |= v.assumption == Assumption::kA4DriftAtZero;
  CHECK(saw_a4);

  const CoefficientModel flat([](double) { return 1.0; }, [](double) { return 0.0; },
                              [](double x) { return x < 1.0 ? 1.0 : 0.0; });
  const AssumptionReport a2 = validate_assumptions(flat, GameParams::symmetric(1, 0.05, 0.1));
  try {
    a2.require_passed();
    FAIL("expected NonPositiveSigma");
  } catch (const SolverError& e) {
    CHECK(e.code() == ErrorCode::kNonPositiveSigma);
  }
}

TEST_CASE("rates are stored ascending and the permutation restores labels") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.01, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> rates(1 + trial % 6);
    for (double& k : rates) k = u(rng);
    const GameParams p = GameParams::asymmetric(0.05, rates);
    for (std::size_t k = 1; k < rates.size(); ++k) CHECK(p.rates()[k - 1] <= p.rates()[k]);
    const std::vector<double> stored(p.rates().begin(), p.rates().end());
    CHECK(p.to_original_order(stored) == rates);
    CHECK(p.to_sorted_order(rates) == stored);
  }
}

TEST_CASE("invalid game parameters throw") {
  CHECK_THROWS_AS(GameParams::symmetric(0, 0.05, 0.1), SolverError);
  CHECK_THROWS_AS(GameParams::symmetric(2, 0.0, 0.1), SolverError);
  CHECK_THROWS_AS(GameParams::asymmetric(0.05, {0.1, -0.2}), SolverError);
}

TEST_CASE("shifted drift merges duplicate jump positions") {
  const ShiftedDrift d(testing::base_model(), 0.0,
                       {{0.7, 0.2}, {0.3, 0.1}, {0.7, 0.05}});
  REQUIRE(d.breakpoints().size() == 2);
  CHECK(d.breakpoints()[0] == 0.3);
  CHECK(d.breakpoints()[1] == 0.7);
  CHECK(d(0.1) == doctest::Approx(4.0));
  CHECK(d(0.5) == doctest::Approx(3.9));
  CHECK(d(0.7) == doctest::Approx(3.65));
}

}  // TEST_SUITE
