#include <doctest.h>

#include <cmath>

#include "resgame/error.hpp"
#include "resgame/fixtures.hpp"
#include "resgame/fundamentals.hpp"
#include "resgame/symmetric.hpp"
#include "support.hpp"

using namespace resgame;

namespace {

SymmetricEquilibrium base_eq(int n, double k) {
  return solve_symmetric(testing::base_model(), GameParams::symmetric(n, testing::kR, k));
}

}  // namespace

TEST_SUITE("symmetric") {

TEST_CASE("published thresholds") {
  CHECK(base_eq(1, 0.1).b_hat() == doctest::Approx(0.522084525042119).epsilon(1e-7));
  CHECK(base_eq(30, 0.1).b_hat() == doctest::Approx(0.412642535137699).epsilon(1e-7));
  CHECK(base_eq(36, 0.1).b_hat() == 0.0);
  CHECK(base_eq(2, 1.75).b_hat() == doctest::Approx(1.35109927058819).epsilon(1e-7));
}

TEST_CASE("equilibrium invariants") {
  for (int n : {1, 2, 10, 30, 35}) {
    CAPTURE(n);
    const SymmetricEquilibrium eq = base_eq(n, 0.1);
    const ThresholdValue& v = eq.value_function();
    const double b = eq.b_hat();
    REQUIRE(b > 0.0);
    CHECK(std::abs(v.derivative(b) - 1.0) <= 1e-8);
    CHECK(value_at(eq, 0.0) == 0.0);
    CHECK(eq.D4() < 0.0);
    CHECK(b <= eq.b_star());
    CHECK(eq.b_star() <= eq.c_bound());
    // Threshold equation.
    const RatioEvaluator ratios(eq.psi(), eq.phi_nK());
    CHECK(std::abs(ratios.f(b) - 2.0) <= 1e-8 * 2.0);
    for (double x = 0.0; x <= 20.0; x += 0.05) {
      REQUIRE(v.second_derivative(x) <= 1e-8);
      if (x < b) REQUIRE(v.derivative(x) >= 1.0 - 1e-8);
      if (x > b) REQUIRE(v.derivative(x) <= 1.0 + 1e-8);
      if (std::abs(x - b) > 1e-2 && x > 1e-2) {
        REQUIRE(std::abs(v.ode_residual_fd(x, 2e-5)) <= 1e-6 * (0.05 * v.value(x) + 0.1));
      }
    }
    const double far = value_at(eq, eq.x_max());
    CHECK(far == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(value_at(eq, 10.0) <= far);
  }
}

TEST_CASE("zero threshold branch") {
  const SymmetricEquilibrium eq = base_eq(40, 0.1);
  CHECK(eq.b_hat() == 0.0);
  CHECK(eq.D4() == doctest::Approx(-2.0).epsilon(1e-12));
  CHECK(value_at(eq, 0.0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(eq.value_function().derivative(0.0) <= 1.0);
}

TEST_CASE("value outside the domain throws") {
  const SymmetricEquilibrium eq = base_eq(2, 0.1);
  try {
    (void)value_at(eq, -1.0);
    FAIL("expected OutOfDomain");
  } catch (const SolverError& e) {
    CHECK(e.code() == ErrorCode::kOutOfDomain);
  }
  CHECK_THROWS_AS((void)value_at(eq, eq.x_max() * 2.0), SolverError);
}

TEST_CASE("singular benchmark") {
  const SingularBenchmark s = singular_benchmark(testing::base_model(), testing::kR);
  const double b = s.b_star();
  CHECK(b == doctest::Approx(2.8694).epsilon(1e-4));
  CHECK(std::abs(s.U_prime(b) - 1.0) <= 1e-8);
  CHECK(std::abs(s.U_second(b)) <= 1e-8);
  CHECK(s.U(b + 3.0) == doctest::Approx(s.U(b) + 3.0).epsilon(1e-12));
  CHECK(s.U(0.0) == 0.0);
  CHECK(base_eq(1, 0.1).b_hat() <= b);
}

TEST_CASE("competition sweep reproduces the threshold table") {
  std::vector<int> ns;
  for (int n = 1; n <= 50; ++n) ns.push_back(n);
  const SweepTable t = sweep_n(testing::base_model(), testing::kR, 0.1, ns);
  const std::vector<double> ref = testing::column(fixtures::fig2_left, "b_hat");
  REQUIRE(ref.size() == 50);
  for (std::size_t k = 0; k < 50; ++k) REQUIRE(std::abs(t.rows[k].b_hat - ref[k]) <= 1e-6);
  REQUIRE(t.n_bar.has_value());
  CHECK(*t.n_bar == 36);
  CHECK(t.sample_x.size() == 10);
  for (std::size_t k = 1; k < t.rows.size(); ++k) {
    REQUIRE(t.rows[k].b_hat <= t.rows[k - 1].b_hat);
    for (std::size_t j = 0; j < t.sample_x.size(); ++j) {
      REQUIRE(t.rows[k].samples[j] <= t.rows[k - 1].samples[j] + 1e-12);
    }
  }
}

TEST_CASE("fixed total sweep") {
  std::vector<int> ns;
  for (int n = 1; n <= 50; ++n) ns.push_back(n);
  const std::vector<double> kbar = testing::column(fixtures::fig2_right, "K_bar");
  const std::vector<double> ref = testing::column(fixtures::fig2_right, "b_hat");
  for (double total : {3.5, 0.1}) {
    CAPTURE(total);
    const SweepTable t = sweep_n_fixed_total(testing::base_model(), testing::kR, total, ns);
    std::size_t k = 0;
    for (std::size_t row = 0; row < ref.size(); ++row) {
      if (kbar[row] != total) continue;
      REQUIRE(std::abs(t.rows[k].b_hat - ref[row]) <= 1e-6);
      ++k;
    }
    CHECK(k == 50);
    for (std::size_t i = 1; i < t.rows.size(); ++i) {
      REQUIRE(t.rows[i].b_hat <= t.rows[i - 1].b_hat);
      for (std::size_t j = 0; j < t.sample_x.size(); ++j) {
        REQUIRE(t.rows[i].samples[j] <= t.rows[i - 1].samples[j] + 1e-12);
      }
    }
  }
}

TEST_CASE("rate sweep is not monotone for thirty agents") {
  const std::vector<double> ks = testing::column(fixtures::fig3, "K");
  const std::vector<double> ref = testing::column(fixtures::fig3, "b_hat");
  const SweepTable t = sweep_K(testing::base_model(), testing::kR, 30, ks);
  for (std::size_t k = 0; k < ks.size(); ++k) REQUIRE(std::abs(t.rows[k].b_hat - ref[k]) <= 1e-6);
  REQUIRE(t.single_agent_monotone.has_value());
  CHECK(*t.single_agent_monotone);
  for (std::size_t k = 1; k < t.single_agent_b_hat.size(); ++k) {
    REQUIRE(t.single_agent_b_hat[k] >= t.single_agent_b_hat[k - 1]);
  }
  // An interior peak exists.
  bool peak = false;
  for (std::size_t k = 1; k + 1 < t.rows.size(); ++k) {
    peak |= t.rows[k].b_hat > std::max(t.rows[k - 1].b_hat, t.rows[k + 1].b_hat);
  }
  CHECK(peak);
  const SweepTable few = sweep_K(testing::base_model(), testing::kR, 30, {0.06, 0.0945, 0.125});
  CHECK(few.rows[0].b_hat == doctest::Approx(0.347354367416532).epsilon(1e-6));
  CHECK(few.rows[1].b_hat == doctest::Approx(0.415661069485056).epsilon(1e-6));
  CHECK(few.rows[2].b_hat == 0.0);
}

TEST_CASE("sweeps do not depend on the thread count") {
  SweepOptions one, many;
  one.threads = 1;
  many.threads = 4;
  const std::vector<int> ns{1, 5, 9, 20, 36};
  const SweepTable a = sweep_n(testing::base_model(), testing::kR, 0.1, ns, one);
  const SweepTable b = sweep_n(testing::base_model(), testing::kR, 0.1, ns, many);
  for (std::size_t k = 0; k < ns.size(); ++k) {
    CHECK(a.rows[k].b_hat == b.rows[k].b_hat);
    CHECK(a.rows[k].samples == b.rows[k].samples);
  }
}

TEST_CASE("affine drift solves and is ordered in n") {
  const CoefficientModel m = CoefficientModel::affine(1.0, 0.03, 0.8, 0.06);
  double prev = 1e300;
  for (int n = 1; n <= 6; ++n) {
    const SymmetricEquilibrium eq = solve_symmetric(m, GameParams::symmetric(n, 0.06, 0.05));
    CHECK(eq.b_hat() <= prev);
    CHECK(eq.b_hat() <= eq.b_star());
    if (eq.b_hat() > 0.0) CHECK(std::abs(eq.value_function().derivative(eq.b_hat()) - 1.0) <= 1e-8);
    prev = eq.b_hat();
  }
}

}  // TEST_SUITE
