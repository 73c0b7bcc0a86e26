#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "resgame/error.hpp"
#include "resgame/simulate.hpp"
#include "resgame/symmetric.hpp"
#include "support.hpp"

using namespace resgame;

namespace {

SimConfig quick(std::uint64_t paths = 20000) {
  SimConfig c;
  c.paths = paths;
  c.seed = 11;
  return c;
}

}  // namespace

TEST_SUITE("simulate") {

TEST_CASE("config validation") {
  SimConfig c;
  CHECK_NOTHROW(validate(c));
  c.dt = 0.0;
  CHECK_THROWS_AS(validate(c), SolverError);
  c = SimConfig{};
  c.paths = 0;
  CHECK_THROWS_AS(validate(c), SolverError);
  c = SimConfig{};
  c.x0 = -1.0;
  try {
    validate(c);
    FAIL("expected InvalidConfig");
  } catch (const SolverError& e) {
    CHECK(e.code() == ErrorCode::kInvalidConfig);
  }
}

TEST_CASE("strategies") {
  const Strategy t = Strategy::threshold(0.5, 0.2);
  CHECK(t.rate_at(0.49) == 0.0);
  CHECK(t.rate_at(0.5) == 0.2);
  CHECK(t.tail_rate() == 0.2);
  CHECK(t.constant_from() == 0.5);
  const Strategy n = Strategy::never();
  CHECK(n.rate_at(1e9) == 0.0);
  const Strategy tab = Strategy::tabulated({0.0, 1.0, 2.0}, {0.0, 0.1, 0.05}, 0.1);
  CHECK(tab.rate_at(0.5) == doctest::Approx(0.05));
  CHECK(tab.rate_at(5.0) == 0.05);
  CHECK(tab.constant_from() == 2.0);
  CHECK_THROWS_AS(Strategy::tabulated({0.0, 1.0}, {0.0, 0.2}, 0.1), SolverError);
}

TEST_CASE("start at zero is absorbed immediately") {
  SimConfig c = quick(1000);
  c.x0 = 0.0;
  const GameParams p = GameParams::symmetric(2, testing::kR, 0.1);
  const RewardEstimate e = estimate_reward(testing::base_model(), p, {0.0, 0.0}, 0, c);
  CHECK(e.mean == 0.0);
  CHECK(e.absorbed_fraction == 1.0);
  const ExtinctionEstimate x =
      estimate_extinction_time(testing::base_model(), testing::kR,
                               threshold_profile(p, {0.0, 0.0}), c);
  CHECK(x.mean_discounted_survival == 1.0);
}

TEST_CASE("an agent that never extracts earns nothing") {
  const GameParams p = GameParams::symmetric(2, testing::kR, 0.1);
  const double inf = std::numeric_limits<double>::infinity();
  const RewardEstimate e = estimate_reward(testing::base_model(), p, {inf, 0.5}, 0, quick(2000));
  CHECK(e.mean == 0.0);
}

TEST_CASE("estimates are bit-identical across runs and thread counts") {
  const GameParams p = GameParams::symmetric(2, testing::kR, 0.1);
  SimConfig a = quick(5000), b = quick(5000);
  a.threads = 1;
  b.threads = 3;
  const RewardEstimate ea = estimate_reward(testing::base_model(), p, {0.52, 0.52}, 0, a);
  const RewardEstimate eb = estimate_reward(testing::base_model(), p, {0.52, 0.52}, 0, b);
  const RewardEstimate ec = estimate_reward(testing::base_model(), p, {0.52, 0.52}, 0, a);
  CHECK(ea.mean == eb.mean);
  CHECK(ea.std_error == eb.std_error);
  CHECK(ea.mean == ec.mean);
  SimConfig d = a;
  d.seed = 12;
  CHECK(estimate_reward(testing::base_model(), p, {0.52, 0.52}, 0, d).mean != ea.mean);
}

TEST_CASE("estimates respect the discounted extraction cap") {
  const GameParams p = GameParams::symmetric(1, testing::kR, 0.1);
  const RewardEstimate e = estimate_reward(testing::base_model(), p, {0.0}, 0, quick(5000));
  CHECK(e.mean >= 0.0);
  CHECK(e.mean <= 0.1 / testing::kR + e.tail_bound);
}

TEST_CASE("raising an opponent's rate lowers every path") {
  const GameParams lo = GameParams::asymmetric(testing::kR, {0.1, 0.2});
  const GameParams hi = GameParams::asymmetric(testing::kR, {0.1, 0.6});
  SimConfig c = quick();
  for (std::uint64_t path = 0; path < 20; ++path) {
    const auto a = sample_path(testing::base_model(), threshold_profile(lo, {0.5, 0.7}), c, path,
                               20000);
    const auto b = sample_path(testing::base_model(), threshold_profile(hi, {0.5, 0.7}), c, path,
                               20000);
    const std::size_t len = std::min(a.size(), b.size());
    for (std::size_t k = 0; k < len; ++k) REQUIRE(b[k] <= a[k]);
  }
}

TEST_CASE("antithetic pairs") {
  const GameParams p = GameParams::symmetric(1, testing::kR, 0.1);
  SimConfig c = quick(4000);
  c.antithetic = true;
  const RewardEstimate e = estimate_reward(testing::base_model(), p, {0.522}, 0, c);
  CHECK(e.paths == 4000);
  CHECK(e.std_error > 0.0);
  c.paths = 4001;
  CHECK_THROWS_AS(validate(c), SolverError);
}

TEST_CASE("reward agrees with the analytic value") {
  const SymmetricEquilibrium eq = solve_symmetric(testing::base_model(),
                                                  GameParams::symmetric(2, testing::kR, 0.1));
  const std::vector<double> b(2, eq.b_hat());
  const SimConfig c = quick(20000);
  const RewardEstimate e = estimate_reward(testing::base_model(), eq.params(), b, 0, c);
  const double allowance = c.bias_constant * std::sqrt(c.dt) * 0.1;
  CHECK(std::abs(e.mean - value_at(eq, 1.0)) <=
        3.0 * e.std_error + allowance + e.tail_bound + e.escape_bias);
  CHECK(e.warnings.empty());
}

TEST_CASE("halving dt moves the estimate within the noise") {
  const GameParams p = GameParams::symmetric(1, testing::kR, 0.1);
  SimConfig a = quick(20000), b = quick(20000);
  b.dt = a.dt / 2.0;
  const RewardEstimate ea = estimate_reward(testing::base_model(), p, {0.522}, 0, a);
  const RewardEstimate eb = estimate_reward(testing::base_model(), p, {0.522}, 0, b);
  CHECK(std::abs(ea.mean - eb.mean) <=
        4.0 * std::hypot(ea.std_error, eb.std_error) + std::sqrt(a.dt) * 0.1);
}

TEST_CASE("deviation at the equilibrium threshold has zero excess") {
  const SymmetricEquilibrium eq = solve_symmetric(testing::base_model(),
                                                  GameParams::symmetric(2, testing::kR, 0.1));
  const std::vector<double> b(2, eq.b_hat());
  const DeviationVerdict v = verify_nash(testing::base_model(), eq.params(), b, 0,
                                         {0.0, eq.b_hat(), 1.0}, quick(5000));
  CHECK(std::abs(v.excess[1]) <= 1e-12);
  CHECK(v.deviations.size() == 3);
  CHECK(v.bias_allowance == doctest::Approx(std::sqrt(1e-3) * 0.1));
  std::ostringstream csv;
  write_deviation_csv(v, csv);
  CHECK(csv.str().rfind("b_prime,excess,std_error,allowance,passes\n", 0) == 0);
}

TEST_CASE("extraction hastens extinction") {
  const CoefficientModel m = testing::base_model();
  const GameParams one = GameParams::symmetric(1, testing::kR, 3.5);
  const double inf = std::numeric_limits<double>::infinity();
  SimConfig c = quick(4000);
  c.horizon = 50.0;
  c.escape_eps = 0.0;
  const SymmetricEquilibrium eq = solve_symmetric(m, one);
  const ExtinctionEstimate with = estimate_extinction_time(m, testing::kR,
                                                           threshold_profile(one, {eq.b_hat()}), c);
  const ExtinctionEstimate without =
      estimate_extinction_time(m, testing::kR, threshold_profile(one, {inf}), c);
  CHECK(without.absorbed_fraction <=
        with.absorbed_fraction + 2.0 * std::hypot(with.absorbed_std_error,
                                                  without.absorbed_std_error));
  CHECK(with.mean_discounted_survival <= with.upper);

  // Fixed total rate: more agents, lower thresholds, earlier extinction.
  double prev = -1.0, prev_se = 0.0;
  for (int n : {1, 2, 4}) {
    const GameParams p = GameParams::symmetric(n, testing::kR, 3.5 / n);
    const SymmetricEquilibrium e = solve_symmetric(m, p);
    const ExtinctionEstimate x = estimate_extinction_time(
        m, testing::kR, threshold_profile(p, std::vector<double>(n, e.b_hat())), c);
    CHECK(x.absorbed_fraction + 2.0 * std::hypot(x.absorbed_std_error, prev_se) >= prev);
    prev = x.absorbed_fraction;
    prev_se = x.absorbed_std_error;
  }
}

}  // TEST_SUITE
