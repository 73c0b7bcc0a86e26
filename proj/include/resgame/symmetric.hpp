#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <vector>

#include "resgame/fundamentals.hpp"
#include "resgame/model.hpp"
#include "resgame/value_function.hpp"

namespace resgame {

struct SolveOptions {
  FundamentalOptions ode;
  // Truncation point for the decreasing solutions; 0 means 4 * c.
  double x_max = 0.0;
  // Absolute tolerance of the threshold root finder.
  double root_tol = 1e-12;
  // Relative slack when testing phi'(0) >= -r/K; ties go to b = 0.
  double condition_slack = 1e-10;
};

// Common domain sizes derived from the extinction bound c.
struct SolveDomain {
  double c_bound = 0.0;
  double x_max = 0.0;      // decreasing solutions
  double psi_x_max = 0.0;  // increasing solutions, only needed up to c
};

SolveDomain solve_domain(const CoefficientModel& coeffs, double r,
                         const SolveOptions& opts);

// Symmetric threshold equilibrium: every agent extracts K above b_hat.
class SymmetricEquilibrium {
 public:
  SymmetricEquilibrium(GameParams params, double b_star, double c_bound,
                       ThresholdValue value);

  double b_hat() const { return value_.threshold(); }
  double D1() const { return value_.D1(); }
  double D4() const { return value_.D4(); }
  double b_star() const { return b_star_; }
  double c_bound() const { return c_bound_; }
  const GameParams& params() const { return params_; }
  const FundamentalSolution& psi() const { return value_.psi(); }
  const FundamentalSolution& phi_nK() const { return value_.phi(); }
  const ThresholdValue& value_function() const { return value_; }
  double x_max() const { return value_.x_max(); }

 private:
  GameParams params_;
  double b_star_;
  double c_bound_;
  ThresholdValue value_;
};

SymmetricEquilibrium solve_symmetric(const CoefficientModel& coeffs,
                                     const GameParams& params,
                                     const SolveOptions& opts = {});

// V(x); throws kOutOfDomain outside [0, x_max].
double value_at(const SymmetricEquilibrium& eq, double x);

// Single agent allowed to extract singularly: reflect at the inflection
// point b* of psi.
class SingularBenchmark {
 public:
  SingularBenchmark(std::shared_ptr<const FundamentalSolution> psi, double b_star);

  double b_star() const { return b_star_; }
  // 1 / psi'(b*), true scale.
  double C_star() const { return c_star_; }
  double U(double x) const;
  double U_prime(double x) const;
  double U_second(double x) const;

 private:
  std::shared_ptr<const FundamentalSolution> psi_;
  double b_star_;
  ScaledPoint at_b_;
  double c_star_;
};

SingularBenchmark singular_benchmark(const CoefficientModel& coeffs, double r,
                                     const SolveOptions& opts = {});

// ---------------------------------------------------------------------------
// Comparative statics.

struct SweepRow {
  double param = 0.0;
  double b_hat = 0.0;
  // V(x0) (or n V(x0) for the fixed-total sweep) at the table's sample points.
  std::vector<double> samples;
};

struct SweepTable {
  std::vector<double> sample_x;
  std::vector<SweepRow> rows;
  // First n with b_hat = 0 (n sweeps only).
  std::optional<int> n_bar;
  // K sweeps only: whether the single-agent thresholds are nondecreasing in K.
  std::optional<bool> single_agent_monotone;
  std::vector<double> single_agent_b_hat;
};

struct SweepOptions {
  SolveOptions solve;
  unsigned threads = 0;  // 0: hardware concurrency
  // Value sample points; empty means 10 uniform points in (0, 2 b*].
  std::vector<double> sample_x;
};

SweepTable sweep_n(const CoefficientModel& coeffs, double r, double rate,
                   const std::vector<int>& n_range, const SweepOptions& opts = {});
SweepTable sweep_n_fixed_total(const CoefficientModel& coeffs, double r,
                               double total_rate, const std::vector<int>& n_range,
                               const SweepOptions& opts = {});
// K <= 0 rows report b_hat = 0, the limit of the no-extraction game.
SweepTable sweep_K(const CoefficientModel& coeffs, double r, int n,
                   const std::vector<double>& k_range, const SweepOptions& opts = {});

}  // namespace resgame
