#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "resgame/fundamentals.hpp"
#include "resgame/model.hpp"
#include "resgame/symmetric.hpp"
#include "resgame/value_function.hpp"

namespace resgame {

// Thresholds in stored (ascending-rate) agent order.
using ThresholdProfile = std::vector<double>;

struct AgentFundamentals {
  std::shared_ptr<const FundamentalSolution> psi;
  std::shared_ptr<const FundamentalSolution> phi;
};

// psi^(i) has drift mu - sum_{j != i} K_j 1{x >= b_j}; phi^(i) is shifted by
// a further K_i. profile[i] is ignored.
AgentFundamentals agent_fundamentals(const CoefficientModel& coeffs,
                                     const GameParams& params, std::size_t i,
                                     std::span<const double> profile,
                                     const SolveDomain& domain,
                                     const FundamentalOptions& ode = {});

struct BestResponse {
  std::size_t agent = 0;
  double b_Z = 0.0;
  double b_star_star = 0.0;
  // phi^(i)'(0); b_Z = 0 whenever this is >= -r / K_i.
  double phi_slope0 = 0.0;
  AgentFundamentals fundamentals;
  // Z, the agent's value when playing b_Z against the fixed opponents.
  std::shared_ptr<const ThresholdValue> value;
};

BestResponse best_response(const CoefficientModel& coeffs, const GameParams& params,
                           std::size_t i, std::span<const double> profile,
                           const SolveDomain& domain, const SolveOptions& opts = {});

struct AsymmetricOptions {
  SolveOptions solve;
  double damping = 0.5;
  double tol = 1e-8;
  int max_iter = 500;
  // Quasi-random restarts in [0, c]^n used after a failed run.
  int restarts = 8;
  // Run every restart even after success, to look for further equilibria.
  bool explore = false;
  // Points for the value-ordering check; empty means 20 points in (0, 2 max b**].
  std::vector<double> sample_x;
};

class AsymmetricEquilibrium {
 public:
  AsymmetricEquilibrium(GameParams params, ThresholdProfile profile,
                        std::vector<BestResponse> responses, double residual,
                        int iterations, double c_bound);

  const GameParams& params() const { return params_; }
  const ThresholdProfile& profile() const { return profile_; }
  // Thresholds relabelled to the caller's agent order.
  std::vector<double> thresholds_original_order() const;
  double residual() const { return residual_; }
  int iterations() const { return iterations_; }
  double c_bound() const { return c_bound_; }
  std::size_t n() const { return profile_.size(); }

  double E1(std::size_t i) const { return values_[i]->D1(); }
  double E4(std::size_t i) const { return values_[i]->D4(); }
  double b_star_star(std::size_t i) const { return b_star_star_[i]; }
  const ThresholdValue& value_function(std::size_t i) const { return *values_[i]; }
  double x_max() const;

  // Other converged profiles that differ from profile() by more than 10 tol.
  std::vector<ThresholdProfile> alternatives;

 private:
  GameParams params_;
  ThresholdProfile profile_;
  std::vector<std::shared_ptr<const ThresholdValue>> values_;
  std::vector<double> b_star_star_;
  double residual_;
  int iterations_;
  double c_bound_;
};

// init empty: every agent starts at half the unshifted inflection point.
AsymmetricEquilibrium solve_asymmetric(const CoefficientModel& coeffs,
                                       const GameParams& params,
                                       const ThresholdProfile& init = {},
                                       const AsymmetricOptions& opts = {});

// V_i(x) for stored agent i; throws kOutOfDomain outside [0, x_max].
double value_at_i(const AsymmetricEquilibrium& eq, std::size_t i, double x);

// max_i |b_i - b^Z_i(b)| with freshly built fundamentals.
double fixed_point_residual(const CoefficientModel& coeffs, const GameParams& params,
                            std::span<const double> profile,
                            const SolveOptions& opts = {});

struct K2SweepRow {
  double K2 = 0.0;
  // b1 belongs to the agent with the fixed rate K1, b2 to the rate-K2 agent.
  double b1 = 0.0;
  double b2 = 0.0;
  double b2_single = 0.0;
  int iterations = 0;
  double residual = 0.0;
};

// K2 = 0 rows report the one-agent limit (b1 = single-agent threshold, b2 = 0).
// Points run in order, each warm-started from the previous one.
std::vector<K2SweepRow> sweep_K2(const CoefficientModel& coeffs, double r, double k1,
                                 const std::vector<double>& k2_range,
                                 const AsymmetricOptions& opts = {});

}  // namespace resgame
