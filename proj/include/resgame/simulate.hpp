#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "resgame/model.hpp"

namespace resgame {

struct SimConfig {
  double x0 = 1.0;
  double dt = 1e-3;
  // 0 means 200 / r.
  double horizon = 0.0;
  std::uint64_t paths = 100000;
  std::uint64_t seed = 0;
  bool antithetic = false;
  unsigned threads = 0;
  // Paths that climb to a level from which a return below every switching
  // point has probability <= escape_eps are closed out analytically. 0 runs
  // every path to absorption or the horizon.
  double escape_eps = 1e-10;
  // bias allowance = bias_constant * sqrt(dt) * K_i.
  double bias_constant = 1.0;
};

// Throws kInvalidConfig.
void validate(const SimConfig& cfg);

// Extraction rate of one agent as a function of the state.
class Strategy {
 public:
  // K 1{x >= b}; b = +inf never extracts.
  static Strategy threshold(double b, double rate);
  static Strategy never();
  // Linear interpolation of (x, rate) nodes, constant beyond both ends.
  // Rates must lie in [0, max_rate].
  static Strategy tabulated(std::vector<double> x, std::vector<double> rate,
                            double max_rate);

  double rate_at(double x) const;
  // The rate equals tail_rate() for every x >= constant_from().
  double constant_from() const;
  double tail_rate() const;
  // Upper bound of the rate.
  double max_rate() const { return max_rate_; }

 private:
  Strategy() = default;
  double b_ = std::numeric_limits<double>::infinity();
  double rate_ = 0.0;
  double max_rate_ = 0.0;
  std::vector<double> x_;
  std::vector<double> table_;
};

using StrategyProfile = std::vector<Strategy>;

// Threshold strategies for the stored agents of params.
StrategyProfile threshold_profile(const GameParams& params,
                                  const std::vector<double>& thresholds);

struct RewardEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::uint64_t paths = 0;
  double absorbed_fraction = 0.0;
  double escaped_fraction = 0.0;
  // (K_i/r) e^{-r horizon}: discounted mass beyond the horizon.
  double tail_bound = 0.0;
  // Upper bound of the error from closing out escaped paths.
  double escape_bias = 0.0;
  std::vector<std::string> warnings;
};

RewardEstimate estimate_reward(const CoefficientModel& coeffs, double r,
                               const StrategyProfile& profile, std::size_t agent,
                               const SimConfig& cfg);
// Threshold profile in stored agent order.
RewardEstimate estimate_reward(const CoefficientModel& coeffs, const GameParams& params,
                               const std::vector<double>& thresholds, std::size_t agent,
                               const SimConfig& cfg);

struct DeviationVerdict {
  std::size_t agent = 0;
  std::vector<double> deviations;
  // Paired estimate J(b') - J(b_hat) under common random numbers.
  std::vector<double> excess;
  std::vector<double> std_error;
  double bias_allowance = 0.0;
  double max_excess = 0.0;
  bool passes = false;
  RewardEstimate equilibrium;
  // Comparison of the equilibrium estimate with an analytic value, if given.
  std::optional<double> anchor_value;
  bool anchor_passes = true;
};

// Each deviation b' passes when excess <= 3 se + bias_allowance.
DeviationVerdict verify_nash(const CoefficientModel& coeffs, const GameParams& params,
                             const std::vector<double>& thresholds, std::size_t agent,
                             const std::vector<double>& deviation_grid,
                             const SimConfig& cfg,
                             std::optional<double> analytic_value = std::nullopt);

// The equilibrium row plus one row per threshold deviation, as CSV.
void write_deviation_csv(const DeviationVerdict& v, std::ostream& os);

struct ExtinctionEstimate {
  // E[e^{-r tau}], paths alive at the horizon contribute 0 ...
  double mean_discounted_survival = 0.0;
  // ... or e^{-r horizon} here.
  double upper = 0.0;
  double std_error = 0.0;
  double absorbed_fraction = 0.0;
  double absorbed_std_error = 0.0;
  std::uint64_t paths = 0;
};

ExtinctionEstimate estimate_extinction_time(const CoefficientModel& coeffs, double r,
                                            const StrategyProfile& profile,
                                            const SimConfig& cfg);

// One Euler path (no escape shortcut) until absorption, the horizon or
// max_steps; element k is X at time k dt.
std::vector<double> sample_path(const CoefficientModel& coeffs,
                                const StrategyProfile& profile, const SimConfig& cfg,
                                std::uint64_t path, std::size_t max_steps);

}  // namespace resgame
