#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "resgame/error.hpp"

namespace resgame {

enum class ModelKind { kConstant, kAffine, kUserDefined };

// Coefficients of the uncontrolled diffusion dX = mu(X) dt + sigma(X) dB.
// The drift derivative is supplied explicitly; it is never differenced.
class CoefficientModel {
 public:
  using Function = std::function<double(double)>;

  CoefficientModel(Function mu, Function mu_prime, Function sigma,
                   ModelKind kind = ModelKind::kUserDefined);

  static CoefficientModel constant(double mu, double sigma2);
  // mu(x) = mu0 + mu1 * x. Rejects mu1 >= r so the drift-derivative condition
  // holds by construction.
  static CoefficientModel affine(double mu0, double mu1, double sigma2,
                                 double r);

  double mu(double x) const { return mu_(x); }
  double mu_prime(double x) const { return mu_prime_(x); }
  double sigma(double x) const { return sigma_(x); }
  double sigma2(double x) const {
    const double s = sigma_(x);
    return s * s;
  }

  ModelKind kind() const { return kind_; }

  // Parameters of the built-in families; empty for user-defined models.
  std::optional<double> constant_mu() const;
  std::optional<double> constant_sigma2() const { return sigma2_; }
  std::optional<double> affine_slope() const;

 private:
  Function mu_;
  Function mu_prime_;
  Function sigma_;
  ModelKind kind_;
  std::optional<double> mu0_;
  std::optional<double> mu1_;
  std::optional<double> sigma2_;
};

// Number of agents, discount rate and maximal extraction rates. Rates are
// stored in ascending order; permutation()[k] is the caller's label of the
// k-th stored agent.
class GameParams {
 public:
  static GameParams symmetric(int n, double r, double rate);
  static GameParams asymmetric(double r, std::vector<double> rates);

  int n() const { return static_cast<int>(rates_.size()); }
  double r() const { return r_; }
  bool is_symmetric() const { return symmetric_; }
  // Common rate K of a symmetric game.
  double rate() const;
  std::span<const double> rates() const { return rates_; }
  std::span<const std::size_t> permutation() const { return permutation_; }
  double total_rate() const;

  // Maps a vector indexed by stored (ascending-rate) agent back to the
  // caller's labels.
  std::vector<double> to_original_order(std::span<const double> sorted) const;
  std::vector<double> to_sorted_order(std::span<const double> original) const;

 private:
  GameParams() = default;

  double r_ = 0.0;
  bool symmetric_ = true;
  std::vector<double> rates_;
  std::vector<std::size_t> permutation_;
};

struct DriftJump {
  double position = 0.0;
  double size = 0.0;
};

// mu(x) - shift - sum_j size_j * 1{x >= position_j}. The half-line is split
// into segments at the jump positions; segment k is [breaks[k-1], breaks[k])
// with breaks[-1] = 0 and the last segment unbounded.
class ShiftedDrift {
 public:
  explicit ShiftedDrift(CoefficientModel base, double shift = 0.0,
                        std::vector<DriftJump> jumps = {});

  double operator()(double x) const { return base_.mu(x) - total_shift(x); }
  double total_shift(double x) const;
  // Drift restricted to one segment: the indicator pattern of that segment is
  // used even at its right end point.
  double on_segment(std::size_t segment, double x) const {
    return base_.mu(x) - segment_shift_[segment];
  }

  std::size_t segment_count() const { return segment_shift_.size(); }
  std::size_t segment_of(double x) const;
  // Positive jump positions, ascending and deduplicated. A jump at 0 only
  // changes the shift of the first segment.
  std::span<const double> breakpoints() const { return breakpoints_; }
  std::span<const DriftJump> jumps() const { return jumps_; }
  double shift() const { return shift_; }
  const CoefficientModel& base() const { return base_; }

 private:
  CoefficientModel base_;
  double shift_;
  std::vector<DriftJump> jumps_;
  std::vector<double> breakpoints_;
  std::vector<double> segment_shift_;
};

enum class Assumption { kA1Smoothness, kA2Sigma, kA2LinearGrowth, kA3Derivative,
                        kA3ExtinctionBound, kA4DriftAtZero };

std::string_view assumption_id(Assumption a);

struct AssumptionViolation {
  Assumption assumption;
  double x = 0.0;
  double observed = 0.0;
};

struct AssumptionReport {
  bool passed = false;
  std::vector<AssumptionViolation> violations;
  // Constant c with mu(x) <= r x - 1/c for x >= c; 0 when none was found.
  double c_bound = 0.0;
  // max (|sigma| + |mu|) / (1 + x) on the grid. Informational.
  double linear_growth_constant = 0.0;

  // Throws the SolverError matching the first violation, if any.
  void require_passed() const;
};

struct GridSpec {
  double x_max = 1.0e4;
  std::size_t points = 4001;
};

// Half uniform, half geometric sample of [0, x_max], sorted and unique.
std::vector<double> hybrid_grid(const GridSpec& spec);

AssumptionReport validate_assumptions(const CoefficientModel& coeffs,
                                      const GameParams& params,
                                      const GridSpec& grid = {});

struct ExtinctionBoundOptions {
  double ceiling = 1.0e6;
  std::size_t samples = 4000;
};

// Smallest c (to 1e-10 (1 + c)) with mu(x) <= r x - 1/c on the sampled
// x >= c. Throws kNoExtinctionBound when none exists below the ceiling.
double extinction_bound(const CoefficientModel& coeffs, double r,
                        const ExtinctionBoundOptions& opts = {});

// Same test restricted to an explicit sample set.
double extinction_bound_on(const CoefficientModel& coeffs, double r,
                           std::span<const double> samples, double ceiling);

}  // namespace resgame
