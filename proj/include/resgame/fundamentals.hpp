#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "resgame/model.hpp"

namespace resgame {

enum class FundamentalKind { kIncreasing, kDecreasing };

// (f, f') in a local scale; the true values are f * exp(log_scale) and
// f' * exp(log_scale).
struct ScaledPoint {
  double f = 0.0;
  double df = 0.0;
  double log_scale = 0.0;

  double value() const;
  double derivative() const;
  // f / f', free of the scale factor.
  double ratio() const { return f / df; }
};

struct FundamentalOptions {
  // Local error target of the embedded Runge-Kutta pair.
  double tol = 1e-10;
  // Decreasing kind only: double x_max until phi'(0) moves by less than this
  // (relative). Zero disables the check.
  double truncation_tol = 1e-8;
  int max_doublings = 4;
};

// Positive solution of 1/2 sigma^2 f'' + mu_A f' - r f = 0 on [0, x_max],
// either increasing with f(0) = 0, f'(0) = 1 or decreasing with f(0) = 1 and
// slope at x_max matched to the local decaying exponent.
class FundamentalSolution {
 public:
  FundamentalKind kind() const { return kind_; }
  const ShiftedDrift& drift() const { return drift_; }
  double r() const { return r_; }
  double x_max() const { return grid_.back(); }
  double tol() const { return tol_; }
  // Relative change of f'(0) when x_max was doubled (decreasing kind).
  double truncation_delta() const { return truncation_delta_; }

  std::span<const double> grid() const { return grid_; }
  std::span<const std::array<double, 2>> values() const { return values_; }
  std::span<const double> log_scale() const { return log_scale_; }

  // Evaluates at any x in [0, x_max] by integrating from the nearest node.
  ScaledPoint at(double x) const;
  double value(double x) const { return at(x).value(); }
  double derivative(double x) const { return at(x).derivative(); }
  // f'' / f' from the ODE, using the drift of the segment containing x (the
  // right limit at a breakpoint). Scale free.
  double curvature_ratio(double x) const;
  // Sign-carrying f'' in the local scale of at(x), from the ODE identity.
  double second_derivative_scaled(double x, std::size_t segment) const;

  void write_csv(std::ostream& os) const;

 private:
  friend FundamentalSolution solve_fundamental(FundamentalKind,
                                               const ShiftedDrift&, double,
                                               double, double);

  FundamentalSolution(FundamentalKind kind, ShiftedDrift drift, double r,
                      double tol)
      : kind_(kind), drift_(std::move(drift)), r_(r), tol_(tol) {}

  // Node index i with grid_[i] <= x < grid_[i+1].
  std::size_t locate(double x) const;

  FundamentalKind kind_;
  ShiftedDrift drift_;
  double r_;
  double tol_;
  double truncation_delta_ = 0.0;
  std::vector<double> grid_;
  std::vector<std::array<double, 2>> values_;
  std::vector<double> log_scale_;
  // Drift segment of the interval [grid_[i], grid_[i+1]].
  std::vector<std::size_t> segment_;

  friend FundamentalSolution solve_phi(const ShiftedDrift&, double, double,
                                       const FundamentalOptions&);
};

// Raw single-domain integration, no truncation check.
FundamentalSolution solve_fundamental(FundamentalKind kind,
                                      const ShiftedDrift& drift, double r,
                                      double x_max, double tol);

FundamentalSolution solve_psi(const ShiftedDrift& drift, double r, double x_max,
                              const FundamentalOptions& opts = {});
FundamentalSolution solve_phi(const ShiftedDrift& drift, double r, double x_max,
                              const FundamentalOptions& opts = {});

// Negative root of 1/2 s2 z^2 + m z - r = 0, evaluated without cancellation.
double decaying_exponent(double drift, double sigma2, double r);
// Positive root of the same quadratic.
double growing_exponent(double drift, double sigma2, double r);

// Unique sign change of psi'' (the concave-convex switch). Returns 0 when the
// effective drift at 0 is not positive. Throws kNoSignChange if nothing is
// found up to `upper` (normally the extinction bound c).
double inflection_point(const FundamentalSolution& psi, double upper);

// Scale-free evaluation of psi/psi' - phi/phi'.
class RatioEvaluator {
 public:
  RatioEvaluator(const FundamentalSolution& psi, const FundamentalSolution& phi)
      : psi_(&psi), phi_(&phi) {}

  double psi_ratio(double b) const;
  double phi_ratio(double b) const;
  double f(double b) const { return psi_ratio(b) - phi_ratio(b); }

 private:
  const FundamentalSolution* psi_;
  const FundamentalSolution* phi_;
};

inline double ratio_f(const RatioEvaluator& ratios, double b) {
  return ratios.f(b);
}

}  // namespace resgame
