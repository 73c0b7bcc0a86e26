#pragma once

#include <memory>

#include "resgame/fundamentals.hpp"

namespace resgame {

// Value of an agent extracting at rate K above threshold b:
//   V(x) = D1 psi(x)          on [0, b]
//   V(x) = D4 phi(x) + K / r  on [b, x_max]
// with D1, D4 fixed by C^1 pasting at b. Evaluation goes through ratios of the
// stored fundamentals, so it never touches the raw scale factors.
class ThresholdValue {
 public:
  ThresholdValue(std::shared_ptr<const FundamentalSolution> psi,
                 std::shared_ptr<const FundamentalSolution> phi, double b,
                 double rate, double r);

  double threshold() const { return b_; }
  double rate() const { return rate_; }
  double r() const { return r_; }
  double x_max() const;
  // True-scale pasting constants (may overflow for extreme models; the
  // evaluation below does not depend on them).
  double D1() const { return d1_; }
  double D4() const { return d4_; }
  // V(b) and the slope at b (1 whenever the smooth-fit condition holds).
  double value_at_threshold() const { return v_b_; }
  double slope_at_threshold() const { return slope_b_; }

  double value(double x) const;
  double derivative(double x) const;
  // From the ODE on the piece containing x (x = b uses the upper piece).
  double second_derivative(double x) const;
  // Generator residual 1/2 s2 V'' + drift V' - r V + K 1{x >= b}, computed
  // with V'' from a central difference of V'. Used by tests.
  double ode_residual_fd(double x, double h) const;

  const FundamentalSolution& psi() const { return *psi_; }
  const FundamentalSolution& phi() const { return *phi_; }

 private:
  std::shared_ptr<const FundamentalSolution> psi_;
  std::shared_ptr<const FundamentalSolution> phi_;
  double b_;
  double rate_;
  double r_;
  ScaledPoint psi_b_;
  ScaledPoint phi_b_;
  double v_b_ = 0.0;
  double slope_b_ = 0.0;
  double d1_ = 0.0;
  double d4_ = 0.0;
};

}  // namespace resgame
