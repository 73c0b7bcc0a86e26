#include "resgame/value_function.hpp"

#include <cmath>

namespace resgame {

ThresholdValue::ThresholdValue(std::shared_ptr<const FundamentalSolution> psi,
                               std::shared_ptr<const FundamentalSolution> phi,
                               double b, double rate, double r)
    : psi_(std::move(psi)), phi_(std::move(phi)), b_(b), rate_(rate), r_(r) {
  psi_b_ = psi_->at(b_);
  phi_b_ = phi_->at(b_);
  const double cap = rate_ / r_;
  const double rpsi = psi_b_.ratio();
  const double rphi = phi_b_.ratio();
  // With R = f / f': V(b) = (K/r) Rpsi / (Rpsi - Rphi), V'(b) = (K/r) / (Rpsi - Rphi).
  v_b_ = cap * rpsi / (rpsi - rphi);
  slope_b_ = cap / (rpsi - rphi);
  // D1 = -(K/r) phi'(b) / W, D4 = -(K/r) psi'(b) / W with
  // W = phi psi' - phi' psi, split into local values and exponents.
  const double w = phi_b_.f * psi_b_.df - phi_b_.df * psi_b_.f;
  d1_ = -cap * phi_b_.df / w * std::exp(-psi_b_.log_scale);
  d4_ = -cap * psi_b_.df / w * std::exp(-phi_b_.log_scale);
}

double ThresholdValue::x_max() const {
  return std::min(phi_->x_max(), std::max(psi_->x_max(), b_));
}

double ThresholdValue::value(double x) const {
  if (x < b_) {
    const ScaledPoint p = psi_->at(x);
    return v_b_ * (p.f / psi_b_.f) * std::exp(p.log_scale - psi_b_.log_scale);
  }
  const ScaledPoint p = phi_->at(x);
  const double cap = rate_ / r_;
  return cap + (v_b_ - cap) * (p.f / phi_b_.f) *
                   std::exp(p.log_scale - phi_b_.log_scale);
}

double ThresholdValue::derivative(double x) const {
  if (x < b_) {
    const ScaledPoint p = psi_->at(x);
    return v_b_ * (p.df / psi_b_.f) * std::exp(p.log_scale - psi_b_.log_scale);
  }
  const ScaledPoint p = phi_->at(x);
  const double cap = rate_ / r_;
  return (v_b_ - cap) * (p.df / phi_b_.f) *
         std::exp(p.log_scale - phi_b_.log_scale);
}

double ThresholdValue::second_derivative(double x) const {
  const double v = value(x);
  const double dv = derivative(x);
  if (x < b_) {
    const ShiftedDrift& d = psi_->drift();
    return 2.0 * (r_ * v - d(x) * dv) / d.base().sigma2(x);
  }
  const ShiftedDrift& d = phi_->drift();
  return 2.0 * (r_ * v - d(x) * dv - rate_) / d.base().sigma2(x);
}

double ThresholdValue::ode_residual_fd(double x, double h) const {
  const double v = value(x);
  const double dv = derivative(x);
  const double d2v = (derivative(x + h) - derivative(x - h)) / (2.0 * h);
  if (x < b_) {
    const ShiftedDrift& d = psi_->drift();
    return 0.5 * d.base().sigma2(x) * d2v + d(x) * dv - r_ * v;
  }
  const ShiftedDrift& d = phi_->drift();
  return 0.5 * d.base().sigma2(x) * d2v + d(x) * dv - r_ * v + rate_;
}

}  // namespace resgame
