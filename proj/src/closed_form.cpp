#include "resgame/closed_form.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "resgame/error.hpp"
#include "resgame/fundamentals.hpp"
#include "roots.hpp"

namespace resgame::closed_form {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Threshold solving psi/psi' - 1/z_phi = K/r when psi is built from the pair
// (a, b) and phi = e^{z_phi x}. Returns 0 when the condition fails.
double smooth_fit_threshold(double a, double b, double z_phi, double cap) {
  if (!(cap * (-z_phi) > 1.0)) return 0.0;
  const double c = cap + 1.0 / z_phi;
  const double arg = (1.0 - c * b) / (1.0 - c * a);
  if (!(arg > 0.0)) {
    throw SolverError(ErrorCode::kDomainError,
                      "threshold logarithm has a nonpositive argument");
  }
  return std::log(arg) / (a - b);
}

}  // namespace

double positive_root(double drift, double sigma2, double r) {
  return growing_exponent(drift, sigma2, r);
}

double negative_root(double drift, double sigma2, double r) {
  return decaying_exponent(drift, sigma2, r);
}

double quadratic_residual(double z, double drift, double sigma2, double r) {
  return 0.5 * sigma2 * z * z + drift * z - r;
}

CharacteristicRoots characteristic_roots(double mu, double sigma2, double r,
                                         double total_shift, double k1, double k2) {
  CharacteristicRoots c;
  c.alpha = positive_root(mu, sigma2, r);
  c.beta = negative_root(mu, sigma2, r);
  c.gamma = negative_root(mu - total_shift, sigma2, r);
  c.alpha1 = positive_root(mu - k1, sigma2, r);
  c.beta1 = negative_root(mu - k1, sigma2, r);
  c.beta2 = negative_root(mu - k1 - k2, sigma2, r);
  return c;
}

double inflection_point(double mu, double sigma2, double r) {
  // psi'' = (alpha^2 e^{alpha x} - beta^2 e^{beta x}) / (alpha - beta).
  const double a = positive_root(mu, sigma2, r);
  const double b = negative_root(mu, sigma2, r);
  return std::max(0.0, 2.0 * std::log(-b / a) / (a - b));
}

// ---------------------------------------------------------------------------

double SymmetricSolution::psi(double x) const {
  return (std::exp(alpha * x) - std::exp(beta * x)) / (alpha - beta);
}

double SymmetricSolution::psi_prime(double x) const {
  return (alpha * std::exp(alpha * x) - beta * std::exp(beta * x)) / (alpha - beta);
}

double SymmetricSolution::value(double x) const {
  if (x < b_hat) return D1 * psi(x);
  return D4 * std::exp(gamma * x) + rate / r;
}

double SymmetricSolution::derivative(double x) const {
  if (x < b_hat) return D1 * psi_prime(x);
  return D4 * gamma * std::exp(gamma * x);
}

SymmetricSolution symmetric(double mu, double sigma2, double r, int n, double rate) {
  if (!(mu > 0.0) || !(sigma2 > 0.0) || !(r > 0.0) || n < 1 || !(rate > 0.0)) {
    throw SolverError(ErrorCode::kInvalidArgument,
                      "closed form needs mu, sigma2, r, K > 0 and n >= 1");
  }
  SymmetricSolution s;
  s.rate = rate;
  s.r = r;
  s.alpha = positive_root(mu, sigma2, r);
  s.beta = negative_root(mu, sigma2, r);
  s.gamma = negative_root(mu - n * rate, sigma2, r);
  const double cap = rate / r;
  s.condition = cap * (-s.gamma);
  s.b_hat = smooth_fit_threshold(s.alpha, s.beta, s.gamma, cap);

  const double b = s.b_hat;
  const double phi = std::exp(s.gamma * b);
  const double dphi = s.gamma * phi;
  const double w = phi * s.psi_prime(b) - dphi * s.psi(b);
  s.D1 = -cap * dphi / w;
  s.D4 = -cap * s.psi_prime(b) / w;
  return s;
}

// ---------------------------------------------------------------------------

double two_player_F3(const CharacteristicRoots& c, double b2) {
  // Divided through by e^{beta1 b2}.
  const double grow = std::exp((c.alpha1 - c.beta1) * b2);
  return -(c.beta1 - c.beta2) / (grow * (c.alpha1 - c.beta2) - (c.beta1 - c.beta2));
}

TwoPlayerPieces two_player_pieces(double mu, double sigma2, double r, double k1,
                                  double k2, double b1, double b2) {
  if (!(b1 >= 0.0) || !(b2 >= b1)) {
    throw SolverError(ErrorCode::kInvalidArgument, "need 0 <= b1 <= b2");
  }
  const CharacteristicRoots c = characteristic_roots(mu, sigma2, r, 0.0, k1, k2);
  TwoPlayerPieces p;

  // First system, in the unknowns G1 = F1 e^{alpha1 b1}, G2 = F2 e^{beta1 b1}.
  const double det1 = c.alpha1 - c.beta1;
  if (!(std::abs(det1) > 1e-14)) {
    throw SolverError(ErrorCode::kSingularSystem, "first pasting system (alpha1 = beta1)");
  }
  const double ea = std::exp(c.alpha * b1);
  const double eb = std::exp(c.beta * b1);
  const double psi = (ea - eb) / (c.alpha - c.beta);
  const double dpsi = (c.alpha * ea - c.beta * eb) / (c.alpha - c.beta);
  const double g1 = (dpsi - c.beta1 * psi) / det1;
  const double g2 = (dpsi - c.alpha1 * psi) / det1;
  p.F1 = g1 * std::exp(-c.alpha1 * b1);
  p.F2 = g2 * std::exp(-c.beta1 * b1);

  // Second system.
  const double ea1 = std::exp(c.alpha1 * b2);
  const double eb1 = std::exp(c.beta1 * b2);
  const double a11 = ea1 - eb1;
  const double a21 = c.alpha1 * ea1 - c.beta1 * eb1;
  const double det2 = a21 - c.beta2 * a11;
  if (!(std::abs(det2) > 1e-14 * std::max(1.0, std::abs(a21)))) {
    throw SolverError(ErrorCode::kSingularSystem, "second pasting system");
  }
  const double rhs1 = -eb1;
  const double rhs2 = -c.beta1 * eb1;
  p.F3 = (-c.beta2 * rhs1 + rhs2) / det2;
  const double h4 = (a11 * rhs2 - a21 * rhs1) / det2;
  p.F4 = h4 * std::exp(-c.beta2 * b2);

  // Residuals against the original (unshifted) equations.
  const double eA1b1 = std::exp(c.alpha1 * b1);
  const double eB1b1 = std::exp(c.beta1 * b1);
  const double s1 = std::max({std::abs(psi), std::abs(dpsi), 1e-300});
  p.residual1 = std::max(std::abs(eA1b1 * p.F1 - eB1b1 * p.F2 - psi),
                         std::abs(c.alpha1 * eA1b1 * p.F1 - c.beta1 * eB1b1 * p.F2 - dpsi)) /
                s1;
  const double eB2b2 = std::exp(c.beta2 * b2);
  const double s2 = std::max({std::abs(eb1), std::abs(c.beta1 * eb1), 1e-300});
  p.residual2 = std::max(std::abs(a11 * p.F3 - eB2b2 * p.F4 - rhs1),
                         std::abs(a21 * p.F3 - c.beta2 * eB2b2 * p.F4 - rhs2)) /
                s2;
  return p;
}

double two_player_b2_of_b1(const CharacteristicRoots& c, double r, double k2,
                           double b1) {
  // psi and psi' share the factor e^{alpha b1}, which cancels.
  const double e = std::exp((c.beta - c.alpha) * b1);
  const double p = 1.0 - e;
  const double dp = c.alpha - c.beta * e;
  const double q1 = (dp - c.alpha1 * p) / (dp - c.beta1 * p);
  const double cc = k2 / r + 1.0 / c.beta2;
  const double q2 = (1.0 - cc * c.beta1) / (1.0 - cc * c.alpha1);
  const double arg = q1 * q2;
  if (!(arg > 0.0)) return kNaN;
  return ((c.alpha1 - c.beta1) * b1 + std::log(arg)) / (c.alpha1 - c.beta1);
}

double two_player_b1_residual(const CharacteristicRoots& c, double r, double k1,
                              double k2, double b1) {
  const double b2 = two_player_b2_of_b1(c, r, k2, b1);
  if (!std::isfinite(b2)) return kNaN;
  const double f3 = two_player_F3(c, b2);
  const double e = std::exp((c.beta - c.alpha) * b1);
  const double psi_ratio = (1.0 - e) / (c.alpha - c.beta * e);
  // phi1 and phi1' divided by e^{beta1 b1}.
  const double g = std::exp((c.alpha1 - c.beta1) * b1);
  const double phi = f3 * g - (f3 - 1.0);
  const double dphi = c.alpha1 * f3 * g - c.beta1 * (f3 - 1.0);
  return psi_ratio - phi / dphi - k1 / r;
}

TwoPlayerEquilibrium two_player_equilibrium(double mu, double sigma2, double r,
                                            double k1, double k2) {
  if (!(k1 > 0.0) || !(k2 >= k1)) {
    throw SolverError(ErrorCode::kInvalidArgument, "need 0 < K1 <= K2");
  }
  const CharacteristicRoots c = characteristic_roots(mu, sigma2, r, 0.0, k1, k2);
  TwoPlayerEquilibrium out;
  const double b_star = inflection_point(mu, sigma2, r);

  // Kind (iii): both thresholds positive.
  // The residual is continued slightly past b2 = b1 so that the equal-rate
  // root, which sits exactly on b2 = b1, is still bracketed.
  constexpr int kScan = 2000;
  constexpr double kOrderSlack = 1e-2;
  auto residual = [&](double b) -> double {
    const double b2 = two_player_b2_of_b1(c, r, k2, b);
    if (!std::isfinite(b2) || b2 < b - kOrderSlack) return kNaN;
    return two_player_b1_residual(c, r, k1, k2, b);
  };
  double prev_x = b_star / kScan;
  double prev = residual(prev_x);
  for (int k = 2; k <= kScan; ++k) {
    const double x = b_star * k / kScan;
    const double g = residual(x);
    if (std::isfinite(prev) && std::isfinite(g) &&
        std::signbit(prev) != std::signbit(g)) {
      const double b1 = detail::bracketed_root(residual, prev_x, x, prev, g, 1e-15);
      const double check = residual(b1);
      const double b2 = two_player_b2_of_b1(c, r, k2, b1);
      if (std::isfinite(check) && std::abs(check) < 1e-8 * (1.0 + k1 / r) &&
          b2 >= b1 - 1e-9) {
        out.b1 = b1;
        out.b2 = std::max(b1, b2);
        out.kind = EquilibriumKind::kBothPositive;
        return out;
      }
      std::ostringstream os;
      os << "rejected bracket [" << prev_x << ", " << x << "] residual " << check
         << " b2 " << b2;
      out.trace.push_back(os.str());
    }
    prev_x = x;
    prev = g;
  }
  out.trace.push_back("no both-positive root on (0, b*]");

  // Kind (ii): smaller agent at 0, larger agent's psi has drift mu - K1.
  const double b2 = smooth_fit_threshold(c.alpha1, c.beta1, c.beta2, k2 / r);
  if (b2 > 0.0) {
    const double f3 = two_player_F3(c, b2);
    const double slope = c.alpha1 * f3 - c.beta1 * (f3 - 1.0);
    if (slope >= -r / k1) {
      out.b1 = 0.0;
      out.b2 = b2;
      out.kind = EquilibriumKind::kSmallerZero;
      return out;
    }
    std::ostringstream os;
    os << "(0, " << b2 << ") rejected: smaller agent's phi'(0) = " << slope;
    out.trace.push_back(os.str());
  } else {
    // Kind (i).
    if (k1 / r * (-c.beta2) <= 1.0) {
      out.b1 = 0.0;
      out.b2 = 0.0;
      out.kind = EquilibriumKind::kBothZero;
      return out;
    }
    out.trace.push_back("(0, 0) rejected");
  }
  std::ostringstream os;
  for (const std::string& t : out.trace) os << t << "; ";
  throw SolverError(ErrorCode::kNoEquilibriumFound, os.str());
}

}  // namespace resgame::closed_form
