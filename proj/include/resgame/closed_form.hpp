#pragma once

#include <string>
#include <vector>

namespace resgame::closed_form {

// Roots of 1/2 s2 z^2 + m z - r = 0 for the drifts that occur with constant
// coefficients: alpha/beta for mu, gamma for mu - nK, alpha1/beta1 for
// mu - K1 and beta2 for mu - K1 - K2.
struct CharacteristicRoots {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  double alpha1 = 0.0;
  double beta1 = 0.0;
  double beta2 = 0.0;
};

// Positive and negative roots for a single drift.
double positive_root(double drift, double sigma2, double r);
double negative_root(double drift, double sigma2, double r);

// Residual of the characteristic quadratic, for checks.
double quadratic_residual(double z, double drift, double sigma2, double r);

// gamma uses the total symmetric shift nK; alpha1/beta1/beta2 use K1, K2.
CharacteristicRoots characteristic_roots(double mu, double sigma2, double r,
                                         double total_shift, double k1 = 0.0,
                                         double k2 = 0.0);

// Inflection point of psi(x) = (e^{alpha x} - e^{beta x}) / (alpha - beta).
double inflection_point(double mu, double sigma2, double r);

struct SymmetricSolution {
  double b_hat = 0.0;
  // (K/r)(-gamma); b_hat > 0 iff this exceeds 1.
  double condition = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  double D1 = 0.0;
  double D4 = 0.0;
  double rate = 0.0;
  double r = 0.0;

  double psi(double x) const;
  double psi_prime(double x) const;
  double value(double x) const;
  double derivative(double x) const;
};

SymmetricSolution symmetric(double mu, double sigma2, double r, int n, double rate);

// Pasting constants of the two-player fundamentals:
//   psi2 = F1 e^{alpha1 x} - F2 e^{beta1 x}                on [b1, b2]
//   phi1 = F3 e^{alpha1 x} - (F3 - 1) e^{beta1 x}          on [0, b2]
//   phi1 = F4 e^{beta2 x}                                  on [b2, inf)
// C is the unused normalization of phi2 = C phi1 above b2.
struct TwoPlayerPieces {
  double F1 = 0.0;
  double F2 = 0.0;
  double F3 = 0.0;
  double F4 = 0.0;
  double C = 1.0;
  // Max relative residual of the first / second 2x2 system.
  double residual1 = 0.0;
  double residual2 = 0.0;
};

TwoPlayerPieces two_player_pieces(double mu, double sigma2, double r, double k1,
                                  double k2, double b1, double b2);

// F3 as a function of b2 alone.
double two_player_F3(const CharacteristicRoots& roots, double b2);
// Smooth-fit threshold of the larger agent given the smaller agent's b1.
// NaN when the logarithm's argument is not positive.
double two_player_b2_of_b1(const CharacteristicRoots& roots, double r, double k2,
                           double b1);
// Residual of the smaller agent's ratio equation at b1 (with b2 = b2(b1)).
double two_player_b1_residual(const CharacteristicRoots& roots, double r,
                              double k1, double k2, double b1);

enum class EquilibriumKind { kBothZero, kSmallerZero, kBothPositive };

struct TwoPlayerEquilibrium {
  double b1 = 0.0;
  double b2 = 0.0;
  EquilibriumKind kind = EquilibriumKind::kBothPositive;
  std::vector<std::string> trace;
};

// Requires 0 < k1 <= k2. Tries a both-positive equilibrium first, then
// (0, b2) and (0, 0).
TwoPlayerEquilibrium two_player_equilibrium(double mu, double sigma2, double r,
                                            double k1, double k2);

}  // namespace resgame::closed_form
