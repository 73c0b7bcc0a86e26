#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>

#include <boost/math/tools/toms748_solve.hpp>

#include "resgame/error.hpp"

namespace resgame::detail {

// Bracketed root of f on [a, b] to absolute width abs_tol (TOMS 748, a
// Brent-class bracketing method). fa and fb are f(a) and f(b).
template <class F>
double bracketed_root(F&& f, double a, double b, double fa, double fb,
                      double abs_tol) {
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  if (!(std::signbit(fa) != std::signbit(fb)) || std::isnan(fa) ||
      std::isnan(fb)) {
    throw SolverError(ErrorCode::kBracketFailure,
                      "no sign change on [" + std::to_string(a) + ", " +
                          std::to_string(b) + "]");
  }
  std::uintmax_t max_iter = 200;
  auto done = [abs_tol](double lo, double hi) { return std::abs(hi - lo) <= abs_tol; };
  const std::pair<double, double> bracket = boost::math::tools::toms748_solve(
      [&](double x) { return f(x); }, a, b, fa, fb, done, max_iter);
  return 0.5 * (bracket.first + bracket.second);
}

}  // namespace resgame::detail
