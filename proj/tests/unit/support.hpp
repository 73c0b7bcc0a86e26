#pragma once

#include <cmath>
#include <string_view>
#include <vector>

#include "resgame/io.hpp"
#include "resgame/model.hpp"

namespace testing {

inline constexpr double kMu = 4.0;
inline constexpr double kSigma2 = 2.0;
inline constexpr double kR = 0.05;

inline resgame::CoefficientModel base_model() {
  return resgame::CoefficientModel::constant(kMu, kSigma2);
}

// Independent oracle: roots of 1/2 s2 z^2 + m z - r = 0 by the textbook formula.
inline double plus_root(double m, double s2, double r) {
  return -m / s2 + std::sqrt(m * m / (s2 * s2) + 2.0 * r / s2);
}
inline double minus_root(double m, double s2, double r) {
  return -m / s2 - std::sqrt(m * m / (s2 * s2) + 2.0 * r / s2);
}

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max(std::abs(b), 1e-300);
}

inline std::vector<double> column(std::string_view csv, std::string_view name) {
  const resgame::CsvTable t = resgame::parse_csv(csv);
  const std::size_t c = t.column(name);
  std::vector<double> out;
  for (const auto& row : t.rows) out.push_back(row[c]);
  return out;
}

}  // namespace testing
