#include "resgame/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace resgame {

namespace {

std::string describe(Assumption a, double x, double observed) {
  std::ostringstream os;
  os << assumption_id(a) << " fails at x=" << x << " (observed " << observed
     << ")";
  return os.str();
}

}  // namespace

CoefficientModel::CoefficientModel(Function mu, Function mu_prime,
                                   Function sigma, ModelKind kind)
    : mu_(std::move(mu)),
      mu_prime_(std::move(mu_prime)),
      sigma_(std::move(sigma)),
      kind_(kind) {
  if (!mu_ || !mu_prime_ || !sigma_) {
    throw SolverError(ErrorCode::kInvalidArgument,
                      "coefficient functions must be callable");
  }
}

CoefficientModel CoefficientModel::constant(double mu, double sigma2) {
  if (!(sigma2 > 0.0)) {
    throw SolverError(ErrorCode::kNonPositiveSigma,
                      "constant model needs sigma2 > 0");
  }
  const double sigma = std::sqrt(sigma2);
  CoefficientModel m([mu](double) { return mu; }, [](double) { return 0.0; },
                     [sigma](double) { return sigma; }, ModelKind::kConstant);
  m.mu0_ = mu;
  m.mu1_ = 0.0;
  m.sigma2_ = sigma2;
  return m;
}

CoefficientModel CoefficientModel::affine(double mu0, double mu1, double sigma2,
                                          double r) {
  if (!(sigma2 > 0.0)) {
    throw SolverError(ErrorCode::kNonPositiveSigma,
                      "affine model needs sigma2 > 0");
  }
  if (!(mu1 < r)) {
    throw SolverError(ErrorCode::kDriftDerivativeTooLarge,
                      "affine drift slope must be below the discount rate");
  }
  const double sigma = std::sqrt(sigma2);
  CoefficientModel m([mu0, mu1](double x) { return mu0 + mu1 * x; },
                     [mu1](double) { return mu1; },
                     [sigma](double) { return sigma; }, ModelKind::kAffine);
  m.mu0_ = mu0;
  m.mu1_ = mu1;
  m.sigma2_ = sigma2;
  return m;
}

std::optional<double> CoefficientModel::constant_mu() const {
  if (kind_ == ModelKind::kConstant) return mu0_;
  return std::nullopt;
}

std::optional<double> CoefficientModel::affine_slope() const {
  if (kind_ == ModelKind::kAffine) return mu1_;
  return std::nullopt;
}

// ---------------------------------------------------------------------------

GameParams GameParams::symmetric(int n, double r, double rate) {
  if (n < 1) throw SolverError(ErrorCode::kInvalidArgument, "n must be >= 1");
  if (!(r > 0.0)) throw SolverError(ErrorCode::kInvalidArgument, "r must be > 0");
  if (!(rate > 0.0)) {
    throw SolverError(ErrorCode::kInvalidArgument, "K must be > 0");
  }
  GameParams p;
  p.r_ = r;
  p.symmetric_ = true;
  p.rates_.assign(static_cast<std::size_t>(n), rate);
  p.permutation_.resize(p.rates_.size());
  std::iota(p.permutation_.begin(), p.permutation_.end(), std::size_t{0});
  return p;
}

GameParams GameParams::asymmetric(double r, std::vector<double> rates) {
  if (rates.empty()) {
    throw SolverError(ErrorCode::kInvalidArgument, "need at least one rate");
  }
  if (!(r > 0.0)) throw SolverError(ErrorCode::kInvalidArgument, "r must be > 0");
  for (double k : rates) {
    if (!(k > 0.0)) {
      throw SolverError(ErrorCode::kInvalidArgument, "every rate must be > 0");
    }
  }
  GameParams p;
  p.r_ = r;
  p.symmetric_ = false;
  p.permutation_.resize(rates.size());
  std::iota(p.permutation_.begin(), p.permutation_.end(), std::size_t{0});
  std::stable_sort(p.permutation_.begin(), p.permutation_.end(),
                   [&](std::size_t a, std::size_t b) { return rates[a] < rates[b]; });
  p.rates_.reserve(rates.size());
  for (std::size_t idx : p.permutation_) p.rates_.push_back(rates[idx]);
  return p;
}

double GameParams::rate() const {
  if (!symmetric_) {
    throw SolverError(ErrorCode::kInvalidArgument,
                      "rate() is only defined for symmetric games");
  }
  return rates_.front();
}

double GameParams::total_rate() const {
  return std::accumulate(rates_.begin(), rates_.end(), 0.0);
}

std::vector<double> GameParams::to_original_order(
    std::span<const double> sorted) const {
  std::vector<double> out(sorted.size());
  for (std::size_t k = 0; k < sorted.size(); ++k) out[permutation_[k]] = sorted[k];
  return out;
}

std::vector<double> GameParams::to_sorted_order(
    std::span<const double> original) const {
  std::vector<double> out(original.size());
  for (std::size_t k = 0; k < original.size(); ++k) out[k] = original[permutation_[k]];
  return out;
}

// ---------------------------------------------------------------------------

ShiftedDrift::ShiftedDrift(CoefficientModel base, double shift,
                           std::vector<DriftJump> jumps)
    : base_(std::move(base)), shift_(shift) {
  if (!(shift >= 0.0)) {
    throw SolverError(ErrorCode::kInvalidArgument, "drift shift must be >= 0");
  }
  std::sort(jumps.begin(), jumps.end(),
            [](const DriftJump& a, const DriftJump& b) { return a.position < b.position; });
  for (const DriftJump& j : jumps) {
    if (!(j.position >= 0.0) || !(j.size > 0.0)) {
      throw SolverError(ErrorCode::kInvalidArgument,
                        "jumps need position >= 0 and size > 0");
    }
    if (!std::isfinite(j.position)) continue;  // never active
    if (!jumps_.empty() && jumps_.back().position == j.position) {
      jumps_.back().size += j.size;
    } else {
      jumps_.push_back(j);
    }
  }
  double running = shift_;
  for (const DriftJump& j : jumps_) {
    if (j.position == 0.0) {
      running += j.size;
    }
  }
  segment_shift_.push_back(running);
  for (const DriftJump& j : jumps_) {
    if (j.position == 0.0) continue;
    running += j.size;
    breakpoints_.push_back(j.position);
    segment_shift_.push_back(running);
  }
}

double ShiftedDrift::total_shift(double x) const {
  return segment_shift_[segment_of(x)];
}

std::size_t ShiftedDrift::segment_of(double x) const {
  // Number of breakpoints <= x.
  return static_cast<std::size_t>(
      std::upper_bound(breakpoints_.begin(), breakpoints_.end(), x) -
      breakpoints_.begin());
}

// ---------------------------------------------------------------------------

std::string_view assumption_id(Assumption a) {
  switch (a) {
    case Assumption::kA1Smoothness: return "A.1";
    case Assumption::kA2Sigma: return "A.2";
    case Assumption::kA2LinearGrowth: return "A.2-growth";
    case Assumption::kA3Derivative: return "A.3";
    case Assumption::kA3ExtinctionBound: return "A.3-bound";
    case Assumption::kA4DriftAtZero: return "A.4";
  }
  return "?";
}

void AssumptionReport::require_passed() const {
  if (violations.empty()) return;
  const AssumptionViolation& v = violations.front();
  ErrorCode code = ErrorCode::kInvalidArgument;
  switch (v.assumption) {
    case Assumption::kA2Sigma: code = ErrorCode::kNonPositiveSigma; break;
    case Assumption::kA3Derivative: code = ErrorCode::kDriftDerivativeTooLarge; break;
    case Assumption::kA4DriftAtZero: code = ErrorCode::kNonPositiveDriftAtZero; break;
    case Assumption::kA3ExtinctionBound: code = ErrorCode::kNoExtinctionBound; break;
    default: break;
  }
  throw SolverError(code, describe(v.assumption, v.x, v.observed));
}

std::vector<double> hybrid_grid(const GridSpec& spec) {
  if (!(spec.x_max > 0.0) || spec.points < 2) {
    throw SolverError(ErrorCode::kInvalidArgument,
                      "grid needs x_max > 0 and at least two points");
  }
  std::vector<double> grid;
  const std::size_t uniform = std::max<std::size_t>(2, spec.points / 2);
  const std::size_t geometric = spec.points - std::min(spec.points, uniform);
  grid.reserve(spec.points + 1);
  for (std::size_t k = 0; k < uniform; ++k) {
    grid.push_back(spec.x_max * static_cast<double>(k) /
                   static_cast<double>(uniform - 1));
  }
  const double lo = spec.x_max * 1e-6;
  const double ratio = geometric > 1 ? std::pow(spec.x_max / lo, 1.0 / static_cast<double>(geometric - 1)) : 1.0;
  double x = lo;
  for (std::size_t k = 0; k < geometric; ++k, x *= ratio) {
    grid.push_back(std::min(x, spec.x_max));
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

AssumptionReport validate_assumptions(const CoefficientModel& coeffs,
                                      const GameParams& params,
                                      const GridSpec& grid_spec) {
  const std::vector<double> grid = hybrid_grid(grid_spec);
  const double r = params.r();
  AssumptionReport report;

  for (double x : grid) {
    const double mu = coeffs.mu(x);
    const double dmu = coeffs.mu_prime(x);
    const double sigma = coeffs.sigma(x);
    if (!std::isfinite(mu) || !std::isfinite(dmu) || !std::isfinite(sigma)) {
      report.violations.push_back({Assumption::kA1Smoothness, x, mu});
      continue;
    }
    if (!(sigma * sigma > 0.0)) {
      report.violations.push_back({Assumption::kA2Sigma, x, sigma * sigma});
    }
    if (!(dmu < r)) {
      report.violations.push_back({Assumption::kA3Derivative, x, dmu});
    }
    report.linear_growth_constant =
        std::max(report.linear_growth_constant,
                 (std::abs(sigma) + std::abs(mu)) / (1.0 + x));
  }
  const double mu0 = coeffs.mu(0.0);
  if (!(mu0 > 0.0)) {
    report.violations.push_back({Assumption::kA4DriftAtZero, 0.0, mu0});
  }
  try {
    report.c_bound = extinction_bound_on(coeffs, r, grid, grid_spec.x_max);
  } catch (const SolverError&) {
    report.violations.push_back(
        {Assumption::kA3ExtinctionBound, grid_spec.x_max,
         coeffs.mu(grid_spec.x_max) - r * grid_spec.x_max});
  }
  report.passed = report.violations.empty();
  return report;
}

double extinction_bound_on(const CoefficientModel& coeffs, double r,
                           std::span<const double> samples, double ceiling) {
  // g(c) = sup_{x >= c} (mu(x) - r x) + 1/c, taken over c itself and the
  // samples above it; c is admissible iff g(c) <= 0.
  auto admissible = [&](double c) {
    double worst = coeffs.mu(c) - r * c;
    for (auto it = std::lower_bound(samples.begin(), samples.end(), c);
         it != samples.end(); ++it) {
      worst = std::max(worst, coeffs.mu(*it) - r * *it);
    }
    return worst + 1.0 / c <= 0.0;
  };
  if (!(ceiling > 0.0) || !admissible(ceiling)) {
    throw SolverError(ErrorCode::kNoExtinctionBound,
                      "no c below the ceiling satisfies mu(x) <= r x - 1/c");
  }
  double lo = std::numeric_limits<double>::min();
  double hi = ceiling;
  while (hi - lo > 1e-10 * (1.0 + hi)) {
    const double mid = 0.5 * (lo + hi);
    if (admissible(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

double extinction_bound(const CoefficientModel& coeffs, double r,
                        const ExtinctionBoundOptions& opts) {
  const std::vector<double> samples =
      hybrid_grid({opts.ceiling, std::max<std::size_t>(2, opts.samples)});
  return extinction_bound_on(coeffs, r, samples, opts.ceiling);
}

}  // namespace resgame
