#include "resgame/fundamentals.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <boost/numeric/odeint.hpp>

#include "resgame/io.hpp"
#include "roots.hpp"

namespace resgame {

namespace odeint = boost::numeric::odeint;

namespace {

using State = std::array<double, 2>;
using Stepper = odeint::runge_kutta_cash_karp54<State>;

// Rescale (f, f') back to unit size once it leaves [1e-100, 1e100].
constexpr double kScaleCap = 1e100;

auto make_stepper(double tol) {
  return odeint::make_controlled<Stepper>(0.0, tol);
}

struct SegmentRhs {
  const ShiftedDrift* drift;
  std::size_t segment;
  double r;

  void operator()(const State& y, State& dydx, double x) const {
    const double s2 = drift->base().sigma2(x);
    dydx[0] = y[1];
    dydx[1] = 2.0 * (r * y[0] - drift->on_segment(segment, x) * y[1]) / s2;
  }
};

// Adaptive integration of one smooth segment from x0 to x1 (either
// direction). `on_step` sees every accepted (x, state).
template <class OnStep>
void integrate_segment(const SegmentRhs& rhs, State& y, double x0, double x1,
                       double tol, double& h, OnStep&& on_step) {
  auto stepper = make_stepper(tol);
  const double dir = x1 >= x0 ? 1.0 : -1.0;
  double x = x0;
  double dt = dir * std::abs(h);
  const double min_step = 1e-14 * (1.0 + std::max(std::abs(x0), std::abs(x1)));
  while (dir * (x1 - x) > 0.0) {
    bool last = false;
    if (dir * (x + dt - x1) >= 0.0) {
      dt = x1 - x;
      last = true;
    }
    const double attempted = dt;
    if (stepper.try_step(rhs, y, x, dt) == odeint::fail) {
      if (std::abs(dt) < min_step) {
        throw SolverError(ErrorCode::kStepSizeUnderflow,
                          "step size underflow near x=" + std::to_string(x));
      }
      continue;
    }
    if (last) {
      x = x1;
    }
    h = std::max(std::abs(dt), std::abs(attempted));
    on_step(x, y);
  }
}

}  // namespace

double ScaledPoint::value() const { return f * std::exp(log_scale); }
double ScaledPoint::derivative() const { return df * std::exp(log_scale); }

double decaying_exponent(double drift, double sigma2, double r) {
  const double root = std::sqrt(drift * drift + 2.0 * r * sigma2);
  if (drift > 0.0) return (-drift - root) / sigma2;
  return -2.0 * r / (-drift + root);
}

double growing_exponent(double drift, double sigma2, double r) {
  const double root = std::sqrt(drift * drift + 2.0 * r * sigma2);
  if (drift > 0.0) return 2.0 * r / (drift + root);
  return (-drift + root) / sigma2;
}

FundamentalSolution solve_fundamental(FundamentalKind kind,
                                      const ShiftedDrift& drift, double r,
                                      double x_max, double tol) {
  if (!(x_max > 0.0) || !(r > 0.0) || !(tol > 0.0)) {
    throw SolverError(ErrorCode::kInvalidArgument,
                      "fundamental solution needs x_max, r, tol > 0");
  }
  FundamentalSolution sol(kind, drift, r, tol);
  const ShiftedDrift& d = sol.drift_;

  // Segment boundaries inside (0, x_max).
  std::vector<double> edges{0.0};
  for (double b : d.breakpoints()) {
    if (b < x_max) edges.push_back(b);
  }
  edges.push_back(x_max);

  double log_scale = 0.0;
  auto record = [&](double x, State& y) {
    if (kind == FundamentalKind::kIncreasing) {
      if (!(y[1] > 0.0)) {
        throw SolverError(ErrorCode::kNonMonotone,
                          "increasing solution has f' <= 0 at x=" + std::to_string(x));
      }
    } else if (!(y[0] > 0.0) || !(y[1] < 0.0)) {
      throw SolverError(ErrorCode::kSignViolation,
                        "decreasing solution lost f > 0, f' < 0 at x=" + std::to_string(x));
    }
    const double m = std::max(std::abs(y[0]), std::abs(y[1]));
    if (m > kScaleCap || m < 1.0 / kScaleCap) {
      y[0] /= m;
      y[1] /= m;
      log_scale += std::log(m);
    }
    sol.grid_.push_back(x);
    sol.values_.push_back(y);
    sol.log_scale_.push_back(log_scale);
  };

  if (kind == FundamentalKind::kIncreasing) {
    State y{0.0, 1.0};
    sol.grid_.push_back(0.0);
    sol.values_.push_back(y);
    sol.log_scale_.push_back(0.0);
    double h = 1e-4;
    for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
      const SegmentRhs rhs{&d, d.segment_of(edges[k]), r};
      integrate_segment(rhs, y, edges[k], edges[k + 1], tol, h, record);
    }
  } else {
    const std::size_t top = d.segment_of(x_max);
    const double z = decaying_exponent(d.on_segment(top, x_max),
                                       d.base().sigma2(x_max), r);
    State y{1.0, z};
    sol.grid_.push_back(x_max);
    sol.values_.push_back(y);
    sol.log_scale_.push_back(0.0);
    double h = 1e-4;
    for (std::size_t k = edges.size() - 1; k > 0; --k) {
      const SegmentRhs rhs{&d, d.segment_of(edges[k - 1]), r};
      integrate_segment(rhs, y, edges[k], edges[k - 1], tol, h, record);
    }
    std::reverse(sol.grid_.begin(), sol.grid_.end());
    std::reverse(sol.values_.begin(), sol.values_.end());
    std::reverse(sol.log_scale_.begin(), sol.log_scale_.end());

    // Renormalize so f(0) = 1.
    const double f0 = sol.values_.front()[0];
    const double s0 = sol.log_scale_.front();
    for (std::size_t i = 0; i < sol.values_.size(); ++i) {
      sol.values_[i][0] /= f0;
      sol.values_[i][1] /= f0;
      sol.log_scale_[i] -= s0;
    }
    sol.values_.front()[0] = 1.0;
    sol.log_scale_.front() = 0.0;
  }
  // Breakpoints are nodes, so each interval [grid_i, grid_i+1] lies in the
  // segment of its left end.
  sol.segment_.reserve(sol.grid_.size());
  for (double x : sol.grid_) sol.segment_.push_back(d.segment_of(x));
  return sol;
}

FundamentalSolution solve_psi(const ShiftedDrift& drift, double r, double x_max,
                              const FundamentalOptions& opts) {
  return solve_fundamental(FundamentalKind::kIncreasing, drift, r, x_max,
                           opts.tol);
}

FundamentalSolution solve_phi(const ShiftedDrift& drift, double r, double x_max,
                              const FundamentalOptions& opts) {
  FundamentalSolution sol =
      solve_fundamental(FundamentalKind::kDecreasing, drift, r, x_max, opts.tol);
  if (!(opts.truncation_tol > 0.0)) return sol;

  double slope = sol.values_.front()[1];
  double domain = x_max;
  for (int k = 0; k < opts.max_doublings; ++k) {
    domain *= 2.0;
    const FundamentalSolution wider = solve_fundamental(
        FundamentalKind::kDecreasing, drift, r, domain, opts.tol);
    const double wider_slope = wider.values_.front()[1];
    const double delta = std::abs(wider_slope - slope) / std::abs(wider_slope);
    if (delta < opts.truncation_tol) {
      sol.truncation_delta_ = delta;
      return sol;
    }
    // Not converged: continue from the wider domain.
    sol = wider;
    slope = wider_slope;
  }
  throw SolverError(ErrorCode::kTruncationNotConverged,
                    "phi'(0) still moving after doubling x_max to " +
                        std::to_string(domain));
}

std::size_t FundamentalSolution::locate(double x) const {
  auto it = std::upper_bound(grid_.begin(), grid_.end(), x);
  return static_cast<std::size_t>(it - grid_.begin()) - 1;
}

ScaledPoint FundamentalSolution::at(double x) const {
  const double top = grid_.back();
  if (!(x >= 0.0) || x > top * (1.0 + 1e-12)) {
    throw SolverError(ErrorCode::kOutOfDomain,
                      "x=" + std::to_string(x) + " outside [0, " +
                          std::to_string(top) + "]");
  }
  x = std::min(x, top);
  const std::size_t i = locate(x);
  State y = values_[i];
  if (grid_[i] == x) return {y[0], y[1], log_scale_[i]};
  const SegmentRhs rhs{&drift_, segment_[i], r_};
  double h = grid_[i + 1] - grid_[i];
  integrate_segment(rhs, y, grid_[i], x, tol_, h, [](double, State&) {});
  return {y[0], y[1], log_scale_[i]};
}

double FundamentalSolution::second_derivative_scaled(double x,
                                                     std::size_t segment) const {
  const ScaledPoint p = at(x);
  return 2.0 * (r_ * p.f - drift_.on_segment(segment, x) * p.df) /
         drift_.base().sigma2(x);
}

double FundamentalSolution::curvature_ratio(double x) const {
  const ScaledPoint p = at(x);
  const std::size_t segment = drift_.segment_of(x);
  return 2.0 * (r_ * p.ratio() - drift_.on_segment(segment, x)) /
         drift_.base().sigma2(x);
}

void FundamentalSolution::write_csv(std::ostream& os) const {
  os << "x,f,df,log_scale\n";
  os.precision(17);
  for (std::size_t i = 0; i < grid_.size(); ++i) {
    os << format_double(grid_[i]) << ',' << format_double(values_[i][0]) << ','
       << format_double(values_[i][1]) << ',' << format_double(log_scale_[i]) << '\n';
  }
}

double inflection_point(const FundamentalSolution& psi, double upper) {
  if (psi.kind() != FundamentalKind::kIncreasing) {
    throw SolverError(ErrorCode::kInvalidArgument,
                      "inflection point needs the increasing solution");
  }
  const ShiftedDrift& drift = psi.drift();
  if (!(drift.on_segment(0, 0.0) > 0.0)) return 0.0;

  const double r = psi.r();
  // Sign of psi'' on a segment, normalized by psi' > 0.
  auto q = [&](double x, std::size_t segment, double ratio) {
    return r * ratio - drift.on_segment(segment, x);
  };
  const auto grid = psi.grid();
  const auto values = psi.values();
  const double limit = std::min(upper * (1.0 + 1e-9), psi.x_max());
  for (std::size_t i = 0; i + 1 < grid.size() && grid[i] <= limit; ++i) {
    const std::size_t segment = drift.segment_of(grid[i]);
    const double qa = q(grid[i], segment, values[i][0] / values[i][1]);
    if (qa >= 0.0) return grid[i];  // switch caused by a drift jump
    const double qb = q(grid[i + 1], segment, values[i + 1][0] / values[i + 1][1]);
    if (qb < 0.0) continue;
    const double root = detail::bracketed_root(
        [&](double x) { return q(x, segment, psi.at(x).ratio()); }, grid[i],
        grid[i + 1], qa, qb, 1e-11);
    if (root > limit) break;
    return root;
  }
  throw SolverError(ErrorCode::kNoSignChange,
                    "psi'' has no sign change below " + std::to_string(upper));
}

double RatioEvaluator::psi_ratio(double b) const { return psi_->at(b).ratio(); }
double RatioEvaluator::phi_ratio(double b) const { return phi_->at(b).ratio(); }

}  // namespace resgame
