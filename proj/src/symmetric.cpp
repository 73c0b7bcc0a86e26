#include "resgame/symmetric.hpp"

#include <algorithm>
#include <cmath>

#include "resgame/parallel.hpp"
#include "roots.hpp"

namespace resgame {

SolveDomain solve_domain(const CoefficientModel& coeffs, double r,
                         const SolveOptions& opts) {
  SolveDomain d;
  d.c_bound = extinction_bound(coeffs, r);
  d.x_max = opts.x_max > 0.0 ? opts.x_max : 4.0 * d.c_bound;
  d.psi_x_max = std::min(d.x_max, 2.0 * d.c_bound);
  return d;
}

SymmetricEquilibrium::SymmetricEquilibrium(GameParams params, double b_star,
                                           double c_bound, ThresholdValue value)
    : params_(std::move(params)),
      b_star_(b_star),
      c_bound_(c_bound),
      value_(std::move(value)) {}

SymmetricEquilibrium solve_symmetric(const CoefficientModel& coeffs,
                                     const GameParams& params,
                                     const SolveOptions& opts) {
  if (!params.is_symmetric()) {
    throw SolverError(ErrorCode::kInvalidArgument,
                      "solve_symmetric needs a single common rate");
  }
  const double r = params.r();
  const double rate = params.rate();
  const double n = static_cast<double>(params.n());
  const SolveDomain domain = solve_domain(coeffs, r, opts);

  auto psi = std::make_shared<const FundamentalSolution>(
      solve_psi(ShiftedDrift(coeffs), r, domain.psi_x_max, opts.ode));
  auto phi = std::make_shared<const FundamentalSolution>(
      solve_phi(ShiftedDrift(coeffs, n * rate), r, domain.x_max, opts.ode));
  const double b_star = inflection_point(*psi, domain.c_bound);

  const double cap = rate / r;
  const double slope0 = phi->at(0.0).derivative();
  double b_hat = 0.0;
  if (slope0 < -(1.0 + opts.condition_slack) / cap) {
    const RatioEvaluator ratios(*psi, *phi);
    auto excess = [&](double b) { return ratios.f(b) - cap; };
    const double lo = excess(0.0);
    const double hi = excess(b_star);
    if (!(hi >= 0.0)) {
      throw SolverError(ErrorCode::kBracketFailure,
                        "f(b*) < K/r: fundamentals inconsistent with b* bracket");
    }
    b_hat = detail::bracketed_root(excess, 0.0, b_star, lo, hi, opts.root_tol);
  }
  return SymmetricEquilibrium(params, b_star, domain.c_bound,
                              ThresholdValue(psi, phi, b_hat, rate, r));
}

double value_at(const SymmetricEquilibrium& eq, double x) {
  if (!(x >= 0.0) || x > eq.x_max()) {
    throw SolverError(ErrorCode::kOutOfDomain, "x outside [0, x_max]");
  }
  return eq.value_function().value(x);
}

// ---------------------------------------------------------------------------

SingularBenchmark::SingularBenchmark(std::shared_ptr<const FundamentalSolution> psi,
                                     double b_star)
    : psi_(std::move(psi)), b_star_(b_star), at_b_(psi_->at(b_star)) {
  c_star_ = 1.0 / at_b_.derivative();
}

double SingularBenchmark::U(double x) const {
  // C* psi(b*) = psi(b*) / psi'(b*).
  if (x >= b_star_) return x - b_star_ + at_b_.ratio();
  const ScaledPoint p = psi_->at(x);
  return (p.f / at_b_.df) * std::exp(p.log_scale - at_b_.log_scale);
}

double SingularBenchmark::U_prime(double x) const {
  if (x >= b_star_) return 1.0;
  const ScaledPoint p = psi_->at(x);
  return (p.df / at_b_.df) * std::exp(p.log_scale - at_b_.log_scale);
}

double SingularBenchmark::U_second(double x) const {
  if (x > b_star_) return 0.0;
  const ScaledPoint p = psi_->at(x);
  const double segment_drift = psi_->drift()(x);
  const double d2 = 2.0 * (psi_->r() * p.f - segment_drift * p.df) /
                    psi_->drift().base().sigma2(x);
  return (d2 / at_b_.df) * std::exp(p.log_scale - at_b_.log_scale);
}

SingularBenchmark singular_benchmark(const CoefficientModel& coeffs, double r,
                                     const SolveOptions& opts) {
  if (!(coeffs.mu(0.0) > 0.0)) {
    throw SolverError(ErrorCode::kNonPositiveDriftAtZero,
                      "singular benchmark needs mu(0) > 0");
  }
  const SolveDomain domain = solve_domain(coeffs, r, opts);
  auto psi = std::make_shared<const FundamentalSolution>(
      solve_psi(ShiftedDrift(coeffs), r, domain.psi_x_max, opts.ode));
  const double b_star = inflection_point(*psi, domain.c_bound);
  return SingularBenchmark(psi, b_star);
}

// ---------------------------------------------------------------------------

namespace {

std::vector<double> default_samples(const CoefficientModel& coeffs, double r,
                                    const SweepOptions& opts) {
  if (!opts.sample_x.empty()) return opts.sample_x;
  const double b_star = singular_benchmark(coeffs, r, opts.solve).b_star();
  std::vector<double> xs;
  for (int k = 1; k <= 10; ++k) xs.push_back(2.0 * b_star * k / 10.0);
  return xs;
}

SweepTable sweep_over_n(const CoefficientModel& coeffs, double r,
                        const std::vector<int>& n_range, const SweepOptions& opts,
                        bool fixed_total, double rate) {
  if (n_range.empty()) {
    throw SolverError(ErrorCode::kInvalidArgument, "empty n range");
  }
  SweepTable table;
  table.sample_x = default_samples(coeffs, r, opts);
  table.rows = parallel_map(n_range.size(), opts.threads, [&](std::size_t i) {
    const int n = n_range[i];
    const double k = fixed_total ? rate / n : rate;
    const SymmetricEquilibrium eq =
        solve_symmetric(coeffs, GameParams::symmetric(n, r, k), opts.solve);
    SweepRow row{static_cast<double>(n), eq.b_hat(), {}};
    for (double x : table.sample_x) {
      const double v = value_at(eq, std::min(x, eq.x_max()));
      row.samples.push_back(fixed_total ? n * v : v);
    }
    return row;
  });
  for (const SweepRow& row : table.rows) {
    if (row.b_hat == 0.0) {
      table.n_bar = static_cast<int>(row.param);
      break;
    }
  }
  return table;
}

}  // namespace

SweepTable sweep_n(const CoefficientModel& coeffs, double r, double rate,
                   const std::vector<int>& n_range, const SweepOptions& opts) {
  return sweep_over_n(coeffs, r, n_range, opts, false, rate);
}

SweepTable sweep_n_fixed_total(const CoefficientModel& coeffs, double r,
                               double total_rate, const std::vector<int>& n_range,
                               const SweepOptions& opts) {
  return sweep_over_n(coeffs, r, n_range, opts, true, total_rate);
}

SweepTable sweep_K(const CoefficientModel& coeffs, double r, int n,
                   const std::vector<double>& k_range, const SweepOptions& opts) {
  if (k_range.empty()) {
    throw SolverError(ErrorCode::kInvalidArgument, "empty K range");
  }
  SweepTable table;
  struct Point {
    double b_hat;
    double single;
  };
  const std::vector<Point> points =
      parallel_map(k_range.size(), opts.threads, [&](std::size_t i) {
        const double k = k_range[i];
        if (!(k > 0.0)) return Point{0.0, 0.0};
        const double b =
            solve_symmetric(coeffs, GameParams::symmetric(n, r, k), opts.solve).b_hat();
        const double single =
            n == 1 ? b
                   : solve_symmetric(coeffs, GameParams::symmetric(1, r, k), opts.solve)
                         .b_hat();
        return Point{b, single};
      });
  bool monotone = true;
  for (std::size_t i = 0; i < points.size(); ++i) {
    table.rows.push_back({k_range[i], points[i].b_hat, {}});
    table.single_agent_b_hat.push_back(points[i].single);
    if (i > 0 && k_range[i] > k_range[i - 1] &&
        points[i].single < points[i - 1].single - 1e-9) {
      monotone = false;
    }
  }
  table.single_agent_monotone = monotone;
  return table;
}

}  // namespace resgame
