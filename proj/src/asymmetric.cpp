#include "resgame/asymmetric.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <boost/random/sobol.hpp>

#include "roots.hpp"

namespace resgame {

AgentFundamentals agent_fundamentals(const CoefficientModel& coeffs,
                                     const GameParams& params, std::size_t i,
                                     std::span<const double> profile,
                                     const SolveDomain& domain,
                                     const FundamentalOptions& ode) {
  const std::span<const double> rates = params.rates();
  if (profile.size() != rates.size() || i >= rates.size()) {
    throw SolverError(ErrorCode::kInvalidArgument, "profile size does not match n");
  }
  std::vector<DriftJump> jumps;
  for (std::size_t j = 0; j < rates.size(); ++j) {
    if (j == i) continue;
    if (!(profile[j] >= 0.0)) {
      throw SolverError(ErrorCode::kInvalidArgument, "thresholds must be >= 0");
    }
    jumps.push_back({profile[j], rates[j]});
  }
  const double r = params.r();
  AgentFundamentals f;
  f.psi = std::make_shared<const FundamentalSolution>(
      solve_psi(ShiftedDrift(coeffs, 0.0, jumps), r, domain.psi_x_max, ode));
  f.phi = std::make_shared<const FundamentalSolution>(
      solve_phi(ShiftedDrift(coeffs, rates[i], jumps), r, domain.x_max, ode));
  return f;
}

BestResponse best_response(const CoefficientModel& coeffs, const GameParams& params,
                           std::size_t i, std::span<const double> profile,
                           const SolveDomain& domain, const SolveOptions& opts) {
  BestResponse out;
  out.agent = i;
  out.fundamentals = agent_fundamentals(coeffs, params, i, profile, domain, opts.ode);
  const FundamentalSolution& psi = *out.fundamentals.psi;
  const FundamentalSolution& phi = *out.fundamentals.phi;
  const double r = params.r();
  const double rate = params.rates()[i];
  const double cap = rate / r;

  out.b_star_star = inflection_point(psi, domain.c_bound);
  out.phi_slope0 = phi.at(0.0).derivative();
  if (out.b_star_star > 0.0 && out.phi_slope0 < -(1.0 + opts.condition_slack) / cap) {
    const RatioEvaluator ratios(psi, phi);
    auto excess = [&](double b) { return ratios.f(b) - cap; };
    const double lo = excess(0.0);
    const double hi = excess(out.b_star_star);
    if (!(hi >= 0.0)) {
      throw SolverError(ErrorCode::kBracketFailure,
                        "best response: f(b**) < K_i/r for agent " + std::to_string(i));
    }
    out.b_Z = detail::bracketed_root(excess, 0.0, out.b_star_star, lo, hi, opts.root_tol);
  }
  out.value = std::make_shared<const ThresholdValue>(
      out.fundamentals.psi, out.fundamentals.phi, out.b_Z, rate, r);
  return out;
}

// ---------------------------------------------------------------------------

AsymmetricEquilibrium::AsymmetricEquilibrium(GameParams params, ThresholdProfile profile,
                                             std::vector<BestResponse> responses,
                                             double residual, int iterations,
                                             double c_bound)
    : params_(std::move(params)),
      profile_(std::move(profile)),
      residual_(residual),
      iterations_(iterations),
      c_bound_(c_bound) {
  const std::span<const double> rates = params_.rates();
  for (std::size_t i = 0; i < responses.size(); ++i) {
    const AgentFundamentals& f = responses[i].fundamentals;
    values_.push_back(std::make_shared<const ThresholdValue>(f.psi, f.phi, profile_[i],
                                                             rates[i], params_.r()));
    b_star_star_.push_back(responses[i].b_star_star);
  }
}

std::vector<double> AsymmetricEquilibrium::thresholds_original_order() const {
  return params_.to_original_order(profile_);
}

double AsymmetricEquilibrium::x_max() const {
  double x = values_.front()->x_max();
  for (const auto& v : values_) x = std::min(x, v->x_max());
  return x;
}

double value_at_i(const AsymmetricEquilibrium& eq, std::size_t i, double x) {
  if (i >= eq.n()) {
    throw SolverError(ErrorCode::kInvalidArgument, "agent index out of range");
  }
  if (!(x >= 0.0) || x > eq.x_max()) {
    throw SolverError(ErrorCode::kOutOfDomain, "x outside [0, x_max]");
  }
  return eq.value_function(i).value(x);
}

namespace {

struct Responses {
  std::vector<BestResponse> items;
  double residual = 0.0;
};

Responses respond(const CoefficientModel& coeffs, const GameParams& params,
                  std::span<const double> profile, const SolveDomain& domain,
                  const SolveOptions& opts) {
  Responses out;
  for (std::size_t i = 0; i < profile.size(); ++i) {
    out.items.push_back(best_response(coeffs, params, i, profile, domain, opts));
    out.residual = std::max(out.residual, std::abs(profile[i] - out.items.back().b_Z));
  }
  return out;
}

struct Run {
  ThresholdProfile profile;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

Run iterate(const CoefficientModel& coeffs, const GameParams& params,
            ThresholdProfile b, const SolveDomain& domain, const AsymmetricOptions& opts) {
  Run run;
  for (double& x : b) x = std::clamp(x, 0.0, domain.c_bound);
  run.residual = INFINITY;
  for (int it = 1; it <= opts.max_iter; ++it) {
    const Responses resp = respond(coeffs, params, b, domain, opts.solve);
    run.iterations = it;
    if (resp.residual < run.residual || !run.converged) {
      run.profile = b;
      run.residual = resp.residual;
    }
    if (resp.residual <= opts.tol) {
      run.profile = b;
      run.residual = resp.residual;
      run.converged = true;
      // One undamped step removes the geometric lag, e.g. snaps zero thresholds.
      ThresholdProfile undamped(b.size());
      for (std::size_t i = 0; i < b.size(); ++i) undamped[i] = resp.items[i].b_Z;
      const double polished = respond(coeffs, params, undamped, domain, opts.solve).residual;
      if (polished < run.residual) {
        run.profile = std::move(undamped);
        run.residual = polished;
      }
      return run;
    }
    for (std::size_t i = 0; i < b.size(); ++i) {
      const double next = (1.0 - opts.damping) * b[i] + opts.damping * resp.items[i].b_Z;
      b[i] = std::clamp(next, 0.0, domain.c_bound);
    }
  }
  return run;
}

double max_distance(const ThresholdProfile& a, const ThresholdProfile& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

std::vector<ThresholdProfile> restart_points(std::size_t n, int count, double c) {
  std::vector<ThresholdProfile> out;
  if (count <= 0) return out;
  boost::random::sobol gen(n);
  const double scale = 1.0 / (static_cast<double>(gen.max()) + 1.0);
  for (int k = 0; k < count; ++k) {
    ThresholdProfile p(n);
    for (double& x : p) x = c * static_cast<double>(gen()) * scale;
    out.push_back(std::move(p));
  }
  return out;
}

void check_ordering(const AsymmetricEquilibrium& eq, const AsymmetricOptions& opts) {
  const std::span<const double> rates = eq.params().rates();
  const ThresholdProfile& b = eq.profile();
  const double slack = 10.0 * opts.tol;
  for (std::size_t i = 0; i + 1 < b.size(); ++i) {
    if (rates[i] <= rates[i + 1] && b[i] > b[i + 1] + slack) {
      std::ostringstream os;
      os << "thresholds not ascending in the rate: b[" << i << "] = " << b[i] << " > b["
         << i + 1 << "] = " << b[i + 1];
      throw SolverError(ErrorCode::kOrderingViolation, os.str());
    }
  }
  std::vector<double> xs = opts.sample_x;
  if (xs.empty()) {
    double top = 0.5;
    for (std::size_t i = 0; i < eq.n(); ++i) {
      top = std::max({top, eq.b_star_star(i), b[i]});
    }
    for (int k = 1; k <= 20; ++k) xs.push_back(2.0 * top * k / 20.0);
  }
  for (double x : xs) {
    x = std::min(x, eq.x_max());
    for (std::size_t i = 0; i + 1 < eq.n(); ++i) {
      const double lo = value_at_i(eq, i, x);
      const double hi = value_at_i(eq, i + 1, x);
      if (lo > hi + 1e-7 * (1.0 + std::abs(hi))) {
        std::ostringstream os;
        os << "values not ascending in the rate at x = " << x << ": V_" << i << " = " << lo
           << " > V_" << i + 1 << " = " << hi;
        throw SolverError(ErrorCode::kOrderingViolation, os.str());
      }
    }
  }
}

}  // namespace

double fixed_point_residual(const CoefficientModel& coeffs, const GameParams& params,
                            std::span<const double> profile, const SolveOptions& opts) {
  const SolveDomain domain = solve_domain(coeffs, params.r(), opts);
  return respond(coeffs, params, profile, domain, opts).residual;
}

AsymmetricEquilibrium solve_asymmetric(const CoefficientModel& coeffs,
                                       const GameParams& params,
                                       const ThresholdProfile& init,
                                       const AsymmetricOptions& opts) {
  if (!(opts.damping > 0.0 && opts.damping <= 1.0) || !(opts.tol > 0.0) ||
      opts.max_iter < 1) {
    throw SolverError(ErrorCode::kInvalidArgument,
                      "need damping in (0, 1], tol > 0 and max_iter >= 1");
  }
  const std::size_t n = static_cast<std::size_t>(params.n());
  const SolveDomain domain = solve_domain(coeffs, params.r(), opts.solve);

  ThresholdProfile start = init;
  if (start.empty()) {
    const FundamentalSolution psi =
        solve_psi(ShiftedDrift(coeffs), params.r(), domain.psi_x_max, opts.solve.ode);
    start.assign(n, 0.5 * inflection_point(psi, domain.c_bound));
  } else if (start.size() != n) {
    throw SolverError(ErrorCode::kInvalidArgument, "initial profile size does not match n");
  }

  std::vector<Run> converged;
  Run best = iterate(coeffs, params, start, domain, opts);
  int total_iterations = best.iterations;
  if (best.converged) converged.push_back(best);
  if (!best.converged || opts.explore) {
    for (const ThresholdProfile& p : restart_points(n, opts.restarts, domain.c_bound)) {
      Run run = iterate(coeffs, params, p, domain, opts);
      total_iterations += run.iterations;
      if (run.converged) converged.push_back(run);
      if (run.residual < best.residual) best = run;
      if (!converged.empty() && !opts.explore) break;
    }
  }
  if (converged.empty()) {
    std::ostringstream os;
    os << "no fixed point within tol " << opts.tol << " after " << opts.restarts
       << " restarts; best residual " << best.residual;
    throw SolverError(ErrorCode::kNoConvergence, os.str());
  }

  const Run& chosen = converged.front();
  // Fresh fundamentals for the reported residual and values.
  Responses fresh = respond(coeffs, params, chosen.profile, domain, opts.solve);
  AsymmetricEquilibrium eq(params, chosen.profile, std::move(fresh.items), fresh.residual,
                           total_iterations, domain.c_bound);
  for (std::size_t k = 1; k < converged.size(); ++k) {
    bool seen = max_distance(converged[k].profile, chosen.profile) <= 10.0 * opts.tol;
    for (const ThresholdProfile& a : eq.alternatives) {
      seen = seen || max_distance(converged[k].profile, a) <= 10.0 * opts.tol;
    }
    if (!seen) eq.alternatives.push_back(converged[k].profile);
  }
  check_ordering(eq, opts);
  return eq;
}

// ---------------------------------------------------------------------------

std::vector<K2SweepRow> sweep_K2(const CoefficientModel& coeffs, double r, double k1,
                                 const std::vector<double>& k2_range,
                                 const AsymmetricOptions& opts) {
  if (k2_range.empty()) {
    throw SolverError(ErrorCode::kInvalidArgument, "empty K2 range");
  }
  std::vector<K2SweepRow> rows;
  std::vector<double> warm;  // caller order: (b1, b2)
  for (double k2 : k2_range) {
    K2SweepRow row;
    row.K2 = k2;
    if (!(k2 > 0.0)) {
      row.b1 = solve_symmetric(coeffs, GameParams::symmetric(1, r, k1), opts.solve).b_hat();
      warm = {row.b1, 0.0};
      rows.push_back(row);
      continue;
    }
    const GameParams params = GameParams::asymmetric(r, {k1, k2});
    const ThresholdProfile init =
        warm.empty() ? ThresholdProfile{} : params.to_sorted_order(warm);
    const AsymmetricEquilibrium eq = solve_asymmetric(coeffs, params, init, opts);
    const std::vector<double> b = eq.thresholds_original_order();
    row.b1 = b[0];
    row.b2 = b[1];
    row.b2_single =
        solve_symmetric(coeffs, GameParams::symmetric(1, r, k2), opts.solve).b_hat();
    row.iterations = eq.iterations();
    row.residual = eq.residual();
    warm = b;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace resgame
