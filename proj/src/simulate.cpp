#include "resgame/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <span>

#include <boost/random/normal_distribution.hpp>

#include "resgame/error.hpp"
#include "resgame/io.hpp"
#include "resgame/parallel.hpp"

namespace resgame {

void validate(const SimConfig& cfg) {
  auto fail = [](const std::string& what) {
    throw SolverError(ErrorCode::kInvalidConfig, what);
  };
  if (!(cfg.x0 >= 0.0) || !std::isfinite(cfg.x0)) fail("x0 must be finite and >= 0");
  if (!(cfg.dt > 0.0)) fail("dt must be > 0");
  if (!(cfg.horizon >= 0.0)) fail("horizon must be >= 0 (0: 200/r)");
  if (cfg.paths < 2) fail("need at least 2 paths");
  if (cfg.antithetic && cfg.paths % 2 != 0) fail("antithetic runs need an even path count");
  if (!(cfg.escape_eps >= 0.0 && cfg.escape_eps < 1.0)) fail("escape_eps must be in [0, 1)");
  if (!(cfg.bias_constant >= 0.0)) fail("bias_constant must be >= 0");
}

// ---------------------------------------------------------------------------

Strategy Strategy::threshold(double b, double rate) {
  if (!(b >= 0.0) || !(rate >= 0.0) || !std::isfinite(rate)) {
    throw SolverError(ErrorCode::kInvalidArgument, "threshold strategy needs b >= 0, K >= 0");
  }
  Strategy s;
  s.b_ = b;
  s.rate_ = rate;
  s.max_rate_ = rate;
  return s;
}

Strategy Strategy::never() { return Strategy(); }

Strategy Strategy::tabulated(std::vector<double> x, std::vector<double> rate,
                             double max_rate) {
  if (x.empty() || x.size() != rate.size()) {
    throw SolverError(ErrorCode::kInvalidArgument, "tabulated strategy: bad table sizes");
  }
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (k > 0 && !(x[k] > x[k - 1])) {
      throw SolverError(ErrorCode::kInvalidArgument,
                        "tabulated strategy: nodes must increase strictly");
    }
    if (!(rate[k] >= 0.0 && rate[k] <= max_rate)) {
      throw SolverError(ErrorCode::kInvalidArgument,
                        "tabulated strategy: rates must lie in [0, max_rate]");
    }
  }
  Strategy s;
  s.max_rate_ = max_rate;
  s.x_ = std::move(x);
  s.table_ = std::move(rate);
  return s;
}

double Strategy::rate_at(double x) const {
  if (x_.empty()) return x >= b_ ? rate_ : 0.0;
  if (x <= x_.front()) return table_.front();
  if (x >= x_.back()) return table_.back();
  const auto it = std::upper_bound(x_.begin(), x_.end(), x);
  const std::size_t k = static_cast<std::size_t>(it - x_.begin());
  const double w = (x - x_[k - 1]) / (x_[k] - x_[k - 1]);
  return table_[k - 1] + w * (table_[k] - table_[k - 1]);
}

double Strategy::constant_from() const {
  if (!x_.empty()) return x_.back();
  return std::isfinite(b_) ? b_ : 0.0;
}

double Strategy::tail_rate() const {
  if (!x_.empty()) return table_.back();
  return std::isfinite(b_) ? rate_ : 0.0;
}

StrategyProfile threshold_profile(const GameParams& params,
                                  const std::vector<double>& thresholds) {
  const std::span<const double> rates = params.rates();
  if (thresholds.size() != rates.size()) {
    throw SolverError(ErrorCode::kInvalidArgument, "profile size does not match n");
  }
  StrategyProfile out;
  for (std::size_t i = 0; i < rates.size(); ++i) {
    out.push_back(Strategy::threshold(thresholds[i], rates[i]));
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Counter-based stream: the k-th draw of path p depends only on (seed, p, k).
class CounterRng {
 public:
  using result_type = std::uint64_t;
  CounterRng(std::uint64_t seed, std::uint64_t path)
      : key_(mix64(seed ^ mix64(path * kGolden + 0x632be59bd9b4e019ULL))) {}
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }
  result_type operator()() { return mix64(key_ + (++counter_) * kGolden); }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 32) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

// Mean and standard error over paths, averaging antithetic pairs first.
MeanSe mean_se(std::span<const double> per_path, bool antithetic) {
  std::vector<double> units;
  if (antithetic) {
    units.reserve(per_path.size() / 2);
    for (std::size_t k = 0; k + 1 < per_path.size(); k += 2) {
      units.push_back(0.5 * (per_path[k] + per_path[k + 1]));
    }
  } else {
    units.assign(per_path.begin(), per_path.end());
  }
  const double m = pairwise_sum(units) / static_cast<double>(units.size());
  for (double& u : units) u = (u - m) * (u - m);
  const double var = pairwise_sum(units) / static_cast<double>(units.size() - 1);
  return {m, std::sqrt(var / static_cast<double>(units.size()))};
}

struct Variant {
  StrategyProfile profile;
  double escape_level = std::numeric_limits<double>::infinity();
};

struct Outcome {
  double reward = 0.0;
  double discount_at_tau = 0.0;
  bool absorbed = false;
  bool escaped = false;
};

class Engine {
 public:
  Engine(const CoefficientModel& coeffs, double r, std::vector<StrategyProfile> profiles,
         std::size_t agent, const SimConfig& cfg, bool allow_escape)
      : coeffs_(coeffs), r_(r), agent_(agent), cfg_(cfg) {
    validate(cfg_);
    if (!(r_ > 0.0)) throw SolverError(ErrorCode::kInvalidConfig, "r must be > 0");
    horizon_ = cfg_.horizon > 0.0 ? cfg_.horizon : 200.0 / r_;
    steps_ = static_cast<std::uint64_t>(std::ceil(horizon_ / cfg_.dt - 1e-9));
    sqrt_dt_ = std::sqrt(cfg_.dt);
    step_discount_ = std::exp(-r_ * cfg_.dt);
    if (const auto mu = coeffs_.constant_mu()) {
      if (const auto s2 = coeffs_.constant_sigma2()) {
        constant_ = true;
        mu0_ = *mu;
        sigma0_ = std::sqrt(*s2);
      }
    }
    for (StrategyProfile& p : profiles) {
      if (p.empty() || (agent_ != kNoAgent && agent_ >= p.size())) {
        throw SolverError(ErrorCode::kInvalidArgument, "agent index out of range");
      }
      Variant v{std::move(p), std::numeric_limits<double>::infinity()};
      if (allow_escape && cfg_.escape_eps > 0.0) v.escape_level = escape_level(v.profile);
      variants_.push_back(std::move(v));
    }
  }

  static constexpr std::size_t kNoAgent = static_cast<std::size_t>(-1);

  double horizon() const { return horizon_; }
  std::size_t variant_count() const { return variants_.size(); }

  // outcomes[p * V + v] for every path p.
  std::vector<Outcome> run() const {
    constexpr std::uint64_t kBlock = 512;
    const std::uint64_t blocks = (cfg_.paths + kBlock - 1) / kBlock;
    const std::size_t nv = variants_.size();
    std::vector<std::vector<Outcome>> parts =
        parallel_map(blocks, cfg_.threads, [&](std::size_t b) {
          const std::uint64_t first = b * kBlock;
          const std::uint64_t last = std::min(cfg_.paths, first + kBlock);
          std::vector<Outcome> out((last - first) * nv);
          for (std::uint64_t p = first; p < last; ++p) {
            run_path(p, std::span<Outcome>(out).subspan((p - first) * nv, nv));
          }
          return out;
        });
    std::vector<Outcome> all;
    all.reserve(cfg_.paths * nv);
    for (const auto& part : parts) all.insert(all.end(), part.begin(), part.end());
    return all;
  }

  std::vector<double> trajectory(std::uint64_t path, std::size_t max_steps) const {
    const Variant& v = variants_.front();
    CounterRng rng(cfg_.seed, cfg_.antithetic ? path / 2 : path);
    const double sign = cfg_.antithetic && (path % 2 == 1) ? -1.0 : 1.0;
    boost::random::normal_distribution<double> normal;
    std::vector<double> xs{cfg_.x0};
    double x = cfg_.x0;
    for (std::uint64_t k = 0; k < steps_ && xs.size() <= max_steps && x > 0.0; ++k) {
      x = step(v, x, sign * normal(rng));
      xs.push_back(x);
    }
    return xs;
  }

 private:
  double drift(const StrategyProfile& p, double x) const {
    double d = constant_ ? mu0_ : coeffs_.mu(x);
    for (const Strategy& s : p) d -= s.rate_at(x);
    return d;
  }

  double step(const Variant& v, double x, double z) const {
    const double sigma = constant_ ? sigma0_ : coeffs_.sigma(x);
    return x + drift(v.profile, x) * cfg_.dt + sigma * sqrt_dt_ * z;
  }

  // Level above which every strategy is constant and a return below the
  // highest switching point has probability <= escape_eps, using the smallest
  // 2 drift / sigma^2 sampled on [L0, L0 + 100].
  double escape_level(const StrategyProfile& p) const {
    double l0 = 0.0;
    double tail = 0.0;
    for (const Strategy& s : p) {
      l0 = std::max(l0, s.constant_from());
      tail += s.tail_rate();
    }
    double kappa = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= 400; ++k) {
      const double x = l0 + 100.0 * k / 400.0;
      kappa = std::min(kappa, 2.0 * (coeffs_.mu(x) - tail) / coeffs_.sigma2(x));
    }
    if (!(kappa > 0.0)) return std::numeric_limits<double>::infinity();
    return l0 + std::log(1.0 / cfg_.escape_eps) / kappa;
  }

  void run_path(std::uint64_t path, std::span<Outcome> out) const {
    const std::size_t nv = variants_.size();
    std::vector<double> x(nv, cfg_.x0);
    std::vector<char> active(nv, 1);
    std::size_t live = nv;
    for (std::size_t v = 0; v < nv; ++v) {
      out[v] = Outcome{};
      if (cfg_.x0 <= 0.0) {
        out[v].absorbed = true;
        out[v].discount_at_tau = 1.0;
        active[v] = 0;
        --live;
      } else if (cfg_.x0 >= variants_[v].escape_level) {
        close_out(v, 1.0, out[v]);
        active[v] = 0;
        --live;
      }
    }
    CounterRng rng(cfg_.seed, cfg_.antithetic ? path / 2 : path);
    const double sign = cfg_.antithetic && (path % 2 == 1) ? -1.0 : 1.0;
    boost::random::normal_distribution<double> normal;
    double disc = 1.0;
    for (std::uint64_t k = 0; k < steps_ && live > 0; ++k) {
      const double z = sign * normal(rng);
      const double next_disc = disc * step_discount_;
      for (std::size_t v = 0; v < nv; ++v) {
        if (!active[v]) continue;
        const Variant& var = variants_[v];
        if (agent_ != kNoAgent) {
          out[v].reward += disc * var.profile[agent_].rate_at(x[v]) * cfg_.dt;
        }
        x[v] = step(var, x[v], z);
        if (x[v] <= 0.0) {
          out[v].absorbed = true;
          out[v].discount_at_tau = next_disc;
          active[v] = 0;
          --live;
        } else if (x[v] >= var.escape_level) {
          close_out(v, next_disc, out[v]);
          active[v] = 0;
          --live;
        }
      }
      disc = next_disc;
    }
  }

  void close_out(std::size_t v, double disc, Outcome& o) const {
    o.escaped = true;
    if (agent_ != kNoAgent) {
      o.reward += variants_[v].profile[agent_].tail_rate() * disc / r_;
    }
  }

  const CoefficientModel& coeffs_;
  double r_;
  std::size_t agent_;
  SimConfig cfg_;
  double horizon_ = 0.0;
  std::uint64_t steps_ = 0;
  double sqrt_dt_ = 0.0;
  double step_discount_ = 0.0;
  bool constant_ = false;
  double mu0_ = 0.0;
  double sigma0_ = 0.0;
  std::vector<Variant> variants_;
};

RewardEstimate summarize(const std::vector<Outcome>& outcomes, std::size_t nv,
                         std::size_t v, double cap, double r, double horizon,
                         const SimConfig& cfg) {
  const std::size_t n = outcomes.size() / nv;
  std::vector<double> rewards(n);
  std::vector<double> absorbed(n);
  std::vector<double> escaped(n);
  for (std::size_t p = 0; p < n; ++p) {
    const Outcome& o = outcomes[p * nv + v];
    rewards[p] = o.reward;
    absorbed[p] = o.absorbed ? 1.0 : 0.0;
    escaped[p] = o.escaped ? 1.0 : 0.0;
  }
  RewardEstimate e;
  const MeanSe ms = mean_se(rewards, cfg.antithetic);
  e.mean = ms.mean;
  e.std_error = ms.se;
  e.paths = n;
  e.absorbed_fraction = pairwise_sum(absorbed) / static_cast<double>(n);
  e.escaped_fraction = pairwise_sum(escaped) / static_cast<double>(n);
  e.tail_bound = cap * std::exp(-r * horizon);
  e.escape_bias = e.escaped_fraction * cfg.escape_eps * cap;
  if (std::exp(-r * horizon) > 1e-4) {
    e.warnings.push_back("discount tail e^{-r horizon} exceeds 1e-4");
  }
  return e;
}

}  // namespace

RewardEstimate estimate_reward(const CoefficientModel& coeffs, double r,
                               const StrategyProfile& profile, std::size_t agent,
                               const SimConfig& cfg) {
  const Engine engine(coeffs, r, {profile}, agent, cfg, true);
  const std::vector<Outcome> outcomes = engine.run();
  return summarize(outcomes, 1, 0, profile[agent].max_rate() / r, r, engine.horizon(), cfg);
}

RewardEstimate estimate_reward(const CoefficientModel& coeffs, const GameParams& params,
                               const std::vector<double>& thresholds, std::size_t agent,
                               const SimConfig& cfg) {
  return estimate_reward(coeffs, params.r(), threshold_profile(params, thresholds), agent,
                         cfg);
}

DeviationVerdict verify_nash(const CoefficientModel& coeffs, const GameParams& params,
                             const std::vector<double>& thresholds, std::size_t agent,
                             const std::vector<double>& deviation_grid,
                             const SimConfig& cfg, std::optional<double> analytic_value) {
  const StrategyProfile base = threshold_profile(params, thresholds);
  if (agent >= base.size()) {
    throw SolverError(ErrorCode::kInvalidArgument, "agent index out of range");
  }
  std::vector<StrategyProfile> profiles{base};
  for (double b : deviation_grid) {
    StrategyProfile p = base;
    p[agent] = Strategy::threshold(b, params.rates()[agent]);
    profiles.push_back(std::move(p));
  }
  const double r = params.r();
  const double rate = params.rates()[agent];
  const Engine engine(coeffs, r, profiles, agent, cfg, true);
  const std::vector<Outcome> outcomes = engine.run();
  const std::size_t nv = profiles.size();
  const std::size_t n = outcomes.size() / nv;

  DeviationVerdict v;
  v.agent = agent;
  v.deviations = deviation_grid;
  v.bias_allowance = cfg.bias_constant * std::sqrt(cfg.dt) * rate;
  v.equilibrium = summarize(outcomes, nv, 0, rate / r, r, engine.horizon(), cfg);
  v.passes = true;
  v.max_excess = -std::numeric_limits<double>::infinity();
  std::vector<double> diff(n);
  for (std::size_t d = 1; d < nv; ++d) {
    for (std::size_t p = 0; p < n; ++p) {
      diff[p] = outcomes[p * nv + d].reward - outcomes[p * nv].reward;
    }
    const MeanSe ms = mean_se(diff, cfg.antithetic);
    v.excess.push_back(ms.mean);
    v.std_error.push_back(ms.se);
    v.max_excess = std::max(v.max_excess, ms.mean);
    if (ms.mean > 3.0 * ms.se + v.bias_allowance) v.passes = false;
  }
  if (analytic_value) {
    v.anchor_value = analytic_value;
    v.anchor_passes = std::abs(v.equilibrium.mean - *analytic_value) <=
                      3.0 * v.equilibrium.std_error + v.bias_allowance +
                          v.equilibrium.tail_bound + v.equilibrium.escape_bias;
  }
  return v;
}

void write_deviation_csv(const DeviationVerdict& v, std::ostream& os) {
  const auto num = format_double;
  os << "b_prime,excess,std_error,allowance,passes\n";
  for (std::size_t k = 0; k < v.deviations.size(); ++k) {
    const bool ok = v.excess[k] <= 3.0 * v.std_error[k] + v.bias_allowance;
    os << num(v.deviations[k]) << ',' << num(v.excess[k]) << ',' << num(v.std_error[k])
       << ',' << num(v.bias_allowance) << ',' << (ok ? 1 : 0) << '\n';
  }
}

ExtinctionEstimate estimate_extinction_time(const CoefficientModel& coeffs, double r,
                                            const StrategyProfile& profile,
                                            const SimConfig& cfg) {
  const Engine engine(coeffs, r, {profile}, Engine::kNoAgent, cfg, true);
  const std::vector<Outcome> outcomes = engine.run();
  const std::size_t n = outcomes.size();
  std::vector<double> disc(n);
  std::vector<double> absorbed(n);
  std::vector<double> alive(n);
  for (std::size_t p = 0; p < n; ++p) {
    disc[p] = outcomes[p].absorbed ? outcomes[p].discount_at_tau : 0.0;
    absorbed[p] = outcomes[p].absorbed ? 1.0 : 0.0;
    alive[p] = outcomes[p].absorbed || outcomes[p].escaped ? 0.0 : 1.0;
  }
  ExtinctionEstimate e;
  e.paths = n;
  const MeanSe d = mean_se(disc, cfg.antithetic);
  e.mean_discounted_survival = d.mean;
  e.std_error = d.se;
  e.upper = d.mean + pairwise_sum(alive) / static_cast<double>(n) *
                         std::exp(-r * engine.horizon());
  const MeanSe a = mean_se(absorbed, cfg.antithetic);
  e.absorbed_fraction = a.mean;
  e.absorbed_std_error = a.se;
  return e;
}

std::vector<double> sample_path(const CoefficientModel& coeffs,
                                const StrategyProfile& profile, const SimConfig& cfg,
                                std::uint64_t path, std::size_t max_steps) {
  SimConfig c = cfg;
  c.escape_eps = 0.0;
  // r only sets the default horizon here.
  const Engine engine(coeffs, 1.0, {profile}, Engine::kNoAgent, c, false);
  return engine.trajectory(path, max_steps);
}

}  // namespace resgame
