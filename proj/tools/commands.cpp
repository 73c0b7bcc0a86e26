#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "resgame/asymmetric.hpp"
#include "resgame/closed_form.hpp"
#include "resgame/error.hpp"
#include "resgame/io.hpp"
#include "resgame/model.hpp"
#include "resgame/simulate.hpp"
#include "resgame/symmetric.hpp"
#include "resgame/fixtures.hpp"

namespace resgame::cli {

using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// Config access. Every object is checked against its allowed keys.

void allow_keys(const json& j, std::initializer_list<const char*> keys,
                const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& item : j.items()) {
    const bool known = std::any_of(keys.begin(), keys.end(),
                                   [&](const char* k) { return item.key() == k; });
    if (!known) throw ConfigError("unknown key '" + item.key() + "' in " + where);
  }
}

const json& section(const json& cfg, const char* name) {
  static const json kEmpty = json::object();
  const auto it = cfg.find(name);
  return it == cfg.end() ? kEmpty : *it;
}

double get_number(const json& j, const char* key, const std::string& where) {
  const auto it = j.find(key);
  if (it == j.end()) throw ConfigError(where + "." + key + " is required");
  if (!it->is_number()) throw ConfigError(where + "." + key + " must be a number");
  return it->get<double>();
}

double get_number(const json& j, const char* key, const std::string& where, double fallback) {
  return j.contains(key) ? get_number(j, key, where) : fallback;
}

std::uint64_t get_count(const json& j, const char* key, const std::string& where,
                        std::uint64_t fallback) {
  const auto it = j.find(key);
  if (it == j.end()) return fallback;
  if (it->is_number_unsigned()) return it->get<std::uint64_t>();
  if (!it->is_number_integer() || it->get<std::int64_t>() < 0) {
    throw ConfigError(where + "." + key + " must be a nonnegative integer");
  }
  return static_cast<std::uint64_t>(it->get<std::int64_t>());
}

bool get_bool(const json& j, const char* key, const std::string& where, bool fallback) {
  const auto it = j.find(key);
  if (it == j.end()) return fallback;
  if (!it->is_boolean()) throw ConfigError(where + "." + key + " must be a boolean");
  return it->get<bool>();
}

std::vector<double> get_numbers(const json& j, const char* key, const std::string& where) {
  std::vector<double> out;
  const auto it = j.find(key);
  if (it == j.end()) return out;
  if (!it->is_array()) throw ConfigError(where + "." + key + " must be an array");
  for (const json& v : *it) {
    if (!v.is_number()) throw ConfigError(where + "." + key + " must hold numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

const char* const kTopLevel[] = {"model", "game",  "grid", "solve",  "asym", "sweep",
                                 "sim",   "verify", "output", "threads"};

void check_top_level(const json& cfg) {
  if (!cfg.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& item : cfg.items()) {
    const bool known = std::any_of(std::begin(kTopLevel), std::end(kTopLevel),
                                   [&](const char* k) { return item.key() == k; });
    if (!known) throw ConfigError("unknown top-level key '" + item.key() + "'");
  }
}

struct Game {
  double r = 0.0;
  std::optional<int> n;
  std::optional<double> K;
  std::vector<double> rates;

  bool asymmetric() const { return !rates.empty(); }

  GameParams params() const {
    if (asymmetric()) return GameParams::asymmetric(r, rates);
    if (!n || !K) throw ConfigError("game needs n and K (or rates)");
    return GameParams::symmetric(*n, r, *K);
  }
};

Game parse_game(const json& cfg) {
  const json& g = section(cfg, "game");
  allow_keys(g, {"n", "r", "K", "rates"}, "game");
  Game game;
  game.r = get_number(g, "r", "game");
  if (g.contains("n")) {
    if (!g["n"].is_number_integer()) throw ConfigError("game.n must be an integer");
    game.n = g["n"].get<int>();
  }
  if (g.contains("K")) game.K = get_number(g, "K", "game");
  game.rates = get_numbers(g, "rates", "game");
  if (game.asymmetric() && (game.K || game.n)) {
    throw ConfigError("game takes either n and K or rates, not both");
  }
  if (g.contains("rates") && game.rates.empty()) throw ConfigError("game.rates is empty");
  return game;
}

CoefficientModel parse_model(const json& cfg, double r) {
  const json& m = section(cfg, "model");
  if (!m.contains("kind") || !m["kind"].is_string()) {
    throw ConfigError("model.kind must be \"constant\" or \"affine\"");
  }
  const std::string kind = m["kind"].get<std::string>();
  if (kind == "constant") {
    allow_keys(m, {"kind", "mu", "sigma2"}, "model");
    return CoefficientModel::constant(get_number(m, "mu", "model"),
                                      get_number(m, "sigma2", "model"));
  }
  if (kind == "affine") {
    allow_keys(m, {"kind", "mu0", "mu1", "sigma2"}, "model");
    return CoefficientModel::affine(get_number(m, "mu0", "model"),
                                    get_number(m, "mu1", "model"),
                                    get_number(m, "sigma2", "model"), r);
  }
  throw ConfigError("model.kind must be \"constant\" or \"affine\"");
}

unsigned threads_of(const json& cfg, const Options& opts) {
  if (opts.threads) return *opts.threads;
  return static_cast<unsigned>(get_count(cfg, "threads", "config", 0));
}

SolveOptions parse_solve(const json& cfg, const Options& opts) {
  const json& s = section(cfg, "solve");
  allow_keys(s, {"x_max", "ode_tol", "root_tol", "truncation_tol"}, "solve");
  SolveOptions o;
  o.x_max = get_number(s, "x_max", "solve", o.x_max);
  o.ode.tol = get_number(s, "ode_tol", "solve", o.ode.tol);
  o.ode.truncation_tol = get_number(s, "truncation_tol", "solve", o.ode.truncation_tol);
  o.root_tol = get_number(s, "root_tol", "solve", o.root_tol);
  if (opts.tol) o.root_tol = *opts.tol;
  return o;
}

AsymmetricOptions parse_asym(const json& cfg, const Options& opts, ThresholdProfile* init) {
  const json& a = section(cfg, "asym");
  allow_keys(a, {"damping", "tol", "max_iter", "restarts", "explore", "init"}, "asym");
  AsymmetricOptions o;
  o.solve = parse_solve(cfg, Options{});
  o.damping = get_number(a, "damping", "asym", o.damping);
  o.tol = get_number(a, "tol", "asym", o.tol);
  if (opts.tol) o.tol = *opts.tol;
  o.max_iter = static_cast<int>(get_count(a, "max_iter", "asym", 500));
  o.restarts = static_cast<int>(get_count(a, "restarts", "asym", 8));
  o.explore = get_bool(a, "explore", "asym", false);
  if (init) *init = get_numbers(a, "init", "asym");
  return o;
}

SimConfig parse_sim(const json& cfg, const Options& opts) {
  const json& s = section(cfg, "sim");
  allow_keys(s, {"x0", "dt", "horizon", "paths", "seed", "antithetic", "escape_eps",
                 "bias_constant", "agent", "thresholds"},
             "sim");
  SimConfig c;
  c.x0 = get_number(s, "x0", "sim", c.x0);
  c.dt = get_number(s, "dt", "sim", c.dt);
  c.horizon = get_number(s, "horizon", "sim", c.horizon);
  c.paths = get_count(s, "paths", "sim", c.paths);
  c.seed = get_count(s, "seed", "sim", c.seed);
  c.antithetic = get_bool(s, "antithetic", "sim", c.antithetic);
  c.escape_eps = get_number(s, "escape_eps", "sim", c.escape_eps);
  c.bias_constant = get_number(s, "bias_constant", "sim", c.bias_constant);
  if (opts.seed) c.seed = *opts.seed;
  c.threads = threads_of(cfg, opts);
  validate(c);
  return c;
}

// Runs the assumption checks; throws the matching SolverError on failure.
void require_assumptions(const CoefficientModel& model, const Game& game) {
  const GameParams probe = GameParams::symmetric(1, game.r, 1.0);
  validate_assumptions(model, probe).require_passed();
}

// ---------------------------------------------------------------------------
// Output helpers.

class Sink {
 public:
  Sink(const Options& opts, std::ostream& fallback) : out_(&fallback) {
    if (!opts.out_path.empty()) {
      file_.open(opts.out_path, std::ios::binary);
      if (!file_) throw ConfigError("cannot open --out " + opts.out_path);
      out_ = &file_;
    }
  }
  std::ostream& stream() { return *out_; }

 private:
  std::ofstream file_;
  std::ostream* out_;
};

void emit_json(const Options& opts, std::ostream& out, const json& j) {
  Sink sink(opts, out);
  sink.stream() << j.dump(2) << '\n';
}

void emit_csv(const Options& opts, std::ostream& out, const CsvTable& t) {
  Sink sink(opts, out);
  write_csv(sink.stream(), t);
}

void write_file_csv(const std::string& path, const CsvTable& t) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open " + path);
  write_csv(f, t);
}

std::vector<double> uniform_points(double lo, double hi, std::size_t count) {
  std::vector<double> xs;
  for (std::size_t k = 0; k < count; ++k) {
    xs.push_back(count == 1 ? lo : lo + (hi - lo) * static_cast<double>(k) /
                                            static_cast<double>(count - 1));
  }
  return xs;
}

struct ValueGrid {
  std::string path;
  std::size_t points = 201;
  double x_max = 0.0;
};

ValueGrid parse_output(const json& cfg, const Options& opts) {
  const json& o = section(cfg, "output");
  allow_keys(o, {"value_csv", "points", "x_max"}, "output");
  ValueGrid g;
  if (o.contains("value_csv")) {
    if (!o["value_csv"].is_string()) throw ConfigError("output.value_csv must be a string");
    g.path = o["value_csv"].get<std::string>();
  }
  if (!opts.value_csv.empty()) g.path = opts.value_csv;
  g.points = get_count(o, "points", "output", g.points);
  g.x_max = get_number(o, "x_max", "output", 0.0);
  if (g.points < 2) throw ConfigError("output.points must be >= 2");
  return g;
}

// Stored agent index of a caller label.
std::size_t stored_index(const GameParams& params, std::size_t label) {
  const auto perm = params.permutation();
  for (std::size_t k = 0; k < perm.size(); ++k) {
    if (perm[k] == label) return k;
  }
  throw ConfigError("agent " + std::to_string(label) + " out of range");
}

// ---------------------------------------------------------------------------
// Commands.

int cmd_validate(const json& cfg, const Options& opts, std::ostream& out) {
  const Game game = parse_game(cfg);
  const CoefficientModel model = parse_model(cfg, game.r);
  const json& g = section(cfg, "grid");
  allow_keys(g, {"x_max", "points"}, "grid");
  GridSpec grid;
  grid.x_max = get_number(g, "x_max", "grid", grid.x_max);
  grid.points = get_count(g, "points", "grid", grid.points);
  if (!(grid.x_max > 0.0) || grid.points < 2) {
    throw ConfigError("grid needs x_max > 0 and points >= 2");
  }
  const AssumptionReport report =
      validate_assumptions(model, GameParams::symmetric(1, game.r, 1.0), grid);
  json j;
  j["passed"] = report.passed;
  j["c_bound"] = report.c_bound;
  j["linear_growth_constant"] = report.linear_growth_constant;
  json v = json::array();
  for (const AssumptionViolation& a : report.violations) {
    v.push_back({{"assumption", std::string(assumption_id(a.assumption))},
                 {"x", a.x},
                 {"observed", a.observed}});
  }
  j["violations"] = v;
  emit_json(opts, out, j);
  return report.passed ? kExitOk : kExitValidation;
}

int cmd_solve_sym(const json& cfg, const Options& opts, std::ostream& out) {
  const Game game = parse_game(cfg);
  if (game.asymmetric()) throw ConfigError("solve-sym needs game.n and game.K");
  const CoefficientModel model = parse_model(cfg, game.r);
  require_assumptions(model, game);
  const SolveOptions solve = parse_solve(cfg, opts);
  const ValueGrid vg = parse_output(cfg, opts);
  const SymmetricEquilibrium eq = solve_symmetric(model, game.params(), solve);
  json j;
  j["b_hat"] = eq.b_hat();
  j["D1"] = eq.D1();
  j["D4"] = eq.D4();
  j["b_star"] = eq.b_star();
  j["c_bound"] = eq.c_bound();
  j["x_max"] = eq.x_max();
  try {
    j["C_star"] = singular_benchmark(model, game.r, solve).C_star();
  } catch (const SolverError& e) {
    if (e.code() != ErrorCode::kNonPositiveDriftAtZero) throw;
    j["C_star"] = nullptr;
  }
  emit_json(opts, out, j);
  if (!vg.path.empty()) {
    const double top = vg.x_max > 0.0 ? std::min(vg.x_max, eq.x_max())
                                      : std::min(eq.x_max(), 2.0 * std::max(eq.b_star(), 1.0));
    CsvTable t{{"x", "V", "V_prime"}, {}};
    for (double x : uniform_points(0.0, top, vg.points)) {
      const ThresholdValue& v = eq.value_function();
      t.rows.push_back({x, v.value(x), v.derivative(x)});
    }
    write_file_csv(vg.path, t);
  }
  return kExitOk;
}

AsymmetricEquilibrium solve_asym_from(const json& cfg, const Options& opts,
                                      const CoefficientModel& model, const Game& game) {
  ThresholdProfile init;
  const AsymmetricOptions a = parse_asym(cfg, opts, &init);
  const GameParams params = game.params();
  if (!init.empty()) {
    if (init.size() != static_cast<std::size_t>(params.n())) {
      throw ConfigError("asym.init must have one entry per agent");
    }
    init = params.to_sorted_order(init);
  }
  return solve_asymmetric(model, params, init, a);
}

int cmd_solve_asym(const json& cfg, const Options& opts, std::ostream& out) {
  const Game game = parse_game(cfg);
  const CoefficientModel model = parse_model(cfg, game.r);
  require_assumptions(model, game);
  const ValueGrid vg = parse_output(cfg, opts);
  const AsymmetricEquilibrium eq = solve_asym_from(cfg, opts, model, game);
  const GameParams& params = eq.params();
  std::vector<double> e1, e4;
  for (std::size_t i = 0; i < eq.n(); ++i) {
    e1.push_back(eq.E1(i));
    e4.push_back(eq.E4(i));
  }
  json j;
  j["thresholds"] = eq.thresholds_original_order();
  j["E1"] = params.to_original_order(e1);
  j["E4"] = params.to_original_order(e4);
  j["rates"] = params.to_original_order(std::vector<double>(params.rates().begin(),
                                                            params.rates().end()));
  j["residual"] = eq.residual();
  j["iterations"] = eq.iterations();
  json alts = json::array();
  for (const ThresholdProfile& p : eq.alternatives) alts.push_back(params.to_original_order(p));
  j["alternatives"] = alts;
  emit_json(opts, out, j);
  if (!vg.path.empty()) {
    double top = 1.0;
    for (std::size_t i = 0; i < eq.n(); ++i) {
      top = std::max({top, eq.b_star_star(i), eq.profile()[i]});
    }
    top = vg.x_max > 0.0 ? std::min(vg.x_max, eq.x_max()) : std::min(eq.x_max(), 2.0 * top);
    CsvTable t;
    t.header.push_back("x");
    for (std::size_t k = 0; k < eq.n(); ++k) t.header.push_back("V_" + std::to_string(k));
    for (double x : uniform_points(0.0, top, vg.points)) {
      std::vector<double> stored;
      for (std::size_t i = 0; i < eq.n(); ++i) stored.push_back(value_at_i(eq, i, x));
      std::vector<double> row{x};
      for (double v : params.to_original_order(stored)) row.push_back(v);
      t.rows.push_back(std::move(row));
    }
    write_file_csv(vg.path, t);
  }
  return kExitOk;
}

std::vector<double> sweep_values(const json& s) {
  std::vector<double> values = get_numbers(s, "values", "sweep");
  if (s.contains("range")) {
    if (!values.empty()) throw ConfigError("sweep takes values or range, not both");
    const json& r = s["range"];
    allow_keys(r, {"from", "to", "step"}, "sweep.range");
    const double from = get_number(r, "from", "sweep.range");
    const double to = get_number(r, "to", "sweep.range");
    const double step = get_number(r, "step", "sweep.range");
    if (!(step > 0.0) || !(to >= from)) throw ConfigError("sweep.range needs step > 0, to >= from");
    const auto count = static_cast<long>(std::floor((to - from) / step + 1e-9));
    for (long k = 0; k <= count; ++k) values.push_back(from + static_cast<double>(k) * step);
  }
  if (values.empty()) throw ConfigError("sweep needs values or range");
  return values;
}

std::vector<int> as_counts(const std::vector<double>& values) {
  std::vector<int> out;
  for (double v : values) {
    if (!(v >= 1.0) || v != std::floor(v)) throw ConfigError("n values must be integers >= 1");
    out.push_back(static_cast<int>(v));
  }
  return out;
}

int cmd_sweep(const json& cfg, const Options& opts, std::ostream& out) {
  const Game game = parse_game(cfg);
  const CoefficientModel model = parse_model(cfg, game.r);
  require_assumptions(model, game);
  const json& s = section(cfg, "sweep");
  allow_keys(s, {"kind", "values", "range", "K_bar", "K1", "sample_x"}, "sweep");
  std::string kind = opts.sweep_kind;
  if (kind.empty()) {
    if (!s.contains("kind") || !s["kind"].is_string()) throw ConfigError("sweep.kind is required");
    kind = s["kind"].get<std::string>();
  }
  const std::vector<double> values = sweep_values(s);
  SweepOptions so;
  so.solve = parse_solve(cfg, opts);
  so.threads = threads_of(cfg, opts);
  so.sample_x = get_numbers(s, "sample_x", "sweep");

  auto sample_header = [](const std::string& prefix, const std::vector<double>& xs) {
    std::vector<std::string> h;
    for (double x : xs) h.push_back(prefix + "@" + format_double(x));
    return h;
  };

  if (kind == "n" || kind == "n-fixed-total") {
    const bool total = kind == "n-fixed-total";
    double rate = 0.0;
    if (total) {
      rate = get_number(s, "K_bar", "sweep");
    } else {
      if (!game.K) throw ConfigError("sweep n needs game.K");
      rate = *game.K;
    }
    const SweepTable t = total ? sweep_n_fixed_total(model, game.r, rate, as_counts(values), so)
                               : sweep_n(model, game.r, rate, as_counts(values), so);
    CsvTable csv{{"n", "b_hat"}, {}};
    for (const std::string& h : sample_header(total ? "nV" : "V", t.sample_x)) {
      csv.header.push_back(h);
    }
    for (const SweepRow& row : t.rows) {
      std::vector<double> r{row.param, row.b_hat};
      r.insert(r.end(), row.samples.begin(), row.samples.end());
      csv.rows.push_back(std::move(r));
    }
    emit_csv(opts, out, csv);
    return kExitOk;
  }
  if (kind == "K") {
    if (!game.n) throw ConfigError("sweep K needs game.n");
    const SweepTable t = sweep_K(model, game.r, *game.n, values, so);
    CsvTable csv{{"K", "b_hat", "b_hat_single"}, {}};
    for (std::size_t k = 0; k < t.rows.size(); ++k) {
      csv.rows.push_back({t.rows[k].param, t.rows[k].b_hat, t.single_agent_b_hat[k]});
    }
    emit_csv(opts, out, csv);
    return kExitOk;
  }
  if (kind == "K2") {
    const double k1 = get_number(s, "K1", "sweep");
    const AsymmetricOptions a = parse_asym(cfg, opts, nullptr);
    const std::vector<K2SweepRow> rows = sweep_K2(model, game.r, k1, values, a);
    CsvTable csv{{"K2", "b1_hat", "b2_hat", "b2_single_agent", "iterations", "residual"}, {}};
    for (const K2SweepRow& r : rows) {
      csv.rows.push_back({r.K2, r.b1, r.b2, r.b2_single, static_cast<double>(r.iterations),
                          r.residual});
    }
    emit_csv(opts, out, csv);
    return kExitOk;
  }
  throw ConfigError("sweep kind must be n, n-fixed-total, K or K2");
}

struct Solved {
  GameParams params;
  std::vector<double> thresholds;  // stored order
  std::vector<std::function<double(double)>> value;  // stored order
  std::vector<double> b_star;      // stored order, for default deviation grids
};

Solved solve_any(const json& cfg, const Options& opts, const CoefficientModel& model,
                 const Game& game) {
  if (game.asymmetric()) {
    auto eq = std::make_shared<AsymmetricEquilibrium>(solve_asym_from(cfg, opts, model, game));
    Solved s{eq->params(), eq->profile(), {}, {}};
    for (std::size_t i = 0; i < eq->n(); ++i) {
      s.value.push_back([eq, i](double x) { return value_at_i(*eq, i, x); });
      s.b_star.push_back(eq->b_star_star(i));
    }
    return s;
  }
  auto eq = std::make_shared<SymmetricEquilibrium>(
      solve_symmetric(model, game.params(), parse_solve(cfg, opts)));
  Solved s{eq->params(), std::vector<double>(eq->params().n(), eq->b_hat()), {}, {}};
  for (int i = 0; i < eq->params().n(); ++i) {
    s.value.push_back([eq](double x) { return value_at(*eq, x); });
    s.b_star.push_back(eq->b_star());
  }
  return s;
}

json estimate_json(const RewardEstimate& e) {
  json j;
  j["mean"] = e.mean;
  j["std_error"] = e.std_error;
  j["paths"] = e.paths;
  j["absorbed_fraction"] = e.absorbed_fraction;
  j["escaped_fraction"] = e.escaped_fraction;
  j["tail_bound"] = e.tail_bound;
  j["escape_bias"] = e.escape_bias;
  j["warnings"] = e.warnings;
  return j;
}

std::size_t agent_label(const json& j, const std::string& where) {
  return static_cast<std::size_t>(get_count(j, "agent", where, 0));
}

int cmd_simulate(const json& cfg, const Options& opts, std::ostream& out) {
  const Game game = parse_game(cfg);
  const CoefficientModel model = parse_model(cfg, game.r);
  require_assumptions(model, game);
  const SimConfig sim = parse_sim(cfg, opts);
  const json& s = section(cfg, "sim");
  const std::size_t label = agent_label(s, "sim");
  std::vector<double> given = get_numbers(s, "thresholds", "sim");
  GameParams params = game.params();
  std::vector<double> stored;
  std::optional<double> analytic;
  const std::size_t agent = stored_index(params, label);
  if (!given.empty()) {
    if (given.size() != static_cast<std::size_t>(params.n())) {
      throw ConfigError("sim.thresholds must have one entry per agent");
    }
    stored = params.to_sorted_order(given);
  } else {
    const Solved solved = solve_any(cfg, opts, model, game);
    stored = solved.thresholds;
    analytic = solved.value[agent](sim.x0);
  }
  const RewardEstimate e = estimate_reward(model, params, stored, agent, sim);
  json j = estimate_json(e);
  j["agent"] = label;
  j["thresholds"] = params.to_original_order(stored);
  j["x0"] = sim.x0;
  if (analytic) j["analytic_value"] = *analytic;
  emit_json(opts, out, j);
  return kExitOk;
}

int cmd_verify_nash(const json& cfg, const Options& opts, std::ostream& out) {
  const Game game = parse_game(cfg);
  const CoefficientModel model = parse_model(cfg, game.r);
  require_assumptions(model, game);
  const SimConfig sim = parse_sim(cfg, opts);
  const json& v = section(cfg, "verify");
  allow_keys(v, {"agent", "deviations", "count"}, "verify");
  const std::size_t label = agent_label(v, "verify");
  const Solved solved = solve_any(cfg, opts, model, game);
  const std::size_t agent = stored_index(solved.params, label);
  std::vector<double> grid = get_numbers(v, "deviations", "verify");
  if (grid.empty()) {
    const std::size_t count = get_count(v, "count", "verify", 11);
    const double b = solved.thresholds[agent];
    grid = uniform_points(0.0, b > 0.0 ? 2.0 * b : solved.b_star[agent], count);
  }
  const double analytic = solved.value[agent](sim.x0);
  const DeviationVerdict verdict =
      verify_nash(model, solved.params, solved.thresholds, agent, grid, sim, analytic);
  json j;
  j["agent"] = label;
  j["x0"] = sim.x0;
  j["thresholds"] = solved.params.to_original_order(solved.thresholds);
  j["bias_allowance"] = verdict.bias_allowance;
  j["max_excess"] = verdict.max_excess;
  j["passes"] = verdict.passes;
  j["equilibrium"] = estimate_json(verdict.equilibrium);
  j["anchor"] = {{"analytic_value", analytic}, {"passes", verdict.anchor_passes}};
  json devs = json::array();
  for (std::size_t k = 0; k < grid.size(); ++k) {
    devs.push_back({{"b", grid[k]},
                    {"excess", verdict.excess[k]},
                    {"std_error", verdict.std_error[k]},
                    {"passes", verdict.excess[k] <= 3.0 * verdict.std_error[k] +
                                                        verdict.bias_allowance}});
  }
  j["deviations"] = devs;
  emit_json(opts, out, j);
  if (!opts.deviations_csv.empty()) {
    std::ofstream f(opts.deviations_csv, std::ios::binary);
    if (!f) throw ConfigError("cannot open " + opts.deviations_csv);
    write_deviation_csv(verdict, f);
  }
  return verdict.passes && verdict.anchor_passes ? kExitOk : kExitVerification;
}

// ---------------------------------------------------------------------------
// Figure reproduction.

constexpr double kRefMu = 4.0;
constexpr double kRefSigma2 = 2.0;
constexpr double kRefR = 0.05;

struct Figure {
  std::string_view data;
  // Columns compared against the embedded data.
  std::vector<std::string> compared;
  double tolerance;
};

Figure figure_spec(const std::string& name) {
  if (name == "fig2-left") return {fixtures::fig2_left, {"b_hat"}, 1e-6};
  if (name == "fig2-right") return {fixtures::fig2_right, {"b_hat"}, 1e-6};
  if (name == "fig3") return {fixtures::fig3, {"b_hat"}, 1e-6};
  if (name == "asym-thresholds") return {fixtures::asym_thresholds, {"b1_hat", "b2_hat"}, 1e-4};
  if (name == "asym-right") return {fixtures::asym_right, {"b2_hat"}, 1e-4};
  throw ConfigError("unknown figure '" + name +
                    "' (fig2-left, fig2-right, fig3, asym-thresholds, asym-right)");
}

double closed_form_b(int n, double k) {
  if (!(k > 0.0)) return 0.0;
  return closed_form::symmetric(kRefMu, kRefSigma2, kRefR, n, k).b_hat;
}

// (b1, b2) with b1 for the fixed-rate agent K1 = 0.1.
std::pair<double, double> closed_form_pair(double k2) {
  constexpr double k1 = 0.1;
  if (!(k2 > 0.0)) return {closed_form_b(1, k1), 0.0};
  if (k2 >= k1) {
    const auto e = closed_form::two_player_equilibrium(kRefMu, kRefSigma2, kRefR, k1, k2);
    return {e.b1, e.b2};
  }
  const auto e = closed_form::two_player_equilibrium(kRefMu, kRefSigma2, kRefR, k2, k1);
  return {e.b2, e.b1};
}

CsvTable reproduce_table(const std::string& name, const CsvTable& ref, bool ode,
                         unsigned threads) {
  const CoefficientModel model = CoefficientModel::constant(kRefMu, kRefSigma2);
  SweepOptions so;
  so.threads = threads;
  so.sample_x = {1.0};
  CsvTable t{ref.header, {}};
  if (name == "fig2-left") {
    const std::size_t cn = ref.column("n");
    std::vector<int> ns;
    for (const auto& row : ref.rows) ns.push_back(static_cast<int>(row[cn]));
    if (ode) {
      const SweepTable s = sweep_n(model, kRefR, 0.1, ns, so);
      for (const SweepRow& r : s.rows) t.rows.push_back({r.param, r.b_hat});
    } else {
      for (int n : ns) t.rows.push_back({static_cast<double>(n), closed_form_b(n, 0.1)});
    }
    return t;
  }
  if (name == "fig2-right") {
    const std::size_t ck = ref.column("K_bar");
    const std::size_t cn = ref.column("n");
    for (const auto& row : ref.rows) {
      const int n = static_cast<int>(row[cn]);
      const double kbar = row[ck];
      const double b =
          ode ? solve_symmetric(model, GameParams::symmetric(n, kRefR, kbar / n)).b_hat()
              : closed_form_b(n, kbar / n);
      t.rows.push_back({kbar, static_cast<double>(n), b});
    }
    return t;
  }
  if (name == "fig3") {
    const std::size_t ck = ref.column("K");
    std::vector<double> ks;
    for (const auto& row : ref.rows) ks.push_back(row[ck]);
    if (ode) {
      const SweepTable s = sweep_K(model, kRefR, 30, ks, so);
      for (const SweepRow& r : s.rows) t.rows.push_back({r.param, r.b_hat});
    } else {
      for (double k : ks) t.rows.push_back({k, closed_form_b(30, k)});
    }
    return t;
  }
  // Asymmetric panels, K1 = 0.1.
  const std::size_t ck = ref.column("K2");
  std::vector<double> ks;
  for (const auto& row : ref.rows) ks.push_back(row[ck]);
  std::vector<std::pair<double, double>> pairs;
  if (ode) {
    for (const K2SweepRow& r : sweep_K2(model, kRefR, 0.1, ks)) pairs.push_back({r.b1, r.b2});
  } else {
    for (double k : ks) pairs.push_back(closed_form_pair(k));
  }
  for (std::size_t k = 0; k < ks.size(); ++k) {
    if (name == "asym-thresholds") {
      t.rows.push_back({ks[k], pairs[k].first, pairs[k].second});
    } else {
      t.rows.push_back({ks[k], pairs[k].second});
    }
  }
  return t;
}

int cmd_reproduce(const json& cfg, const Options& opts, std::ostream& out, std::ostream& err) {
  if (opts.figure.empty()) throw ConfigError("reproduce needs --figure");
  if (opts.method != "closed-form" && opts.method != "ode") {
    throw ConfigError("--method must be closed-form or ode");
  }
  const Figure fig = figure_spec(opts.figure);
  const CsvTable ref = parse_csv(fig.data);
  const CsvTable t = reproduce_table(opts.figure, ref, opts.method == "ode", threads_of(cfg, opts));
  emit_csv(opts, out, t);
  const double tol = opts.tol.value_or(fig.tolerance);
  double worst = 0.0;
  for (const std::string& col : fig.compared) {
    const std::size_t c = ref.column(col);
    for (std::size_t k = 0; k < ref.rows.size(); ++k) {
      worst = std::max(worst, std::abs(t.rows[k][c] - ref.rows[k][c]));
    }
  }
  const bool ok = worst <= tol;
  err << opts.figure << ": " << ref.rows.size() << " rows, max |diff| = " << format_double(worst)
      << " (tolerance " << format_double(tol) << ") " << (ok ? "PASS" : "FAIL") << '\n';
  return ok ? kExitOk : kExitVerification;
}

// ---------------------------------------------------------------------------
// Presets.

json base_model() { return {{"kind", "constant"}, {"mu", kRefMu}, {"sigma2", kRefSigma2}}; }

json default_sim() {
  return {{"x0", 1.0}, {"dt", 1e-3}, {"paths", 100000}, {"seed", 1}};
}

std::optional<json> preset(const std::string& name) {
  if (name == "fig2-left-n2") {
    return json{{"model", base_model()},
                {"game", {{"n", 2}, {"r", kRefR}, {"K", 0.1}}},
                {"sim", default_sim()},
                {"verify", {{"agent", 0}, {"count", 11}}}};
  }
  if (name == "asym-0.1-0.2") {
    return json{{"model", base_model()},
                {"game", {{"r", kRefR}, {"rates", {0.1, 0.2}}}},
                {"sim", default_sim()},
                {"verify", {{"agent", 1}, {"count", 11}}}};
  }
  if (name == "n30") {
    return json{{"model", base_model()}, {"game", {{"n", 30}, {"r", kRefR}, {"K", 0.1}}}};
  }
  return std::nullopt;
}

}  // namespace

std::vector<std::string> preset_names() { return {"fig2-left-n2", "asym-0.1-0.2", "n30"}; }

json load_config(const Options& opts) {
  json cfg = json::object();
  if (!opts.preset.empty()) {
    const std::optional<json> p = preset(opts.preset);
    if (!p) throw ConfigError("unknown preset '" + opts.preset + "'");
    cfg = *p;
  }
  if (!opts.config_path.empty()) {
    std::ifstream f(opts.config_path);
    if (!f) throw ConfigError("cannot read config " + opts.config_path);
    json file;
    try {
      file = json::parse(f);
    } catch (const json::parse_error& e) {
      throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    check_top_level(file);
    cfg.merge_patch(file);
  }
  check_top_level(cfg);
  return cfg;
}

int run_command(const Options& opts, std::ostream& out, std::ostream& err) {
  try {
    const json cfg = load_config(opts);
    const std::string& c = opts.command;
    if (c == "validate") return cmd_validate(cfg, opts, out);
    if (c == "solve-sym") return cmd_solve_sym(cfg, opts, out);
    if (c == "solve-asym") return cmd_solve_asym(cfg, opts, out);
    if (c == "sweep") return cmd_sweep(cfg, opts, out);
    if (c == "simulate") return cmd_simulate(cfg, opts, out);
    if (c == "verify-nash") return cmd_verify_nash(cfg, opts, out);
    if (c == "reproduce") return cmd_reproduce(cfg, opts, out, err);
    throw ConfigError("unknown command '" + c + "'");
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const json::exception& e) {
    err << "config error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const SolverError& e) {
    err << e.what() << '\n';
    switch (e.code()) {
      case ErrorCode::kNonPositiveSigma:
      case ErrorCode::kDriftDerivativeTooLarge:
      case ErrorCode::kNonPositiveDriftAtZero:
      case ErrorCode::kNoExtinctionBound:
      case ErrorCode::kInvalidConfig:
      case ErrorCode::kInvalidArgument:
        return kExitValidation;
      default:
        return kExitSolver;
    }
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Threshold equilibria of stochastic resource-extraction games"};
  app.require_subcommand(1);
  app.fallthrough();
  Options opts;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  double tol = 0.0;
  app.add_option("--config", opts.config_path, "JSON run configuration");
  app.add_option("--preset", opts.preset, "Built-in configuration")
      ->check(CLI::IsMember(preset_names()));
  app.add_option("--out", opts.out_path, "Write the main output here instead of stdout");
  auto* o_threads = app.add_option("--threads", threads, "Worker threads (0: all cores)");
  auto* o_seed = app.add_option("--seed", seed, "Simulation seed");
  auto* o_tol = app.add_option("--tol", tol,
                               "Solver tolerance; for reproduce, the comparison tolerance");
  app.add_option("--figure", opts.figure, "Figure for reproduce");
  app.add_option("--method", opts.method, "reproduce engine: closed-form or ode")
      ->check(CLI::IsMember({"closed-form", "ode"}));
  app.add_option("--value-csv", opts.value_csv, "Value-function CSV for solve commands");
  app.add_option("--deviations-csv", opts.deviations_csv, "Per-deviation CSV for verify-nash");

  app.add_subcommand("validate", "Check the model assumptions");
  app.add_subcommand("solve-sym", "Symmetric threshold equilibrium");
  app.add_subcommand("solve-asym", "Asymmetric threshold equilibrium");
  auto* sweep = app.add_subcommand("sweep", "Comparative statics as CSV");
  sweep->add_option("kind", opts.sweep_kind, "n, n-fixed-total, K or K2")
      ->check(CLI::IsMember({"n", "n-fixed-total", "K", "K2"}));
  app.add_subcommand("simulate", "Monte-Carlo reward estimate");
  app.add_subcommand("verify-nash", "Monte-Carlo deviation scan");
  app.add_subcommand("reproduce", "Regenerate a figure and compare with the embedded data");

  std::vector<std::string> rev(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n';
    return kExitValidation;
  }
  opts.command = app.get_subcommands().front()->get_name();
  if (*o_threads) opts.threads = threads;
  if (*o_seed) opts.seed = seed;
  if (*o_tol) opts.tol = tol;
  return run_command(opts, out, err);
}

}  // namespace resgame::cli
