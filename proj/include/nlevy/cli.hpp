#pragma once

// Run configurations and the batch pipelines behind the command-line tool.
//
// A run writes into output_dir:
//   solve     surface.csv [surface_refined.csv] manifest.json
//   simulate  estimates.csv manifest.json
//   compare   surface.csv comparison.csv manifest.json
//   validate  reports.json manifest.json
//   scaling   reports.json manifest.json
// The CSV files depend only on the configuration and seed; the manifest
// additionally carries a timestamp.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nlevy/detail/numeric.hpp"
#include "nlevy/errors.hpp"
#include "nlevy/initial_conditions.hpp"
#include "nlevy/levy_sim.hpp"
#include "nlevy/levy_triplets.hpp"
#include "nlevy/pide_solver.hpp"
#include "nlevy/validation.hpp"

namespace nlevy {

enum class Command { Solve, Simulate, Compare, Validate, Scaling };

inline std::string to_string(Command c) {
  switch (c) {
    case Command::Solve: return "solve";
    case Command::Simulate: return "simulate";
    case Command::Compare: return "compare";
    case Command::Validate: return "validate";
    case Command::Scaling: return "scaling";
  }
  return "solve";
}

inline Command parse_command(const std::string& s, const std::string& key = "command") {
  for (auto c : {Command::Solve, Command::Simulate, Command::Compare, Command::Validate, Command::Scaling})
    if (to_string(c) == s) return c;
  throw ConfigError(key + ": unknown command '" + s + "' (expected solve, simulate, compare, validate or scaling)");
}

struct PsiConfig {
  std::string name = "indicator-ramp";
  json params = json::object();
  std::optional<std::string> csv;  ///< sampled ψ instead of a registry entry
  double bound = 0.0;              ///< declared constants for a sampled ψ
  double lip = 0.0;
};

struct GridConfig {
  double T = 1.0;
  double x = 0.0;  ///< the grid is centred here
  SolverConfig solver;
  bool refine = false;  ///< also solve at dx/2 for error estimates
};

struct McConfig {
  std::size_t n_paths = 10000;
  std::size_t m_intervals = 2;
  bool feedback = true;
  std::vector<double> x0 = {0.0};
  SimConfig sim;
  double compare_tolerance = 5e-3;  ///< scheme tolerance used by compare without grid.refine
};

struct ValidationConfig {
  std::vector<std::string> checks = {"semigroup", "regularity", "generator_conditions"};
  std::optional<double> t;  ///< default grid.T
  std::optional<double> u;  ///< default t / 2
  std::vector<double> x_points = {0.0};
  SemigroupMode semigroup_mode = SemigroupMode::UpperBound;
  GeneratorCheckConfig generator;
  RegularityConfig regularity;
  double lambda = 2.0;
  double scaling_t = 0.5;
  std::size_t generator_cases = 100;
  double generator_rel_tol = 1e-8;
};

struct RunConfig {
  Command command = Command::Solve;
  TripletFamily theta = TripletFamily(Interval{0, 0}, Interval{0, 0}, NoJumps{}, TruncationSpec{});
  PsiConfig psi;
  GridConfig grid;
  McConfig mc;
  ValidationConfig validation;
  std::string output_dir = "out";
  std::uint64_t seed = 1;
  unsigned threads = 1;
};

inline const std::vector<std::string>& known_checks() {
  static const std::vector<std::string> k = {"semigroup", "regularity", "generator_conditions", "scaling"};
  return k;
}

// ---------------------------------------------------------------------------
// JSON

namespace detail {

/// Reads one object and rejects keys nobody asked for.
class ConfigReader {
 public:
  ConfigReader(const json& j, std::string ctx) : j_(j), ctx_(std::move(ctx)) {
    if (!j.is_object()) throw ConfigError((ctx_.empty() ? "config" : ctx_) + ": expected an object");
  }

  std::string key(const std::string& k) const { return ctx_.empty() ? k : ctx_ + "." + k; }

  bool has(const std::string& k) {
    seen_.insert(k);
    return j_.contains(k) && !j_.at(k).is_null();
  }

  const json& raw(const std::string& k) {
    seen_.insert(k);
    return j_.at(k);
  }

  double number(const std::string& k, double fallback) {
    if (!has(k)) return fallback;
    const auto& v = j_.at(k);
    if (!v.is_number()) throw ConfigError(key(k) + ": expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(key(k) + ": must be finite");
    return x;
  }

  double positive(const std::string& k, double fallback) {
    const double x = number(k, fallback);
    if (!(x > 0.0)) throw ConfigError(key(k) + ": must be > 0");
    return x;
  }

  std::optional<double> optional_positive(const std::string& k) {
    if (!has(k)) return std::nullopt;
    return positive(k, 1.0);
  }

  std::uint64_t unsigned_integer(const std::string& k, std::uint64_t fallback) {
    if (!has(k)) return fallback;
    const auto& v = j_.at(k);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
      throw ConfigError(key(k) + ": expected a non-negative integer");
    return v.get<std::uint64_t>();
  }

  std::size_t count(const std::string& k, std::size_t fallback, std::size_t min = 1) {
    const auto n = unsigned_integer(k, fallback);
    if (n < min) throw ConfigError(key(k) + ": must be >= " + std::to_string(min));
    return static_cast<std::size_t>(n);
  }

  bool boolean(const std::string& k, bool fallback) {
    if (!has(k)) return fallback;
    const auto& v = j_.at(k);
    if (!v.is_boolean()) throw ConfigError(key(k) + ": expected true or false");
    return v.get<bool>();
  }

  std::string string(const std::string& k, const std::string& fallback) {
    if (!has(k)) return fallback;
    const auto& v = j_.at(k);
    if (!v.is_string()) throw ConfigError(key(k) + ": expected a string");
    return v.get<std::string>();
  }

  std::vector<double> numbers(const std::string& k, std::vector<double> fallback) {
    if (!has(k)) return fallback;
    const auto& v = j_.at(k);
    if (!v.is_array() || v.empty()) throw ConfigError(key(k) + ": expected a non-empty array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) throw ConfigError(key(k) + ": expected a non-empty array of numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }

  std::vector<std::string> strings(const std::string& k, std::vector<std::string> fallback) {
    if (!has(k)) return fallback;
    const auto& v = j_.at(k);
    if (!v.is_array()) throw ConfigError(key(k) + ": expected an array of strings");
    std::vector<std::string> out;
    for (const auto& e : v) {
      if (!e.is_string()) throw ConfigError(key(k) + ": expected an array of strings");
      out.push_back(e.get<std::string>());
    }
    return out;
  }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) throw ConfigError(key(k) + ": unknown key");
  }

 private:
  const json& j_;
  std::string ctx_;
  std::set<std::string> seen_;
};

inline json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace detail

inline void to_json(json& j, const PsiConfig& p) {
  if (p.csv)
    j = json{{"csv", *p.csv}, {"bound", p.bound}, {"lip", p.lip}};
  else
    j = json{{"name", p.name}, {"params", p.params}};
}

inline InitialCondition make_psi(const PsiConfig& p) {
  if (p.csv) return initial_condition_from_csv(*p.csv, p.bound, p.lip);
  const auto ic = make_initial_condition(p.name, p.params, "psi.params");
  if (p.params.is_object()) {
    // misspelt parameters would otherwise fall back to defaults silently
    static const std::map<std::string, std::vector<std::string>> allowed = {
        {"indicator-ramp", {"center", "width"}},
        {"tanh-like", {"amplitude", "scale"}},
        {"capped-quadratic", {"cap"}},
        {"capped-abs", {"cap"}}};
    const auto it = allowed.find(p.name);
    for (const auto& [k, v] : p.params.items())
      if (it == allowed.end() || std::find(it->second.begin(), it->second.end(), k) == it->second.end())
        throw ConfigError("psi.params." + k + ": unknown parameter for '" + p.name + "'");
  }
  return ic;
}

inline void from_json(const json& j, PsiConfig& p) {
  detail::ConfigReader r(j, "psi");
  p = PsiConfig{};
  if (r.has("csv")) {
    p.csv = r.string("csv", "");
    p.bound = r.positive("bound", 1.0);
    if (!r.has("bound")) throw ConfigError("psi.bound: required with psi.csv");
    p.lip = r.number("lip", -1.0);
    if (!(p.lip >= 0.0)) throw ConfigError("psi.lip: required with psi.csv and must be >= 0");
  } else {
    if (!r.has("name")) throw ConfigError("psi.name: missing key");
    p.name = r.string("name", "");
    if (r.has("params")) {
      p.params = r.raw("params");
      if (!p.params.is_object()) throw ConfigError("psi.params: expected an object");
    }
  }
  r.finish();
  if (!p.csv) (void)make_psi(p);
}

inline void to_json(json& j, const GridConfig& g) {
  j = json{{"T", g.T},
           {"x", g.x},
           {"dx", g.solver.dx},
           {"dt", detail::optional_json(g.solver.dt)},
           {"half_width", detail::optional_json(g.solver.half_width)},
           {"kappa", g.solver.kappa},
           {"cfl_safety", g.solver.cfl_safety},
           {"dt_cap_ratio", g.solver.dt_cap_ratio},
           {"refine", g.refine}};
}

inline void from_json(const json& j, GridConfig& g) {
  detail::ConfigReader r(j, "grid");
  g = GridConfig{};
  g.T = r.number("T", g.T);
  if (!(g.T >= 0.0)) throw ConfigError("grid.T: must be >= 0");
  g.x = r.number("x", g.x);
  g.solver.dx = r.positive("dx", g.solver.dx);
  g.solver.dt = r.optional_positive("dt");
  g.solver.half_width = r.optional_positive("half_width");
  g.solver.kappa = r.positive("kappa", g.solver.kappa);
  if (!(g.solver.kappa < 1.0)) throw ConfigError("grid.kappa: must be < 1");
  g.solver.cfl_safety = r.positive("cfl_safety", g.solver.cfl_safety);
  if (!(g.solver.cfl_safety <= 1.0)) throw ConfigError("grid.cfl_safety: must be <= 1");
  g.solver.dt_cap_ratio = r.positive("dt_cap_ratio", g.solver.dt_cap_ratio);
  g.refine = r.boolean("refine", g.refine);
  r.finish();
}

inline void to_json(json& j, const McConfig& m) {
  j = json{{"n_paths", m.n_paths},
           {"m_intervals", m.m_intervals},
           {"feedback", m.feedback},
           {"x0", m.x0},
           {"eps_sim", m.sim.eps_sim},
           {"dt_sim", detail::optional_json(m.sim.dt_sim)},
           {"small_jumps", to_string(m.sim.small_jumps)},
           {"compare_tolerance", m.compare_tolerance}};
}

inline void from_json(const json& j, McConfig& m) {
  detail::ConfigReader r(j, "mc");
  m = McConfig{};
  m.n_paths = r.count("n_paths", m.n_paths, 2);
  m.m_intervals = r.count("m_intervals", m.m_intervals);
  m.feedback = r.boolean("feedback", m.feedback);
  m.x0 = r.numbers("x0", m.x0);
  m.sim.eps_sim = r.positive("eps_sim", m.sim.eps_sim);
  m.sim.dt_sim = r.optional_positive("dt_sim");
  const auto sj = r.string("small_jumps", to_string(m.sim.small_jumps));
  if (sj == "gaussian")
    m.sim.small_jumps = SmallJumpMode::Gaussian;
  else if (sj == "dropped")
    m.sim.small_jumps = SmallJumpMode::Dropped;
  else
    throw ConfigError("mc.small_jumps: expected 'gaussian' or 'dropped'");
  m.compare_tolerance = r.number("compare_tolerance", m.compare_tolerance);
  if (!(m.compare_tolerance >= 0.0)) throw ConfigError("mc.compare_tolerance: must be >= 0");
  r.finish();
}

inline void to_json(json& j, const ValidationConfig& v) {
  j = json{{"checks", v.checks},
           {"t", detail::optional_json(v.t)},
           {"u", detail::optional_json(v.u)},
           {"x_points", v.x_points},
           {"semigroup_mode", to_string(v.semigroup_mode)},
           {"n_cases", v.generator.n_cases},
           {"generator_kappa", v.generator.kappa},
           {"equality_tolerance", v.generator.equality_tolerance},
           {"lip_tolerance", v.regularity.lip_tolerance},
           {"sup_tolerance", v.regularity.sup_tolerance},
           {"time_stability", v.regularity.time_stability},
           {"lambda", v.lambda},
           {"scaling_t", v.scaling_t},
           {"generator_cases", v.generator_cases},
           {"generator_rel_tol", v.generator_rel_tol}};
}

inline void from_json(const json& j, ValidationConfig& v) {
  detail::ConfigReader r(j, "validation");
  v = ValidationConfig{};
  v.checks = r.strings("checks", v.checks);
  for (const auto& c : v.checks)
    if (std::find(known_checks().begin(), known_checks().end(), c) == known_checks().end())
      throw ConfigError("validation.checks: unknown check '" + c +
                        "' (expected semigroup, regularity, generator_conditions or scaling)");
  v.t = r.optional_positive("t");
  v.u = r.optional_positive("u");
  v.x_points = r.numbers("x_points", v.x_points);
  const auto mode = r.string("semigroup_mode", to_string(v.semigroup_mode));
  if (mode == "equality")
    v.semigroup_mode = SemigroupMode::Equality;
  else if (mode == "upper_bound")
    v.semigroup_mode = SemigroupMode::UpperBound;
  else
    throw ConfigError("validation.semigroup_mode: expected 'equality' or 'upper_bound'");
  v.generator.n_cases = r.count("n_cases", v.generator.n_cases);
  v.generator.kappa = r.positive("generator_kappa", v.generator.kappa);
  if (!(v.generator.kappa < 1.0)) throw ConfigError("validation.generator_kappa: must be < 1");
  v.generator.equality_tolerance = r.number("equality_tolerance", v.generator.equality_tolerance);
  v.regularity.lip_tolerance = r.number("lip_tolerance", v.regularity.lip_tolerance);
  v.regularity.sup_tolerance = r.number("sup_tolerance", v.regularity.sup_tolerance);
  v.regularity.time_stability = r.number("time_stability", v.regularity.time_stability);
  v.lambda = r.positive("lambda", v.lambda);
  v.scaling_t = r.positive("scaling_t", v.scaling_t);
  v.generator_cases = r.count("generator_cases", v.generator_cases, 0);
  v.generator_rel_tol = r.positive("generator_rel_tol", v.generator_rel_tol);
  r.finish();
}

inline void to_json(json& j, const RunConfig& c) {
  j = json{{"command", to_string(c.command)},
           {"theta", c.theta},
           {"psi", c.psi},
           {"grid", c.grid},
           {"mc", c.mc},
           {"validation", c.validation},
           {"output_dir", c.output_dir},
           {"seed", c.seed},
           {"threads", c.threads}};
}

inline void from_json(const json& j, RunConfig& c) {
  detail::ConfigReader r(j, "");
  c = RunConfig{};
  if (!r.has("command")) throw ConfigError("command: missing key");
  c.command = parse_command(r.string("command", ""));
  if (!r.has("theta")) throw ConfigError("theta: missing key");
  try {
    c.theta = r.raw("theta").get<TripletFamily>();
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    if (msg.rfind("theta", 0) == 0) throw;
    throw ConfigError("theta." + msg);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("theta: ") + e.what());
  }
  if (!r.has("psi")) throw ConfigError("psi: missing key");
  c.psi = r.raw("psi").get<PsiConfig>();
  if (r.has("grid")) c.grid = r.raw("grid").get<GridConfig>();
  if (r.has("mc")) c.mc = r.raw("mc").get<McConfig>();
  if (r.has("validation")) c.validation = r.raw("validation").get<ValidationConfig>();
  c.output_dir = r.string("output_dir", c.output_dir);
  c.seed = r.unsigned_integer("seed", c.seed);
  c.threads = static_cast<unsigned>(r.count("threads", c.threads));
  r.finish();
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  return j.get<RunConfig>();
}

// ---------------------------------------------------------------------------
// CSV tables

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw Error("csv: no column '" + name + "'");
  }
};

inline CsvTable read_csv_table(std::istream& is) {
  CsvTable t;
  std::string line;
  if (!std::getline(is, line)) throw Error("csv: empty input");
  t.header = detail::split_csv_line(line);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto row = detail::split_csv_line(line);
    if (row.size() != t.header.size()) throw Error("csv: row width differs from header");
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline void write_estimates_csv(std::ostream& os, const std::vector<std::pair<double, WorstCase>>& results) {
  using detail::format_double;
  os << "x0,policy,mean,std_error,n_paths,seed,best\n";
  for (const auto& [x0, wc] : results)
    for (const auto& e : wc.all)
      os << format_double(x0) << ',' << csv_field(e.policy_id) << ',' << format_double(e.mean) << ','
         << format_double(e.std_error) << ',' << e.n_paths << ',' << e.rng_seed << ','
         << (e.policy_id == wc.best.policy_id ? 1 : 0) << '\n';
}

// ---------------------------------------------------------------------------
// Pipelines

struct RunResult {
  int exit_code = 0;  ///< 0 iff every gated check passed
  std::vector<std::string> files;
  json summary = json::object();
};

namespace detail {

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

inline std::string condition_table(const ConditionReport& rep) {
  std::ostringstream os;
  os << "K = " << format_double(rep.K) << " (vertex " << rep.K_vertex << ")\n";
  os << "eps,K_eps\n";
  for (const auto& [e, k] : rep.K_eps) os << format_double(e) << ',' << format_double(k) << '\n';
  return os.str();
}

inline ConditionReport gate_conditions(const TripletFamily& theta, double kappa) {
  const std::vector<double> eps = {1.0, 0.1, 0.01, 0.001, kappa};
  ConditionReport rep;
  try {
    rep = family_condition_report(theta, eps);
  } catch (const DivergentMoment& e) {
    // 𝒦 is infinite; the small-jump column is still informative
    rep = ConditionReport{};
    rep.K = std::numeric_limits<double>::infinity();
    rep.intcond_ok = false;
    for (double x : eps) {
      double sup = 0.0;
      for (const auto& v : theta.vertices()) sup = std::max(sup, small_jump_second_moment(v.triplet.F, x));
      rep.K_eps.emplace_back(x, sup);
    }
    std::sort(rep.K_eps.begin(), rep.K_eps.end(), [](auto& a, auto& b) { return a.first > b.first; });
    throw ConditionViolation(std::string("triplet family violates the integrability condition (") + e.what() +
                             ")\n" + condition_table(rep));
  }
  if (!rep.ok())
    throw ConditionViolation("triplet family fails the integrability / small-jump conditions\n" +
                             condition_table(rep));
  return rep;
}

inline json condition_json(const ConditionReport& rep) {
  json eps = json::array();
  for (const auto& [e, k] : rep.K_eps) eps.push_back({{"eps", e}, {"K_eps", k}});
  return {{"K", rep.K}, {"K_vertex", rep.K_vertex}, {"K_eps", eps}};
}

class Outputs {
 public:
  explicit Outputs(const std::string& dir) : dir_(dir) { std::filesystem::create_directories(dir_); }

  template <class Writer>
  void write(const std::string& name, Writer&& w) {
    const auto path = dir_ / name;
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot write '" + path.string() + "'");
    w(os);
    if (!os) throw Error("failed writing '" + path.string() + "'");
    files.push_back(path.string());
  }

  std::vector<std::string> files;

 private:
  std::filesystem::path dir_;
};

struct Surfaces {
  ValueSurface coarse;
  std::optional<ValueSurface> fine;
};

inline Surfaces solve_surfaces(const RunConfig& c, const InitialCondition& ic, double T) {
  SolverConfig sc = c.grid.solver;
  sc.threads = c.threads;
  const auto g = make_grid(c.theta, T, c.grid.x, sc);
  const auto opt = solve_options(sc);
  Surfaces s{solve(ic.fn, c.theta, g, opt), std::nullopt};
  if (c.grid.refine) s.fine = solve(ic.fn, c.theta, refine(g, c.theta, sc.kappa, sc.cfl_safety), opt);
  return s;
}

inline SimConfig sim_config(const RunConfig& c) {
  SimConfig s = c.mc.sim;
  s.threads = c.threads;
  return s;
}

inline json policies_json(const std::vector<ControlPolicy>& ps) {
  json a = json::array();
  for (const auto& p : ps) {
    json choices = json::array();
    for (const auto& ch : p.choices) {
      if (const auto* v = std::get_if<std::size_t>(&ch))
        choices.push_back(*v);
      else
        choices.push_back("feedback");
    }
    a.push_back({{"id", p.id}, {"breakpoints", p.breakpoints}, {"choices", choices}});
  }
  return a;
}

inline json manifest(const RunConfig& c, const ConditionReport& rep) {
  return {{"config", c},
          {"theta_fingerprint", fingerprint(c.theta)},
          {"conditions", condition_json(rep)},
          {"seed", c.seed},
          {"threads", c.threads},
          {"timestamp", utc_timestamp()}};
}

}  // namespace detail

inline RunResult run(const RunConfig& c, std::ostream& log = std::cout) {
  using detail::format_double;
  const auto rep = detail::gate_conditions(c.theta, c.grid.solver.kappa);
  const auto ic = make_psi(c.psi);
  detail::Outputs out(c.output_dir);
  RunResult res;
  json man = detail::manifest(c, rep);
  bool gated_ok = true;

  switch (c.command) {
    case Command::Solve: {
      const auto s = detail::solve_surfaces(c, ic, c.grid.T);
      out.write("surface.csv", [&](std::ostream& os) { write_surface_csv(os, s.coarse); });
      const double v = evaluate(s.coarse, c.grid.T, c.grid.x);
      json summary = {{"value", v}, {"t", c.grid.T}, {"x", c.grid.x}, {"nx", s.coarse.grid.nx},
                      {"dt", s.coarse.grid.dt}, {"runtime_seconds", s.coarse.runtime_seconds}};
      if (s.fine) {
        out.write("surface_refined.csv", [&](std::ostream& os) { write_surface_csv(os, *s.fine); });
        summary["value_refined"] = evaluate(*s.fine, c.grid.T, c.grid.x);
        summary["refinement_difference"] = refinement_difference(s.coarse, *s.fine, c.grid.T, c.grid.x);
      }
      log << "v(" << format_double(c.grid.T) << ", " << format_double(c.grid.x) << ") = " << format_double(v)
          << '\n';
      man["summary"] = summary;
      res.summary = summary;
      break;
    }
    case Command::Simulate: {
      if (!(c.grid.T > 0.0)) throw ConfigError("grid.T: simulate needs a positive horizon");
      std::optional<detail::Surfaces> s;
      if (c.mc.feedback) s = detail::solve_surfaces(c, ic, c.grid.T);
      const auto policies = default_policy_set(c.theta, c.mc.m_intervals, c.grid.T, s ? &s->coarse : nullptr, 0.0,
                                               c.grid.solver.kappa);
      std::vector<std::pair<double, WorstCase>> results;
      json best = json::array();
      for (double x0 : c.mc.x0) {
        results.emplace_back(
            x0, worst_case_expectation(ic.fn, c.theta, policies, x0, c.mc.n_paths, detail::sim_config(c), c.seed));
        const auto& b = results.back().second.best;
        best.push_back({{"x0", x0}, {"policy", b.policy_id}, {"mean", b.mean}, {"std_error", b.std_error}});
        log << "x0=" << format_double(x0) << " best " << b.policy_id << " mean " << format_double(b.mean) << " se "
            << format_double(b.std_error) << '\n';
      }
      out.write("estimates.csv", [&](std::ostream& os) { write_estimates_csv(os, results); });
      man["policies"] = detail::policies_json(policies);
      man["summary"] = {{"best", best}};
      res.summary = man["summary"];
      break;
    }
    case Command::Compare: {
      if (!(c.grid.T > 0.0)) throw ConfigError("grid.T: compare needs a positive horizon");
      const auto s = detail::solve_surfaces(c, ic, c.grid.T);
      out.write("surface.csv", [&](std::ostream& os) { write_surface_csv(os, s.coarse); });
      const auto policies = default_policy_set(c.theta, c.mc.m_intervals, c.grid.T,
                                               c.mc.feedback ? &s.coarse : nullptr, 0.0, c.grid.solver.kappa);
      std::ostringstream table;
      table << "x0,pide,mc_best,mc_best_policy,mc_std_error,gap,scheme_tolerance,allowed_gap,pass\n";
      json rows = json::array();
      for (double x0 : c.mc.x0) {
        const double v = evaluate(s.coarse, c.grid.T, x0);
        const auto wc = worst_case_expectation(ic.fn, c.theta, policies, x0, c.mc.n_paths, detail::sim_config(c),
                                               c.seed);
        const double tol =
            s.fine ? 2.0 * refinement_difference(s.coarse, *s.fine, c.grid.T, x0) : c.mc.compare_tolerance;
        const double gap = wc.best.mean - v;
        const double allowed = tol + 3.0 * wc.best.std_error;
        const bool pass = gap <= allowed;
        gated_ok = gated_ok && pass;
        table << format_double(x0) << ',' << format_double(v) << ',' << format_double(wc.best.mean) << ','
              << csv_field(wc.best.policy_id) << ',' << format_double(wc.best.std_error) << ','
              << format_double(gap) << ',' << format_double(tol) << ',' << format_double(allowed) << ','
              << (pass ? 1 : 0) << '\n';
        rows.push_back({{"x0", x0}, {"pide", v}, {"mc_best", wc.best.mean}, {"gap", gap}, {"pass", pass}});
        log << "x0=" << format_double(x0) << " pide " << format_double(v) << " mc " << format_double(wc.best.mean)
            << " gap " << format_double(gap) << (pass ? " ok" : " EXCEEDS") << '\n';
      }
      out.write("comparison.csv", [&](std::ostream& os) { os << table.str(); });
      man["policies"] = detail::policies_json(policies);
      man["summary"] = {{"rows", rows}, {"pass", gated_ok}};
      res.summary = man["summary"];
      break;
    }
    case Command::Validate:
    case Command::Scaling: {
      std::vector<CheckReport> reports;
      const auto& v = c.validation;
      const std::vector<std::string> checks =
          c.command == Command::Scaling ? std::vector<std::string>{"scaling"} : v.checks;
      std::optional<detail::Surfaces> s;
      auto surfaces = [&]() -> const detail::Surfaces& {
        if (!s) s = detail::solve_surfaces(c, ic, c.grid.T);
        return *s;
      };
      for (const auto& name : checks) {
        if (name == "semigroup") {
          const double t = v.t.value_or(c.grid.T);
          const double u = v.u.value_or(0.5 * t);
          const auto& ss = surfaces();
          SemigroupConfig sg;
          sg.mode = v.semigroup_mode;
          sg.n_paths = c.mc.n_paths;
          sg.m_intervals = c.mc.m_intervals;
          sg.feedback = c.mc.feedback;
          sg.sim = detail::sim_config(c);
          sg.seed = c.seed;
          sg.kappa = c.grid.solver.kappa;
          reports.push_back(check_semigroup(c.theta, ss.coarse, ss.fine ? &*ss.fine : nullptr, t, u, v.x_points, sg));
        } else if (name == "regularity") {
          const auto& ss = surfaces();
          reports.push_back(
              check_regularity(ss.coarse, ic.bound, ic.lipschitz, v.regularity, ss.fine ? &*ss.fine : nullptr));
        } else if (name == "generator_conditions") {
          GeneratorCheckConfig g = v.generator;
          g.seed = c.seed;
          reports.push_back(check_generator_conditions(c.theta, g));
        } else if (name == "scaling") {
          ScalingConfig sc;
          sc.solver = c.grid.solver;
          sc.solver.threads = c.threads;
          sc.refine = c.grid.refine;
          sc.generator_cases = v.generator_cases;
          sc.generator_rel_tol = v.generator_rel_tol;
          sc.seed = c.seed;
          reports.push_back(check_scaling(c.theta, ic.fn, v.lambda, v.scaling_t, sc));
        }
      }
      for (const auto& r : reports) gated_ok = gated_ok && r.pass;
      out.write("reports.json", [&](std::ostream& os) { os << reports_to_json(reports).dump(2) << '\n'; });
      print_report_table(log, reports);
      json names = json::array();
      for (const auto& r : reports) names.push_back({{"name", r.name}, {"pass", r.pass}});
      man["summary"] = {{"checks", names}, {"pass", gated_ok}};
      res.summary = man["summary"];
      break;
    }
  }
  man["outputs"] = out.files;
  out.write("manifest.json", [&](std::ostream& os) { os << man.dump(2) << '\n'; });
  res.files = out.files;
  res.exit_code = gated_ok ? 0 : 1;
  return res;
}

}  // namespace nlevy
