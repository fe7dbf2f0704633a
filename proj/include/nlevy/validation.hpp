#pragma once

// Executable checks tying the solver and the simulator together: the
// semigroup identity, stable scaling, regularity of solved surfaces and the
// structural conditions on the generator.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nlevy/detail/numeric.hpp"
#include "nlevy/errors.hpp"
#include "nlevy/generator.hpp"
#include "nlevy/levy_sim.hpp"
#include "nlevy/levy_triplets.hpp"
#include "nlevy/pide_solver.hpp"
#include "nlevy/sampled_function.hpp"

namespace nlevy {

struct CheckReport {
  std::string name;
  std::string inputs_fingerprint;
  double discrepancy = 0.0;
  double tolerance = 0.0;
  bool pass = false;  ///< discrepancy <= tolerance
  double runtime_seconds = 0.0;
  json details = json::object();
};

inline void to_json(json& j, const CheckReport& r) {
  j = json{{"name", r.name},
           {"inputs_fingerprint", r.inputs_fingerprint},
           {"discrepancy", r.discrepancy},
           {"tolerance", r.tolerance},
           {"pass", r.pass},
           {"runtime_seconds", r.runtime_seconds},
           {"details", r.details}};
}

inline void from_json(const json& j, CheckReport& r) {
  r.name = j.at("name").get<std::string>();
  r.inputs_fingerprint = j.at("inputs_fingerprint").get<std::string>();
  // NaN and infinities are written as null
  auto num = [&](const char* k) {
    const auto& v = j.at(k);
    return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
  };
  r.discrepancy = num("discrepancy");
  r.tolerance = num("tolerance");
  r.pass = j.at("pass").get<bool>();
  r.runtime_seconds = j.at("runtime_seconds").get<double>();
  r.details = j.value("details", json::object());
}

namespace detail {

class Stopwatch {
 public:
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count(); }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

inline CheckReport finish(CheckReport r, const Stopwatch& sw) {
  r.pass = r.discrepancy <= r.tolerance;
  r.runtime_seconds = sw.seconds();
  return r;
}

}  // namespace detail

inline SolveOptions solve_options(const SolverConfig& cfg) {
  SolveOptions o;
  o.kappa = cfg.kappa;
  o.threads = cfg.threads;
  o.max_stored_values = cfg.max_stored_values;
  return o;
}

/// |v_h(t,x) − v_{h/2}(t,x)|: for a first-order scheme this is about half
/// the coarse error, so 2× it is the Richardson estimate of that error.
inline double refinement_difference(const ValueSurface& coarse, const ValueSurface& fine, double t, double x) {
  return std::abs(evaluate(coarse, t, x) - evaluate(fine, t, x));
}

// ---------------------------------------------------------------------------
// Semigroup

enum class SemigroupMode { Equality, UpperBound };

inline std::string to_string(SemigroupMode m) { return m == SemigroupMode::Equality ? "equality" : "upper_bound"; }

struct SemigroupConfig {
  SemigroupMode mode = SemigroupMode::UpperBound;
  std::size_t n_paths = 100000;
  std::size_t m_intervals = 2;
  bool feedback = true;  ///< add the surface-driven feedback policy
  SimConfig sim;
  std::uint64_t seed = 1;
  double kappa = kDefaultKappa;
};

/// a = v(t, x) from the surface against b = max over policies of the Monte
/// Carlo mean of v(t − u, x + X_u). With a refined surface the scheme
/// tolerance is 2|v_h − v_{h/2}|(t, x) plus the worst-policy expectation of
/// 2|v_h − v_{h/2}|(t − u, ·) along the same paths.
///
/// UpperBound: every policy mean must satisfy b_i <= a + tol + 3 se_i.
/// Equality: additionally |a − b| <= tol + 3 se for the best policy.
inline CheckReport check_semigroup(const TripletFamily& theta, const ValueSurface& surface, const ValueSurface* fine,
                                   double t, double u, std::span<const double> xs, const SemigroupConfig& cfg = {}) {
  detail::Stopwatch sw;
  const double T = surface.grid.T;
  if (!(t <= T * (1.0 + 1e-12))) throw OutOfHorizon("check_semigroup: t exceeds the surface horizon");
  if (!(u > 0.0 && u < t)) throw OutOfHorizon("check_semigroup: need 0 < u < t");
  if (xs.empty()) throw std::invalid_argument("check_semigroup: no evaluation points");

  const double s = t - u;
  const auto phi = SampledFunction::on_grid(surface.grid_at(s));
  auto policies = default_policy_set(theta, cfg.m_intervals, u, cfg.feedback ? &surface : nullptr, s, cfg.kappa);

  std::optional<SampledFunction> err_phi;
  if (fine) {
    auto g = surface.grid_at(s);
    const auto fine_slice = fine->grid_at(s);
    for (std::size_t i = 0; i < g.values.size(); ++i)
      g.values[i] = 2.0 * std::abs(g.values[i] - fine_slice(g.x_min + g.dx * static_cast<double>(i)));
    err_phi = SampledFunction::on_grid(std::move(g));
  }

  CheckReport r;
  r.name = "semigroup";
  detail::Fnv1a h;
  h.update(surface.theta_fingerprint);
  h.update(surface.psi_fingerprint);
  for (double v : {t, u, static_cast<double>(cfg.n_paths), static_cast<double>(cfg.seed),
                   static_cast<double>(cfg.m_intervals), cfg.sim.eps_sim})
    h.update(v);
  for (double x : xs) h.update(x);
  h.update(to_string(cfg.mode));
  r.inputs_fingerprint = h.hex();

  double worst_margin = -std::numeric_limits<double>::infinity();
  json points = json::array();
  for (double x : xs) {
    const double a = evaluate(surface, t, x);
    const auto wc = worst_case_expectation(phi, theta, policies, x, cfg.n_paths, cfg.sim, cfg.seed);
    double tol_scheme = 0.0;
    double tol_a = 0.0, tol_phi = 0.0;
    if (fine) {
      tol_a = 2.0 * refinement_difference(surface, *fine, t, x);
      const auto we = worst_case_expectation(*err_phi, theta, policies, x, cfg.n_paths, cfg.sim, cfg.seed);
      tol_phi = we.best.mean;
      tol_scheme = tol_a + tol_phi;
    }
    json rows = json::array();
    auto consider = [&](double disc, double tol) {
      if (disc - tol > worst_margin) {
        worst_margin = disc - tol;
        r.discrepancy = disc;
        r.tolerance = tol;
      }
    };
    for (const auto& e : wc.all) {
      consider(e.mean - a, tol_scheme + 3.0 * e.std_error);
      rows.push_back({{"policy", e.policy_id}, {"mean", e.mean}, {"std_error", e.std_error}});
    }
    if (cfg.mode == SemigroupMode::Equality) consider(std::abs(a - wc.best.mean), tol_scheme + 3.0 * wc.best.std_error);
    points.push_back({{"x", x},
                      {"pide", a},
                      {"mc_best", wc.best.mean},
                      {"mc_best_policy", wc.best.policy_id},
                      {"mc_std_error", wc.best.std_error},
                      {"scheme_tolerance", tol_scheme},
                      {"scheme_tolerance_surface", tol_a},
                      {"scheme_tolerance_composed", tol_phi},
                      {"policies", rows}});
  }
  r.details = {{"mode", to_string(cfg.mode)}, {"t", t}, {"u", u}, {"n_paths", cfg.n_paths},
               {"seed", cfg.seed},            {"points", points}};
  return detail::finish(std::move(r), sw);
}

// ---------------------------------------------------------------------------
// Scaling of the stable family

struct ScalingConfig {
  SolverConfig solver;
  bool refine = true;  ///< solve each side again at dx/2 to estimate scheme error
  std::size_t generator_cases = 100;
  double generator_rel_tol = 1e-8;
  std::uint64_t seed = 1;
};

namespace detail {

/// c0 + a sin(w z + φ) (1 − (z/R)²)³ on |z| < R, c0 beyond: C², flat tails.
struct TailedSmooth {
  SampledFunction f;
  double d1_bound;
  double d2_bound;
};

inline TailedSmooth tailed_smooth(double c0, double a, double w, double phi, double R) {
  SampledFunction::Spec s;
  s.value = [=](double z) {
    const double y = z / R;
    if (std::abs(y) >= 1.0) return c0;
    const double b = 1.0 - y * y;
    return c0 + a * std::sin(w * z + phi) * b * b * b;
  };
  s.d1 = [=](double z) {
    const double y = z / R;
    if (std::abs(y) >= 1.0) return 0.0;
    const double b = 1.0 - y * y;
    return a * (w * std::cos(w * z + phi) * b * b * b - std::sin(w * z + phi) * 6.0 * y * b * b / R);
  };
  s.d2 = [=](double z) {
    const double y = z / R;
    if (std::abs(y) >= 1.0) return 0.0;
    const double b = 1.0 - y * y;
    const double sn = std::sin(w * z + phi), cs = std::cos(w * z + phi);
    const double B = b * b * b, B1 = -6.0 * y * b * b / R, B2 = (24.0 * y * y * b - 6.0 * b * b) / (R * R);
    return a * (-w * w * sn * B + 2.0 * w * cs * B1 + sn * B2);
  };
  s.bound = std::abs(c0) + std::abs(a);
  // sup|B'| = 1.7173/R at y = 1/√5, sup|B''| = 6/R² at y = 0
  const double d1 = std::abs(a) * (w + 1.7173 / R);
  const double d2 = std::abs(a) * (w * w + 2.0 * w * 1.7173 / R + 6.0 / (R * R));
  s.lipschitz = d1;
  s.kinks = {-R, R};
  s.tails = SampledFunction::Tails{c0, c0, R};
  return {SampledFunction::analytic(std::move(s)), d1, d2};
}

inline TailedSmooth random_tailed_smooth(std::mt19937_64& rng, double R) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return tailed_smooth(4.0 * u(rng) - 2.0, 0.2 + 1.8 * u(rng), 0.3 + 2.7 * u(rng), 6.283185307179586 * u(rng), R);
}

/// f + g when both are analytic with the same derivative information.
inline SampledFunction sum(const SampledFunction& f, const SampledFunction& g) {
  SampledFunction::Spec s;
  s.value = [f, g](double z) { return f(z) + g(z); };
  if (f.has_gradient() && g.has_gradient()) s.d1 = [f, g](double z) { return f.gradient_at(z) + g.gradient_at(z); };
  if (f.has_second_derivative() && g.has_second_derivative())
    s.d2 = [f, g](double z) { return *f.second_derivative_at(z) + *g.second_derivative_at(z); };
  s.bound = f.bound() + g.bound();
  if (f.lipschitz() && g.lipschitz()) s.lipschitz = *f.lipschitz() + *g.lipschitz();
  s.kinks = f.kinks();
  for (double k : g.kinks()) s.kinks.push_back(k);
  const auto tf = f.tails(), tg = g.tails();
  if (tf && tg) s.tails = SampledFunction::Tails{tf->minus + tg->minus, tf->plus + tg->plus, std::max(tf->radius, tg->radius)};
  return SampledFunction::analytic(std::move(s));
}

inline void require_scaling_family(const TripletFamily& theta) {
  const auto* st = std::get_if<StableCoefficients>(&theta.jump_family());
  if (!st) throw ConditionViolation("scaling: the jump family must be stable_coefficients");
  if (!(st->alpha > 1.0 && st->alpha < 2.0)) throw ConditionViolation("scaling: alpha must lie in (1,2)");
  if (theta.drift_range().lo != 0.0 || theta.drift_range().hi != 0.0)
    throw ConditionViolation("scaling: the drift set must be {0}");
  if (theta.diffusion_range().lo != 0.0 || theta.diffusion_range().hi != 0.0)
    throw ConditionViolation("scaling: the diffusion set must be {0}");
  if (theta.truncation().kind != Truncation::Identity)
    throw ConditionViolation("scaling: the truncation must be the identity");
}

}  // namespace detail

/// max relative error of G(s p, s² q, f(s ·)) = λ G(p, q, f), s = λ^{1/α},
/// over random tailed smooth f; the split radius is scaled to κ/s with f.
inline double generator_scaling_error(const TripletFamily& theta, double lambda, std::size_t cases,
                                      std::uint64_t seed) {
  detail::require_scaling_family(theta);
  const double alpha = std::get<StableCoefficients>(theta.jump_family()).alpha;
  const double s = std::pow(lambda, 1.0 / alpha);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (std::size_t i = 0; i < cases; ++i) {
    const double R = 1.0 + 9.0 * u(rng);
    const auto f = detail::random_tailed_smooth(rng, R).f;
    const double kappa = 0.01 + 0.4 * u(rng);
    const double p = 4.0 * u(rng) - 2.0, q = 4.0 * u(rng) - 2.0;
    const double lhs = g_eval(theta, {s * p, s * s * q, f.scaled(s), kappa / s}).value;
    const double rhs = lambda * g_eval(theta, {p, q, f, kappa}).value;
    worst = std::max(worst, std::abs(lhs - rhs) / std::max(std::abs(rhs), 1e-300));
  }
  return worst;
}

/// Solves v with ψ on horizon λt and ṽ with ψ(λ^{1/α} ·) on horizon t and
/// compares v(λt, 0) with ṽ(t, 0). The tolerance is twice the sum of both
/// runs' refinement differences. A failing generator-level identity makes
/// the discrepancy infinite.
inline CheckReport check_scaling(const TripletFamily& theta, const SampledFunction& psi, double lambda, double t,
                                 const ScalingConfig& cfg = {}) {
  detail::Stopwatch sw;
  detail::require_scaling_family(theta);
  if (!(lambda > 0.0) || !(t > 0.0)) throw std::invalid_argument("check_scaling: lambda and t must be > 0");
  const double alpha = std::get<StableCoefficients>(theta.jump_family()).alpha;
  const double s = std::pow(lambda, 1.0 / alpha);
  const auto psi_s = psi.scaled(s);
  const auto opt = solve_options(cfg.solver);

  const auto g1 = make_grid(theta, lambda * t, 0.0, cfg.solver);
  const auto g2 = make_grid(theta, t, 0.0, cfg.solver);
  const auto v1 = solve(psi, theta, g1, opt);
  const auto v2 = solve(psi_s, theta, g2, opt);
  const double a = evaluate(v1, lambda * t, 0.0);
  const double b = evaluate(v2, t, 0.0);

  double e1 = 0.0, e2 = 0.0;
  if (cfg.refine) {
    e1 = refinement_difference(v1, solve(psi, theta, refine(g1, theta, cfg.solver.kappa), opt), lambda * t, 0.0);
    e2 = refinement_difference(v2, solve(psi_s, theta, refine(g2, theta, cfg.solver.kappa), opt), t, 0.0);
  }
  const double gen_err =
      cfg.generator_cases > 0 ? generator_scaling_error(theta, lambda, cfg.generator_cases, cfg.seed) : 0.0;
  const bool gen_ok = gen_err <= cfg.generator_rel_tol;

  CheckReport r;
  r.name = "scaling";
  detail::Fnv1a h;
  h.update(fingerprint(theta));
  h.update(v1.psi_fingerprint);
  for (double v : {lambda, t, cfg.solver.dx, cfg.solver.kappa, static_cast<double>(cfg.generator_cases),
                   static_cast<double>(cfg.seed)})
    h.update(v);
  r.inputs_fingerprint = h.hex();
  r.discrepancy = gen_ok ? std::abs(a - b) : std::numeric_limits<double>::infinity();
  r.tolerance = 2.0 * (e1 + e2);
  r.details = {{"lambda", lambda},
               {"t", t},
               {"alpha", alpha},
               {"v_lambda_t", a},
               {"v_scaled_t", b},
               {"abs_difference", std::abs(a - b)},
               {"refinement_difference_v", e1},
               {"refinement_difference_v_scaled", e2},
               {"generator_cases", cfg.generator_cases},
               {"generator_max_rel_error", gen_err},
               {"generator_rel_tolerance", cfg.generator_rel_tol},
               {"grid_nx", g1.nx},
               {"grid_dx", g1.dx()}};
  return detail::finish(std::move(r), sw);
}

// ---------------------------------------------------------------------------
// Regularity

struct RegularityConfig {
  double lip_tolerance = 0.02;   ///< relative slack on Lip(ψ)
  double sup_tolerance = 1e-6;   ///< absolute slack on ‖ψ‖_∞
  double time_stability = 0.5;   ///< |C_h − C_{h/2}| <= time_stability · max(C_h, C_{h/2})
};

struct SpatialTemporalModuli {
  double lipschitz = 0.0;
  double sup = 0.0;
  double time_constant = 0.0;  ///< smallest C with |Δv| <= C(|Δt| + |Δt|^{1/2}) on the sampled pairs
};

/// Discrete moduli of a surface. Time pairs are taken at lags 1, 2, 4, ...
/// stored levels apart.
inline SpatialTemporalModuli surface_moduli(const ValueSurface& s) {
  SpatialTemporalModuli m;
  const double dx = s.grid.dx();
  for (std::size_t k = 0; k < s.levels(); ++k) {
    const auto v = s.level(k);
    for (std::size_t i = 0; i < v.size(); ++i) {
      m.sup = std::max(m.sup, std::abs(v[i]));
      if (i > 0) m.lipschitz = std::max(m.lipschitz, std::abs(v[i] - v[i - 1]) / dx);
    }
  }
  for (std::size_t lag = 1; lag < s.levels(); lag *= 2) {
    for (std::size_t k = 0; k + lag < s.levels(); ++k) {
      const double dt = s.times[k + lag] - s.times[k];
      const auto a = s.level(k), b = s.level(k + lag);
      double d = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
      m.time_constant = std::max(m.time_constant, d / (dt + std::sqrt(dt)));
    }
  }
  return m;
}

/// Lipschitz and sup bounds on every stored level, and, with a refined
/// surface, stability of the fitted time constant. The discrepancy is the
/// total excess over these bounds (tolerance 0).
inline CheckReport check_regularity(const ValueSurface& s, double psi_bound, double psi_lipschitz,
                                    const RegularityConfig& cfg = {}, const ValueSurface* refined = nullptr) {
  detail::Stopwatch sw;
  const auto m = surface_moduli(s);
  double excess = std::max(0.0, m.lipschitz - psi_lipschitz * (1.0 + cfg.lip_tolerance)) +
                  std::max(0.0, m.sup - psi_bound - cfg.sup_tolerance);
  if (!std::isfinite(m.time_constant)) excess = std::numeric_limits<double>::infinity();
  json details = {{"lipschitz", m.lipschitz},        {"lipschitz_bound", psi_lipschitz * (1.0 + cfg.lip_tolerance)},
                  {"sup", m.sup},                    {"sup_bound", psi_bound + cfg.sup_tolerance},
                  {"time_constant", m.time_constant}, {"levels", s.levels()},
                  {"nx", s.grid.nx}};
  detail::Fnv1a h;
  h.update(s.theta_fingerprint);
  h.update(s.psi_fingerprint);
  for (double v : {s.grid.x_min, s.grid.x_max, static_cast<double>(s.grid.nx), s.grid.T, s.grid.dt, psi_bound,
                   psi_lipschitz})
    h.update(v);
  if (refined) {
    const auto mf = surface_moduli(*refined);
    excess += std::max(0.0, mf.lipschitz - psi_lipschitz * (1.0 + cfg.lip_tolerance)) +
              std::max(0.0, mf.sup - psi_bound - cfg.sup_tolerance);
    const double gap = std::abs(mf.time_constant - m.time_constant);
    const double allowed = cfg.time_stability * std::max(mf.time_constant, m.time_constant);
    if (!std::isfinite(mf.time_constant)) excess = std::numeric_limits<double>::infinity();
    excess += std::max(0.0, gap - allowed);
    details["refined"] = {{"lipschitz", mf.lipschitz},
                          {"sup", mf.sup},
                          {"time_constant", mf.time_constant},
                          {"time_constant_gap", gap},
                          {"time_constant_gap_allowed", allowed}};
    h.update(refined->grid.dt);
    h.update(static_cast<double>(refined->grid.nx));
  }
  CheckReport r;
  r.name = "regularity";
  r.inputs_fingerprint = h.hex();
  r.discrepancy = excess;
  r.tolerance = 0.0;
  r.details = std::move(details);
  return detail::finish(std::move(r), sw);
}

// ---------------------------------------------------------------------------
// Generator conditions

struct GeneratorCheckConfig {
  std::size_t n_cases = 1000;
  std::uint64_t seed = 1;
  double kappa = 0.05;
  double equality_tolerance = 1e-12;
  double sublinearity_tolerance = 1e-12;  ///< relative to 1 + |right side|
};

namespace detail {

struct SubCheck {
  double measured = 0.0;
  double tolerance = 0.0;
  std::size_t violations = 0;

  void record(double m) {
    measured = std::max(measured, m);
    if (!(m <= tolerance)) ++violations;
  }
  double ratio() const {
    if (tolerance > 0.0) return measured / tolerance;
    return measured > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  }
  json to_json() const { return {{"measured", measured}, {"tolerance", tolerance}, {"violations", violations}}; }
};

}  // namespace detail

/// Randomized (C2), (C3), (C4), (C6), (C8) and sublinearity cases over tailed
/// smooth test functions. The discrepancy is the worst measured/tolerance
/// ratio across the conditions (tolerance 1).
///
///   C2  q₁ >= q₂, f₁ = f₂ + a min(z², 1):  G(p, q₁, f₁) >= G(p, q₂, f₂)
///   C3  G(p, q, f + c) = G(p, q, f)
///   C4  G^κ(p, q, f, f) = G(p, q, f)
///   C6  G^κ(p, q, f + c₁, g + c₂) = G^κ(p, q, f, g)
///   C8  |G(p₁, q₁, f + ψ) − G(p₂, q₂, f)| <= 2𝒦 (|Δp| + |Δq| + ‖ψ'‖ + ‖ψ''‖)
///   sublinearity  G(p₁+p₂, q₁+q₂, f₁+f₂) <= G(p₁, q₁, f₁) + G(p₂, q₂, f₂)
inline CheckReport check_generator_conditions(const TripletFamily& theta, const GeneratorCheckConfig& cfg = {}) {
  detail::Stopwatch sw;
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto pm = [&](double scale) { return scale * (2.0 * u(rng) - 1.0); };
  const double C = lipschitz_constant(theta);
  const double kappa = cfg.kappa;

  detail::SubCheck c2{0.0, 0.0}, c3{0.0, cfg.equality_tolerance}, c4{0.0, cfg.equality_tolerance},
      c6{0.0, cfg.equality_tolerance}, c8{0.0, 1.0}, sub{0.0, cfg.sublinearity_tolerance};

  for (std::size_t i = 0; i < cfg.n_cases; ++i) {
    const double R = 1.0 + 4.0 * u(rng);
    const auto f = detail::random_tailed_smooth(rng, R);
    const auto g = detail::random_tailed_smooth(rng, R);
    const double p = pm(2.0), q = pm(2.0);

    {  // C2
      const double a = 0.05 + u(rng);
      SampledFunction::Spec s;
      const auto f2 = f.f;
      s.value = [f2, a](double z) { return f2(z) + a * std::min(z * z, 1.0); };
      s.d1 = [f2, a](double z) { return f2.gradient_at(z) + (std::abs(z) < 1.0 ? 2.0 * a * z : 0.0); };
      s.d2 = [f2, a](double z) { return *f2.second_derivative_at(z) + (std::abs(z) < 1.0 ? 2.0 * a : 0.0); };
      s.bound = f2.bound() + a;
      s.kinks = {-R, R, -1.0, 1.0};
      const auto t2 = *f2.tails();
      s.tails = SampledFunction::Tails{t2.minus + a, t2.plus + a, std::max(R, 1.0)};
      const auto f1 = SampledFunction::analytic(std::move(s));
      const double q1 = q + u(rng);
      const double g1 = g_eval(theta, {p, q1, f1, kappa}).value;
      const double g2 = g_eval(theta, {p, q, f2, kappa}).value;
      c2.record(std::max(0.0, g2 - g1));
    }
    {  // C3
      const double c = pm(10.0);
      c3.record(std::abs(g_eval(theta, {p, q, f.f.plus_constant(c), kappa}).value -
                         g_eval(theta, {p, q, f.f, kappa}).value));
    }
    {  // C4
      c4.record(std::abs(g_kappa_eval(theta, p, q, f.f, f.f, kappa).value - g_eval(theta, {p, q, f.f, kappa}).value));
    }
    {  // C6
      const double c1 = pm(10.0), cc2 = pm(10.0);
      c6.record(std::abs(g_kappa_eval(theta, p, q, f.f.plus_constant(c1), g.f.plus_constant(cc2), kappa).value -
                         g_kappa_eval(theta, p, q, f.f, g.f, kappa).value));
    }
    {  // C8
      const double p2 = pm(2.0), q2 = pm(2.0);
      const auto fpsi = detail::sum(f.f, g.f);
      const double lhs =
          std::abs(g_eval(theta, {p, q, fpsi, kappa}).value - g_eval(theta, {p2, q2, f.f, kappa}).value);
      const double rhs = C * (std::abs(p - p2) + std::abs(q - q2) + g.d1_bound + g.d2_bound);
      c8.record(rhs > 0.0 ? lhs / rhs : (lhs > 0.0 ? std::numeric_limits<double>::infinity() : 0.0));
    }
    {  // sublinearity
      const double p2 = pm(2.0), q2 = pm(2.0);
      const double lhs = g_eval(theta, {p + p2, q + q2, detail::sum(f.f, g.f), kappa}).value;
      const double rhs = g_eval(theta, {p, q, f.f, kappa}).value + g_eval(theta, {p2, q2, g.f, kappa}).value;
      sub.record(std::max(0.0, lhs - rhs) / (1.0 + std::abs(rhs)));
    }
  }

  CheckReport r;
  r.name = "generator_conditions";
  detail::Fnv1a h;
  h.update(fingerprint(theta));
  for (double v : {static_cast<double>(cfg.n_cases), static_cast<double>(cfg.seed), kappa}) h.update(v);
  r.inputs_fingerprint = h.hex();
  r.discrepancy = std::max({c2.ratio(), c3.ratio(), c4.ratio(), c6.ratio(), c8.ratio(), sub.ratio()});
  r.tolerance = 1.0;
  r.details = {{"n_cases", cfg.n_cases},
               {"kappa", kappa},
               {"lipschitz_constant", C},
               {"C2", c2.to_json()},
               {"C3", c3.to_json()},
               {"C4", c4.to_json()},
               {"C6", c6.to_json()},
               {"C8", c8.to_json()},
               {"sublinearity", sub.to_json()}};
  return detail::finish(std::move(r), sw);
}

// ---------------------------------------------------------------------------
// Output

inline json reports_to_json(const std::vector<CheckReport>& reports) {
  json a = json::array();
  for (const auto& r : reports) a.push_back(r);
  return a;
}

inline void print_report_table(std::ostream& os, const std::vector<CheckReport>& reports) {
  std::size_t w = 5;
  for (const auto& r : reports) w = std::max(w, r.name.size());
  os << std::left << std::setw(static_cast<int>(w)) << "check" << "  " << std::setw(13) << "discrepancy" << "  "
     << std::setw(13) << "tolerance" << "  " << std::setw(6) << "result" << "  runtime_s\n";
  for (const auto& r : reports) {
    os << std::left << std::setw(static_cast<int>(w)) << r.name << "  " << std::setw(13) << std::setprecision(6)
       << r.discrepancy << "  " << std::setw(13) << r.tolerance << "  " << std::setw(6)
       << (r.pass ? "PASS" : "FAIL") << "  " << std::fixed << std::setprecision(2) << r.runtime_seconds
       << std::defaultfloat << '\n';
  }
}

}  // namespace nlevy
