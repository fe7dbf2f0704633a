// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
//
//   acceptance [--only N[,N...]]

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/poisson.hpp>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/ooura_fourier_integrals.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "nlevy/nlevy.hpp"

using namespace nlevy;
namespace fs = std::filesystem;

namespace {

const TruncationSpec kCanonical{Truncation::Canonical};
const TruncationSpec kOpenUnit{Truncation::OpenUnit};
const TruncationSpec kIdentity{Truncation::Identity};

struct Outcome {
  bool pass = true;
  std::ostringstream notes;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    notes << (notes.tellp() > 0 ? "; " : "") << what << (ok ? "" : " [!]");
  }
};

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(3) << v;
  return os.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------
// Oracles

// Σ_k e^{-m} m^k/k! ψ(x + k)
double poisson_series(const SampledFunction& psi, double m, double x) {
  double sum = 0.0, mass = 0.0, p = std::exp(-m);
  for (int k = 0; mass < 1.0 - 1e-16 && k < 400; ++k) {
    sum += p * psi(x + k);
    mass += p;
    p *= m / (k + 1);
  }
  return sum;
}

// E ψ(x + √(c t) Y), Y standard normal, split at the kinks of ψ.
double heat_oracle(const SampledFunction& psi, double c, double t, double x) {
  const double s = std::sqrt(c * t);
  auto integrand = [&](double y) { return psi(x + s * y) * std::exp(-0.5 * y * y) / std::sqrt(2.0 * M_PI); };
  std::vector<double> edges = {-12.0, 12.0};
  for (double k : psi.kinks())
    if (std::abs((k - x) / s) < 12.0) edges.push_back((k - x) / s);
  std::sort(edges.begin(), edges.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i)
    total += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, edges[i], edges[i + 1], 15, 1e-14);
  return total;
}

// ∫_a^b z^{-p} dz by double-exponential quadrature; b may be infinite.
double power_quadrature(double a, double b, double p) {
  if (std::isinf(b)) {
    // z = a e^u
    boost::math::quadrature::exp_sinh<double> es;
    return std::pow(a, 1.0 - p) *
           es.integrate([p](double u) { return std::exp((1.0 - p) * u); }, 0.0, std::numeric_limits<double>::infinity(),
                        1e-15);
  }
  boost::math::quadrature::tanh_sinh<double> ts;
  return ts.integrate([p](double z) { return std::pow(z, -p); }, a, b, 1e-15);
}

// ∫(1 − cos uz) F(dz) for the symmetric stable density k|z|^{-1-α}. After
// y = |u| z and one integration by parts this is (2k|u|^α/α) ∫_0^∞ sin(y) y^{-α} dy.
double stable_exponent_quadrature(double alpha, double k, double u) {
  boost::math::quadrature::ooura_fourier_sin<double> integrator;
  const auto [value, err] = integrator.integrate([alpha](double y) { return std::pow(y, -alpha); }, 1.0);
  (void)err;
  return 2.0 * k * std::pow(std::abs(u), alpha) / alpha * value;
}

double poisson_gof_pvalue(const std::vector<double>& xs, double mean) {
  std::map<long, double> counts;
  for (double x : xs) {
    if (std::round(x) != x) return 0.0;
    counts[std::lround(x)] += 1.0;
  }
  const double n = static_cast<double>(xs.size());
  boost::math::poisson_distribution<double> pois(mean);
  std::vector<double> obs, expct;
  double o = 0.0, e = 0.0, cum = 0.0;
  for (long k = 0;; ++k) {
    const double pk = boost::math::pdf(pois, static_cast<double>(k));
    cum += pk;
    o += counts.count(k) ? counts[k] : 0.0;
    e += n * pk;
    if (n * (1.0 - cum) < 5.0) {
      double rest = 0.0;
      for (const auto& [kk, c] : counts)
        if (kk > k) rest += c;
      obs.push_back(o + rest);
      expct.push_back(e + n * (1.0 - cum));
      break;
    }
    if (e >= 5.0) {
      obs.push_back(o);
      expct.push_back(e);
      o = e = 0.0;
    }
  }
  double stat = 0.0;
  for (std::size_t i = 0; i < obs.size(); ++i) stat += (obs[i] - expct[i]) * (obs[i] - expct[i]) / expct[i];
  boost::math::chi_squared_distribution<double> chi(static_cast<double>(obs.size() - 1));
  return boost::math::cdf(boost::math::complement(chi, stat));
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// Shared fixtures, solved once

TripletFamily poisson_family() { return TripletFamily({0, 0}, {0, 0}, PoissonIntensity{{0.5, 1.5}, 1.0}, kOpenUnit); }
TripletFamily volatility_family() { return TripletFamily({0, 0}, {0.1, 0.2}, NoJumps{}, kCanonical); }
TripletFamily stable_family() {
  return TripletFamily({0, 0}, {0, 0}, StableCoefficients{1.5, {0.5, 1.0}, {0.5, 1.0}}, kIdentity);
}

struct Pair {
  InitialCondition ic;
  ValueSurface coarse, fine;
};

Pair solve_pair(const std::string& psi, const TripletFamily& theta, double T) {
  const auto ic = make_initial_condition(psi);
  const SolverConfig cfg;
  const auto g = make_grid(theta, T, 0.0, cfg);
  const auto opt = solve_options(cfg);
  return {ic, solve(ic.fn, theta, g, opt), solve(ic.fn, theta, refine(g, theta, cfg.kappa), opt)};
}

struct Fixtures {
  std::optional<Pair> poisson, volatility, stable;

  const Pair& get_poisson() {
    if (!poisson) poisson = solve_pair("indicator-ramp", poisson_family(), 1.0);
    return *poisson;
  }
  const Pair& get_volatility() {
    if (!volatility) volatility = solve_pair("capped-abs", volatility_family(), 1.0);
    return *volatility;
  }
  const Pair& get_stable() {
    if (!stable) stable = solve_pair("tanh-like", stable_family(), 1.0);
    return *stable;
  }
};

// ---------------------------------------------------------------------------
// Criteria

void poisson_exactness(Fixtures& fx, Outcome& o) {
  const auto& p = fx.get_poisson();
  const double oracle = poisson_series(p.ic.fn, 1.5, 0.0);
  const double e0 = std::abs(evaluate(p.coarse, 1.0, 0.0) - oracle);
  const double e1 = std::abs(evaluate(p.fine, 1.0, 0.0) - oracle);
  o.require(e0 <= 5e-3, "default grid err " + fmt(e0) + " <= 5e-3");
  o.require(e1 <= 1.5e-3, "refined err " + fmt(e1) + " <= 1.5e-3");
}

void volatility_exactness(Fixtures& fx, Outcome& o) {
  const auto& p = fx.get_volatility();
  const double oracle = heat_oracle(p.ic.fn, 0.2, 1.0, 0.0);
  const double e0 = std::abs(evaluate(p.coarse, 1.0, 0.0) - oracle);
  const double e1 = std::abs(evaluate(p.fine, 1.0, 0.0) - oracle);
  o.require(e0 <= 5e-3, "err " + fmt(e0) + " <= 5e-3");
  o.require(e1 > 0.0 && e0 / e1 >= 1.5, "refinement ratio " + fmt(e0 / e1) + " >= 1.5");
}

void scaling_identity(Fixtures&, Outcome& o) {
  const auto ic = make_initial_condition("tanh-like");
  ScalingConfig cfg;
  cfg.generator_cases = 100;
  cfg.generator_rel_tol = 1e-8;
  const auto r = check_scaling(stable_family(), ic.fn, 2.0, 0.5, cfg);
  o.require(r.pass, "|v(1,0) - v~(.5,0)| " + fmt(r.details["abs_difference"].get<double>()) + " <= 2x refinement " +
                        fmt(r.tolerance));
  o.require(r.details["abs_difference"].get<double>() <= 1e-2, "target 1e-2");
  o.require(r.details["generator_max_rel_error"].get<double>() <= 1e-8,
            "generator identity rel err " + fmt(r.details["generator_max_rel_error"].get<double>()) + " <= 1e-8");
}

void dynamic_programming(Fixtures& fx, Outcome& o) {
  {
    const auto& p = fx.get_poisson();
    SemigroupConfig cfg;
    cfg.mode = SemigroupMode::Equality;
    cfg.n_paths = 100000;
    cfg.seed = 11;
    const std::vector<double> xs = {0.0};
    const auto r = check_semigroup(poisson_family(), p.coarse, &p.fine, 1.0, 0.5, xs, cfg);
    const auto& pt = r.details["points"][0];
    o.require(r.pass, "poisson |v - E v(.5, x+X_.5)| = " +
                          fmt(std::abs(pt["pide"].get<double>() - pt["mc_best"].get<double>())) + " within " +
                          fmt(r.tolerance));
  }
  {
    const auto& p = fx.get_stable();
    SemigroupConfig cfg;
    cfg.n_paths = 20000;
    cfg.sim.eps_sim = 0.05;
    cfg.seed = 12;
    const std::vector<double> xs = {-1.0, 0.0, 1.0};
    const auto r = check_semigroup(stable_family(), p.coarse, &p.fine, 1.0, 0.5, xs, cfg);
    std::size_t n_policies = 0;
    for (const auto& pt : r.details["points"]) n_policies += pt["policies"].size();
    o.require(r.pass, "stable MC <= PIDE + tol for " + std::to_string(n_policies) + " (policy, x) pairs, margin " +
                          fmt(r.discrepancy - r.tolerance));
  }
}

void regularity(Fixtures& fx, Outcome& o) {
  const std::vector<std::pair<std::string, const Pair*>> surfaces = {
      {"poisson", &fx.get_poisson()}, {"volatility", &fx.get_volatility()}, {"stable", &fx.get_stable()}};
  for (const auto& [name, p] : surfaces) {
    const auto r = check_regularity(p->coarse, p->ic.bound, p->ic.lipschitz, {}, &p->fine);
    const auto rf = check_regularity(p->fine, p->ic.bound, p->ic.lipschitz);
    o.require(r.pass && rf.pass && r.runtime_seconds + rf.runtime_seconds <= 60.0,
              name + " Lip " + fmt(r.details["lipschitz"].get<double>()) + "/" + fmt(p->ic.lipschitz) + " C " +
                  fmt(r.details["time_constant"].get<double>()));
  }
}

void generator_properties(Fixtures&, Outcome& o) {
  const std::vector<std::pair<std::string, TripletFamily>> families = {
      {"volatility", volatility_family()},
      {"poisson", poisson_family()},
      {"stable", stable_family()},
      {"mixed", TripletFamily({-0.2, 0.1}, {0, 0.3}, StableCoefficients{1.3, {0.5, 1.0}, {0.1, 0.4}}, kCanonical)}};
  for (const auto& [name, theta] : families) {
    GeneratorCheckConfig cfg;
    cfg.n_cases = 1000;
    const auto r = check_generator_conditions(theta, cfg);
    const auto& d = r.details;
    o.require(r.pass && d["C2"]["violations"].get<std::size_t>() == 0,
              name + " C3/C4/C6 " + fmt(std::max({d["C3"]["measured"].get<double>(), d["C4"]["measured"].get<double>(),
                                                   d["C6"]["measured"].get<double>()})) +
                  " C8 ratio " + fmt(d["C8"]["measured"].get<double>()));
  }
}

void moment_closed_forms(Fixtures&, Outcome& o) {
  std::mt19937_64 rng(500);
  std::uniform_real_distribution<double> ua(0.05, 1.95), uk(0.01, 3.0), ue(std::log(1e-3), std::log(5.0));
  double worst = 0.0;
  std::size_t divergent_ok = 0, divergent_expected = 0;
  auto rel = [&](double got, double want, double scale) { worst = std::max(worst, std::abs(got - want) / scale); };
  for (int trial = 0; trial < 500; ++trial) {
    const double alpha = ua(rng), kp = uk(rng), km = uk(rng), eps = std::exp(ue(rng));
    const auto F = LevyMeasure::stable(alpha, kp, km);
    const double inner2 = power_quadrature(0.0, eps, alpha - 1.0);  // ∫_0^ε z^{1-α}
    const double inner3 = power_quadrature(0.0, eps, alpha - 2.0);  // ∫_0^ε z^{2-α}
    const double tail = power_quadrature(eps, std::numeric_limits<double>::infinity(), alpha + 1.0);
    const double m2 = (kp + km) * inner2, m3 = (kp + km) * inner3, ti = (kp + km) * tail;
    rel(small_jump_second_moment(F, eps), m2, m2);
    rel(small_jump_third_abs_moment(F, eps), m3, m3);
    rel(tail_intensity(F, eps), ti, ti);
    if (eps < 1.0) {
      const double j = power_quadrature(eps, 1.0, alpha);  // ∫_ε^1 z · z^{-1-α}
      rel(compensator_drift(F, kCanonical, eps), (kp - km) * j, (kp + km) * j);
      rel(compensator_drift(F, kOpenUnit, eps), (kp - km) * j, (kp + km) * j);
    }
    if (alpha > 1.0) {
      const double j = power_quadrature(eps, std::numeric_limits<double>::infinity(), alpha);
      rel(compensator_drift(F, kIdentity, eps), (kp - km) * j, (kp + km) * j);
      const double tm =
          (kp + km) * (power_quadrature(0.0, 1.0, alpha - 1.0) +
                       power_quadrature(1.0, std::numeric_limits<double>::infinity(), alpha));
      rel(truncated_first_second_moment(F), tm, tm);
    } else {
      ++divergent_expected;
      try {
        (void)truncated_first_second_moment(F);
      } catch (const DivergentMoment&) {
        ++divergent_ok;
      }
    }
  }
  o.require(worst <= 1e-10, "500 stable sets, max rel err " + fmt(worst) + " <= 1e-10");
  o.require(divergent_ok == divergent_expected,
            std::to_string(divergent_ok) + "/" + std::to_string(divergent_expected) + " divergent cases flagged");

  double ladder = 0.0;
  for (double alpha : {1.1, 1.5, 1.9}) {
    const TripletFamily theta({0, 0}, {0, 0}, StableCoefficients{alpha, {0.5, 1.0}, {0.5, 1.0}}, kCanonical);
    std::vector<double> eps;
    for (double e = 1.0; e > 1e-6; e /= 2.0) eps.push_back(e);
    const auto rep = family_condition_report(theta, eps);
    for (std::size_t i = 1; i < rep.K_eps.size(); ++i) {
      const double ratio = rep.K_eps[i].second / rep.K_eps[i - 1].second;
      const double law = std::pow(rep.K_eps[i].first / rep.K_eps[i - 1].first, 2.0 - alpha);
      ladder = std::max(ladder, std::abs(ratio / law - 1.0));
    }
  }
  o.require(ladder <= 0.01, "K_eps ladder vs eps^(2-alpha) max rel dev " + fmt(ladder) + " <= 1%");
}

void simulation_fidelity(Fixtures&, Outcome& o) {
  const auto theta = poisson_family();
  for (std::size_t v = 0; v < theta.vertices().size(); ++v) {
    const double lambda = std::get<FiniteAtomic>(theta.vertices()[v].triplet.F.get()).atoms.front().w;
    const auto xs = simulate_terminal(theta, constant_policy(v, 1.0), 0.0, 100000, {}, 40 + v);
    const double pv = poisson_gof_pvalue(xs, lambda);
    o.require(pv > 0.01, "Poisson(" + fmt(lambda) + ") GOF p " + fmt(pv) + " > 0.01");
  }

  const double alpha = 1.5, k = 0.1;
  const IncrementLaw law(LevyTriplet(0.0, 0.0, LevyMeasure::stable(alpha, k, k)), kCanonical, 0.05);
  const std::size_t n = 1000000;
  std::vector<double> xs(n);
  for (std::size_t i = 0; i < n; ++i) {
    RandomStream rs(Xoshiro256::keyed(8, 0, i));
    xs[i] = law.sample(1.0, rs, SmallJumpMode::Gaussian).total();
  }
  for (double u : {0.5, 1.0, 2.0}) {
    std::vector<double> c(n);
    for (std::size_t i = 0; i < n; ++i) c[i] = std::cos(u * xs[i]);
    const double ecf = detail::pairwise_sum(c) / static_cast<double>(n);
    const double exact = std::exp(-stable_exponent_quadrature(alpha, k, u));
    const double dev = std::abs(ecf / exact - 1.0);
    o.require(dev <= 0.02, "ECF u=" + fmt(u) + " rel dev " + fmt(dev) + " <= 2%");
  }
}

void determinism(Fixtures&, Outcome& o) {
  const fs::path configs = fs::path(NLEVY_SOURCE_DIR) / "configs";
  const fs::path scratch = fs::temp_directory_path() / "nlevy_acceptance_determinism";
  for (const std::string file : {"poisson_validate.json", "uncertain_volatility_compare.json", "stable_simulate.json"}) {
    auto cfg = load_run_config((configs / file).string());
    if (cfg.command == Command::Validate) cfg.command = Command::Simulate;  // the Monte Carlo side of the DPP run
    std::map<std::string, std::string> first;
    bool same = true;
    for (unsigned threads : {1u, 2u, 4u}) {
      cfg.threads = threads;
      cfg.output_dir = (scratch / (file + std::to_string(threads))).string();
      fs::remove_all(cfg.output_dir);
      std::ostringstream log;
      const auto res = run(cfg, log);
      std::size_t n_csv = 0;
      for (const auto& f : res.files) {
        const fs::path path(f);
        if (path.extension() != ".csv") continue;
        ++n_csv;
        const auto bytes = slurp(path);
        if (threads == 1)
          first[path.filename().string()] = bytes;
        else if (bytes != first[path.filename().string()])
          same = false;
      }
      if (n_csv == 0 || n_csv != first.size()) same = false;
    }
    o.require(same, file + ": " + std::to_string(first.size()) + " CSVs identical for 1/2/4 threads");
  }
  fs::remove_all(scratch);
}

struct Criterion {
  int id;
  std::string name;
  double budget_seconds;
  std::function<void(Fixtures&, Outcome&)> body;
};

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i + 1 < argc; ++i)
    if (std::string(argv[i]) == "--only") {
      std::stringstream ss(argv[i + 1]);
      for (std::string tok; std::getline(ss, tok, ',');) only.insert(std::stoi(tok));
    }

  const std::vector<Criterion> criteria = {
      {1, "poisson_exactness", 30, poisson_exactness},
      {2, "uncertain_volatility_exactness", 60, volatility_exactness},
      {3, "scaling_identity", 300, scaling_identity},
      {4, "dynamic_programming", 300, dynamic_programming},
      {5, "regularity", 180, regularity},
      {6, "generator_properties", 60, generator_properties},
      {7, "moment_closed_forms", 30, moment_closed_forms},
      {8, "simulation_fidelity", 180, simulation_fidelity},
      {9, "determinism", 600, determinism},
  };

  Fixtures fx;
  bool all = true;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.body(fx, o);
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    const double secs = seconds_since(t0);
    o.require(secs <= c.budget_seconds, "runtime " + fmt(secs) + "s <= " + fmt(c.budget_seconds) + "s");
    all = all && o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << c.id << " " << c.name << "  " << o.notes.str() << std::endl;
  }
  return all ? 0 : 1;
}
