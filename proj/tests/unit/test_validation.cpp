#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "nlevy/initial_conditions.hpp"
#include "nlevy/validation.hpp"

using namespace nlevy;

namespace {

const TruncationSpec kCanonical{Truncation::Canonical};
const TruncationSpec kOpenUnit{Truncation::OpenUnit};
const TruncationSpec kIdentity{Truncation::Identity};

double poisson_series(const SampledFunction& psi, double mean, double x) {
  double sum = 0.0, p = std::exp(-mean);
  for (int k = 0; k < 200; ++k) {
    sum += p * psi(x + k);
    p *= mean / (k + 1);
  }
  return sum;
}

struct Solved {
  ValueSurface coarse, fine;
};

Solved solve_pair(const SampledFunction& psi, const TripletFamily& theta, double T, const SolverConfig& cfg) {
  const auto g = make_grid(theta, T, 0.0, cfg);
  const auto opt = solve_options(cfg);
  return {solve(psi, theta, g, opt), solve(psi, theta, refine(g, theta, cfg.kappa), opt)};
}

}  // namespace

TEST(Report, JsonRoundTrip) {
  CheckReport r;
  r.name = "x";
  r.inputs_fingerprint = "abc";
  r.discrepancy = 0.25;
  r.tolerance = 0.5;
  r.pass = true;
  r.runtime_seconds = 1.5;
  r.details = {{"k", 3}};
  const json j = r;
  const auto back = j.get<CheckReport>();
  EXPECT_EQ(back.name, r.name);
  EXPECT_EQ(back.discrepancy, r.discrepancy);
  EXPECT_EQ(back.tolerance, r.tolerance);
  EXPECT_EQ(back.pass, r.pass);
  EXPECT_EQ(back.details, r.details);
  std::ostringstream os;
  print_report_table(os, {r});
  EXPECT_NE(os.str().find("PASS"), std::string::npos);
}

TEST(Semigroup, DriftOnlySingletonIsDeterministic) {
  const auto ic = make_initial_condition("tanh-like");
  const TripletFamily theta({0.5, 0.5}, {0, 0}, NoJumps{}, kCanonical);
  SolverConfig cfg;
  cfg.half_width = 6.0;
  const auto s = solve_pair(ic.fn, theta, 1.0, cfg);
  SemigroupConfig sc;
  sc.mode = SemigroupMode::Equality;
  sc.n_paths = 50;
  const std::vector<double> xs = {-1.0, 0.0, 1.0};
  const auto r = check_semigroup(theta, s.coarse, &s.fine, 1.0, 0.5, xs, sc);
  EXPECT_TRUE(r.pass) << r.details.dump(2);
  for (const auto& pt : r.details["points"]) {
    EXPECT_LE(pt["mc_std_error"].get<double>(), 1e-15);
    EXPECT_NEAR(pt["pide"].get<double>(), ic.fn(pt["x"].get<double>() + 0.5), 1e-2);
  }
}

TEST(Semigroup, PoissonEqualityWithSeriesOracle) {
  const auto ic = make_initial_condition("indicator-ramp");
  const TripletFamily theta({0, 0}, {0, 0}, PoissonIntensity{{0.5, 1.5}, 1.0}, kOpenUnit);
  const auto s = solve_pair(ic.fn, theta, 1.0, {});
  SemigroupConfig sc;
  sc.mode = SemigroupMode::Equality;
  sc.n_paths = 20000;
  const std::vector<double> xs = {0.0};
  const auto r = check_semigroup(theta, s.coarse, &s.fine, 1.0, 0.5, xs, sc);
  EXPECT_TRUE(r.pass) << r.details.dump(2);
  const auto& pt = r.details["points"][0];
  EXPECT_NEAR(pt["pide"].get<double>(), poisson_series(ic.fn, 1.5, 0.0), 5e-3);
  EXPECT_EQ(pt["policies"].size(), 5u);  // 2 constant, 2 switch, feedback
}

TEST(Semigroup, StableUpperBound) {
  const auto ic = make_initial_condition("tanh-like");
  const TripletFamily theta({0, 0}, {0, 0}, StableCoefficients{1.5, {0.5, 1.0}, {0.5, 1.0}}, kCanonical);
  SolverConfig cfg;
  cfg.half_width = 15.0;
  cfg.dx = 0.1;
  const auto g = make_grid(theta, 0.5, 0.0, cfg);
  const auto surface = solve(ic.fn, theta, g);
  SemigroupConfig sc;
  sc.n_paths = 4000;
  sc.sim.eps_sim = 0.05;
  const std::vector<double> xs = {0.0, 0.5};
  const auto r = check_semigroup(theta, surface, nullptr, 0.5, 0.25, xs, sc);
  EXPECT_TRUE(r.pass) << r.details.dump(2);
  EXPECT_EQ(r.details["mode"], "upper_bound");
}

TEST(Semigroup, RejectsTimesOutsideHorizon) {
  const auto ic = make_initial_condition("tanh-like");
  const TripletFamily theta({0.5, 0.5}, {0, 0}, NoJumps{}, kCanonical);
  SolverConfig cfg;
  cfg.half_width = 4.0;
  const auto s = solve(ic.fn, theta, make_grid(theta, 1.0, 0.0, cfg));
  const std::vector<double> xs = {0.0};
  EXPECT_THROW(check_semigroup(theta, s, nullptr, 1.5, 0.5, xs), OutOfHorizon);
  EXPECT_THROW(check_semigroup(theta, s, nullptr, 1.0, 1.0, xs), OutOfHorizon);
  EXPECT_THROW(check_semigroup(theta, s, nullptr, 1.0, 0.0, xs), OutOfHorizon);
}

TEST(Scaling, UnitLambdaGivesZeroDiscrepancy) {
  const auto ic = make_initial_condition("tanh-like");
  const TripletFamily theta({0, 0}, {0, 0}, StableCoefficients{1.5, {0.5, 1.0}, {0.5, 1.0}}, kIdentity);
  ScalingConfig cfg;
  cfg.solver.half_width = 10.0;
  cfg.solver.dx = 0.1;
  cfg.refine = false;
  cfg.generator_cases = 5;
  const auto r = check_scaling(theta, ic.fn, 1.0, 0.25, cfg);
  EXPECT_EQ(r.discrepancy, 0.0);
  EXPECT_TRUE(r.pass);
}

TEST(Scaling, PreconditionsAreEnforced) {
  const auto ic = make_initial_condition("tanh-like");
  auto stable = [](double alpha) { return StableCoefficients{alpha, {0.5, 1.0}, {0.5, 1.0}}; };
  EXPECT_THROW(check_scaling(TripletFamily({0, 0.1}, {0, 0}, stable(1.5), kIdentity), ic.fn, 2.0, 0.5),
               ConditionViolation);
  EXPECT_THROW(check_scaling(TripletFamily({0, 0}, {0, 0}, stable(0.8), kCanonical), ic.fn, 2.0, 0.5),
               ConditionViolation);
  EXPECT_THROW(check_scaling(TripletFamily({0, 0}, {0, 0}, stable(1.5), kCanonical), ic.fn, 2.0, 0.5),
               ConditionViolation);
  EXPECT_THROW(
      check_scaling(TripletFamily({0, 0}, {0, 0}, PoissonIntensity{{0.5, 1.5}, 1.0}, kIdentity), ic.fn, 2.0, 0.5),
      ConditionViolation);
}

TEST(Scaling, GeneratorIdentityOnRandomSmoothFunctions) {
  for (double alpha : {1.2, 1.5, 1.8}) {
    const TripletFamily theta({0, 0}, {0, 0}, StableCoefficients{alpha, {0.5, 1.0}, {0.2, 0.7}}, kIdentity);
    for (double lambda : {0.3, 2.0, 5.0}) EXPECT_LE(generator_scaling_error(theta, lambda, 100, 17), 1e-8) << alpha;
  }
}

TEST(Regularity, ConstantSurfaceHasZeroModuli) {
  const TripletFamily theta({-0.3, 0.3}, {0.1, 0.2}, NoJumps{}, kCanonical);
  SolverConfig cfg;
  cfg.half_width = 4.0;
  const auto s = solve(SampledFunction::constant(0.7), theta, make_grid(theta, 0.5, 0.0, cfg));
  const auto r = check_regularity(s, 0.7, 0.0);
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.details["lipschitz"].get<double>(), 0.0);
  EXPECT_EQ(r.details["time_constant"].get<double>(), 0.0);
}

TEST(Regularity, DriftOnlyKeepsTheLipschitzConstant) {
  const auto ic = make_initial_condition("tanh-like");
  const TripletFamily theta({0.5, 0.5}, {0, 0}, NoJumps{}, kCanonical);
  SolverConfig cfg;
  cfg.half_width = 6.0;
  const auto s = solve(ic.fn, theta, make_grid(theta, 1.0, 0.0, cfg));
  const auto r = check_regularity(s, ic.bound, ic.lipschitz);
  EXPECT_TRUE(r.pass);
  EXPECT_NEAR(r.details["lipschitz"].get<double>(), ic.lipschitz, 2e-3);
  // a declared constant below the truth is caught
  EXPECT_FALSE(check_regularity(s, ic.bound, 0.9 * ic.lipschitz).pass);
  EXPECT_FALSE(check_regularity(s, 0.9 * ic.bound, ic.lipschitz).pass);
}

TEST(Regularity, HeatTimeConstantIsStableUnderRefinement) {
  const auto ic = make_initial_condition("capped-abs");
  const TripletFamily theta({0, 0}, {0.1, 0.2}, NoJumps{}, kCanonical);
  SolverConfig cfg;
  cfg.half_width = 8.0;
  const auto s = solve_pair(ic.fn, theta, 1.0, cfg);
  const auto r = check_regularity(s.coarse, ic.bound, ic.lipschitz, {}, &s.fine);
  EXPECT_TRUE(r.pass) << r.details.dump(2);
  const double c = r.details["time_constant"].get<double>();
  EXPECT_GT(c, 0.0);
  EXPECT_TRUE(std::isfinite(c));
}

TEST(GeneratorConditions, HoldOnTheExampleFamilies) {
  const std::vector<TripletFamily> families = {
      TripletFamily({-0.3, 0.3}, {0.1, 0.5}, NoJumps{}, kCanonical),
      TripletFamily({0, 0}, {0, 0}, PoissonIntensity{{0.5, 1.5}, 1.0}, kOpenUnit),
      TripletFamily({-0.2, 0.1}, {0, 0.3}, StableCoefficients{1.5, {0.5, 1.0}, {0.5, 1.0}}, kCanonical),
      TripletFamily({0, 0}, {0, 0}, StableCoefficients{1.3, {0.5, 1.0}, {0.1, 0.4}}, kIdentity),
  };
  for (const auto& theta : families) {
    GeneratorCheckConfig cfg;
    cfg.n_cases = 150;
    const auto r = check_generator_conditions(theta, cfg);
    EXPECT_TRUE(r.pass) << r.details.dump(2);
    EXPECT_EQ(r.details["C3"]["measured"].get<double>(), 0.0);
    EXPECT_EQ(r.details["C6"]["measured"].get<double>(), 0.0);
    EXPECT_EQ(r.details["C2"]["violations"].get<std::size_t>(), 0u);
    EXPECT_GT(r.details["C8"]["measured"].get<double>(), 0.0);
  }
}

TEST(GeneratorConditions, DeterministicGivenSeed) {
  const TripletFamily theta({0, 0}, {0, 0}, PoissonIntensity{{0.5, 1.5}, 1.0}, kOpenUnit);
  GeneratorCheckConfig cfg;
  cfg.n_cases = 20;
  const auto a = check_generator_conditions(theta, cfg);
  const auto b = check_generator_conditions(theta, cfg);
  EXPECT_EQ(a.inputs_fingerprint, b.inputs_fingerprint);
  EXPECT_EQ(a.details, b.details);
}
