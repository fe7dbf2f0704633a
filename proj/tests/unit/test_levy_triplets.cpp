#include <cmath>
#include <random>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <gtest/gtest.h>

#include "nlevy/levy_triplets.hpp"

using namespace nlevy;

namespace {

const TruncationSpec kCanonical{Truncation::Canonical};
const TruncationSpec kIdentity{Truncation::Identity};
const TruncationSpec kOpenUnit{Truncation::OpenUnit};

// Independent oracles: adaptive double-exponential quadrature of the density.
double oracle_small_second(double alpha, double kp, double km, double eps) {
  boost::math::quadrature::tanh_sinh<double> ts;
  auto side = [&](double k) {
    return ts.integrate([&](double z) { return k * std::pow(z, 1.0 - alpha); }, 0.0, eps, 1e-15);
  };
  return side(kp) + side(km);
}

double oracle_tail(double alpha, double kp, double km, double eps) {
  boost::math::quadrature::exp_sinh<double> es;
  // z = ε e^u
  const double one = es.integrate([&](double u) { return std::pow(eps, -alpha) * std::exp(-alpha * u); }, 0.0,
                                  std::numeric_limits<double>::infinity(), 1e-15);
  return (kp + km) * one;
}

double oracle_truncated_moment(double alpha, double kp, double km) {
  boost::math::quadrature::tanh_sinh<double> ts;
  boost::math::quadrature::exp_sinh<double> es;
  const double inner = ts.integrate([&](double z) { return std::pow(z, 1.0 - alpha); }, 0.0, 1.0, 1e-15);
  const double outer = es.integrate([&](double u) { return std::exp((1.0 - alpha) * u); }, 0.0,
                                    std::numeric_limits<double>::infinity(), 1e-15);
  return (kp + km) * (inner + outer);
}

TripletFamily stable_box() {
  return TripletFamily({0, 0}, {0, 0}, StableCoefficients{1.5, {0.5, 1.0}, {0.5, 1.0}}, kCanonical);
}

}  // namespace

TEST(Moments, SmallJumpSecondMomentExamples) {
  EXPECT_NEAR(small_jump_second_moment(LevyMeasure::stable(1.5, 1, 1), 1.0), 4.0, 1e-14);
  EXPECT_EQ(small_jump_second_moment(LevyMeasure::atomic({{1.0, 2.0}}), 0.5), 0.0);
  EXPECT_EQ(small_jump_second_moment(LevyMeasure::zero(), 3.0), 0.0);
}

TEST(Moments, TruncatedMomentExamples) {
  EXPECT_NEAR(truncated_first_second_moment(LevyMeasure::stable(1.5, 1, 1)), 8.0, 1e-13);
  EXPECT_DOUBLE_EQ(truncated_first_second_moment(LevyMeasure::atomic({{0.5, 4.0}})), 1.0);
  EXPECT_THROW(truncated_first_second_moment(LevyMeasure::stable(0.5, 1, 0)), DivergentMoment);
}

TEST(Moments, TailIntensityExamples) {
  EXPECT_NEAR(tail_intensity(LevyMeasure::stable(1.5, 1, 1), 1.0), 4.0 / 3.0, 1e-14);
  EXPECT_EQ(tail_intensity(LevyMeasure::atomic({{1.0, 2.0}}), 0.5), 2.0);
  EXPECT_EQ(tail_intensity(LevyMeasure::atomic({{1.0, 2.0}}), 2.0), 0.0);
}

TEST(Moments, CompensatorExamples) {
  EXPECT_EQ(compensator_drift(LevyMeasure::stable(1.5, 1, 1), kCanonical, 0.1), 0.0);
  EXPECT_EQ(compensator_drift(LevyMeasure::atomic({{1.0, 2.0}}), kCanonical, 0.5), 2.0);
  EXPECT_NEAR(compensator_drift(LevyMeasure::stable(1.5, 1, 0), kIdentity, 1.0), 2.0, 1e-14);
  // With the open unit ball the atom at 1 is not compensated.
  EXPECT_EQ(compensator_drift(LevyMeasure::atomic({{1.0, 2.0}}), kOpenUnit, 0.5), 0.0);
  EXPECT_THROW(compensator_drift(LevyMeasure::stable(0.8, 1, 0), kIdentity, 1.0), DivergentMoment);
}

TEST(Moments, MonotoneInRadius) {
  const std::vector<LevyMeasure> measures = {
      LevyMeasure::zero(), LevyMeasure::atomic({{0.3, 1.0}, {-0.7, 2.0}, {1.5, 0.5}}),
      LevyMeasure::stable(1.5, 1.0, 0.3), LevyMeasure::stable(0.4, 0.2, 2.0)};
  for (const auto& F : measures) {
    double prev = -1.0;
    for (double eps : {1e-4, 1e-3, 0.01, 0.1, 0.3, 0.5, 0.7, 1.0, 2.0, 10.0}) {
      const double m = small_jump_second_moment(F, eps);
      EXPECT_GE(m, prev);
      prev = m;
    }
  }
}

TEST(Moments, StableLadderRate) {
  for (double alpha : {0.3, 1.0, 1.5, 1.9}) {
    const auto F = LevyMeasure::stable(alpha, 0.7, 1.3);
    const double theory = std::pow(0.5, 2.0 - alpha);
    for (double eps = 1.0; eps > 1e-6; eps /= 2.0) {
      const double ratio = small_jump_second_moment(F, eps / 2.0) / small_jump_second_moment(F, eps);
      EXPECT_NEAR(ratio / theory, 1.0, 0.01);
    }
  }
}

TEST(Moments, AtomMassIdentity) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> z(-3.0, 3.0), w(0.0, 2.0), e(0.01, 3.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Atom> atoms;
    for (int j = 0; j < 6; ++j) atoms.push_back({z(rng), w(rng)});
    const auto F = LevyMeasure::atomic(atoms);
    const double eps = e(rng);
    double inside = 0.0, total = 0.0;
    for (const auto& a : atoms) {
      total += a.w;
      if (std::abs(a.z) <= eps) inside += a.w;
    }
    EXPECT_NEAR(tail_intensity(F, eps) + inside, total, 1e-14 * total);
  }
}

TEST(Moments, CompensatorMirrorAntisymmetry) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> a(0.05, 1.95), k(0.0, 3.0), e(0.001, 0.99);
  for (int trial = 0; trial < 200; ++trial) {
    const double alpha = a(rng);
    const auto F = LevyMeasure::stable(alpha, k(rng), k(rng));
    const double eps = e(rng);
    for (const auto& h : {kCanonical, kOpenUnit}) {
      const double c = compensator_drift(F, h, eps);
      EXPECT_NEAR(compensator_drift(F.mirrored(), h, eps), -c, 1e-12 * (1.0 + std::abs(c)));
    }
    if (alpha > 1.0) {
      const double c = compensator_drift(F, kIdentity, eps);
      EXPECT_NEAR(compensator_drift(F.mirrored(), kIdentity, eps), -c, 1e-12 * (1.0 + std::abs(c)));
    }
  }
  const auto G = LevyMeasure::atomic({{0.4, 1.0}, {1.0, 2.0}, {-2.5, 0.3}});
  for (const auto& h : {kCanonical, kOpenUnit, kIdentity})
    EXPECT_EQ(compensator_drift(G.mirrored(), h, 0.1), -compensator_drift(G, h, 0.1));
}

TEST(Moments, ClosedFormsMatchQuadratureOracle) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> a(0.05, 1.95), k(0.01, 3.0), le(std::log(1e-3), std::log(5.0));
  for (int trial = 0; trial < 500; ++trial) {
    const double alpha = a(rng), kp = k(rng), km = k(rng), eps = std::exp(le(rng));
    const auto F = LevyMeasure::stable(alpha, kp, km);
    const double m2 = small_jump_second_moment(F, eps);
    EXPECT_NEAR(m2, oracle_small_second(alpha, kp, km, eps), 1e-10 * m2) << alpha << ' ' << eps;
    const double ti = tail_intensity(F, eps);
    EXPECT_NEAR(ti, oracle_tail(alpha, kp, km, eps), 1e-10 * ti) << alpha << ' ' << eps;
    if (alpha > 1.05) {
      const double tm = truncated_first_second_moment(F);
      EXPECT_NEAR(tm, oracle_truncated_moment(alpha, kp, km), 1e-10 * tm) << alpha;
    }
  }
}

TEST(Family, ConditionReportExamples) {
  const TripletFamily poisson({0, 0}, {0, 0}, PoissonIntensity{{0.5, 1.5}, 1.0}, kCanonical);
  const auto rp = family_condition_report(poisson, {0.5, 0.1, 0.01});
  EXPECT_DOUBLE_EQ(rp.K, 1.5);
  for (const auto& [eps, v] : rp.K_eps) EXPECT_EQ(v, 0.0) << eps;
  EXPECT_TRUE(rp.ok());

  const auto rs = family_condition_report(stable_box(), {1.0, 0.1});
  EXPECT_NEAR(rs.K, 8.0, 1e-13);
  EXPECT_TRUE(rs.ok());
  EXPECT_LT(rs.K_eps[1].second, rs.K_eps[0].second);

  const TripletFamily nojump({-1, 1}, {0, 2}, NoJumps{}, kCanonical);
  EXPECT_DOUBLE_EQ(family_condition_report(nojump, {}).K, 3.0);
}

TEST(Family, VertexEnumeration) {
  EXPECT_EQ(stable_box().vertices().size(), 4u);
  const TripletFamily full({-1, 1}, {0.1, 0.2}, StableCoefficients{1.2, {0.5, 1.0}, {0.0, 0.3}}, kCanonical);
  const auto vs = full.vertices();
  ASSERT_EQ(vs.size(), 16u);
  for (const auto& v : vs) {
    const auto& s = std::get<AlphaStable>(v.triplet.F.get());
    EXPECT_EQ(v.basis_weights[0], s.k_plus);
    EXPECT_EQ(v.basis_weights[1], s.k_minus);
  }
  const TripletFamily single({0.3, 0.3}, {0, 0}, NoJumps{}, kCanonical);
  EXPECT_TRUE(single.singleton());
  EXPECT_EQ(single.vertices().size(), 1u);
}

TEST(Family, RejectsBadConfiguration) {
  EXPECT_THROW(TripletFamily({1, 0}, {0, 0}, NoJumps{}, kCanonical), ConfigError);
  EXPECT_THROW(TripletFamily({0, 0}, {-1, 0}, NoJumps{}, kCanonical), ConfigError);
  EXPECT_THROW(TripletFamily({0, 0}, {0, 0}, StableCoefficients{0.8, {1, 1}, {0, 0}}, kIdentity), DivergentMoment);
  try {
    TripletFamily({0, 0}, {0, 0}, PoissonIntensity{{-1.0, 1.0}, 1.0}, kCanonical);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("intensity_range"), std::string::npos);
  }
}

TEST(Family, JsonRoundTrip) {
  const std::vector<TripletFamily> fams = {
      stable_box(),
      TripletFamily({0, 0}, {0, 0}, PoissonIntensity{{0.5, 1.5}, 1.0}, kOpenUnit),
      TripletFamily({-0.1, 0.3}, {0.1, 0.2}, NoJumps{}, kCanonical),
      TripletFamily({0.1, 0.1}, {0, 0}, FixedMeasure{LevyMeasure::atomic({{0.1 + 0.2, 1.0 / 3.0}, {-2.0, 0.5}})},
                    kIdentity),
  };
  for (const auto& f : fams) {
    const json j = f;
    const auto back = json::parse(j.dump()).get<TripletFamily>();
    EXPECT_EQ(back, f) << j.dump();
    EXPECT_EQ(fingerprint(back), fingerprint(f));
  }
  EXPECT_NE(fingerprint(fams[0]), fingerprint(fams[1]));
}

TEST(Family, JsonErrorsNameTheKey) {
  const auto bad = json::parse(R"({"drift_range":[0,0],"diffusion_range":[0,0],
    "jump_family":{"kind":"stable","params":{"alpha":1.5,"k_plus_range":[0.5,1]}},"truncation":"canonical"})");
  try {
    (void)bad.get<TripletFamily>();
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("k_minus_range"), std::string::npos) << e.what();
  }
}
