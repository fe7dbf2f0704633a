#pragma once

// The nonlinear generator
//
//   G(p, q, f) = sup_{(b,c,F) ∈ Θ} { p b + ½ q c + ∫ [f(z) − f(0) − f'(0) h(z)] F(dz) }
//
// and its split version G^κ. Jumps with |z| <= κ enter through the Taylor
// surrogate ½ f''(0) ∫_{|z|<=κ} z² F(dz); jumps beyond κ are integrated
// exactly (atoms) or with composite Gauss–Legendre on log-spaced panels
// (stable tails). Θ is a parameter box and the bracket is affine in the
// parameters, so the supremum is a maximum over the box vertices.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "nlevy/detail/numeric.hpp"
#include "nlevy/errors.hpp"
#include "nlevy/levy_triplets.hpp"
#include "nlevy/sampled_function.hpp"

namespace nlevy {

inline constexpr double kDefaultKappa = 1e-2;

// ---------------------------------------------------------------------------
// Large-jump quadrature

struct QuadNode {
  double z;
  double w;  ///< quadrature weight times the Lévy density (or the atom mass)
};

/// Nodes for ∫_{|z|>κ} g(z) F(dz). Mass beyond the last node on each side is
/// kept separately so it can be closed analytically.
struct LargeJumpRule {
  std::vector<QuadNode> nodes;
  double closure_plus = 0.0;
  double closure_minus = 0.0;

  double node_mass() const {
    double s = 0.0;
    for (const auto& n : nodes) s += n.w;
    return s;
  }
};

struct QuadratureOptions {
  std::size_t panels_per_side = 64;  ///< 8 Gauss–Legendre nodes each: 512 nodes per half-line
  double closure_tolerance = 1e-10;  ///< target for residual tail mass · 2 sup|f|
};

namespace detail {

inline void append_stable_side(std::vector<QuadNode>& out, double sign, double k, double alpha, double kappa,
                               double horizon, std::span<const double> kinks, std::size_t panels) {
  if (k == 0.0 || horizon <= kappa) return;
  std::vector<double> edges;
  edges.reserve(panels + 1 + kinks.size());
  const double ratio = std::log(horizon / kappa);
  for (std::size_t j = 0; j <= panels; ++j)
    edges.push_back(kappa * std::exp(ratio * static_cast<double>(j) / static_cast<double>(panels)));
  edges.back() = horizon;
  for (double kink : kinks) {
    const double a = sign * kink;
    if (a > kappa && a < horizon) edges.push_back(a);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  using GL = boost::math::quadrature::gauss<double, 8>;
  const auto& abscissa = GL::abscissa();
  const auto& weights = GL::weights();
  for (std::size_t j = 0; j + 1 < edges.size(); ++j) {
    const double mid = 0.5 * (edges[j] + edges[j + 1]);
    const double half = 0.5 * (edges[j + 1] - edges[j]);
    for (std::size_t i = 0; i < abscissa.size(); ++i) {
      for (double s : {-1.0, 1.0}) {
        const double z = mid + s * half * abscissa[i];
        out.push_back({sign * z, half * weights[i] * k * std::pow(z, -alpha - 1.0)});
      }
    }
  }
}

}  // namespace detail

/// Quadrature rule for ∫_{|z|>κ} · F(dz) with panels ending at horizon_plus
/// (positive side) and horizon_minus (negative side).
inline LargeJumpRule large_jump_rule(const LevyMeasure& F, double kappa, double horizon_plus, double horizon_minus,
                                     std::span<const double> kinks = {}, const QuadratureOptions& opt = {}) {
  if (!(kappa > 0.0)) throw std::invalid_argument("large_jump_rule: kappa must be > 0");
  LargeJumpRule rule;
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, FiniteAtomic>) {
          for (const auto& a : m.atoms)
            if (std::abs(a.z) > kappa && a.w > 0.0) rule.nodes.push_back({a.z, a.w});
        } else if constexpr (std::is_same_v<T, AlphaStable>) {
          detail::append_stable_side(rule.nodes, 1.0, m.k_plus, m.alpha, kappa, horizon_plus, kinks,
                                     opt.panels_per_side);
          detail::append_stable_side(rule.nodes, -1.0, m.k_minus, m.alpha, kappa, horizon_minus, kinks,
                                     opt.panels_per_side);
          rule.closure_plus = m.k_plus * std::pow(std::max(kappa, horizon_plus), -m.alpha) / m.alpha;
          rule.closure_minus = m.k_minus * std::pow(std::max(kappa, horizon_minus), -m.alpha) / m.alpha;
        }
      },
      F.get());
  return rule;
}

/// Horizon for one side of a stable tail: where f is known to be flat, or
/// else far enough that the residual mass times 2 sup|f| is below tolerance.
inline double quadrature_horizon(double k_side, double alpha, double kappa, const SampledFunction& f,
                                 const QuadratureOptions& opt = {}) {
  if (const auto t = f.tails()) return std::max(t->radius, kappa);
  const double b = f.base_bound();
  if (k_side == 0.0 || b == 0.0) return kappa;
  if (!std::isfinite(b)) throw std::invalid_argument("quadrature_horizon: function bound must be finite");
  const double z = std::pow(2.0 * b * k_side / (alpha * opt.closure_tolerance), 1.0 / alpha);
  return std::max(z, 2.0 * kappa);
}

inline LargeJumpRule large_jump_rule_for(const LevyMeasure& F, double kappa, const SampledFunction& f,
                                         const QuadratureOptions& opt = {}) {
  double hp = kappa;
  double hm = kappa;
  if (const auto* s = std::get_if<AlphaStable>(&F.get())) {
    hp = quadrature_horizon(s->k_plus, s->alpha, kappa, f, opt);
    hm = quadrature_horizon(s->k_minus, s->alpha, kappa, f, opt);
  }
  const auto kinks = f.kinks();
  return large_jump_rule(F, kappa, hp, hm, kinks, opt);
}

/// ∫_{|z|>κ} [f(z) − f(0)] F(dz) on a prepared rule. The closure uses the
/// function's limits when it declares flat tails and is dropped otherwise
/// (the horizon was chosen to make it negligible).
inline double integrate_large_jumps(const LargeJumpRule& rule, const SampledFunction& f) {
  double s = 0.0;
  for (const auto& n : rule.nodes) s += n.w * f.increment(n.z, 0.0);
  if (const auto t = f.tail_increments(0.0)) s += rule.closure_plus * t->first + rule.closure_minus * t->second;
  return s;
}

// ---------------------------------------------------------------------------
// Lévy functional and the generators

struct GeneratorInput {
  double p = 0.0;
  double q = 0.0;
  SampledFunction f;
  double kappa = kDefaultKappa;
};

struct FunctionalValue {
  double value = 0.0;
  /// Bound on |exact small-jump integral − Taylor surrogate|; +inf when g
  /// does not declare a third-derivative bound but small jumps are present.
  double remainder_bound = 0.0;
};

/// One triplet's bracket with the large-jump integral taken on f and the
/// small-jump part, together with the gradient in the h-term, taken on g.
inline FunctionalValue split_functional(const LevyTriplet& t, double p, double q, const SampledFunction& f,
                                        const SampledFunction& g, double kappa, const TruncationSpec& h,
                                        const QuadratureOptions& opt = {}) {
  if (!(kappa > 0.0)) throw std::invalid_argument("generator: kappa must be > 0");
  if (!h.linear_on_ball(kappa))
    throw std::invalid_argument("generator: kappa must keep h(z)=z on {|z|<=kappa} (kappa <= 1, or < 1 for open_unit)");

  FunctionalValue out;
  out.value = p * t.b + 0.5 * q * t.c;
  if (t.F.is_zero()) return out;

  const double sigma2 = small_jump_second_moment(t.F, kappa);
  const double comp = compensator_drift(t.F, h, kappa);
  const bool needs_gradient = comp != 0.0;
  const double dg0 = (needs_gradient || g.has_gradient()) ? g.gradient_at_zero() : 0.0;

  const auto rule = large_jump_rule_for(t.F, kappa, f, opt);
  out.value += integrate_large_jumps(rule, f) - dg0 * comp;

  if (sigma2 > 0.0) {
    const auto d2 = g.second_derivative_at_zero();
    if (!d2)
      throw MissingSecondDerivative(
          "generator: the measure charges {|z|<=kappa} but the function has no second derivative at 0");
    out.value += 0.5 * *d2 * sigma2;
    const auto m3 = g.third_derivative_bound();
    out.remainder_bound = m3 ? *m3 / 6.0 * small_jump_third_abs_moment(t.F, kappa)
                             : std::numeric_limits<double>::infinity();
  }
  return out;
}

/// p b + ½ q c + ∫_{|z|>κ}[f(z) − f(0) − f'(0) h(z)] F(dz) + ½ f''(0) ∫_{|z|<=κ} z² F(dz).
inline double levy_functional(const LevyTriplet& t, const GeneratorInput& in, const TruncationSpec& h = {},
                              const QuadratureOptions& opt = {}) {
  return split_functional(t, in.p, in.q, in.f, in.f, in.kappa, h, opt).value;
}

struct GeneratorValue {
  double value = 0.0;
  std::size_t argmax = 0;
  std::vector<double> per_vertex;
};

namespace detail {

inline void dump_vertices(std::ostream& os, const std::vector<TripletFamily::Vertex>& verts,
                          const std::vector<double>& vals) {
  os << "vertex,label,value\n";
  for (std::size_t i = 0; i < verts.size(); ++i)
    os << i << ",\"" << verts[i].label << "\"," << format_double(vals[i]) << '\n';
}

}  // namespace detail

/// G(p, q, f) over the box vertices of Θ. When verbose is non-null the
/// per-vertex values are written to it as CSV rows.
inline GeneratorValue g_eval(const TripletFamily& theta, const GeneratorInput& in, std::ostream* verbose = nullptr,
                             const QuadratureOptions& opt = {}) {
  const auto verts = theta.vertices();
  GeneratorValue out;
  out.per_vertex.reserve(verts.size());
  for (std::size_t i = 0; i < verts.size(); ++i) {
    const double v = levy_functional(verts[i].triplet, in, theta.truncation(), opt);
    out.per_vertex.push_back(v);
    if (i == 0 || v > out.value) {
      out.value = v;
      out.argmax = i;
    }
  }
  if (verbose) detail::dump_vertices(*verbose, verts, out.per_vertex);
  return out;
}

struct KappaGeneratorValue {
  double value = 0.0;
  double remainder_bound = 0.0;
  std::size_t argmax = 0;
};

/// G^κ(p, q, f, g): large jumps see f, small jumps and the gradient see g.
inline KappaGeneratorValue g_kappa_eval(const TripletFamily& theta, double p, double q, const SampledFunction& f,
                                        const SampledFunction& g, double kappa, const QuadratureOptions& opt = {}) {
  if (!(kappa > 0.0 && kappa < 1.0)) throw std::invalid_argument("g_kappa_eval: kappa must lie in (0,1)");
  const auto verts = theta.vertices();
  KappaGeneratorValue out;
  for (std::size_t i = 0; i < verts.size(); ++i) {
    const auto v = split_functional(verts[i].triplet, p, q, f, g, kappa, theta.truncation(), opt);
    if (i == 0 || v.value > out.value) {
      out.value = v.value;
      out.argmax = i;
    }
    out.remainder_bound = std::max(out.remainder_bound, v.remainder_bound);
  }
  return out;
}

/// Constant C in |G^κ(p₁,q₁,f+ψ,g+ψ) − G^κ(p₂,q₂,f,g)| <= C(|Δp| + |Δq| + ‖ψ'‖ + ‖ψ''‖).
///
/// Per vertex the difference is at most |b||Δp| + ½|c||Δq| + ½‖ψ''‖∫_{|z|<=1} z²F
/// + ‖ψ'‖∫_{|z|>1}|z|F, which the integrability constant 𝒦 dominates, except
/// that with the identity truncation the h-term contributes another
/// ‖ψ'‖∫_{|z|>1}|z|F. C = 2𝒦 covers every truncation.
inline double lipschitz_constant(const TripletFamily& theta) { return 2.0 * family_K(theta); }

}  // namespace nlevy
