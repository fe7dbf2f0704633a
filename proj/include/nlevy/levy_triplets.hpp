#pragma once

// Lévy triplets (b, c, F) in dimension one, the measure functionals the rest
// of the library is built on, and box-parameterized families of triplets.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "nlevy/detail/numeric.hpp"
#include "nlevy/errors.hpp"

namespace nlevy {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Truncation functions

enum class Truncation {
  Canonical,  ///< h(z) = z 1_{|z| <= 1}
  Identity,   ///< h(z) = z; needs ∫_{|z|>1} |z| F(dz) < ∞
  OpenUnit,   ///< h(z) = z 1_{|z| < 1}; an atom at ±1 is then an uncompensated jump
};

struct TruncationSpec {
  Truncation kind = Truncation::Canonical;

  double operator()(double z) const noexcept {
    switch (kind) {
      case Truncation::Canonical: return std::abs(z) <= 1.0 ? z : 0.0;
      case Truncation::OpenUnit: return std::abs(z) < 1.0 ? z : 0.0;
      case Truncation::Identity: return z;
    }
    return z;
  }

  bool bounded() const noexcept { return kind != Truncation::Identity; }

  /// True when h(z) = z on the whole closed ball {|z| <= r}.
  bool linear_on_ball(double r) const noexcept {
    switch (kind) {
      case Truncation::Canonical: return r <= 1.0;
      case Truncation::OpenUnit: return r < 1.0;
      case Truncation::Identity: return true;
    }
    return false;
  }

  friend bool operator==(const TruncationSpec&, const TruncationSpec&) = default;
};

inline std::string to_string(Truncation t) {
  switch (t) {
    case Truncation::Canonical: return "canonical";
    case Truncation::Identity: return "identity";
    case Truncation::OpenUnit: return "open_unit";
  }
  return "canonical";
}

inline TruncationSpec parse_truncation(const std::string& s) {
  if (s == "canonical") return {Truncation::Canonical};
  if (s == "identity") return {Truncation::Identity};
  if (s == "open_unit") return {Truncation::OpenUnit};
  throw ConfigError("truncation: unknown variant '" + s + "' (expected canonical, identity or open_unit)");
}

// ---------------------------------------------------------------------------
// Lévy measures

struct Atom {
  double z;
  double w;
  friend bool operator==(const Atom&, const Atom&) = default;
};

struct ZeroMeasure {
  friend bool operator==(const ZeroMeasure&, const ZeroMeasure&) = default;
};

struct FiniteAtomic {
  std::vector<Atom> atoms;
  friend bool operator==(const FiniteAtomic&, const FiniteAtomic&) = default;
};

/// Density (k₋ 1_{z<0} + k₊ 1_{z>0}) |z|^{-α-1}.
struct AlphaStable {
  double alpha;
  double k_plus;
  double k_minus;
  friend bool operator==(const AlphaStable&, const AlphaStable&) = default;
};

class LevyMeasure {
 public:
  using Variant = std::variant<ZeroMeasure, FiniteAtomic, AlphaStable>;

  LevyMeasure() = default;

  static LevyMeasure zero() { return LevyMeasure(ZeroMeasure{}); }

  static LevyMeasure atomic(std::vector<Atom> atoms) {
    for (const auto& a : atoms) {
      if (!(a.z != 0.0) || !std::isfinite(a.z))
        throw std::invalid_argument("atomic Levy measure: atom location must be finite and nonzero");
      if (!(a.w >= 0.0) || !std::isfinite(a.w))
        throw std::invalid_argument("atomic Levy measure: atom weight must be finite and >= 0");
    }
    return LevyMeasure(FiniteAtomic{std::move(atoms)});
  }

  static LevyMeasure stable(double alpha, double k_plus, double k_minus) {
    if (!(alpha > 0.0 && alpha < 2.0)) throw std::invalid_argument("stable Levy measure: alpha must lie in (0,2)");
    if (!(k_plus >= 0.0) || !(k_minus >= 0.0) || !std::isfinite(k_plus) || !std::isfinite(k_minus))
      throw std::invalid_argument("stable Levy measure: k_plus and k_minus must be finite and >= 0");
    return LevyMeasure(AlphaStable{alpha, k_plus, k_minus});
  }

  const Variant& get() const noexcept { return v_; }
  bool is_zero() const noexcept { return std::holds_alternative<ZeroMeasure>(v_); }

  /// Image under z -> -z.
  LevyMeasure mirrored() const {
    return std::visit(
        [](const auto& m) -> LevyMeasure {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, ZeroMeasure>) {
            return LevyMeasure::zero();
          } else if constexpr (std::is_same_v<T, FiniteAtomic>) {
            std::vector<Atom> out;
            out.reserve(m.atoms.size());
            for (const auto& a : m.atoms) out.push_back({-a.z, a.w});
            return LevyMeasure::atomic(std::move(out));
          } else {
            return LevyMeasure::stable(m.alpha, m.k_minus, m.k_plus);
          }
        },
        v_);
  }

  friend bool operator==(const LevyMeasure&, const LevyMeasure&) = default;

 private:
  explicit LevyMeasure(Variant v) : v_(std::move(v)) {}
  Variant v_{ZeroMeasure{}};
};

namespace detail {

/// ∫_a^b z^{-p} dz for 0 < a <= b (b may be +inf when p > 1).
inline double power_integral(double a, double b, double p) {
  if (b <= a) return 0.0;
  if (p == 1.0) return std::log(b / a);
  if (std::isinf(b)) return std::pow(a, 1.0 - p) / (p - 1.0);
  return (std::pow(b, 1.0 - p) - std::pow(a, 1.0 - p)) / (1.0 - p);
}

}  // namespace detail

/// ∫_{|z|<=eps} z² F(dz).
inline double small_jump_second_moment(const LevyMeasure& F, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("small_jump_second_moment: eps must be > 0");
  return std::visit(
      [eps](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, ZeroMeasure>) {
          return 0.0;
        } else if constexpr (std::is_same_v<T, FiniteAtomic>) {
          double s = 0.0;
          for (const auto& a : m.atoms)
            if (std::abs(a.z) <= eps) s += a.w * a.z * a.z;
          return s;
        } else {
          return (m.k_plus + m.k_minus) * std::pow(eps, 2.0 - m.alpha) / (2.0 - m.alpha);
        }
      },
      F.get());
}

/// ∫_{|z|<=eps} |z|³ F(dz); feeds the Taylor remainder bound of the small-jump surrogate.
inline double small_jump_third_abs_moment(const LevyMeasure& F, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("small_jump_third_abs_moment: eps must be > 0");
  return std::visit(
      [eps](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, ZeroMeasure>) {
          return 0.0;
        } else if constexpr (std::is_same_v<T, FiniteAtomic>) {
          double s = 0.0;
          for (const auto& a : m.atoms)
            if (std::abs(a.z) <= eps) s += a.w * std::abs(a.z * a.z * a.z);
          return s;
        } else {
          return (m.k_plus + m.k_minus) * std::pow(eps, 3.0 - m.alpha) / (3.0 - m.alpha);
        }
      },
      F.get());
}

/// ∫ |z| ∧ |z|² F(dz). Throws DivergentMoment when the tail ∫_{|z|>1}|z| F(dz) is infinite.
inline double truncated_first_second_moment(const LevyMeasure& F) {
  return std::visit(
      [](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, ZeroMeasure>) {
          return 0.0;
        } else if constexpr (std::is_same_v<T, FiniteAtomic>) {
          double s = 0.0;
          for (const auto& a : m.atoms) s += a.w * std::min(std::abs(a.z), a.z * a.z);
          return s;
        } else {
          const double k = m.k_plus + m.k_minus;
          if (k == 0.0) return 0.0;
          if (m.alpha <= 1.0)
            throw DivergentMoment("truncated_first_second_moment: tail integral of |z| diverges for alpha=" +
                                  std::to_string(m.alpha) + " <= 1");
          return k * (1.0 / (2.0 - m.alpha) + 1.0 / (m.alpha - 1.0));
        }
      },
      F.get());
}

/// F({|z| > eps}).
inline double tail_intensity(const LevyMeasure& F, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("tail_intensity: eps must be > 0");
  return std::visit(
      [eps](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, ZeroMeasure>) {
          return 0.0;
        } else if constexpr (std::is_same_v<T, FiniteAtomic>) {
          double s = 0.0;
          for (const auto& a : m.atoms)
            if (std::abs(a.z) > eps) s += a.w;
          return s;
        } else {
          return (m.k_plus + m.k_minus) * std::pow(eps, -m.alpha) / m.alpha;
        }
      },
      F.get());
}

/// ∫_{|z|>eps} h(z) F(dz): the drift carried by jumps beyond eps that the
/// truncation compensates. Simulations and the PIDE scheme subtract it from b.
inline double compensator_drift(const LevyMeasure& F, const TruncationSpec& h, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("compensator_drift: eps must be > 0");
  return std::visit(
      [&](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, ZeroMeasure>) {
          return 0.0;
        } else if constexpr (std::is_same_v<T, FiniteAtomic>) {
          double s = 0.0;
          for (const auto& a : m.atoms)
            if (std::abs(a.z) > eps) s += a.w * h(a.z);
          return s;
        } else {
          const double skew = m.k_plus - m.k_minus;
          if (h.kind == Truncation::Identity) {
            if (m.k_plus + m.k_minus == 0.0) return 0.0;
            if (m.alpha <= 1.0)
              throw DivergentMoment("compensator_drift: identity truncation needs alpha > 1, got alpha=" +
                                    std::to_string(m.alpha));
            return skew * detail::power_integral(eps, std::numeric_limits<double>::infinity(), m.alpha);
          }
          // Bounded truncations vanish beyond the unit ball; the boundary |z|=1 is a null set.
          return skew * detail::power_integral(eps, 1.0, m.alpha);
        }
      },
      F.get());
}

// ---------------------------------------------------------------------------
// Triplets and families

struct LevyTriplet {
  double b = 0.0;
  double c = 0.0;
  LevyMeasure F;

  LevyTriplet() = default;
  LevyTriplet(double drift, double diffusion, LevyMeasure measure) : b(drift), c(diffusion), F(std::move(measure)) {
    if (!std::isfinite(b)) throw std::invalid_argument("LevyTriplet: drift must be finite");
    if (!(c >= 0.0) || !std::isfinite(c)) throw std::invalid_argument("LevyTriplet: diffusion must be finite and >= 0");
  }

  friend bool operator==(const LevyTriplet&, const LevyTriplet&) = default;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool degenerate() const noexcept { return lo == hi; }
  double at(double u) const noexcept { return u <= 0.0 ? lo : (u >= 1.0 ? hi : lo + u * (hi - lo)); }
  friend bool operator==(const Interval&, const Interval&) = default;
};

struct NoJumps {
  friend bool operator==(const NoJumps&, const NoJumps&) = default;
};
struct PoissonIntensity {
  Interval intensity;
  double atom = 1.0;
  friend bool operator==(const PoissonIntensity&, const PoissonIntensity&) = default;
};
struct StableCoefficients {
  double alpha = 1.5;
  Interval k_plus;
  Interval k_minus;
  friend bool operator==(const StableCoefficients&, const StableCoefficients&) = default;
};
struct FixedMeasure {
  LevyMeasure measure;
  friend bool operator==(const FixedMeasure&, const FixedMeasure&) = default;
};

using JumpFamily = std::variant<NoJumps, PoissonIntensity, StableCoefficients, FixedMeasure>;

/// Θ = {(b, c, F(θ)) : b ∈ [b⁻,b⁺], c ∈ [c⁻,c⁺], θ in a box}, where F depends
/// linearly on the jump parameters. Every map (b, c, θ) -> triplet functional
/// used downstream is affine (or convex) in the parameters, so suprema over Θ
/// are attained at the box vertices.
class TripletFamily {
 public:
  struct Vertex {
    LevyTriplet triplet;
    /// Weights of triplet.F on jump_basis().
    std::vector<double> basis_weights;
    std::string label;
  };

  TripletFamily() : TripletFamily(Interval{}, Interval{}, NoJumps{}, TruncationSpec{}) {}

  TripletFamily(Interval drift, Interval diffusion, JumpFamily jumps, TruncationSpec h)
      : drift_(drift), diffusion_(diffusion), jumps_(std::move(jumps)), h_(h) {
    validate();
  }

  const Interval& drift_range() const noexcept { return drift_; }
  const Interval& diffusion_range() const noexcept { return diffusion_; }
  const JumpFamily& jump_family() const noexcept { return jumps_; }
  const TruncationSpec& truncation() const noexcept { return h_; }

  /// Non-degenerate parameter axes, in the order (b, c, jump₁, jump₂).
  std::vector<std::size_t> active_axes() const {
    std::vector<std::size_t> axes;
    const auto ranges = axis_ranges();
    for (std::size_t d = 0; d < ranges.size(); ++d)
      if (ranges[d] && !ranges[d]->degenerate()) axes.push_back(d);
    return axes;
  }

  /// Measures whose nonnegative combinations make up every F in the family.
  std::vector<LevyMeasure> jump_basis() const {
    return std::visit(
        [](const auto& j) -> std::vector<LevyMeasure> {
          using T = std::decay_t<decltype(j)>;
          if constexpr (std::is_same_v<T, NoJumps>) {
            return {};
          } else if constexpr (std::is_same_v<T, PoissonIntensity>) {
            return {LevyMeasure::atomic({{j.atom, 1.0}})};
          } else if constexpr (std::is_same_v<T, StableCoefficients>) {
            return {LevyMeasure::stable(j.alpha, 1.0, 0.0), LevyMeasure::stable(j.alpha, 0.0, 1.0)};
          } else {
            return {j.measure};
          }
        },
        jumps_);
  }

  /// The triplet at unit-cube coordinates u = (u_b, u_c, u_j1, u_j2).
  LevyTriplet triplet_at(const std::array<double, 4>& u) const {
    return LevyTriplet(drift_.at(u[0]), diffusion_.at(u[1]), measure_at(u[2], u[3]));
  }

  std::vector<double> basis_weights_at(double u2, double u3) const {
    return std::visit(
        [&](const auto& j) -> std::vector<double> {
          using T = std::decay_t<decltype(j)>;
          if constexpr (std::is_same_v<T, NoJumps>) {
            return {};
          } else if constexpr (std::is_same_v<T, PoissonIntensity>) {
            return {j.intensity.at(u2)};
          } else if constexpr (std::is_same_v<T, StableCoefficients>) {
            return {j.k_plus.at(u2), j.k_minus.at(u3)};
          } else {
            return {1.0};
          }
        },
        jumps_);
  }

  /// Distinct vertices of the parameter box (2^m of them for m active axes).
  std::vector<Vertex> vertices() const {
    const auto axes = active_axes();
    const std::size_t n = std::size_t{1} << axes.size();
    std::vector<Vertex> out;
    out.reserve(n);
    for (std::size_t idx = 0; idx < n; ++idx) {
      std::array<double, 4> u{0.0, 0.0, 0.0, 0.0};
      for (std::size_t k = 0; k < axes.size(); ++k) u[axes[k]] = ((idx >> k) & 1U) ? 1.0 : 0.0;
      Vertex v{triplet_at(u), basis_weights_at(u[2], u[3]), {}};
      v.label = vertex_label(v, u);
      out.push_back(std::move(v));
    }
    return out;
  }

  bool singleton() const { return active_axes().empty(); }

  friend bool operator==(const TripletFamily&, const TripletFamily&) = default;

 private:
  std::array<const Interval*, 4> axis_ranges() const {
    std::array<const Interval*, 4> r{&drift_, &diffusion_, nullptr, nullptr};
    if (const auto* p = std::get_if<PoissonIntensity>(&jumps_)) {
      r[2] = &p->intensity;
    } else if (const auto* s = std::get_if<StableCoefficients>(&jumps_)) {
      r[2] = &s->k_plus;
      r[3] = &s->k_minus;
    }
    return r;
  }

  LevyMeasure measure_at(double u2, double u3) const {
    return std::visit(
        [&](const auto& j) -> LevyMeasure {
          using T = std::decay_t<decltype(j)>;
          if constexpr (std::is_same_v<T, NoJumps>) {
            return LevyMeasure::zero();
          } else if constexpr (std::is_same_v<T, PoissonIntensity>) {
            return LevyMeasure::atomic({{j.atom, j.intensity.at(u2)}});
          } else if constexpr (std::is_same_v<T, StableCoefficients>) {
            return LevyMeasure::stable(j.alpha, j.k_plus.at(u2), j.k_minus.at(u3));
          } else {
            return j.measure;
          }
        },
        jumps_);
  }

  std::string vertex_label(const Vertex& v, const std::array<double, 4>& u) const {
    std::string s = "b=" + detail::format_double(v.triplet.b) + ";c=" + detail::format_double(v.triplet.c);
    if (const auto* p = std::get_if<PoissonIntensity>(&jumps_)) {
      s += ";lambda=" + detail::format_double(p->intensity.at(u[2]));
    } else if (const auto* st = std::get_if<StableCoefficients>(&jumps_)) {
      s += ";k_plus=" + detail::format_double(st->k_plus.at(u[2]));
      s += ";k_minus=" + detail::format_double(st->k_minus.at(u[3]));
    }
    return s;
  }

  static void check_interval(const Interval& r, const char* what) {
    if (!std::isfinite(r.lo) || !std::isfinite(r.hi) || r.lo > r.hi)
      throw ConfigError(std::string(what) + ": need finite lo <= hi");
  }

  void validate() const {
    check_interval(drift_, "drift_range");
    check_interval(diffusion_, "diffusion_range");
    if (diffusion_.lo < 0.0) throw ConfigError("diffusion_range: lower end must be >= 0");
    if (const auto* p = std::get_if<PoissonIntensity>(&jumps_)) {
      check_interval(p->intensity, "jump_family.params.intensity_range");
      if (p->intensity.lo < 0.0) throw ConfigError("jump_family.params.intensity_range: intensities must be >= 0");
      if (!(p->atom != 0.0) || !std::isfinite(p->atom)) throw ConfigError("jump_family.params.atom: must be nonzero");
    } else if (const auto* s = std::get_if<StableCoefficients>(&jumps_)) {
      if (!(s->alpha > 0.0 && s->alpha < 2.0)) throw ConfigError("jump_family.params.alpha: must lie in (0,2)");
      check_interval(s->k_plus, "jump_family.params.k_plus_range");
      check_interval(s->k_minus, "jump_family.params.k_minus_range");
      if (s->k_plus.lo < 0.0 || s->k_minus.lo < 0.0)
        throw ConfigError("jump_family.params: stable coefficients must be >= 0");
    }
    // The identity truncation is only admissible when every F integrates |z| at infinity.
    if (h_.kind == Truncation::Identity)
      for (const auto& v : vertices()) (void)compensator_drift(v.triplet.F, h_, 1.0);
  }

  Interval drift_;
  Interval diffusion_;
  JumpFamily jumps_;
  TruncationSpec h_;
};

// ---------------------------------------------------------------------------
// Integrability report

struct ConditionReport {
  /// sup over Θ of ∫|z|∧|z|² F(dz) + |b| + |c|.
  double K = 0.0;
  std::size_t K_vertex = 0;
  /// (ε, sup over Θ of ∫_{|z|<=ε} z² F(dz)), sorted by decreasing ε.
  std::vector<std::pair<double, double>> K_eps;
  bool intcond_ok = true;
  bool limit_trend_ok = true;

  bool ok() const noexcept { return intcond_ok && limit_trend_ok; }
};

/// Suprema are taken over the box vertices: |b| is convex in b and the moment
/// functionals are linear in the jump intensities.
inline ConditionReport family_condition_report(const TripletFamily& theta, std::vector<double> eps_list) {
  ConditionReport rep;
  const auto verts = theta.vertices();
  for (std::size_t i = 0; i < verts.size(); ++i) {
    const auto& t = verts[i].triplet;
    const double k = truncated_first_second_moment(t.F) + std::abs(t.b) + std::abs(t.c);
    if (i == 0 || k > rep.K) {
      rep.K = k;
      rep.K_vertex = i;
    }
  }
  rep.intcond_ok = std::isfinite(rep.K);

  std::sort(eps_list.begin(), eps_list.end(), std::greater<>());
  for (double eps : eps_list) {
    double sup = 0.0;
    for (const auto& v : verts) sup = std::max(sup, small_jump_second_moment(v.triplet.F, eps));
    rep.K_eps.emplace_back(eps, sup);
  }
  for (std::size_t i = 1; i < rep.K_eps.size(); ++i)
    if (rep.K_eps[i].second > rep.K_eps[i - 1].second) rep.limit_trend_ok = false;
  if (rep.K_eps.size() >= 2 && rep.K_eps.back().second != 0.0 &&
      !(rep.K_eps.back().second < rep.K_eps.front().second))
    rep.limit_trend_ok = false;
  return rep;
}

/// The family's 𝒦 alone.
inline double family_K(const TripletFamily& theta) { return family_condition_report(theta, {}).K; }

// ---------------------------------------------------------------------------
// JSON

namespace detail {

inline const json& require(const json& j, const char* key, const std::string& ctx) {
  if (!j.is_object() || !j.contains(key)) throw ConfigError(ctx + ": missing key '" + key + "'");
  return j.at(key);
}

inline double require_number(const json& j, const char* key, const std::string& ctx) {
  const json& v = require(j, key, ctx);
  if (!v.is_number()) throw ConfigError(ctx + "." + key + ": expected a number");
  return v.get<double>();
}

inline Interval require_interval(const json& j, const char* key, const std::string& ctx) {
  const json& v = require(j, key, ctx);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
    throw ConfigError(ctx + "." + key + ": expected [lo, hi]");
  return {v[0].get<double>(), v[1].get<double>()};
}

}  // namespace detail

inline void to_json(json& j, const TruncationSpec& h) { j = to_string(h.kind); }
inline void from_json(const json& j, TruncationSpec& h) {
  if (!j.is_string()) throw ConfigError("truncation: expected a string");
  h = parse_truncation(j.get<std::string>());
}

inline void to_json(json& j, const Interval& r) { j = json::array({r.lo, r.hi}); }

inline void to_json(json& j, const LevyMeasure& F) {
  std::visit(
      [&j](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, ZeroMeasure>) {
          j = json{{"type", "zero"}};
        } else if constexpr (std::is_same_v<T, FiniteAtomic>) {
          json atoms = json::array();
          for (const auto& a : m.atoms) atoms.push_back(json::array({a.z, a.w}));
          j = json{{"type", "atomic"}, {"atoms", atoms}};
        } else {
          j = json{{"type", "stable"}, {"alpha", m.alpha}, {"k_plus", m.k_plus}, {"k_minus", m.k_minus}};
        }
      },
      F.get());
}

inline void from_json(const json& j, LevyMeasure& F) {
  const std::string ctx = "measure";
  const json& type = detail::require(j, "type", ctx);
  if (!type.is_string()) throw ConfigError("measure.type: expected a string");
  const auto t = type.get<std::string>();
  try {
    if (t == "zero") {
      F = LevyMeasure::zero();
    } else if (t == "atomic") {
      std::vector<Atom> atoms;
      for (const auto& a : detail::require(j, "atoms", ctx)) {
        if (!a.is_array() || a.size() != 2) throw ConfigError("measure.atoms: expected [[z, w], ...]");
        atoms.push_back({a[0].get<double>(), a[1].get<double>()});
      }
      F = LevyMeasure::atomic(std::move(atoms));
    } else if (t == "stable") {
      F = LevyMeasure::stable(detail::require_number(j, "alpha", ctx), detail::require_number(j, "k_plus", ctx),
                              detail::require_number(j, "k_minus", ctx));
    } else {
      throw ConfigError("measure.type: unknown '" + t + "'");
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("measure: ") + e.what());
  }
}

inline void to_json(json& j, const TripletFamily& f) {
  json jf;
  std::visit(
      [&jf](const auto& jump) {
        using T = std::decay_t<decltype(jump)>;
        if constexpr (std::is_same_v<T, NoJumps>) {
          jf = json{{"kind", "none"}, {"params", json::object()}};
        } else if constexpr (std::is_same_v<T, PoissonIntensity>) {
          jf = json{{"kind", "poisson"}, {"params", {{"intensity_range", jump.intensity}, {"atom", jump.atom}}}};
        } else if constexpr (std::is_same_v<T, StableCoefficients>) {
          jf = json{{"kind", "stable"},
                    {"params",
                     {{"alpha", jump.alpha}, {"k_plus_range", jump.k_plus}, {"k_minus_range", jump.k_minus}}}};
        } else {
          jf = json{{"kind", "fixed"}, {"params", {{"measure", jump.measure}}}};
        }
      },
      f.jump_family());
  j = json{{"drift_range", f.drift_range()},
           {"diffusion_range", f.diffusion_range()},
           {"jump_family", jf},
           {"truncation", f.truncation()}};
}

inline void from_json(const json& j, TripletFamily& f) {
  const std::string ctx = "theta";
  const Interval drift = detail::require_interval(j, "drift_range", ctx);
  const Interval diff = detail::require_interval(j, "diffusion_range", ctx);
  const json& jf = detail::require(j, "jump_family", ctx);
  const json& kind = detail::require(jf, "kind", "theta.jump_family");
  if (!kind.is_string()) throw ConfigError("theta.jump_family.kind: expected a string");
  const std::string k = kind.get<std::string>();
  const json params = jf.contains("params") ? jf.at("params") : json::object();
  const std::string pctx = "theta.jump_family.params";
  JumpFamily jumps;
  if (k == "none") {
    jumps = NoJumps{};
  } else if (k == "poisson") {
    jumps = PoissonIntensity{detail::require_interval(params, "intensity_range", pctx),
                             detail::require_number(params, "atom", pctx)};
  } else if (k == "stable") {
    jumps = StableCoefficients{detail::require_number(params, "alpha", pctx),
                               detail::require_interval(params, "k_plus_range", pctx),
                               detail::require_interval(params, "k_minus_range", pctx)};
  } else if (k == "fixed") {
    jumps = FixedMeasure{detail::require(params, "measure", pctx).get<LevyMeasure>()};
  } else {
    throw ConfigError("theta.jump_family.kind: unknown '" + k + "' (expected none, poisson, stable or fixed)");
  }
  TruncationSpec h;
  if (j.contains("truncation")) h = j.at("truncation").get<TruncationSpec>();
  f = TripletFamily(drift, diff, std::move(jumps), h);
}

inline std::string fingerprint(const TripletFamily& f) {
  detail::Fnv1a hash;
  hash.update(json(f).dump());
  return hash.hex();
}

}  // namespace nlevy
