#pragma once

// Monte Carlo for the sublinear expectation: classical Lévy paths for
// triplets in Θ, composed under piecewise-constant vertex policies.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "nlevy/detail/numeric.hpp"
#include "nlevy/errors.hpp"
#include "nlevy/generator.hpp"
#include "nlevy/levy_triplets.hpp"
#include "nlevy/pide_solver.hpp"
#include "nlevy/rng.hpp"
#include "nlevy/sampled_function.hpp"

namespace nlevy {

enum class SmallJumpMode { Gaussian, Dropped };

inline std::string to_string(SmallJumpMode m) { return m == SmallJumpMode::Gaussian ? "gaussian" : "dropped"; }

/// Engine plus a normal generator that keeps its cached second variate.
struct RandomStream {
  Xoshiro256 engine;
  std::normal_distribution<double> normal{0.0, 1.0};

  explicit RandomStream(Xoshiro256 e) : engine(e) {}
  double gaussian() { return normal(engine); }
  double uniform_pos() { return engine.uniform_pos(); }
  std::uint64_t poisson(double mean) {
    if (mean <= 0.0) return 0;
    std::poisson_distribution<std::uint64_t> d(mean);
    return d(engine);
  }
};

struct IncrementParts {
  double drift = 0.0;
  double gaussian = 0.0;
  double big_jumps = 0.0;
  double small_jumps = 0.0;
  std::uint64_t n_jumps = 0;

  double stochastic() const noexcept { return gaussian + big_jumps + small_jumps; }
  double total() const noexcept { return drift + stochastic(); }

  IncrementParts& operator+=(const IncrementParts& o) noexcept {
    drift += o.drift;
    gaussian += o.gaussian;
    big_jumps += o.big_jumps;
    small_jumps += o.small_jumps;
    n_jumps += o.n_jumps;
    return *this;
  }
};

/// Increment law of one triplet split at ε_sim: drift b_eff, Brownian part,
/// compound Poisson jumps with |z| > ε_sim and a Gaussian stand-in for the rest.
class IncrementLaw {
 public:
  IncrementLaw(const LevyTriplet& t, const TruncationSpec& h, double eps_sim) : c_(t.c), eps_(eps_sim) {
    if (!(eps_sim > 0.0)) throw std::invalid_argument("IncrementLaw: eps_sim must be > 0");
    if (!h.linear_on_ball(eps_sim))
      throw std::invalid_argument("IncrementLaw: eps_sim must keep h(z)=z on {|z|<=eps_sim}");
    b_eff_ = t.b - (t.F.is_zero() ? 0.0 : compensator_drift(t.F, h, eps_sim));
    rate_ = tail_intensity(t.F, eps_sim);
    small_variance_ = small_jump_second_moment(t.F, eps_sim);
    if (const auto* a = std::get_if<FiniteAtomic>(&t.F.get())) {
      double acc = 0.0;
      for (const auto& atom : a->atoms) {
        if (std::abs(atom.z) > eps_sim && atom.w > 0.0) {
          acc += atom.w;
          atoms_.push_back(atom.z);
          cumulative_.push_back(acc);
        }
      }
    } else if (const auto* s = std::get_if<AlphaStable>(&t.F.get())) {
      alpha_ = s->alpha;
      p_plus_ = (s->k_plus + s->k_minus) > 0.0 ? s->k_plus / (s->k_plus + s->k_minus) : 0.0;
    }
  }

  double b_eff() const noexcept { return b_eff_; }
  double rate() const noexcept { return rate_; }
  double small_variance() const noexcept { return small_variance_; }

  /// Size of one jump from the normalized tail measure on {|z| > ε_sim}.
  double sample_jump(RandomStream& rs) const {
    if (!atoms_.empty()) {
      const double u = rs.uniform_pos() * cumulative_.back();
      auto it = std::lower_bound(cumulative_.begin(), cumulative_.end(), u);
      if (it == cumulative_.end()) --it;
      return atoms_[static_cast<std::size_t>(it - cumulative_.begin())];
    }
    const double size = eps_ * std::pow(rs.uniform_pos(), -1.0 / alpha_);
    return rs.uniform_pos() <= p_plus_ ? size : -size;
  }

  IncrementParts sample(double dt, RandomStream& rs, SmallJumpMode mode) const {
    IncrementParts p;
    p.drift = b_eff_ * dt;
    sample_stochastic(dt, rs, mode, p);
    return p;
  }

  /// Fills the Brownian, big-jump and small-jump parts of p. The small-jump
  /// variate is drawn in both modes, so toggling the mode keeps the streams
  /// aligned and the two results are paired.
  void sample_stochastic(double dt, RandomStream& rs, SmallJumpMode mode, IncrementParts& p) const {
    if (c_ > 0.0) p.gaussian = std::sqrt(c_ * dt) * rs.gaussian();
    if (rate_ > 0.0) {
      p.n_jumps = rs.poisson(rate_ * dt);
      double s = 0.0;
      for (std::uint64_t j = 0; j < p.n_jumps; ++j) s += sample_jump(rs);
      p.big_jumps = s;
    }
    if (small_variance_ > 0.0) {
      const double g = rs.gaussian();
      if (mode == SmallJumpMode::Gaussian) p.small_jumps = std::sqrt(small_variance_ * dt) * g;
    }
  }

 private:
  double c_;
  double eps_;
  double b_eff_ = 0.0;
  double rate_ = 0.0;
  double small_variance_ = 0.0;
  std::vector<double> atoms_;
  std::vector<double> cumulative_;
  double alpha_ = 1.0;
  double p_plus_ = 0.5;
};

/// b_eff dt + √(c dt) N + Σ big jumps + small-jump surrogate.
inline IncrementParts sample_increment(const LevyTriplet& t, const TruncationSpec& h, double dt, double eps_sim,
                                       RandomStream& rs, SmallJumpMode mode = SmallJumpMode::Gaussian) {
  if (!(dt > 0.0)) throw std::invalid_argument("sample_increment: dt must be > 0");
  return IncrementLaw(t, h, eps_sim).sample(dt, rs, mode);
}

// ---------------------------------------------------------------------------
// Policies

/// Vertex index per node of a uniform grid, nearest node wins.
struct FeedbackRule {
  double x_min = 0.0;
  double dx = 1.0;
  std::vector<std::uint32_t> vertex;

  std::size_t operator()(double x) const {
    const double s = std::round((x - x_min) / dx);
    if (!(s > 0.0)) return vertex.front();
    const auto i = static_cast<std::size_t>(s);
    return vertex[std::min(i, vertex.size() - 1)];
  }
};

using IntervalChoice = std::variant<std::size_t, FeedbackRule>;

struct ControlPolicy {
  std::string id;
  std::vector<double> breakpoints;  ///< 0 = t_0 < ... < t_m = T
  std::vector<IntervalChoice> choices;

  double horizon() const { return breakpoints.back(); }
  std::size_t intervals() const { return choices.size(); }

  void validate(std::size_t n_vertices) const {
    if (breakpoints.size() < 2 || choices.size() + 1 != breakpoints.size())
      throw std::invalid_argument("policy " + id + ": need m+1 breakpoints for m intervals");
    if (breakpoints.front() != 0.0) throw std::invalid_argument("policy " + id + ": first breakpoint must be 0");
    for (std::size_t k = 1; k < breakpoints.size(); ++k)
      if (!(breakpoints[k] > breakpoints[k - 1])) throw std::invalid_argument("policy " + id + ": breakpoints must increase");
    for (const auto& c : choices) {
      if (const auto* v = std::get_if<std::size_t>(&c)) {
        if (*v >= n_vertices) throw std::invalid_argument("policy " + id + ": vertex index out of range");
      } else {
        const auto& r = std::get<FeedbackRule>(c);
        if (r.vertex.empty() || !(r.dx > 0.0)) throw std::invalid_argument("policy " + id + ": empty feedback rule");
        for (auto v : r.vertex)
          if (v >= n_vertices) throw std::invalid_argument("policy " + id + ": feedback vertex out of range");
      }
    }
  }
};

inline std::vector<double> uniform_breakpoints(double T, std::size_t m) {
  std::vector<double> b(m + 1);
  for (std::size_t k = 0; k <= m; ++k) b[k] = k == m ? T : T * static_cast<double>(k) / static_cast<double>(m);
  return b;
}

inline ControlPolicy constant_policy(std::size_t vertex, double T, std::size_t m = 1) {
  ControlPolicy p;
  p.id = "const:v" + std::to_string(vertex);
  p.breakpoints = uniform_breakpoints(T, m);
  p.choices.assign(m, IntervalChoice{vertex});
  return p;
}

/// Vertex maximizing the generator of the slice at x, for every node of a
/// (subsampled) grid.
inline FeedbackRule argmax_feedback(const TripletFamily& theta, const UniformGrid1D& slice, double kappa,
                                    std::size_t max_nodes = 801) {
  const std::size_t n = slice.values.size();
  const std::size_t stride = std::max<std::size_t>(1, (n + max_nodes - 1) / max_nodes);
  const auto f = SampledFunction::on_grid(slice);
  FeedbackRule rule;
  rule.x_min = slice.x_min;
  rule.dx = slice.dx * static_cast<double>(stride);
  for (std::size_t i = 0; i < n; i += stride) {
    const auto g = f.translated(slice.x_min + static_cast<double>(i) * slice.dx);
    const auto val = g_eval(theta, {g.gradient_at_zero(), *g.second_derivative_at_zero(), g, kappa});
    rule.vertex.push_back(static_cast<std::uint32_t>(val.argmax));
  }
  return rule;
}

/// Constant vertex policies, every single switch v_i -> v_j (i != j) at each
/// interior breakpoint of m uniform intervals, and, given a surface, one
/// feedback policy that picks the generator's argmax vertex at each interval
/// start. The surface is read at time value_time_offset + (T − s) for an
/// interval starting at s.
inline std::vector<ControlPolicy> default_policy_set(const TripletFamily& theta, std::size_t m, double T,
                                                     const ValueSurface* surface = nullptr,
                                                     double value_time_offset = 0.0,
                                                     double kappa = kDefaultKappa) {
  if (m < 1) throw std::invalid_argument("default_policy_set: need at least one interval");
  if (!(T > 0.0)) throw std::invalid_argument("default_policy_set: horizon must be > 0");
  const std::size_t nv = theta.vertices().size();
  const auto bps = uniform_breakpoints(T, m);
  std::vector<ControlPolicy> out;
  for (std::size_t v = 0; v < nv; ++v) out.push_back(constant_policy(v, T, m));
  for (std::size_t k = 1; k < m; ++k) {
    for (std::size_t i = 0; i < nv; ++i) {
      for (std::size_t j = 0; j < nv; ++j) {
        if (i == j) continue;
        ControlPolicy p;
        p.id = "switch:v" + std::to_string(i) + ">v" + std::to_string(j) + "@" + std::to_string(k);
        p.breakpoints = bps;
        for (std::size_t q = 0; q < m; ++q) p.choices.emplace_back(q < k ? i : j);
        out.push_back(std::move(p));
      }
    }
  }
  if (surface) {
    ControlPolicy p;
    p.id = "feedback";
    p.breakpoints = bps;
    for (std::size_t q = 0; q < m; ++q) {
      const double t = std::min(value_time_offset + (T - bps[q]), surface->grid.T);
      p.choices.emplace_back(argmax_feedback(theta, surface->grid_at(t), kappa));
    }
    out.push_back(std::move(p));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Paths

struct SimConfig {
  double eps_sim = 1e-2;
  std::optional<double> dt_sim;  ///< default min(shortest policy interval, 1e-2 T)
  SmallJumpMode small_jumps = SmallJumpMode::Gaussian;
  unsigned threads = 1;
};

struct PathSample {
  std::vector<IncrementParts> per_interval;
  std::vector<std::size_t> vertex;  ///< triplet used on each interval
  double terminal = 0.0;
  double max_abs_displacement = 0.0;  ///< sup over the sub-step grid of |X_u − x0|
};

class PolicySimulator {
 public:
  PolicySimulator(const TripletFamily& theta, SimConfig cfg) : cfg_(cfg) {
    for (const auto& v : theta.vertices()) laws_.emplace_back(v.triplet, theta.truncation(), cfg.eps_sim);
  }

  std::size_t vertices() const noexcept { return laws_.size(); }
  const IncrementLaw& law(std::size_t v) const { return laws_.at(v); }

  double sub_step(const ControlPolicy& p) const {
    if (cfg_.dt_sim) return *cfg_.dt_sim;
    double shortest = p.horizon();
    for (std::size_t k = 1; k < p.breakpoints.size(); ++k)
      shortest = std::min(shortest, p.breakpoints[k] - p.breakpoints[k - 1]);
    return std::min(shortest, 1e-2 * p.horizon());
  }

  PathSample simulate_path(const ControlPolicy& p, double x0, RandomStream& rs) const {
    const double h_max = sub_step(p);
    PathSample out;
    out.per_interval.reserve(p.intervals());
    double x = x0;
    for (std::size_t k = 0; k < p.intervals(); ++k) {
      const std::size_t v = std::visit(
          [x](const auto& c) -> std::size_t {
            if constexpr (std::is_same_v<std::decay_t<decltype(c)>, std::size_t>) {
              return c;
            } else {
              return c(x);
            }
          },
          p.choices[k]);
      const auto& law = laws_[v];
      const double len = p.breakpoints[k + 1] - p.breakpoints[k];
      const auto n_sub = static_cast<std::size_t>(std::max(1.0, std::ceil(len / h_max - 1e-9)));
      const double h = len / static_cast<double>(n_sub);
      IncrementParts acc;
      double stochastic = 0.0;
      for (std::size_t j = 0; j < n_sub; ++j) {
        IncrementParts part;
        law.sample_stochastic(h, rs, cfg_.small_jumps, part);
        acc += part;
        stochastic += part.stochastic();
        const double pos = x + law.b_eff() * h * static_cast<double>(j + 1) + stochastic;
        out.max_abs_displacement = std::max(out.max_abs_displacement, std::abs(pos - x0));
      }
      // The drift is applied once per interval, so deterministic paths are exact.
      acc.drift = law.b_eff() * len;
      x = x + (acc.drift + stochastic);
      out.per_interval.push_back(acc);
      out.vertex.push_back(v);
    }
    out.terminal = x;
    return out;
  }

  /// X_T for n_paths independent paths; path i uses stream (seed, policy id, i).
  std::vector<double> simulate_terminal(const ControlPolicy& p, double x0, std::size_t n_paths,
                                        std::uint64_t seed) const {
    p.validate(laws_.size());
    std::vector<double> out(n_paths);
    const std::uint64_t key = stream_key(p.id);
    detail::parallel_for(n_paths, detail::resolve_threads(cfg_.threads), [&](std::size_t lo, std::size_t hi) {
      for (std::size_t i = lo; i < hi; ++i) {
        RandomStream rs(Xoshiro256::keyed(seed, key, i));
        out[i] = simulate_path(p, x0, rs).terminal;
      }
    });
    return out;
  }

  /// E[sup_u |X_u − x0|] estimate over n_paths.
  double mean_max_displacement(const ControlPolicy& p, double x0, std::size_t n_paths, std::uint64_t seed) const {
    p.validate(laws_.size());
    std::vector<double> out(n_paths);
    const std::uint64_t key = stream_key(p.id);
    detail::parallel_for(n_paths, detail::resolve_threads(cfg_.threads), [&](std::size_t lo, std::size_t hi) {
      for (std::size_t i = lo; i < hi; ++i) {
        RandomStream rs(Xoshiro256::keyed(seed, key, i));
        out[i] = simulate_path(p, x0, rs).max_abs_displacement;
      }
    });
    return detail::pairwise_sum(out) / static_cast<double>(n_paths);
  }

 private:
  SimConfig cfg_;
  std::vector<IncrementLaw> laws_;
};

inline std::vector<double> simulate_terminal(const TripletFamily& theta, const ControlPolicy& p, double x0,
                                             std::size_t n_paths, const SimConfig& cfg, std::uint64_t seed) {
  return PolicySimulator(theta, cfg).simulate_terminal(p, x0, n_paths, seed);
}

// ---------------------------------------------------------------------------
// Estimates

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n_paths = 0;
  std::string policy_id;
  std::uint64_t rng_seed = 0;
};

/// Mean and sample_std / √n, both by pairwise summation.
inline McEstimate summarize(std::span<const double> ys, std::string policy_id, std::uint64_t seed) {
  McEstimate e;
  e.n_paths = ys.size();
  e.policy_id = std::move(policy_id);
  e.rng_seed = seed;
  if (ys.empty()) return e;
  const double n = static_cast<double>(ys.size());
  e.mean = detail::pairwise_sum(ys) / n;
  if (ys.size() > 1) {
    std::vector<double> sq(ys.size());
    for (std::size_t i = 0; i < ys.size(); ++i) sq[i] = (ys[i] - e.mean) * (ys[i] - e.mean);
    e.std_error = std::sqrt(detail::pairwise_sum(sq) / (n - 1.0) / n);
  }
  return e;
}

struct WorstCase {
  McEstimate best;
  std::vector<McEstimate> all;
};

/// max over policies of the Monte Carlo mean of ψ(x0 + X_T). Every policy
/// induces a law in 𝔓_Θ, so best.mean − 2 best.std_error is a statistical
/// lower bound for v(T, x0).
inline WorstCase worst_case_expectation(const SampledFunction& psi, const TripletFamily& theta,
                                        const std::vector<ControlPolicy>& policies, double x0, std::size_t n_paths,
                                        const SimConfig& cfg, std::uint64_t seed) {
  if (policies.empty()) throw std::invalid_argument("worst_case_expectation: no policies");
  if (n_paths == 0) throw std::invalid_argument("worst_case_expectation: n_paths must be > 0");
  const PolicySimulator sim(theta, cfg);
  WorstCase out;
  for (const auto& p : policies) {
    auto xs = sim.simulate_terminal(p, x0, n_paths, seed);
    for (auto& x : xs) x = psi(x);
    out.all.push_back(summarize(xs, p.id, seed));
  }
  out.best = *std::max_element(out.all.begin(), out.all.end(),
                               [](const McEstimate& a, const McEstimate& b) { return a.mean < b.mean; });
  return out;
}

}  // namespace nlevy
