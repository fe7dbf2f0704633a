#pragma once

// Explicit monotone scheme for ∂_t v = G(D_x v, D²_xx v, v(t, x + ·)), v(0, ·) = ψ,
// on a truncated uniform grid with constant extrapolation.
//
// For every box vertex the bracket of G is discretized as
//   b_eff · (upwind difference) + ½ (c + σ²_κ) · (central second difference)
//   + ∫_{|z|>κ} [v(x+z) − v(x)] F(dz)
// with b_eff = b − ∫_{|z|>κ} h(z) F(dz) and σ²_κ = ∫_{|z|<=κ} z² F(dz); the
// nonlocal term integrates the piecewise-linear interpolant of the slice
// with the generator's large-jump quadrature. Each vertex update is monotone
// under the CFL condition, and so is their maximum.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "nlevy/detail/numeric.hpp"
#include "nlevy/errors.hpp"
#include "nlevy/generator.hpp"
#include "nlevy/levy_triplets.hpp"
#include "nlevy/sampled_function.hpp"

namespace nlevy {

struct SolverConfig {
  double dx = 0.05;
  std::optional<double> dt;          ///< explicit step; must respect the CFL bound
  std::optional<double> half_width;  ///< default 10 (1 + 𝒦 T)
  double kappa = kDefaultKappa;
  double cfl_safety = 0.9;
  double dt_cap_ratio = 0.05;  ///< default dt <= dt_cap_ratio · dx
  unsigned threads = 1;
  std::size_t max_stored_values = 16'000'000;
};

struct GridSpec {
  double x_min = 0.0;
  double x_max = 0.0;
  std::size_t nx = 0;
  double T = 0.0;
  double dt = 0.0;  ///< actual step, T / nt

  double dx() const noexcept { return (x_max - x_min) / static_cast<double>(nx - 1); }
  std::size_t nt() const noexcept {
    return (T == 0.0 || dt == 0.0) ? 0 : static_cast<std::size_t>(std::llround(T / dt));
  }
  double x(std::size_t i) const noexcept {
    return i + 1 == nx ? x_max : x_min + static_cast<double>(i) * dx();
  }
};

// ---------------------------------------------------------------------------
// Nonlocal stencil

namespace detail {

/// Weights W_k on grid offsets such that Σ_k W_k v[i + off_k] (clamped)
/// equals the large-jump quadrature of the interpolated slice around node i.
struct NonlocalStencil {
  std::vector<std::ptrdiff_t> offsets;
  std::vector<double> weights;
  double mass = 0.0;

  static NonlocalStencil build(const LevyMeasure& F, double kappa, double dx, std::size_t nx) {
    const double span = dx * static_cast<double>(nx - 1);
    const auto rule = large_jump_rule(F, kappa, span, span);
    std::map<std::ptrdiff_t, double> acc;
    for (const auto& n : rule.nodes) {
      double s = n.z / dx;
      const double r = std::round(s);
      if (std::abs(s - r) < 1e-9) s = r;
      const double fl = std::floor(s);
      const double frac = s - fl;
      const auto j = static_cast<std::ptrdiff_t>(fl);
      if (frac < 1.0) acc[j] += n.w * (1.0 - frac);
      if (frac > 0.0) acc[j + 1] += n.w * frac;
    }
    // Mass beyond the span sees the edge values.
    const auto edge = static_cast<std::ptrdiff_t>(nx);
    if (rule.closure_plus > 0.0) acc[edge] += rule.closure_plus;
    if (rule.closure_minus > 0.0) acc[-edge] += rule.closure_minus;
    NonlocalStencil st;
    for (const auto& [off, w] : acc) {
      if (w == 0.0) continue;
      st.offsets.push_back(off);
      st.weights.push_back(w);
    }
    st.mass = pairwise_sum(st.weights);
    return st;
  }

  std::ptrdiff_t reach() const noexcept {
    std::ptrdiff_t r = 0;
    for (auto o : offsets) r = std::max(r, o < 0 ? -o : o);
    return r;
  }
};

}  // namespace detail

/// Largest stable explicit step:
/// 1 / (sup (c + σ²_κ)/dx² + sup |b_eff|/dx + sup F(|z|>κ)).
inline double cfl_bound(const TripletFamily& theta, double dx, double kappa) {
  double diff = 0.0;
  double drift = 0.0;
  double mass = 0.0;
  for (const auto& v : theta.vertices()) {
    const auto& t = v.triplet;
    const double beff = t.b - (t.F.is_zero() ? 0.0 : compensator_drift(t.F, theta.truncation(), kappa));
    diff = std::max(diff, t.c + small_jump_second_moment(t.F, kappa));
    drift = std::max(drift, std::abs(beff));
    mass = std::max(mass, tail_intensity(t.F, kappa));
  }
  const double rate = diff / (dx * dx) + drift / dx + mass;
  return rate > 0.0 ? 1.0 / rate : std::numeric_limits<double>::infinity();
}

/// Grid centered on x_query with half-width L = 10 (1 + 𝒦 T) unless overridden.
inline GridSpec make_grid(const TripletFamily& theta, double T, double x_query, const SolverConfig& cfg = {}) {
  if (!(T >= 0.0) || !std::isfinite(T)) throw std::invalid_argument("make_grid: horizon must be finite and >= 0");
  if (!(cfg.dx > 0.0)) throw std::invalid_argument("make_grid: dx must be > 0");
  double L = 0.0;
  if (cfg.half_width) {
    L = *cfg.half_width;
  } else {
    try {
      L = 10.0 * (1.0 + family_K(theta) * T);
    } catch (const DivergentMoment& e) {
      throw ConditionViolation(std::string("triplet family violates the integrability condition: ") + e.what());
    }
  }
  if (!(L > 0.0) || !std::isfinite(L)) throw std::invalid_argument("make_grid: half width must be finite and > 0");
  const auto half = static_cast<std::size_t>(std::ceil(L / cfg.dx - 1e-9));
  GridSpec g;
  g.nx = 2 * half + 1;
  g.x_min = x_query - static_cast<double>(half) * cfg.dx;
  g.x_max = x_query + static_cast<double>(half) * cfg.dx;
  g.T = T;
  const double bound = cfl_bound(theta, cfg.dx, cfg.kappa);
  double dt = 0.0;
  if (cfg.dt) {
    dt = *cfg.dt;
    if (!(dt > 0.0)) throw std::invalid_argument("make_grid: dt must be > 0");
    if (dt > bound) throw CflViolation(dt, bound);
  } else {
    dt = std::min(cfg.cfl_safety * bound, cfg.dt_cap_ratio * cfg.dx);
  }
  if (T > 0.0) {
    const auto nt = static_cast<std::size_t>(std::ceil(T / dt - 1e-12));
    g.dt = T / static_cast<double>(std::max<std::size_t>(nt, 1));
  }
  return g;
}

/// Halves dx (same bounds) and dt, tightening dt further if the finer grid's CFL bound requires it.
inline GridSpec refine(const GridSpec& g, const TripletFamily& theta, double kappa, double cfl_safety = 0.9) {
  GridSpec r = g;
  r.nx = 2 * g.nx - 1;
  if (g.T > 0.0) {
    const double dt = std::min(g.dt / 2.0, cfl_safety * cfl_bound(theta, r.dx(), kappa));
    const auto nt = static_cast<std::size_t>(std::ceil(g.T / dt - 1e-12));
    r.dt = g.T / static_cast<double>(nt);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Scheme

class ExplicitScheme {
 public:
  ExplicitScheme(const TripletFamily& theta, const GridSpec& grid, double kappa, unsigned threads = 1)
      : grid_(grid), threads_(detail::resolve_threads(threads)) {
    if (grid.nx < 3) throw std::invalid_argument("ExplicitScheme: need at least 3 nodes");
    if (!theta.truncation().linear_on_ball(kappa))
      throw std::invalid_argument("ExplicitScheme: kappa must keep h(z)=z on {|z|<=kappa}");
    const double dx = grid.dx();
    for (const auto& F : theta.jump_basis()) stencils_.push_back(detail::NonlocalStencil::build(F, kappa, dx, grid.nx));
    for (const auto& st : stencils_) pad_ = std::max(pad_, st.reach());
    pad_ = std::max<std::ptrdiff_t>(pad_, 1);

    double rate = 0.0;
    for (const auto& v : theta.vertices()) {
      VertexCoefficients vc;
      const auto& t = v.triplet;
      vc.b_eff = t.b - (t.F.is_zero() ? 0.0 : compensator_drift(t.F, theta.truncation(), kappa));
      vc.diffusion = t.c + small_jump_second_moment(t.F, kappa);
      vc.basis_weights = v.basis_weights;
      double mass = 0.0;
      for (std::size_t b = 0; b < stencils_.size(); ++b) mass += vc.basis_weights[b] * stencils_[b].mass;
      rate = std::max(rate, vc.diffusion / (dx * dx) + std::abs(vc.b_eff) / dx + mass);
      vertices_.push_back(std::move(vc));
    }
    monotone_dt_ = rate > 0.0 ? 1.0 / rate : std::numeric_limits<double>::infinity();
    cfl_ = cfl_bound(theta, dx, kappa);
  }

  const GridSpec& grid() const noexcept { return grid_; }
  double cfl() const noexcept { return cfl_; }
  /// Step size up to which every vertex update is monotone with the actual quadrature masses.
  double monotone_dt() const noexcept { return monotone_dt_; }

  /// Generator values G_num(i) at every node.
  std::vector<double> generator(std::span<const double> v) const {
    const std::size_t nx = grid_.nx;
    const double dx = grid_.dx();
    std::vector<std::vector<double>> jumps(stencils_.size());
    if (!stencils_.empty()) {
      std::vector<double> padded(nx + 2 * static_cast<std::size_t>(pad_));
      std::fill(padded.begin(), padded.begin() + pad_, v.front());
      std::copy(v.begin(), v.end(), padded.begin() + pad_);
      std::fill(padded.begin() + pad_ + static_cast<std::ptrdiff_t>(nx), padded.end(), v.back());
      for (std::size_t b = 0; b < stencils_.size(); ++b) {
        const auto& st = stencils_[b];
        auto& out = jumps[b];
        out.assign(nx, 0.0);
        detail::parallel_for(nx, threads_, [&](std::size_t lo, std::size_t hi) {
          for (std::size_t k = 0; k < st.offsets.size(); ++k) {
            const double w = st.weights[k];
            const double* src = padded.data() + pad_ + st.offsets[k];
            for (std::size_t i = lo; i < hi; ++i) out[i] += w * src[i];
          }
          for (std::size_t i = lo; i < hi; ++i) out[i] -= st.mass * v[i];
        });
      }
    }

    std::vector<double> g(nx);
    detail::parallel_for(nx, threads_, [&](std::size_t lo, std::size_t hi) {
      for (std::size_t i = lo; i < hi; ++i) {
        const double vm = i == 0 ? v[0] : v[i - 1];
        const double vp = i + 1 == nx ? v[nx - 1] : v[i + 1];
        const double fwd = (vp - v[i]) / dx;
        const double bwd = (v[i] - vm) / dx;
        const double second = (vp - 2.0 * v[i] + vm) / (dx * dx);
        double best = -std::numeric_limits<double>::infinity();
        for (const auto& vc : vertices_) {
          double val = (vc.b_eff > 0.0 ? vc.b_eff * fwd : vc.b_eff * bwd) + 0.5 * vc.diffusion * second;
          for (std::size_t b = 0; b < jumps.size(); ++b) val += vc.basis_weights[b] * jumps[b][i];
          best = std::max(best, val);
        }
        g[i] = best;
      }
    });
    return g;
  }

  /// One explicit Euler step of size dt.
  std::vector<double> step(std::span<const double> v, double dt, std::size_t step_index = 0) const {
    auto g = generator(v);
    for (std::size_t i = 0; i < g.size(); ++i) {
      g[i] = v[i] + dt * g[i];
      if (!std::isfinite(g[i])) throw NonFiniteValue(step_index, i);
    }
    return g;
  }

 private:
  struct VertexCoefficients {
    double b_eff = 0.0;
    double diffusion = 0.0;
    std::vector<double> basis_weights;
  };

  GridSpec grid_;
  unsigned threads_;
  std::vector<detail::NonlocalStencil> stencils_;
  std::vector<VertexCoefficients> vertices_;
  std::ptrdiff_t pad_ = 1;
  double cfl_ = 0.0;
  double monotone_dt_ = 0.0;
};

/// v^{n+1} from v^n on the given grid.
inline std::vector<double> step_explicit(std::span<const double> slice, const TripletFamily& theta,
                                         const GridSpec& grid, double kappa = kDefaultKappa) {
  if (slice.size() != grid.nx) throw std::invalid_argument("step_explicit: slice size does not match grid");
  for (std::size_t i = 0; i < slice.size(); ++i)
    if (!std::isfinite(slice[i])) throw NonFiniteValue(0, i);
  ExplicitScheme scheme(theta, grid, kappa);
  if (grid.dt > scheme.cfl()) throw CflViolation(grid.dt, scheme.cfl());
  return scheme.step(slice, grid.dt);
}

// ---------------------------------------------------------------------------
// Value surface

struct ValueSurface {
  GridSpec grid;
  std::vector<double> times;   ///< stored time levels, increasing, first 0 and last T
  std::vector<double> values;  ///< times.size() × grid.nx, row-major by level
  std::string theta_fingerprint;
  std::string psi_fingerprint;
  /// Per step: max(0, max v^{n+1} − max v^n) + max(0, min v^n − min v^{n+1}).
  std::vector<double> max_principle_slack;
  double runtime_seconds = 0.0;

  std::size_t levels() const noexcept { return times.size(); }
  std::span<const double> level(std::size_t k) const {
    return std::span<const double>(values).subspan(k * grid.nx, grid.nx);
  }

  /// The slice v(t, ·), linear in t between stored levels.
  std::vector<double> slice_at(double t) const {
    if (t < 0.0 || t > grid.T * (1.0 + 1e-12) + 1e-15)
      throw OutOfHorizon("time " + std::to_string(t) + " outside [0, " + std::to_string(grid.T) + "]");
    if (levels() == 1) return std::vector<double>(level(0).begin(), level(0).end());
    auto it = std::upper_bound(times.begin(), times.end(), t);
    std::size_t k1 = static_cast<std::size_t>(it - times.begin());
    if (k1 >= levels()) k1 = levels() - 1;
    const std::size_t k0 = k1 - 1;
    const double w = std::clamp((t - times[k0]) / (times[k1] - times[k0]), 0.0, 1.0);
    const auto a = level(k0);
    const auto b = level(k1);
    std::vector<double> out(grid.nx);
    for (std::size_t i = 0; i < grid.nx; ++i) out[i] = w == 0.0 ? a[i] : (w == 1.0 ? b[i] : a[i] + w * (b[i] - a[i]));
    return out;
  }

  UniformGrid1D grid_at(double t) const { return UniformGrid1D{grid.x_min, grid.dx(), slice_at(t)}; }
};

/// Bilinear interpolation in (t, x), constant extrapolation in x.
inline double evaluate(const ValueSurface& s, double t, double x) {
  if (t < 0.0 || t > s.grid.T * (1.0 + 1e-12) + 1e-15)
    throw OutOfHorizon("evaluate: time " + std::to_string(t) + " outside [0, " + std::to_string(s.grid.T) + "]");
  const double dx = s.grid.dx();
  const double pos = (x - s.grid.x_min) / dx;
  auto interp_x = [&](std::span<const double> row) {
    if (!(pos > 0.0)) return row.front();
    const double last = static_cast<double>(row.size() - 1);
    if (pos >= last) return row.back();
    const auto i = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(i);
    return frac == 0.0 ? row[i] : row[i] + frac * (row[i + 1] - row[i]);
  };
  if (s.levels() == 1) return interp_x(s.level(0));
  auto it = std::upper_bound(s.times.begin(), s.times.end(), t);
  std::size_t k1 = static_cast<std::size_t>(it - s.times.begin());
  if (k1 >= s.levels()) k1 = s.levels() - 1;
  const std::size_t k0 = k1 - 1;
  const double w = std::clamp((t - s.times[k0]) / (s.times[k1] - s.times[k0]), 0.0, 1.0);
  const double a = interp_x(s.level(k0));
  if (w == 0.0) return a;
  const double b = interp_x(s.level(k1));
  return w == 1.0 ? b : a + w * (b - a);
}

struct SolveOptions {
  double kappa = kDefaultKappa;
  unsigned threads = 1;
  std::size_t max_stored_values = 16'000'000;
  bool check_conditions = true;
};

inline std::string psi_fingerprint(std::span<const double> samples) {
  detail::Fnv1a h;
  for (double v : samples) h.update(v);
  return h.hex();
}

/// Solves the PIDE on grid with initial condition psi.
inline ValueSurface solve(const SampledFunction& psi, const TripletFamily& theta, const GridSpec& grid,
                          const SolveOptions& opt = {}) {
  const auto start = std::chrono::steady_clock::now();
  if (opt.check_conditions) {
    ConditionReport rep;
    try {
      rep = family_condition_report(theta, {1.0, 0.1, 0.01, opt.kappa});
    } catch (const DivergentMoment& e) {
      throw ConditionViolation(std::string("triplet family violates the integrability condition: ") + e.what());
    }
    if (!rep.ok()) throw ConditionViolation("triplet family fails the integrability / small-jump conditions");
  }
  if (grid.nx < 3) throw std::invalid_argument("solve: need at least 3 nodes");

  ValueSurface s;
  s.grid = grid;
  s.theta_fingerprint = fingerprint(theta);

  std::vector<double> v(grid.nx);
  for (std::size_t i = 0; i < grid.nx; ++i) {
    v[i] = psi(grid.x(i));
    if (!std::isfinite(v[i])) throw NonFiniteValue(0, i);
  }
  s.psi_fingerprint = psi_fingerprint(v);

  const std::size_t nt = grid.nt();
  const std::size_t total = grid.nx * (nt + 1);
  const std::size_t stride = std::max<std::size_t>(1, (total + opt.max_stored_values - 1) / opt.max_stored_values);
  s.times.push_back(0.0);
  s.values.insert(s.values.end(), v.begin(), v.end());

  if (nt > 0) {
    ExplicitScheme scheme(theta, grid, opt.kappa, opt.threads);
    if (grid.dt > scheme.cfl() * (1.0 + 1e-12)) throw CflViolation(grid.dt, scheme.cfl());
    s.max_principle_slack.reserve(nt);
    for (std::size_t n = 1; n <= nt; ++n) {
      auto next = scheme.step(v, grid.dt, n);
      const auto [mn0, mx0] = std::minmax_element(v.begin(), v.end());
      const auto [mn1, mx1] = std::minmax_element(next.begin(), next.end());
      s.max_principle_slack.push_back(std::max(0.0, *mx1 - *mx0) + std::max(0.0, *mn0 - *mn1));
      v = std::move(next);
      if (n % stride == 0 || n == nt) {
        s.times.push_back(n == nt ? grid.T : static_cast<double>(n) * grid.dt);
        s.values.insert(s.values.end(), v.begin(), v.end());
      }
    }
  }
  s.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return s;
}

// ---------------------------------------------------------------------------
// CSV persistence
//
//   x_min,x_max,nx,T,dt,nt,levels,theta_fingerprint,psi_fingerprint
//   <one metadata row>
//   t,x,v
//   <levels × nx rows>
//
// Numbers use the shortest round-trip decimal form, so write -> read is lossless.

inline void write_surface_csv(std::ostream& os, const ValueSurface& s) {
  using detail::format_double;
  const auto& g = s.grid;
  os << "x_min,x_max,nx,T,dt,nt,levels,theta_fingerprint,psi_fingerprint\n";
  os << format_double(g.x_min) << ',' << format_double(g.x_max) << ',' << g.nx << ',' << format_double(g.T) << ','
     << format_double(g.dt) << ',' << g.nt() << ',' << s.levels() << ',' << s.theta_fingerprint << ','
     << s.psi_fingerprint << '\n';
  os << "t,x,v\n";
  std::string line;
  for (std::size_t k = 0; k < s.levels(); ++k) {
    const std::string t = format_double(s.times[k]);
    const auto row = s.level(k);
    for (std::size_t i = 0; i < g.nx; ++i) {
      line.clear();
      line += t;
      line += ',';
      line += format_double(g.x(i));
      line += ',';
      line += format_double(row[i]);
      line += '\n';
      os << line;
    }
  }
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

}  // namespace detail

inline ValueSurface read_surface_csv(std::istream& is) {
  std::string line;
  auto next = [&](const char* what) {
    if (!std::getline(is, line)) throw Error(std::string("surface csv: unexpected end of input reading ") + what);
    return detail::split_csv_line(line);
  };
  auto header = next("metadata header");
  if (header.size() != 9 || header[0] != "x_min") throw Error("surface csv: bad metadata header");
  auto meta = next("metadata row");
  if (meta.size() != 9) throw Error("surface csv: bad metadata row");
  ValueSurface s;
  s.grid.x_min = detail::parse_double(meta[0]);
  s.grid.x_max = detail::parse_double(meta[1]);
  s.grid.nx = std::stoul(meta[2]);
  s.grid.T = detail::parse_double(meta[3]);
  s.grid.dt = detail::parse_double(meta[4]);
  const std::size_t levels = std::stoul(meta[6]);
  s.theta_fingerprint = meta[7];
  s.psi_fingerprint = meta[8];
  auto cols = next("column header");
  if (cols.size() != 3 || cols[0] != "t") throw Error("surface csv: bad column header");
  s.values.reserve(levels * s.grid.nx);
  for (std::size_t k = 0; k < levels; ++k) {
    for (std::size_t i = 0; i < s.grid.nx; ++i) {
      auto row = next("data");
      if (row.size() != 3) throw Error("surface csv: bad data row");
      if (i == 0) s.times.push_back(detail::parse_double(row[0]));
      s.values.push_back(detail::parse_double(row[2]));
    }
  }
  return s;
}

}  // namespace nlevy
