#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace nlevy {

/// Piecewise-linear interpolant on a uniform grid, constant beyond both ends.
struct UniformGrid1D {
  double x_min = 0.0;
  double dx = 1.0;
  std::vector<double> values;

  double x_max() const noexcept { return x_min + dx * static_cast<double>(values.size() - 1); }

  double operator()(double x) const noexcept {
    const double s = (x - x_min) / dx;
    if (!(s > 0.0)) return values.front();
    const double last = static_cast<double>(values.size() - 1);
    if (s >= last) return values.back();
    const auto i = static_cast<std::size_t>(s);
    const double frac = s - static_cast<double>(i);
    return values[i] + frac * (values[i + 1] - values[i]);
  }
};

/// A bounded real function f(z) queried around the origin, together with the
/// facts the generator needs: f(0), f'(0), f''(0), sup|f|, and where f is
/// flat or kinked. Cheap to copy; the underlying data is shared and immutable.
class SampledFunction {
 public:
  /// f(z) = minus for z <= -radius and f(z) = plus for z >= radius.
  struct Tails {
    double minus;
    double plus;
    double radius;
  };

  struct Spec {
    std::function<double(double)> value;
    std::function<double(double)> d1;  // may be empty
    std::function<double(double)> d2;  // may be empty
    double bound = std::numeric_limits<double>::infinity();
    std::optional<double> lipschitz;
    std::optional<double> third_derivative_bound;
    std::vector<double> kinks;
    std::optional<Tails> tails;
  };

  SampledFunction() : SampledFunction(constant(0.0)) {}

  static SampledFunction analytic(Spec spec) {
    if (!spec.value) throw std::invalid_argument("SampledFunction: value callback required");
    if (!(spec.bound >= 0.0)) throw std::invalid_argument("SampledFunction: bound must be >= 0");
    auto src = std::make_shared<Source>();
    src->spec = std::move(spec);
    return SampledFunction(std::move(src));
  }

  static SampledFunction constant(double c) {
    Spec s;
    s.value = [c](double) { return c; };
    s.d1 = [](double) { return 0.0; };
    s.d2 = [](double) { return 0.0; };
    s.bound = std::abs(c);
    s.lipschitz = 0.0;
    s.third_derivative_bound = 0.0;
    s.tails = Tails{c, c, 0.0};
    return analytic(std::move(s));
  }

  /// Grid-backed function; derivatives at a point are the centered
  /// first and second differences with step dx.
  static SampledFunction on_grid(UniformGrid1D grid) {
    if (grid.values.size() < 3) throw std::invalid_argument("SampledFunction: grid needs at least 3 nodes");
    if (!(grid.dx > 0.0)) throw std::invalid_argument("SampledFunction: grid spacing must be > 0");
    auto g = std::make_shared<const UniformGrid1D>(std::move(grid));
    Spec s;
    s.value = [g](double x) { return (*g)(x); };
    s.d1 = [g](double x) { return ((*g)(x + g->dx) - (*g)(x - g->dx)) / (2.0 * g->dx); };
    s.d2 = [g](double x) { return ((*g)(x + g->dx) - 2.0 * (*g)(x) + (*g)(x - g->dx)) / (g->dx * g->dx); };
    double bound = 0.0;
    double lip = 0.0;
    for (std::size_t i = 0; i < g->values.size(); ++i) {
      bound = std::max(bound, std::abs(g->values[i]));
      if (i > 0) lip = std::max(lip, std::abs(g->values[i] - g->values[i - 1]) / g->dx);
    }
    s.bound = bound;
    s.lipschitz = lip;
    // Flat outside [x_min, x_max].
    const double reach = std::max(std::abs(g->x_min), std::abs(g->x_max()));
    s.tails = Tails{g->values.front(), g->values.back(), reach};
    auto src = std::make_shared<Source>();
    src->spec = std::move(s);
    src->grid = std::move(g);
    return SampledFunction(std::move(src));
  }

  double operator()(double z) const { return src_->spec.value(scale_ * z + shift_) + offset_; }

  double value_at_zero() const { return (*this)(0.0); }

  /// f(z) − f(z0), computed without the additive offset so that it is
  /// bitwise invariant under plus_constant.
  double increment(double z, double z0) const {
    return src_->spec.value(scale_ * z + shift_) - src_->spec.value(scale_ * z0 + shift_);
  }

  /// (tails.plus − f(z0), tails.minus − f(z0)), offset-free like increment().
  std::optional<std::pair<double, double>> tail_increments(double z0) const {
    if (!src_->spec.tails) return std::nullopt;
    const double base = src_->spec.value(scale_ * z0 + shift_);
    return std::make_pair(src_->spec.tails->plus - base, src_->spec.tails->minus - base);
  }

  bool has_gradient() const noexcept { return static_cast<bool>(src_->spec.d1); }
  double gradient_at(double z) const {
    if (!src_->spec.d1) throw std::logic_error("SampledFunction: no first derivative available");
    return scale_ * src_->spec.d1(scale_ * z + shift_);
  }
  double gradient_at_zero() const { return gradient_at(0.0); }

  bool has_second_derivative() const noexcept { return static_cast<bool>(src_->spec.d2); }
  std::optional<double> second_derivative_at(double z) const {
    if (!src_->spec.d2) return std::nullopt;
    return scale_ * scale_ * src_->spec.d2(scale_ * z + shift_);
  }
  std::optional<double> second_derivative_at_zero() const { return second_derivative_at(0.0); }

  double bound() const noexcept { return src_->spec.bound + std::abs(offset_); }
  /// Declared bound before plus_constant shifts; sup|f(z) − f(0)| <= 2 base_bound().
  double base_bound() const noexcept { return src_->spec.bound; }
  std::optional<double> lipschitz() const {
    if (!src_->spec.lipschitz) return std::nullopt;
    return scale_ * *src_->spec.lipschitz;
  }
  std::optional<double> third_derivative_bound() const {
    if (!src_->spec.third_derivative_bound) return std::nullopt;
    return scale_ * scale_ * scale_ * *src_->spec.third_derivative_bound;
  }

  /// Kinks in the function's own coordinate z.
  std::vector<double> kinks() const {
    std::vector<double> out;
    out.reserve(src_->spec.kinks.size());
    for (double k : src_->spec.kinks) out.push_back((k - shift_) / scale_);
    return out;
  }

  std::optional<Tails> tails() const {
    if (!src_->spec.tails) return std::nullopt;
    const auto& t = *src_->spec.tails;
    return Tails{t.minus + offset_, t.plus + offset_, (t.radius + std::abs(shift_)) / scale_};
  }

  /// z -> f(x + z).
  SampledFunction translated(double x) const {
    SampledFunction g = *this;
    g.shift_ += scale_ * x;
    return g;
  }

  /// z -> f(s z), s > 0.
  SampledFunction scaled(double s) const {
    if (!(s > 0.0)) throw std::invalid_argument("SampledFunction::scaled: factor must be > 0");
    SampledFunction g = *this;
    g.scale_ *= s;
    return g;
  }

  /// z -> f(z) + c.
  SampledFunction plus_constant(double c) const {
    SampledFunction g = *this;
    g.offset_ += c;
    return g;
  }

  /// Underlying grid when grid-backed (nullptr otherwise).
  const UniformGrid1D* grid() const noexcept { return src_->grid.get(); }

 private:
  struct Source {
    Spec spec;
    std::shared_ptr<const UniformGrid1D> grid;
  };

  explicit SampledFunction(std::shared_ptr<const Source> src) : src_(std::move(src)) {}

  std::shared_ptr<const Source> src_;
  double scale_ = 1.0;
  double shift_ = 0.0;
  double offset_ = 0.0;
};

}  // namespace nlevy
