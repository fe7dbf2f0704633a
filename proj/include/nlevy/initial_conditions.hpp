#pragma once

// Registry of bounded Lipschitz initial conditions.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nlevy/detail/numeric.hpp"
#include "nlevy/errors.hpp"
#include "nlevy/sampled_function.hpp"

namespace nlevy {

struct InitialCondition {
  std::string name;
  nlohmann::json params;
  SampledFunction fn;
  double bound = 0.0;      ///< declared ‖ψ‖_∞
  double lipschitz = 0.0;  ///< declared Lip(ψ)
  bool nondecreasing = false;
  bool convex = false;
};

inline std::vector<std::string> initial_condition_names() {
  return {"indicator-ramp", "tanh-like", "capped-quadratic", "capped-abs"};
}

namespace detail {

inline double param(const nlohmann::json& p, const char* key, double fallback, const std::string& where) {
  if (!p.is_object() || !p.contains(key)) return fallback;
  const auto& v = p.at(key);
  if (!v.is_number()) throw ConfigError(where + "." + key + ": expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(where + "." + key + ": must be finite");
  return x;
}

}  // namespace detail

/// Builds a registry entry. Parameters (defaults in brackets):
///   indicator-ramp   clamp((x - center)/width, 0, 1)      center [0], width [1]
///   tanh-like        amplitude · tanh(x / scale)           amplitude [1], scale [1]
///   capped-quadratic min(x², cap)                          cap [1]
///   capped-abs       min(|x|, cap)                         cap [5]
inline InitialCondition make_initial_condition(const std::string& name, const nlohmann::json& params = {},
                                               const std::string& where = "psi.params") {
  using detail::param;
  InitialCondition ic;
  ic.name = name;
  ic.params = params.is_null() ? nlohmann::json::object() : params;
  SampledFunction::Spec s;
  if (name == "indicator-ramp") {
    const double a = param(params, "center", 0.0, where);
    const double w = param(params, "width", 1.0, where);
    if (!(w > 0.0)) throw ConfigError(where + ".width: must be > 0");
    ic.params = {{"center", a}, {"width", w}};
    s.value = [a, w](double x) { return std::clamp((x - a) / w, 0.0, 1.0); };
    s.d1 = [a, w](double x) { return (x >= a && x < a + w) ? 1.0 / w : 0.0; };
    s.d2 = [](double) { return 0.0; };
    s.bound = 1.0;
    s.lipschitz = 1.0 / w;
    s.third_derivative_bound = 0.0;
    s.kinks = {a, a + w};
    s.tails = SampledFunction::Tails{0.0, 1.0, std::max(std::abs(a), std::abs(a + w))};
    ic.bound = 1.0;
    ic.lipschitz = 1.0 / w;
    ic.nondecreasing = true;
  } else if (name == "tanh-like") {
    const double A = param(params, "amplitude", 1.0, where);
    const double sc = param(params, "scale", 1.0, where);
    if (!(sc > 0.0)) throw ConfigError(where + ".scale: must be > 0");
    ic.params = {{"amplitude", A}, {"scale", sc}};
    s.value = [A, sc](double x) { return A * std::tanh(x / sc); };
    s.d1 = [A, sc](double x) {
      const double c = 1.0 / std::cosh(x / sc);
      return A / sc * c * c;
    };
    s.d2 = [A, sc](double x) {
      const double c = 1.0 / std::cosh(x / sc);
      return -2.0 * A / (sc * sc) * std::tanh(x / sc) * c * c;
    };
    s.bound = std::abs(A);
    s.lipschitz = std::abs(A) / sc;
    s.third_derivative_bound = 2.0 * std::abs(A) / (sc * sc * sc);
    ic.bound = std::abs(A);
    ic.lipschitz = std::abs(A) / sc;
    ic.nondecreasing = A >= 0.0;
  } else if (name == "capped-quadratic") {
    const double cap = param(params, "cap", 1.0, where);
    if (!(cap > 0.0)) throw ConfigError(where + ".cap: must be > 0");
    ic.params = {{"cap", cap}};
    const double r = std::sqrt(cap);
    s.value = [cap](double x) { return std::min(x * x, cap); };
    s.d1 = [r](double x) { return std::abs(x) < r ? 2.0 * x : 0.0; };
    s.d2 = [r](double x) { return std::abs(x) < r ? 2.0 : 0.0; };
    s.bound = cap;
    s.lipschitz = 2.0 * r;
    s.third_derivative_bound = 0.0;
    s.kinks = {-r, r};
    s.tails = SampledFunction::Tails{cap, cap, r};
    ic.bound = cap;
    ic.lipschitz = 2.0 * r;
  } else if (name == "capped-abs") {
    const double cap = param(params, "cap", 5.0, where);
    if (!(cap > 0.0)) throw ConfigError(where + ".cap: must be > 0");
    ic.params = {{"cap", cap}};
    s.value = [cap](double x) { return std::min(std::abs(x), cap); };
    s.d1 = [cap](double x) { return std::abs(x) < cap ? (x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0)) : 0.0; };
    s.d2 = [](double) { return 0.0; };
    s.bound = cap;
    s.lipschitz = 1.0;
    s.third_derivative_bound = 0.0;
    s.kinks = {-cap, 0.0, cap};
    s.tails = SampledFunction::Tails{cap, cap, cap};
    ic.bound = cap;
    ic.lipschitz = 1.0;
  } else {
    std::string known;
    for (const auto& n : initial_condition_names()) known += (known.empty() ? "" : ", ") + n;
    throw ConfigError("psi.name: unknown initial condition '" + name + "' (known: " + known + ")");
  }
  ic.fn = SampledFunction::analytic(std::move(s));
  return ic;
}

/// Reads a two-column CSV (x,value) on a uniform grid; the declared constants
/// must dominate what the samples show.
inline InitialCondition initial_condition_from_csv(const std::string& path, double bound, double lipschitz) {
  std::ifstream in(path);
  if (!in) throw ConfigError("psi.csv: cannot open '" + path + "'");
  std::vector<double> xs, ys;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ConfigError("psi.csv: line " + std::to_string(lineno) + " has no comma");
    try {
      xs.push_back(detail::parse_double(line.substr(0, comma)));
      ys.push_back(detail::parse_double(line.substr(comma + 1)));
    } catch (const std::exception&) {
      if (xs.empty() && ys.empty()) continue;  // header
      throw ConfigError("psi.csv: line " + std::to_string(lineno) + " is not numeric");
    }
  }
  if (xs.size() < 3) throw ConfigError("psi.csv: need at least 3 samples");
  const double dx = (xs.back() - xs.front()) / static_cast<double>(xs.size() - 1);
  if (!(dx > 0.0)) throw ConfigError("psi.csv: x must be increasing");
  for (std::size_t i = 1; i < xs.size(); ++i)
    if (std::abs(xs[i] - xs[i - 1] - dx) > 1e-6 * dx) throw ConfigError("psi.csv: x must be uniformly spaced");
  auto fn = SampledFunction::on_grid(UniformGrid1D{xs.front(), dx, ys});
  if (fn.bound() > bound * (1.0 + 1e-12))
    throw ConfigError("psi.bound: declared bound " + detail::format_double(bound) + " is below the sampled sup " +
                      detail::format_double(fn.bound()));
  if (*fn.lipschitz() > lipschitz * (1.0 + 1e-12))
    throw ConfigError("psi.lip: declared Lipschitz constant " + detail::format_double(lipschitz) +
                      " is below the sampled one " + detail::format_double(*fn.lipschitz()));
  InitialCondition ic;
  ic.name = "csv";
  ic.params = {{"csv", path}, {"bound", bound}, {"lip", lipschitz}};
  ic.fn = fn;
  ic.bound = bound;
  ic.lipschitz = lipschitz;
  return ic;
}

}  // namespace nlevy
