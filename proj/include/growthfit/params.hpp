#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <spdlog/spdlog.h>

namespace growthfit {

/// Raised for inputs that violate a documented precondition.
class InvalidInput : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a numerical procedure produces a non-finite intermediate.
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

enum class Model { slgm, rrtr, lnam, lnaa };

inline constexpr std::array<Model, 4> all_models{Model::slgm, Model::rrtr, Model::lnam, Model::lnaa};

inline std::string_view to_string(Model m) {
  switch (m) {
    case Model::slgm: return "slgm";
    case Model::rrtr: return "rrtr";
    case Model::lnam: return "lnam";
    case Model::lnaa: return "lnaa";
  }
  return "?";
}

inline std::optional<Model> parse_model(std::string_view s) {
  for (Model m : all_models)
    if (to_string(m) == s) return m;
  return std::nullopt;
}

/// Observation scale paired with each fittable model: RRTR and LNAM observe
/// log densities, LNAA observes densities directly.
enum class Scale { log, natural };

inline Scale observation_scale(Model m) {
  switch (m) {
    case Model::rrtr:
    case Model::lnam: return Scale::log;
    case Model::lnaa: return Scale::natural;
    case Model::slgm: break;
  }
  throw InvalidInput("slgm has no closed-form state-space representation");
}

/// Natural-scale model parameters.
///
/// `k` carrying capacity, `r` intrinsic growth rate, `p` density at `t0`,
/// `sigma` intrinsic noise scale, `nu` measurement noise scale.
struct GrowthParams {
  double k = 0.0;
  double r = 0.0;
  double p = 0.0;
  double sigma = 0.0;
  double nu = 0.0;
  double t0 = 0.0;

  bool valid() const noexcept {
    return std::isfinite(k) && std::isfinite(r) && std::isfinite(p) && std::isfinite(sigma) &&
           std::isfinite(nu) && std::isfinite(t0) && k > 0 && r > 0 && p > 0 && sigma >= 0 && nu >= 0;
  }

  void validate() const {
    if (!valid())
      throw InvalidInput("invalid growth parameters: require finite K>0, r>0, P>0, sigma>=0, nu>=0");
    if (p >= k) spdlog::warn("initial density P={} is not below carrying capacity K={}", p, k);
  }
};

/// Sampling coordinates: (log K, log r, log P, log nu^-2, log sigma^-2).
struct LogParams {
  static constexpr std::size_t size = 5;
  static constexpr std::array<std::string_view, size> names{"logK", "logr", "logP", "log_nu_inv2",
                                                            "log_sigma_inv2"};
  std::array<double, size> v{};

  double& operator[](std::size_t i) { return v[i]; }
  double operator[](std::size_t i) const { return v[i]; }
};

inline GrowthParams to_natural(const LogParams& lp, double t0 = 0.0) {
  return GrowthParams{std::exp(lp[0]), std::exp(lp[1]), std::exp(lp[2]),
                      std::exp(-0.5 * lp[4]), std::exp(-0.5 * lp[3]), t0};
}

/// sigma = 0 or nu = 0 map to +inf on the precision scale.
inline LogParams to_log(const GrowthParams& gp) {
  return LogParams{{std::log(gp.k), std::log(gp.r), std::log(gp.p), -2.0 * std::log(gp.nu),
                    -2.0 * std::log(gp.sigma)}};
}

/// Coefficients of the closed-form solutions for one model.
///
/// `a` is the effective drift (r - sigma^2/2 for LNAM, r otherwise), `b = r/K`,
/// `c = a - bP`, `capacity = a/b`. `q = capacity/P - 1` is the logistic shape
/// constant relative to `t0`, so the absolute-time constant is Q = q e^{a t0}.
struct DerivedCoefficients {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double capacity = 0.0;
  double q = 0.0;
  double p = 0.0;
  double t0 = 0.0;

  double shape_constant() const { return q * std::exp(a * t0); }
};

inline DerivedCoefficients derive(const GrowthParams& gp, Model m) {
  DerivedCoefficients d;
  d.a = (m == Model::lnam) ? gp.r - 0.5 * gp.sigma * gp.sigma : gp.r;
  d.b = gp.r / gp.k;
  d.c = d.a - d.b * gp.p;
  d.capacity = gp.k * (d.a / gp.r);
  d.q = d.capacity / gp.p - 1.0;
  d.p = gp.p;
  d.t0 = gp.t0;
  return d;
}

/// One replicate culture: strictly increasing times with matching observations.
struct TimeCourse {
  std::string replicate_id;
  std::vector<double> times;
  std::vector<double> values;

  std::size_t size() const noexcept { return times.size(); }
  bool empty() const noexcept { return times.empty(); }

  void validate() const {
    if (times.size() != values.size())
      throw InvalidInput("time course '" + replicate_id + "': times and values differ in length");
    for (std::size_t i = 0; i < times.size(); ++i) {
      if (!std::isfinite(times[i]) || !std::isfinite(values[i]))
        throw InvalidInput("time course '" + replicate_id + "': non-finite entry at index " +
                           std::to_string(i));
      if (i > 0 && !(times[i] > times[i - 1]))
        throw InvalidInput("time course '" + replicate_id + "': times not strictly increasing at index " +
                           std::to_string(i));
    }
  }

  bool all_positive() const {
    for (double v : values)
      if (!(v > 0)) return false;
    return true;
  }

  friend bool operator==(const TimeCourse&, const TimeCourse&) = default;
};

}  // namespace growthfit
