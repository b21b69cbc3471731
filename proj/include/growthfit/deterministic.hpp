#pragma once

#include <cmath>

#include "params.hpp"

namespace growthfit {

namespace detail {

// capacity / (1 + q e^{-rate*T}), rearranged so no exponential overflows.
inline double saturating_curve(double capacity, double q, double rate, double elapsed) {
  const double x = rate * elapsed;
  if (x >= 0) return capacity / (1.0 + q * std::exp(-x));
  const double e = std::exp(x);
  return capacity * e / (e + q);
}

inline double log_saturating_curve(double capacity, double q, double rate, double elapsed) {
  const double x = rate * elapsed;
  if (x >= 0) return std::log(capacity) - std::log1p(q * std::exp(-x));
  // Negative rates put both numerator and denominator below zero.
  const double e = std::exp(x);
  return std::log(std::abs(capacity)) + x - std::log(std::abs(e + q));
}

}  // namespace detail

/// Logistic ODE solution K / (1 + Q e^{-r(t-t0)}).
inline double logistic_solution(const GrowthParams& gp, double t) {
  if (!gp.valid()) throw InvalidInput("logistic_solution: invalid parameters");
  return detail::saturating_curve(gp.k, gp.k / gp.p - 1.0, gp.r, t - gp.t0);
}

/// Deterministic part of the additive-noise approximation. Same closed form
/// as the logistic ODE.
inline double lnaa_deterministic(const GrowthParams& gp, double t) { return logistic_solution(gp, t); }

/// Log-scale deterministic path of the multiplicative-noise approximation:
/// the logistic form with growth rate a = r - sigma^2/2 and capacity a/b.
inline double lnam_deterministic(const GrowthParams& gp, double t) {
  if (!gp.valid()) throw InvalidInput("lnam_deterministic: invalid parameters");
  const double a = gp.r - 0.5 * gp.sigma * gp.sigma;
  const double elapsed = t - gp.t0;
  if (a <= 0) spdlog::warn("lnam_deterministic: effective rate a = r - sigma^2/2 = {} is not positive", a);
  if (a == 0) return std::log(gp.p) - std::log1p(gp.r / gp.k * gp.p * elapsed);
  const double capacity = gp.k * (a / gp.r);
  return detail::log_saturating_curve(capacity, capacity / gp.p - 1.0, a, elapsed);
}

/// Time derivative of the LNAM log-scale deterministic path.
inline double lnam_deterministic_rate(const GrowthParams& gp, double t) {
  const auto d = derive(gp, Model::lnam);
  const double x = d.a * (t - gp.t0);
  if (x >= 0) {
    const double e = std::exp(-x);
    return d.a * d.q * e / (1.0 + d.q * e);
  }
  const double e = std::exp(x);
  return d.a * d.q / (e + d.q);
}

/// Deterministic state on the scale each model's transition density acts on.
inline double deterministic_state(Model m, const GrowthParams& gp, double t) {
  switch (m) {
    case Model::lnam: return lnam_deterministic(gp, t);
    case Model::rrtr: return std::log(logistic_solution(gp, t));
    case Model::lnaa:
    case Model::slgm: return logistic_solution(gp, t);
  }
  return 0.0;
}

/// Filter and sampler start value: log P on the log scale, P otherwise.
inline double initial_state(Model m, const GrowthParams& gp) {
  return observation_scale(m) == Scale::log ? std::log(gp.p) : gp.p;
}

}  // namespace growthfit
