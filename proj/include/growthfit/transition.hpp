#pragma once

#include <cmath>
#include <string>

#include "deterministic.hpp"
#include "params.hpp"

namespace growthfit {

/// Mean and variance of a one-step Gaussian transition.
struct GaussianMoments {
  double mu = 0.0;
  double xi = 0.0;
};

/// x_next | x_prev ~ N(h_alpha + h_beta * x_prev, xi).
struct AffineGaussianStep {
  double h_alpha = 0.0;
  double h_beta = 1.0;
  double xi = 0.0;

  GaussianMoments moments(double x_prev) const { return {h_alpha + h_beta * x_prev, xi}; }
};

inline AffineGaussianStep identity_step() { return {0.0, 1.0, 0.0}; }

/// Apply `first` then `second`.
inline AffineGaussianStep compose(const AffineGaussianStep& first, const AffineGaussianStep& second) {
  return {second.h_alpha + second.h_beta * first.h_alpha, second.h_beta * first.h_beta,
          second.h_beta * second.h_beta * first.xi + second.xi};
}

namespace detail {

inline void check_interval(const char* who, double t_prev, double t_next) {
  if (!(t_next > t_prev) || !std::isfinite(t_prev) || !std::isfinite(t_next))
    throw InvalidInput(std::string(who) + ": requires t_next > t_prev (got " + std::to_string(t_prev) + " -> " +
                       std::to_string(t_next) + ")");
}

// Terms shared by the LNAM and LNAA solutions, written with e^{-aT} so nothing
// overflows for large aT. With g(T) = 1 + q e^{-aT}:
//   ratio     = g(T_prev) / g(T_next)
//   bracket   = (1 - e^{-2a dt}) + 4 q e^{-aT_next} (1 - e^{-a dt}) + 2 a dt q^2 e^{-2aT_next}
// bracket / (2a) is e^{-2aT_next} times the integral of (1 + q e^{-aS})^2 e^{2aS}
// over the interval.
struct LnaTerms {
  double g_prev;
  double g_next;
  double decay;  // e^{-a dt}
  double bracket;
};

inline LnaTerms lna_terms(const DerivedCoefficients& d, double t_prev, double t_next) {
  const double dt = t_next - t_prev;
  const double e_prev = std::exp(-d.a * (t_prev - d.t0));
  const double e_next = std::exp(-d.a * (t_next - d.t0));
  const double qe = d.q * e_next;
  LnaTerms out;
  out.g_prev = 1.0 + d.q * e_prev;
  out.g_next = 1.0 + qe;
  out.decay = std::exp(-d.a * dt);
  out.bracket = -std::expm1(-2.0 * d.a * dt) - 4.0 * qe * std::expm1(-d.a * dt) + 2.0 * d.a * dt * qe * qe;
  return out;
}

}  // namespace detail

/// Log-scale step of the lognormal diffusion with time-dependent fertility.
/// Slope is one: no mean reversion.
inline AffineGaussianStep rrtr_step(const GrowthParams& gp, double t_prev, double t_next) {
  detail::check_interval("rrtr_step", t_prev, t_next);
  const double dt = t_next - t_prev;
  const double q = gp.k / gp.p - 1.0;
  const double s2 = gp.sigma * gp.sigma;
  const double growth = std::log1p(q * std::exp(-gp.r * (t_prev - gp.t0))) -
                        std::log1p(q * std::exp(-gp.r * (t_next - gp.t0)));
  return {growth - 0.5 * s2 * dt, 1.0, s2 * dt};
}

/// Log-scale step of the linear noise approximation with multiplicative noise.
inline AffineGaussianStep lnam_step(const GrowthParams& gp, double t_prev, double t_next) {
  detail::check_interval("lnam_step", t_prev, t_next);
  const auto d = derive(gp, Model::lnam);
  if (!(d.a > 0)) throw InvalidInput("lnam_step: requires r - sigma^2/2 > 0");
  const auto lt = detail::lna_terms(d, t_prev, t_next);
  const double slope = lt.decay * lt.g_prev / lt.g_next;
  const double v_prev = std::log(d.capacity) - std::log(lt.g_prev);
  const double v_next = std::log(d.capacity) - std::log(lt.g_next);
  const double xi = gp.sigma * gp.sigma * lt.bracket / (2.0 * d.a * lt.g_next * lt.g_next);
  return {v_next - slope * v_prev, slope, xi};
}

/// Natural-scale step of the linear noise approximation with additive noise.
inline AffineGaussianStep lnaa_step(const GrowthParams& gp, double t_prev, double t_next) {
  detail::check_interval("lnaa_step", t_prev, t_next);
  const auto d = derive(gp, Model::lnaa);
  const auto lt = detail::lna_terms(d, t_prev, t_next);
  const double ratio = lt.g_prev / lt.g_next;
  const double slope = lt.decay * ratio * ratio;
  const double v_prev = gp.k / lt.g_prev;
  const double v_next = gp.k / lt.g_next;
  const double g2 = lt.g_next * lt.g_next;
  const double xi = 0.5 * gp.sigma * gp.sigma * d.a / (d.b * d.b) * lt.bracket / (g2 * g2);
  return {v_next - slope * v_prev, slope, xi};
}

inline AffineGaussianStep transition_step(Model m, const GrowthParams& gp, double t_prev, double t_next) {
  switch (m) {
    case Model::rrtr: return rrtr_step(gp, t_prev, t_next);
    case Model::lnam: return lnam_step(gp, t_prev, t_next);
    case Model::lnaa: return lnaa_step(gp, t_prev, t_next);
    case Model::slgm: break;
  }
  throw InvalidInput("transition_step: slgm has no closed-form transition density");
}

}  // namespace growthfit
