#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "deterministic.hpp"
#include "params.hpp"
#include "transition.hpp"

namespace growthfit {

/// Filtered state N(mean, variance) after conditioning on observations so far.
struct KalmanState {
  double mean = 0.0;
  double variance = 0.0;
};

struct ObservationModel {
  Scale scale = Scale::natural;
  double variance = 0.0;  // nu^2
};

/// Smallest total predictive variance passed to the log density.
inline constexpr double variance_floor = 1e-300;

struct FilterTrace {
  double log_likelihood = 0.0;
  std::vector<double> terms;        // log p(y_i | y_{1:i-1})
  std::vector<KalmanState> filtered;
  std::vector<KalmanState> predicted;
};

namespace detail {

inline double predictive_log_density(double innovation, double total_variance) {
  if (total_variance == 0.0) {
    if (innovation != 0.0) return -std::numeric_limits<double>::infinity();
  }
  const double v = std::max(total_variance, variance_floor);
  return -0.5 * std::log(2.0 * std::numbers::pi * v) - 0.5 * innovation * innovation / v;
}

}  // namespace detail

/// Scalar Kalman recursion over observations already on the state scale.
/// Fills `trace` when non-null.
inline double kalman_log_marginal(std::span<const double> y, std::span<const AffineGaussianStep> steps,
                                  double obs_variance, KalmanState init, FilterTrace* trace = nullptr) {
  if (y.size() != steps.size())
    throw InvalidInput("kalman_log_marginal: " + std::to_string(steps.size()) + " steps for " +
                       std::to_string(y.size()) + " observations");
  if (!(init.variance >= 0) || !(obs_variance >= 0))
    throw InvalidInput("kalman_log_marginal: variances must be non-negative");
  if (trace) {
    trace->terms.clear();
    trace->filtered.clear();
    trace->predicted.clear();
  }

  double m = init.mean;
  double c = init.variance;
  double total = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const auto& s = steps[i];
    const double pred_mean = s.h_alpha + s.h_beta * m;
    const double pred_var = s.h_beta * s.h_beta * c + s.xi;
    const double innovation = y[i] - pred_mean;
    const double tot = pred_var + obs_variance;
    const double term = detail::predictive_log_density(innovation, tot);

    if (tot > 0) {
      const double gain = pred_var / tot;
      m = pred_mean + gain * innovation;
      c = pred_var - pred_var * gain;
      if (c < 0) c = 0;
    } else {
      m = pred_mean;
      c = 0;
    }
    if (!std::isfinite(pred_mean) || !std::isfinite(pred_var) || std::isnan(term) || !std::isfinite(m))
      throw NumericalError("kalman_log_marginal: non-finite intermediate at index " + std::to_string(i));

    total += term;
    if (trace) {
      trace->terms.push_back(term);
      trace->predicted.push_back({pred_mean, pred_var});
      trace->filtered.push_back({m, c});
    }
  }
  if (trace) trace->log_likelihood = total;
  return total;
}

/// Moves a time course onto the observation scale.
inline std::vector<double> observations_on_scale(const TimeCourse& data, Scale scale) {
  std::vector<double> out(data.values);
  if (scale == Scale::log) {
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (!(out[i] > 0))
        throw InvalidInput("time course '" + data.replicate_id + "': non-positive observation " +
                           std::to_string(out[i]) + " at t=" + std::to_string(data.times[i]) +
                           " cannot be log-transformed");
      out[i] = std::log(out[i]);
    }
  }
  return out;
}

inline double kalman_log_marginal(const TimeCourse& data, std::span<const AffineGaussianStep> steps,
                                  const ObservationModel& obs, KalmanState init, FilterTrace* trace = nullptr) {
  const auto y = observations_on_scale(data, obs.scale);
  return kalman_log_marginal(y, steps, obs.variance, init, trace);
}

/// Transition steps from `gp.t0` through each time. A first time equal to t0
/// gets the identity step.
inline std::vector<AffineGaussianStep> build_steps(Model m, const GrowthParams& gp, std::span<const double> times) {
  std::vector<AffineGaussianStep> steps;
  steps.reserve(times.size());
  double prev = gp.t0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (i == 0 && times[0] == gp.t0) {
      steps.push_back(identity_step());
    } else {
      steps.push_back(transition_step(m, gp, prev, times[i]));
    }
    prev = times[i];
  }
  return steps;
}

/// Exact log marginal likelihood of one course under an approximate model.
/// The filter starts at (initial_state, 0) at `gp.t0`.
inline double marginal_for_model(const TimeCourse& data, const GrowthParams& gp, Model m,
                                 FilterTrace* trace = nullptr) {
  const Scale scale = observation_scale(m);
  const auto y = observations_on_scale(data, scale);
  if (!data.empty() && data.times.front() < gp.t0)
    throw InvalidInput("marginal_for_model: observation precedes t0");
  const auto steps = build_steps(m, gp, data.times);
  return kalman_log_marginal(y, steps, gp.nu * gp.nu, KalmanState{initial_state(m, gp), 0.0}, trace);
}

}  // namespace growthfit
