#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "inference.hpp"
#include "kalman.hpp"
#include "parallel.hpp"
#include "params.hpp"
#include "random.hpp"
#include "sde.hpp"
#include "transition.hpp"

namespace growthfit {

/// One trajectory per parameter draw, sampled exactly from the affine-Gaussian
/// transitions, with measurement noise added on the model's observation scale.
/// Every draw starts at its own t0 with state log P (or P).
inline TrajectoryEnsemble posterior_predictive(std::span<const GrowthParams> draws, Model m,
                                               std::span<const double> times, std::uint64_t seed,
                                               unsigned jobs = 1) {
  if (draws.empty()) throw InvalidInput("posterior_predictive: no parameter draws");
  const Scale scale = observation_scale(m);
  TrajectoryEnsemble ens;
  ens.model = m;
  ens.seed = seed;
  ens.times.assign(times.begin(), times.end());
  ens.paths.resize(draws.size());
  parallel_for(draws.size(), jobs, [&](std::size_t i) {
    const GrowthParams& gp = draws[i];
    NormalSource normals(make_stream(seed, i));
    const auto steps = build_steps(m, gp, times);
    auto& path = ens.paths[i];
    path.reserve(times.size());
    double x = initial_state(m, gp);
    for (const auto& s : steps) {
      x = s.h_alpha + s.h_beta * x + std::sqrt(s.xi) * normals();
      const double y = x + gp.nu * normals();
      path.push_back(scale == Scale::log ? std::exp(y) : y);
    }
  });
  for (const auto& p : ens.paths)
    for (double v : p)
      if (v < 0) ++ens.negative_values;
  return ens;
}

inline TrajectoryEnsemble posterior_predictive(const PosteriorChain& chain, Model m, std::span<const double> times,
                                               std::uint64_t seed, unsigned jobs = 1) {
  if (chain.size() == 0) throw InvalidInput("posterior_predictive: empty chain");
  if (chain.model != m)
    throw InvalidInput("posterior_predictive: chain was fitted with " + std::string(to_string(chain.model)) +
                       ", not " + std::string(to_string(m)));
  std::vector<GrowthParams> draws;
  draws.reserve(chain.size());
  for (const auto& s : chain.samples) draws.push_back(to_natural(s, chain.t0));
  return posterior_predictive(draws, m, times, seed, jobs);
}

struct MseReport {
  std::vector<double> per_course;
  double total = 0.0;
  double sd = 0.0;  // sample SD of the per-course subtotals
};

/// Per course: mean over simulations and time points of (simulated - observed)^2.
inline MseReport total_mse(std::span<const TimeCourse> observed, std::span<const TrajectoryEnsemble> predictive) {
  if (observed.size() != predictive.size())
    throw InvalidInput("total_mse: " + std::to_string(observed.size()) + " courses but " +
                       std::to_string(predictive.size()) + " ensembles");
  MseReport rep;
  for (std::size_t c = 0; c < observed.size(); ++c) {
    const auto& obs = observed[c];
    const auto& ens = predictive[c];
    if (ens.times.size() != obs.times.size())
      throw InvalidInput("total_mse: grid mismatch for course '" + obs.replicate_id + "'");
    for (std::size_t j = 0; j < obs.times.size(); ++j)
      if (std::abs(ens.times[j] - obs.times[j]) > 1e-9 * std::max(1.0, std::abs(obs.times[j])))
        throw InvalidInput("total_mse: grid mismatch for course '" + obs.replicate_id + "' at index " +
                           std::to_string(j));
    if (ens.paths.empty()) throw InvalidInput("total_mse: empty ensemble for course '" + obs.replicate_id + "'");
    double s = 0.0;
    for (const auto& p : ens.paths)
      for (std::size_t j = 0; j < p.size(); ++j) s += (p[j] - obs.values[j]) * (p[j] - obs.values[j]);
    rep.per_course.push_back(s / static_cast<double>(ens.paths.size() * obs.times.size()));
  }
  for (double v : rep.per_course) rep.total += v;
  if (rep.per_course.size() > 1) {
    const double mean = rep.total / static_cast<double>(rep.per_course.size());
    double ss = 0.0;
    for (double v : rep.per_course) ss += (v - mean) * (v - mean);
    rep.sd = std::sqrt(ss / static_cast<double>(rep.per_course.size() - 1));
  }
  return rep;
}

}  // namespace growthfit
