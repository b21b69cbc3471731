#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "io.hpp"
#include "params.hpp"
#include "random.hpp"
#include "sde.hpp"

namespace growthfit {

enum class ErrorKind { normal, lognormal };

struct SyntheticOptions {
  Model latent = Model::slgm;
  double dt = 1e-4;
  /// Redraw normal measurement noise until the observation is positive.
  bool positive_observations = false;
};

/// Evenly spaced observation times, 27 by default.
inline std::vector<double> observation_grid(double t_start, double t_end, std::size_t n = 27) {
  std::vector<double> t;
  for (std::size_t i = 0; i < n; ++i)
    t.push_back(t_start + (t_end - t_start) * static_cast<double>(i) / static_cast<double>(n - 1));
  return t;
}

/// Latent path by fine Euler-Maruyama from (times[0], P), observed at `times`
/// with measurement noise of scale nu. Course i uses streams 2i (latent) and
/// 2i+1 (noise) of `seed`.
inline Dataset generate_synthetic(GrowthParams gp, ErrorKind error, std::span<const double> times,
                                  std::size_t n_courses, std::uint64_t seed, const SyntheticOptions& opt = {}) {
  if (times.size() < 2) throw InvalidInput("generate_synthetic: needs at least two time points");
  gp.t0 = times.front();
  gp.validate();
  SimGrid grid{times.front(), times.back(), opt.dt, std::vector<double>(times.begin(), times.end())};
  grid.validate();

  Dataset ds;
  ds.source = "synthetic latent=" + std::string(to_string(opt.latent)) +
              " error=" + (error == ErrorKind::normal ? "normal" : "lognormal") + " seed=" + std::to_string(seed);
  for (std::size_t c = 0; c < n_courses; ++c) {
    NormalSource latent_noise(make_stream(seed, 2 * c));
    NormalSource obs_noise(make_stream(seed, 2 * c + 1));
    const auto latent = simulate_path(opt.latent, gp, grid, latent_noise);
    TimeCourse tc{"course_" + std::to_string(c + 1), std::vector<double>(times.begin(), times.end()), {}};
    for (double x : latent) {
      double y = 0.0;
      if (error == ErrorKind::lognormal) {
        y = x * std::exp(gp.nu * obs_noise());
      } else {
        int tries = 0;
        do {
          y = x + gp.nu * obs_noise();
        } while (opt.positive_observations && !(y > 0) && ++tries < 10000);
        if (opt.positive_observations && !(y > 0))
          throw SimulationError("generate_synthetic: could not draw a positive observation");
      }
      tc.values.push_back(y);
    }
    ds.courses.push_back(std::move(tc));
  }
  return ds;
}

}  // namespace growthfit
