#pragma once

#include <cmath>
#include <concepts>
#include <cstdint>
#include <string>
#include <vector>

#include "deterministic.hpp"
#include "parallel.hpp"
#include "params.hpp"
#include "random.hpp"

namespace growthfit {

class SimulationError : public NumericalError {
public:
  using NumericalError::NumericalError;
};

/// Fixed-step integration grid. Grid points are t_start + k*dt, with the last
/// step shortened to land on t_end. Record times snap to the nearest grid
/// point and must lie within dt/2 of it. An empty `record_times` records
/// every grid point.
struct SimGrid {
  double t_start = 0.0;
  double t_end = 5.0;
  double dt = 1e-4;
  std::vector<double> record_times;

  static SimGrid uniform(double t_start, double t_end, double dt, std::size_t n_records) {
    SimGrid g{t_start, t_end, dt, {}};
    if (n_records == 1) g.record_times.push_back(t_end);
    for (std::size_t i = 0; n_records > 1 && i < n_records; ++i)
      g.record_times.push_back(t_start + (t_end - t_start) * static_cast<double>(i) /
                                             static_cast<double>(n_records - 1));
    return g;
  }

  void validate() const {
    if (!(dt > 0) || !std::isfinite(dt)) throw InvalidInput("SimGrid: dt must be positive");
    if (!(t_end > t_start)) throw InvalidInput("SimGrid: t_end must exceed t_start");
    (void)record_indices();
  }

  std::size_t steps() const {
    return static_cast<std::size_t>(std::ceil((t_end - t_start) / dt - 1e-9));
  }

  double time_at(std::size_t k) const {
    return k >= steps() ? t_end : t_start + static_cast<double>(k) * dt;
  }

  std::vector<std::size_t> record_indices() const {
    const std::size_t n = steps();
    std::vector<std::size_t> idx;
    if (record_times.empty()) {
      for (std::size_t k = 0; k <= n; ++k) idx.push_back(k);
      return idx;
    }
    for (double r : record_times) {
      if (!(r >= t_start - 0.5 * dt) || !(r <= t_end + 0.5 * dt))
        throw InvalidInput("SimGrid: record time " + std::to_string(r) + " outside grid");
      const double raw = std::round((r - t_start) / dt);
      auto k = static_cast<std::size_t>(std::max(0.0, raw));
      if (k > n) k = n;
      if (std::abs(time_at(k) - r) > 0.5 * dt * (1 + 1e-9))
        throw InvalidInput("SimGrid: record time " + std::to_string(r) + " does not snap to the grid");
      if (!idx.empty() && k < idx.back()) throw InvalidInput("SimGrid: record times must be sorted");
      idx.push_back(k);
    }
    return idx;
  }

  std::vector<double> emitted_times() const {
    if (!record_times.empty()) return record_times;
    std::vector<double> t;
    for (std::size_t k = 0; k <= steps(); ++k) t.push_back(time_at(k));
    return t;
  }
};

/// x_{k+1} = x_k + drift(t_k, x_k) h + diffusion(t_k, x_k) sqrt(h) z_k.
/// Returns the state at the grid's record times.
template <class Drift, class Diffusion, class Normals>
  requires std::invocable<Normals&>
std::vector<double> euler_maruyama(Drift&& drift, Diffusion&& diffusion, double x0, const SimGrid& grid,
                                   Normals&& normals) {
  const auto records = grid.record_indices();
  const std::size_t n = grid.steps();
  std::vector<double> out;
  out.reserve(records.size());
  std::size_t next_record = 0;
  double x = x0;
  double t = grid.t_start;
  for (std::size_t k = 0;; ++k) {
    while (next_record < records.size() && records[next_record] == k) {
      out.push_back(x);
      ++next_record;
    }
    if (k == n) break;
    const double t_next = grid.time_at(k + 1);
    const double h = t_next - t;
    x += drift(t, x) * h + diffusion(t, x) * std::sqrt(h) * normals();
    if (!std::isfinite(x))
      throw SimulationError("euler_maruyama: non-finite state at step " + std::to_string(k + 1) +
                            " (t=" + std::to_string(t_next) + "); step too coarse");
    t = t_next;
  }
  return out;
}

template <class Drift, class Diffusion>
std::vector<double> euler_maruyama(Drift&& drift, Diffusion&& diffusion, double x0, const SimGrid& grid,
                                   std::uint64_t seed) {
  NormalSource normals(Rng{seed});
  return euler_maruyama(drift, diffusion, x0, grid, normals);
}

/// Paths of one model on a shared time grid, reported as densities.
struct TrajectoryEnsemble {
  Model model = Model::slgm;
  std::uint64_t seed = 0;
  std::vector<double> times;
  std::vector<std::vector<double>> paths;  // n_paths x n_times
  std::size_t failed_paths = 0;
  std::size_t negative_values = 0;

  std::size_t n_paths() const { return paths.size(); }
};

/// Simulates paths of `m` from (t_start, P). SLGM, RRTR and LNAM run on the
/// log scale, LNAA on the natural scale; output is always the density.
/// RRTR, LNAM and LNAA are linear in the state given t, so their per-step
/// coefficients are tabulated once and shared by every path.
class PathSimulator {
public:
  PathSimulator(Model m, const GrowthParams& gp, const SimGrid& grid)
      : model_(m), gp_(gp), grid_(grid), records_(grid.record_indices()) {
    if (m == Model::slgm) return;
    const std::size_t n = grid.steps();
    shift_.resize(n);
    gain_.resize(n);
    noise_.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      const double t = grid.time_at(k);
      const double h = grid.time_at(k + 1) - t;
      const auto [c1, c2, c3] = coefficients(t);
      shift_[k] = c1 * h;
      gain_[k] = c2 * h;
      noise_[k] = c3 * std::sqrt(h);
    }
  }

  template <class Normals>
    requires std::invocable<Normals&>
  std::vector<double> operator()(Normals&& normals) const {
    if (model_ == Model::slgm) {
      const double s = gp_.sigma;
      const double a = gp_.r - 0.5 * s * s;
      const double b = gp_.r / gp_.k;
      auto path = euler_maruyama([=](double, double y) { return a - b * std::exp(y); },
                                 [s](double, double) { return s; }, std::log(gp_.p), grid_, normals);
      for (double& y : path) y = std::exp(y);
      return path;
    }
    const bool log_scale = model_ != Model::lnaa;
    std::vector<double> out;
    out.reserve(records_.size());
    std::size_t next = 0;
    double x = log_scale ? std::log(gp_.p) : gp_.p;
    const std::size_t n = shift_.size();
    for (std::size_t k = 0;; ++k) {
      while (next < records_.size() && records_[next] == k) {
        out.push_back(log_scale ? std::exp(x) : x);
        ++next;
      }
      if (k == n) break;
      x += shift_[k] + gain_[k] * x + noise_[k] * normals();
      if (!std::isfinite(x))
        throw SimulationError("euler_maruyama: non-finite state at step " + std::to_string(k + 1) + " (t=" +
                              std::to_string(grid_.time_at(k + 1)) + "); step too coarse");
    }
    return out;
  }

private:
  struct Linear {
    double c1, c2, c3;  // drift c1 + c2 x, diffusion c3
  };

  Linear coefficients(double t) const {
    const double s = gp_.sigma;
    switch (model_) {
      case Model::rrtr: {
        const double q = gp_.k / gp_.p - 1.0;
        const double x = gp_.r * (t - gp_.t0);
        double fertility;
        if (x >= 0) {
          const double qe = q * std::exp(-x);
          fertility = gp_.r * qe / (1.0 + qe);
        } else {
          fertility = gp_.r * q / (std::exp(x) + q);
        }
        return {fertility - 0.5 * s * s, 0.0, s};
      }
      case Model::lnam: {
        const auto d = derive(gp_, Model::lnam);
        const double v = detail::log_saturating_curve(d.capacity, d.q, d.a, t - d.t0);
        const double pull = d.b * std::exp(v);
        return {lnam_deterministic_rate(gp_, t) + pull * v, -pull, s};
      }
      case Model::lnaa: {
        const auto d = derive(gp_, Model::lnaa);
        const double v = detail::saturating_curve(gp_.k, d.q, d.a, t - d.t0);
        return {d.b * v * v, d.a - 2.0 * d.b * v, s * v};
      }
      case Model::slgm: break;
    }
    return {0.0, 0.0, 0.0};
  }

  Model model_;
  GrowthParams gp_;
  SimGrid grid_;
  std::vector<std::size_t> records_;
  std::vector<double> shift_, gain_, noise_;
};

template <class Normals>
std::vector<double> simulate_path(Model m, const GrowthParams& gp, const SimGrid& grid, Normals&& normals) {
  return PathSimulator(m, gp, grid)(normals);
}

/// `n_sim` independent paths; path i draws from stream i of `seed`, so output
/// does not depend on `jobs`. The grid's t_start is the model's t0.
inline TrajectoryEnsemble simulate_model(Model m, GrowthParams gp, const SimGrid& grid, std::size_t n_sim,
                                         std::uint64_t seed, unsigned jobs = 1) {
  gp.t0 = grid.t_start;
  gp.validate();
  grid.validate();
  if (n_sim == 0) throw InvalidInput("simulate_model: n_sim must be positive");

  const PathSimulator sim(m, gp, grid);
  std::vector<std::vector<double>> paths(n_sim);
  std::vector<char> failed(n_sim, 0);
  parallel_for(n_sim, jobs, [&](std::size_t i) {
    NormalSource normals(make_stream(seed, i));
    try {
      paths[i] = sim(normals);
    } catch (const SimulationError& e) {
      failed[i] = 1;
      spdlog::debug("path {}: {}", i, e.what());
    }
  });

  TrajectoryEnsemble ens;
  ens.model = m;
  ens.seed = seed;
  ens.times = grid.emitted_times();
  for (std::size_t i = 0; i < n_sim; ++i) {
    if (failed[i]) {
      ++ens.failed_paths;
      continue;
    }
    for (double v : paths[i])
      if (v < 0) ++ens.negative_values;
    ens.paths.push_back(std::move(paths[i]));
  }
  if (ens.failed_paths > 0)
    spdlog::warn("{}: {} of {} paths failed (non-finite state)", to_string(m), ens.failed_paths, n_sim);
  return ens;
}

struct TimedValue {
  double time = 0.0;
  double value = 0.0;
};

/// Sample standard deviation across paths at each recorded time.
inline std::vector<TimedValue> ensemble_std_over_time(const TrajectoryEnsemble& ens) {
  if (ens.n_paths() < 2) throw InvalidInput("ensemble_std_over_time: needs at least two paths");
  std::vector<TimedValue> out;
  const double n = static_cast<double>(ens.n_paths());
  for (std::size_t j = 0; j < ens.times.size(); ++j) {
    double mean = 0.0;
    for (const auto& p : ens.paths) mean += p[j];
    mean /= n;
    double ss = 0.0;
    for (const auto& p : ens.paths) ss += (p[j] - mean) * (p[j] - mean);
    out.push_back({ens.times[j], std::sqrt(ss / (n - 1.0))});
  }
  return out;
}

}  // namespace growthfit
