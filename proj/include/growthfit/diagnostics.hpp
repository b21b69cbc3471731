#pragma once

#include <array>
#include <cmath>
#include <span>
#include <vector>

#include "inference.hpp"
#include "params.hpp"

namespace growthfit {

/// n / (1 + 2 sum rho_k), with the autocorrelation sum truncated by Geyer's
/// initial positive sequence: pairs rho_{2m} + rho_{2m+1} are added while
/// positive. A constant chain has ESS 1.
inline double effective_sample_size(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 10) throw InvalidInput("effective_sample_size: needs at least 10 draws");
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);
  auto autocov = [&](std::size_t lag) {
    double s = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) s += (x[i] - mean) * (x[i + lag] - mean);
    return s / static_cast<double>(n);
  };
  const double c0 = autocov(0);
  if (!(c0 > 0)) return 1.0;

  double sum_pairs = 0.0;  // sum of Gamma_m = rho_{2m} + rho_{2m+1}, m >= 0
  for (std::size_t m = 0; 2 * m + 1 < n; ++m) {
    const double gamma = (autocov(2 * m) + autocov(2 * m + 1)) / c0;
    if (!(gamma > 0)) break;
    sum_pairs += gamma;
  }
  // 1 + 2 sum_{k>=1} rho_k = 2 sum_m Gamma_m - 1
  const double tau = 2.0 * sum_pairs - 1.0;
  return static_cast<double>(n) / tau;
}

struct ParameterSummary {
  double mean = 0.0;
  double sd = 0.0;
  double ess = 0.0;
  double acceptance = 0.0;
};

/// Per-parameter summaries on the natural scale: K, r, P, nu, sigma.
struct PosteriorSummary {
  static constexpr std::array<std::string_view, 5> names{"K", "r", "P", "nu", "sigma"};
  std::array<ParameterSummary, 5> params{};
  std::size_t n_samples = 0;

  double min_ess() const {
    double m = params[0].ess;
    for (const auto& p : params) m = std::min(m, p.ess);
    return m;
  }
};

inline PosteriorSummary summarize(const PosteriorChain& chain) {
  PosteriorSummary out;
  out.n_samples = chain.size();
  if (chain.size() == 0) return out;
  for (std::size_t j = 0; j < LogParams::size; ++j) {
    std::vector<double> natural;
    natural.reserve(chain.size());
    for (const auto& s : chain.samples) {
      const auto gp = to_natural(s, chain.t0);
      const std::array<double, 5> v{gp.k, gp.r, gp.p, gp.nu, gp.sigma};
      natural.push_back(v[j]);
    }
    double mean = 0.0;
    for (double v : natural) mean += v;
    mean /= static_cast<double>(natural.size());
    double ss = 0.0;
    for (double v : natural) ss += (v - mean) * (v - mean);
    auto& p = out.params[j];
    p.mean = mean;
    p.sd = natural.size() > 1 ? std::sqrt(ss / static_cast<double>(natural.size() - 1)) : 0.0;
    p.ess = natural.size() >= 10 ? effective_sample_size(chain.column(j)) : static_cast<double>(natural.size());
    p.acceptance = chain.acceptance[j];
  }
  return out;
}

}  // namespace growthfit
