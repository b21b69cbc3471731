#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "kalman.hpp"
#include "params.hpp"
#include "random.hpp"
#include "transition.hpp"

namespace growthfit {

/// Independent normal priors (mean, precision) on the sampling coordinates,
/// with log sigma^-2 truncated below at `sigma_trunc_low`.
struct PriorSpec {
  double mu_k = std::log(0.1), tau_k = 2.0;
  double mu_r = std::log(3.0), tau_r = 5.0;
  double mu_p = std::log(0.0001), tau_p = 0.1;
  double mu_nu = std::log(10000.0), tau_nu = 0.1;
  double mu_sigma = std::log(100.0), tau_sigma = 0.1;
  double sigma_trunc_low = 1.0;

  std::array<double, LogParams::size> means() const { return {mu_k, mu_r, mu_p, mu_nu, mu_sigma}; }
  std::array<double, LogParams::size> precisions() const { return {tau_k, tau_r, tau_p, tau_nu, tau_sigma}; }

  void validate() const {
    for (double t : precisions())
      if (!(t > 0) || !std::isfinite(t)) throw InvalidInput("PriorSpec: precisions must be positive");
    for (double m : means())
      if (!std::isfinite(m)) throw InvalidInput("PriorSpec: means must be finite");
  }

  /// Unnormalized with respect to the truncation; -inf outside the support.
  double log_density(const LogParams& lp) const {
    if (!(lp[4] >= sigma_trunc_low)) return -std::numeric_limits<double>::infinity();
    const auto mu = means();
    const auto tau = precisions();
    double s = 0.0;
    for (std::size_t i = 0; i < LogParams::size; ++i) {
      if (!std::isfinite(lp[i])) return -std::numeric_limits<double>::infinity();
      const double d = lp[i] - mu[i];
      s += 0.5 * std::log(tau[i] / (2.0 * std::numbers::pi)) - 0.5 * tau[i] * d * d;
    }
    return s;
  }
};

/// Kalman marginal likelihood of one course, with the observations moved to
/// the model's scale once up front.
class CourseLikelihood {
public:
  CourseLikelihood(const TimeCourse& data, Model model)
      : model_(model), times_(data.times), y_(observations_on_scale(data, observation_scale(model))) {
    data.validate();
    t0_ = times_.empty() ? 0.0 : times_.front();
  }

  Model model() const { return model_; }
  double t0() const { return t0_; }
  bool empty() const { return times_.empty(); }

  /// -inf when the parameters leave the model's domain or the filter fails.
  double operator()(const GrowthParams& gp) const {
    if (times_.empty()) return 0.0;
    try {
      const auto steps = build_steps(model_, gp, times_);
      return kalman_log_marginal(y_, steps, gp.nu * gp.nu, KalmanState{initial_state(model_, gp), 0.0});
    } catch (const std::exception& e) {
      spdlog::debug("likelihood rejected: {}", e.what());
      return -std::numeric_limits<double>::infinity();
    }
  }

private:
  Model model_;
  std::vector<double> times_;
  std::vector<double> y_;
  double t0_ = 0.0;
};

/// Kalman log-likelihood plus log prior. t0 is the first observation time.
inline double log_posterior(const LogParams& lp, const TimeCourse& data, Model model, const PriorSpec& priors) {
  const double prior = priors.log_density(lp);
  if (prior == -std::numeric_limits<double>::infinity()) return prior;
  const CourseLikelihood like(data, model);
  return prior + like(to_natural(lp, like.t0()));
}

struct SamplerConfig {
  std::size_t n_iters = 60000;
  std::size_t burn_in = 10000;
  std::size_t thin = 50;
  std::uint64_t seed = 1;
  std::vector<double> proposal_scales;  // empty: 0.1 per coordinate
  bool adapt = true;
  double target_acceptance = 0.44;
  bool use_likelihood = true;

  std::size_t kept() const { return n_iters > burn_in && thin > 0 ? (n_iters - burn_in) / thin : 0; }

  void validate() const {
    if (thin < 1) throw InvalidInput("SamplerConfig: thin must be at least 1");
    if (burn_in >= n_iters) throw InvalidInput("SamplerConfig: burn_in must be below n_iters");
    if (kept() < 1) throw InvalidInput("SamplerConfig: no samples would be kept");
    if (!(target_acceptance > 0 && target_acceptance < 1))
      throw InvalidInput("SamplerConfig: target_acceptance must lie in (0, 1)");
    for (double s : proposal_scales)
      if (!(s > 0) || !std::isfinite(s)) throw InvalidInput("SamplerConfig: proposal scales must be positive");
  }
};

/// Output of the coordinate-wise sampler on a generic target.
struct ChainRun {
  std::vector<std::vector<double>> samples;
  std::vector<std::size_t> iterations;
  std::vector<double> log_target;
  std::vector<std::vector<double>> scales;  // proposal scales in force at each kept sample
  std::vector<double> acceptance;           // post-burn-in, per coordinate
};

/// Metropolis-within-Gibbs: each iteration updates every coordinate in turn
/// with a Gaussian random-walk proposal. During burn-in, log proposal scales
/// follow a Robbins-Monro recursion towards `target_acceptance`; they are
/// frozen afterwards.
template <class Target>
ChainRun metropolis_within_gibbs(Target&& log_target, std::vector<double> state, const SamplerConfig& config) {
  config.validate();
  const std::size_t dim = state.size();
  std::vector<double> scales = config.proposal_scales;
  if (scales.empty()) scales.assign(dim, 0.1);
  if (scales.size() != dim) throw InvalidInput("SamplerConfig: proposal scale count does not match dimension");

  double current = log_target(std::span<const double>(state));
  if (!std::isfinite(current)) throw InvalidInput("metropolis_within_gibbs: initial state has zero density");

  Rng rng(config.seed);
  boost::random::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  ChainRun run;
  run.samples.reserve(config.kept());
  std::vector<std::size_t> accepted(dim, 0);
  for (std::size_t it = 0; it < config.n_iters; ++it) {
    const bool burning = it < config.burn_in;
    for (std::size_t j = 0; j < dim; ++j) {
      const double old = state[j];
      state[j] = old + scales[j] * normal(rng);
      const double proposed = log_target(std::span<const double>(state));
      const double u = unif(rng);
      const bool accept = std::isfinite(proposed) && std::log(u) < proposed - current;
      if (accept) {
        current = proposed;
        if (!burning) ++accepted[j];
      } else {
        state[j] = old;
      }
      if (burning && config.adapt) {
        const double gain = std::pow(static_cast<double>(it) + 1.0, -0.6);
        scales[j] *= std::exp(gain * ((accept ? 1.0 : 0.0) - config.target_acceptance));
      }
    }
    if (!burning && (it - config.burn_in + 1) % config.thin == 0) {
      run.samples.push_back(state);
      run.iterations.push_back(it);
      run.log_target.push_back(current);
      run.scales.push_back(scales);
    }
  }
  const double post = static_cast<double>(config.n_iters - config.burn_in);
  for (std::size_t j = 0; j < dim; ++j) run.acceptance.push_back(static_cast<double>(accepted[j]) / post);
  if (std::all_of(accepted.begin(), accepted.end(), [](std::size_t a) { return a == 0; })) {
    std::string s;
    for (double v : scales) s += std::to_string(v) + " ";
    spdlog::warn("metropolis_within_gibbs: no proposal accepted after burn-in; scales {}", s);
  }
  return run;
}

/// Post-burn-in, thinned samples on the log scale.
struct PosteriorChain {
  Model model = Model::lnaa;
  std::uint64_t seed = 0;
  double t0 = 0.0;
  std::string replicate_id;
  std::vector<LogParams> samples;
  std::vector<std::size_t> iterations;
  std::vector<double> log_likelihood;
  std::vector<std::array<double, LogParams::size>> scales;
  std::array<double, LogParams::size> acceptance{};

  std::size_t size() const { return samples.size(); }

  std::vector<double> column(std::size_t j) const {
    std::vector<double> c;
    c.reserve(samples.size());
    for (const auto& s : samples) c.push_back(s[j]);
    return c;
  }
};

/// Starts from the prior means, lifted into the sigma truncation region if needed.
inline LogParams prior_mode_start(const PriorSpec& priors) {
  LogParams lp{priors.means()};
  lp[4] = std::max(lp[4], priors.sigma_trunc_low);
  return lp;
}

/// Posterior sampling of the five log-scale parameters for one course.
inline PosteriorChain mwg_sample(const TimeCourse& data, Model model, const PriorSpec& priors,
                                 const SamplerConfig& config) {
  priors.validate();
  config.validate();
  const CourseLikelihood like(data, model);
  const bool use_like = config.use_likelihood && !like.empty();

  auto target = [&](std::span<const double> x) {
    LogParams lp;
    std::copy(x.begin(), x.end(), lp.v.begin());
    const double prior = priors.log_density(lp);
    if (!std::isfinite(prior) || !use_like) return prior;
    return prior + like(to_natural(lp, like.t0()));
  };

  SamplerConfig cfg = config;
  if (cfg.proposal_scales.empty()) cfg.proposal_scales = {0.05, 0.05, 0.2, 0.5, 0.5};
  const LogParams start = prior_mode_start(priors);
  auto run = metropolis_within_gibbs(target, std::vector<double>(start.v.begin(), start.v.end()), cfg);

  PosteriorChain chain;
  chain.model = model;
  chain.seed = config.seed;
  chain.t0 = like.t0();
  chain.replicate_id = data.replicate_id;
  chain.iterations = run.iterations;
  for (std::size_t i = 0; i < run.samples.size(); ++i) {
    LogParams lp;
    std::copy(run.samples[i].begin(), run.samples[i].end(), lp.v.begin());
    chain.samples.push_back(lp);
    chain.log_likelihood.push_back(like(to_natural(lp, chain.t0)));
    std::array<double, LogParams::size> sc{};
    std::copy(run.scales[i].begin(), run.scales[i].end(), sc.begin());
    chain.scales.push_back(sc);
  }
  std::copy(run.acceptance.begin(), run.acceptance.end(), chain.acceptance.begin());
  return chain;
}

}  // namespace growthfit
