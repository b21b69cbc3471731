// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <spdlog/spdlog.h>

#include "growthfit/growthfit.hpp"
#include "oracles.hpp"

using namespace growthfit;

namespace {

constexpr std::array<Model, 3> fitted{Model::rrtr, Model::lnam, Model::lnaa};

const GrowthParams growth_demo{0.11, 4.0, 5e-5, 0.05, 0.0, 0.0};
const GrowthParams set1{0.15, 3.0, 1e-4, 0.01, 0.005, 0.0};

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

int failures = 0;

void criterion(const char* id, const char* name, double budget_s, const std::function<void(Outcome&)>& body) {
  Outcome out;
  const auto start = std::chrono::steady_clock::now();
  try {
    body(out);
  } catch (const std::exception& e) {
    out.pass = false;
    out.detail << " [exception: " << e.what() << "]";
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  out.require(secs <= budget_s, "runtime over " + std::to_string(budget_s) + " s");
  if (!out.pass) ++failures;
  std::printf("%s %s: %s (%.1f s)%s\n", out.pass ? "PASS" : "FAIL", id, name, secs, out.detail.str().c_str());
  std::fflush(stdout);
}

oracle::Sde oracle_sde(Model m) {
  switch (m) {
    case Model::rrtr: return oracle::Sde::rrtr_log;
    case Model::lnam: return oracle::Sde::lnam_log;
    default: return oracle::Sde::lnaa_natural;
  }
}

std::vector<double> noisy(std::vector<double> x, double sd, std::mt19937_64& rng) {
  std::normal_distribution<double> z(0.0, sd);
  for (double& v : x) v += z(rng);
  return x;
}

void ac1(Outcome& out) {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0;
  for (Model m : fitted)
    for (int rep = 0; rep < 100; ++rep) {
      const GrowthParams gp{0.05 + 0.3 * u(rng), 1 + 5 * u(rng), 1e-5 + 1e-3 * u(rng), 0.01 + 0.3 * u(rng),
                            0.005 + 0.2 * u(rng), 0.0};
      std::vector<double> t;
      double ti = 0;
      for (int i = 0; i < 10; ++i) t.push_back(ti += 0.1 + 0.5 * u(rng));
      const auto steps = build_steps(m, gp, t);
      const double scale = m == Model::lnaa ? gp.k : 1.0;
      std::vector<double> x;
      for (double tv : t) x.push_back(deterministic_state(m, gp, tv));
      const auto y = noisy(x, 0.1 * scale, rng);
      const double nu2 = gp.nu * gp.nu * scale * scale;
      const double m0 = initial_state(m, gp);
      const double rec = kalman_log_marginal(y, steps, nu2, KalmanState{m0, 0.0});
      const double joint = oracle::joint_gaussian_log_density(y, steps, m0, 0.0, nu2);
      worst = std::max(worst, std::abs(rec - joint));
    }
  out.detail << " max |diff| = " << worst;
  out.require(worst <= 1e-8, "max |diff| <= 1e-8");
}

void ac2(Outcome& out) {
  // Talay-Tubaro extrapolated Euler-Maruyama (dt 5e-4 vs 1e-3) removes the
  // first-order weak bias, so the remaining error is Monte Carlo noise.
  double worst = 0;
  std::uint64_t stream = 0;
  for (Model m : fitted)
    for (double tp : {0.5, 2.0, 5.0}) {
      const double tn = tp + 0.25;
      const auto& g = growth_demo;
      // start from the deterministic state at tp
      const auto det = m == Model::rrtr ? GrowthParams{g.k, g.r, g.p, 0.0, 0.0, 0.0} : g;
      const double x_prev = deterministic_state(m == Model::lnaa ? Model::lnaa : Model::lnam, det, tp);
      const auto sim = oracle::simulate_interval(oracle_sde(m), {g.k, g.r, g.p, g.sigma, 0.0}, x_prev, tp, tn, 5e-4,
                                                 100000, stream_seed(2, stream++));
      const auto mom = transition_step(m, g, tp, tn).moments(x_prev);
      const double zm = std::abs(sim.mean - mom.mu) / sim.se_mean;
      const double zv = std::abs(sim.var - mom.xi) / sim.se_var;
      worst = std::max({worst, zm, zv});
      out.require(zm <= 3 && zv <= 3, std::string(to_string(m)) + " t_prev=" + std::to_string(tp));
    }
  out.detail << " worst |z| = " << worst;
}

void ac3(Outcome& out) {
  std::mt19937_64 rng(303);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0;
  for (Model m : fitted)
    for (int i = 0; i < 1000; ++i) {
      const GrowthParams gp{0.05 + 0.3 * u(rng), 1 + 5 * u(rng), 1e-5 + 1e-3 * u(rng), 0.01 + 0.2 * u(rng), 0.0,
                            0.0};
      const double t1 = 5 * u(rng);
      const double t2 = t1 + 0.01 + u(rng);
      const double t3 = t2 + 0.01 + u(rng);
      const auto direct = transition_step(m, gp, t1, t3);
      const auto composed = compose(transition_step(m, gp, t1, t2), transition_step(m, gp, t2, t3));
      const double x = initial_state(m, gp);
      const auto md = direct.moments(x), mc = composed.moments(x);
      worst = std::max({worst, std::abs(mc.mu - md.mu) / std::abs(md.mu), std::abs(mc.xi - md.xi) / md.xi,
                        std::abs(composed.h_beta - direct.h_beta) / direct.h_beta});
    }
  out.detail << " max relative diff = " << worst;
  out.require(worst <= 1e-10, "relative diff <= 1e-10");
}

void ac4(Outcome& out) {
  const auto grid = SimGrid::uniform(0.0, 5.0, 1e-4, 21);  // step 0.25; indices 16..20 span [4, 5]
  std::map<Model, std::vector<TimedValue>> sd;
  for (Model m : fitted) sd[m] = ensemble_std_over_time(simulate_model(m, growth_demo, grid, 1000, 4));
  const double rr5 = sd[Model::rrtr][20].value, lnam5 = sd[Model::lnam][20].value;
  out.detail << " std(5): rrtr " << rr5 << ", lnam " << lnam5 << ", lnaa " << sd[Model::lnaa][20].value;
  out.require(rr5 >= 2 * lnam5, "rrtr >= 2x lnam at t=5");
  for (Model m : {Model::lnam, Model::lnaa})
    out.require(sd[m][20].value <= 1.25 * sd[m][16].value, std::string(to_string(m)) + " plateau");
  for (std::size_t j = 17; j <= 20; ++j)
    out.require(sd[Model::rrtr][j].value > sd[Model::rrtr][j - 1].value,
                "rrtr increasing at index " + std::to_string(j));
}

TimeCourse lnaa_course(std::uint64_t seed) {
  SyntheticOptions opt;
  opt.latent = Model::lnaa;
  return generate_synthetic(set1, ErrorKind::normal, observation_grid(0.0, 5.0), 1, seed, opt).courses.front();
}

void ac5(Outcome& out) {
  const auto tc = lnaa_course(2024);
  SamplerConfig cfg;
  cfg.n_iters = 300000;
  cfg.burn_in = 50000;
  cfg.thin = 250;
  cfg.seed = 3;
  const auto s = summarize(mwg_sample(tc, Model::lnaa, PriorSpec{}, cfg));
  const auto& k = s.params[0];
  const auto& r = s.params[1];
  out.detail << " K = " << k.mean << " (sd " << k.sd << "), r = " << r.mean << " (sd " << r.sd << "), min ESS "
             << s.min_ess();
  out.require(std::abs(k.mean - set1.k) <= 3 * k.sd, "K within 3 sd");
  out.require(std::abs(r.mean - set1.r) <= 3 * r.sd, "r within 3 sd");
  out.require(std::abs(k.mean - set1.k) / set1.k <= 0.05, "K within 5%");
  out.require(s.min_ess() >= 200, "ESS >= 200");
}

void ac6(Outcome& out) {
  SyntheticOptions opt;
  opt.latent = Model::slgm;
  opt.positive_observations = true;
  const auto ds = generate_synthetic(set1, ErrorKind::normal, observation_grid(0.0, 5.0), 10, 606, opt);
  std::map<Model, double> total;
  for (Model m : {Model::lnaa, Model::rrtr}) {
    std::vector<TrajectoryEnsemble> ens;
    for (std::size_t i = 0; i < ds.courses.size(); ++i) {
      SamplerConfig cfg;
      cfg.seed = stream_seed(6, i);
      const auto chain = mwg_sample(ds.courses[i], m, PriorSpec{}, cfg);
      ens.push_back(posterior_predictive(chain, m, ds.courses[i].times, stream_seed(60, i)));
    }
    total[m] = total_mse(ds.courses, ens).total;
  }
  out.detail << " total MSE: lnaa " << total[Model::lnaa] << ", rrtr " << total[Model::rrtr] << " (ratio "
             << total[Model::rrtr] / total[Model::lnaa] << ")";
  out.require(total[Model::lnaa] < total[Model::rrtr], "lnaa < rrtr");
  out.require(2 * total[Model::lnaa] <= total[Model::rrtr], "gap >= 2x");
}

void ac7(Outcome& out) {
  PriorSpec pr;
  SamplerConfig cfg;
  cfg.n_iters = 110000;
  cfg.burn_in = 10000;
  cfg.thin = 10;
  cfg.seed = 4;
  cfg.use_likelihood = false;
  cfg.proposal_scales = {1, 1, 1, 1, 1};
  const auto chain = mwg_sample(TimeCourse{"prior", {}, {}}, Model::lnaa, pr, cfg);
  const auto mu = pr.means();
  const auto tau = pr.precisions();
  double worst = 0;
  for (std::size_t j = 0; j < LogParams::size; ++j) {
    const auto x = chain.column(j);
    const auto m = oracle::moments(x);
    const double ess = effective_sample_size(x);
    double mean = mu[j], var = 1 / tau[j];
    if (j == 4) std::tie(mean, var) = oracle::truncated_normal_moments(mu[j], std::sqrt(var), pr.sigma_trunc_low);
    const double zm = std::abs(m.mean - mean) / std::sqrt(m.var / ess);
    const double zv = std::abs(m.var - var) / (m.var * std::sqrt(2 / ess));
    worst = std::max({worst, zm, zv});
  }
  out.require(worst <= 3, "prior moments within 3 SE");

  SamplerConfig g;
  g.burn_in = 5000;
  g.thin = 20;
  g.n_iters = g.burn_in + 10000 * g.thin;
  g.seed = 12;
  g.proposal_scales = {0.5};
  const double gm = 1.5, gs = 0.7;
  const auto run = metropolis_within_gibbs(
      [&](std::span<const double> x) { return -0.5 * (x[0] - gm) * (x[0] - gm) / (gs * gs); }, {0.0}, g);
  std::vector<double> x;
  for (const auto& s : run.samples) x.push_back(s[0]);
  const double p = oracle::ks_p_value(x, [&](double v) { return oracle::normal_cdf((v - gm) / gs); });
  out.detail << " worst prior |z| = " << worst << ", KS p = " << p;
  out.require(p > 0.01, "KS p > 0.01");
}

void ac8(Outcome& out) {
  const auto grid = SimGrid::uniform(0.0, 5.0, 1e-3, 50);
  for (Model m : all_models)
    out.require(trajectories_csv(simulate_model(m, growth_demo, grid, 20, 8, 1)) ==
                    trajectories_csv(simulate_model(m, growth_demo, grid, 20, 8, 2)),
                std::string(to_string(m)) + " trajectories rerun");

  SyntheticOptions opt;
  opt.latent = Model::lnaa;
  const auto t = observation_grid(0.0, 5.0);
  const auto ds = generate_synthetic(set1, ErrorKind::lognormal, t, 3, 88, opt);
  out.require(dataset_csv(ds) == dataset_csv(generate_synthetic(set1, ErrorKind::lognormal, t, 3, 88, opt)),
              "synthetic rerun");
  std::istringstream din(dataset_csv(ds));
  const auto back = parse_dataset(din);
  bool same = back.courses.size() == ds.courses.size();
  for (std::size_t i = 0; same && i < ds.courses.size(); ++i)
    same = back.courses[i].replicate_id == ds.courses[i].replicate_id && back.courses[i].times == ds.courses[i].times &&
           back.courses[i].values == ds.courses[i].values;
  out.require(same, "dataset round trip");

  SamplerConfig cfg;
  cfg.n_iters = 3000;
  cfg.burn_in = 1000;
  cfg.thin = 10;
  cfg.seed = 8;
  const auto chain = mwg_sample(ds.courses[0], Model::lnaa, PriorSpec{}, cfg);
  const std::string text = chain_csv(chain);
  out.require(text == chain_csv(mwg_sample(ds.courses[0], Model::lnaa, PriorSpec{}, cfg)), "chain rerun");
  std::istringstream cin(text);
  const auto cback = parse_chain(cin);
  bool csame = cback.size() == chain.size() && cback.model == chain.model && cback.seed == chain.seed &&
               cback.t0 == chain.t0 && cback.log_likelihood == chain.log_likelihood;
  for (std::size_t i = 0; csame && i < chain.size(); ++i) csame = cback.samples[i].v == chain.samples[i].v;
  out.require(csame, "chain round trip");
  out.require(chain_csv(cback) == text, "chain rewrite byte-identical");
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::err);
  criterion("AC1", "Kalman recursion equals joint Gaussian density", 10, ac1);
  criterion("AC2", "transition moments match Euler-Maruyama ensembles", 120, ac2);
  criterion("AC3", "Chapman-Kolmogorov composition", 5, ac3);
  criterion("AC4", "ensemble standard deviation: random walk vs mean reversion", 60, ac4);
  criterion("AC5", "LNAA parameter recovery", 300, ac5);
  criterion("AC6", "LNAA ranks above RRTR by predictive MSE", 600, ac6);
  criterion("AC7", "sampler recovers prior moments and passes KS", 120, ac7);
  criterion("AC8", "determinism and round trips", 60, ac8);
  std::printf("%s: %d of 8 criteria failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
