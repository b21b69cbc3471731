// growthfit command-line interface: simulate, fit, predict, compare.
//
// Exit codes: 0 success, 1 runtime or model error, 2 argument error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "growthfit/growthfit.hpp"

namespace fs = std::filesystem;
using namespace growthfit;
using json = nlohmann::json;

namespace {

struct ArgError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Values from --config, consumed key by key so leftovers can be reported.
class ConfigFile {
public:
  void load(const std::string& path) {
    if (path.empty()) return;
    std::ifstream in(path);
    if (!in) throw ArgError("cannot open config file " + path);
    try {
      data_ = json::parse(in);
    } catch (const json::exception& e) {
      throw ArgError("config file " + path + ": " + e.what());
    }
    if (!data_.is_object()) throw ArgError("config file " + path + ": top level must be an object");
    path_ = path;
  }

  // CLI > file > default.
  template <class T>
  void resolve(const CLI::Option* opt, const std::string& key, T& value) {
    if (!data_.contains(key)) return;
    const json v = data_[key];
    data_.erase(key);
    if (opt && opt->count() > 0) return;
    try {
      value = v.get<T>();
    } catch (const json::exception& e) {
      throw ArgError("config key '" + key + "': " + e.what());
    }
  }

  void finish() const {
    if (!data_.empty()) throw ArgError("config file " + path_ + ": unknown key '" + data_.begin().key() + "'");
  }

private:
  json data_ = json::object();
  std::string path_;
};

struct Common {
  std::uint64_t seed = 1;
  std::string out_dir = ".";
  std::string config;
  unsigned jobs = 1;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* out_opt = nullptr;
  CLI::Option* jobs_opt = nullptr;

  void add_to(CLI::App* app) {
    seed_opt = app->add_option("--seed", seed, "Master random seed");
    out_opt = app->add_option("--out-dir", out_dir, "Output directory");
    app->add_option("--config", config, "JSON config file; flags take precedence")->check(CLI::ExistingFile);
    jobs_opt = app->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  }

  void resolve(ConfigFile& cfg) {
    cfg.resolve(seed_opt, "seed", seed);
    cfg.resolve(out_opt, "out_dir", out_dir);
    cfg.resolve(jobs_opt, "jobs", jobs);
    if (jobs == 0) throw ArgError("--jobs must be positive");
    fs::create_directories(out_dir);
  }
};

Model model_arg(const std::string& s, bool allow_slgm) {
  const auto m = parse_model(s);
  if (!m) throw ArgError("unknown model '" + s + "'");
  if (!allow_slgm && *m == Model::slgm) throw ArgError("slgm has no closed-form likelihood; use rrtr, lnam or lnaa");
  return *m;
}

std::string file_stem(const std::string& id) {
  std::string out;
  for (char c : id) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.') ? c : '_';
  return out.empty() ? "course" : out;
}

// --- sampler and data options shared by fit and compare ---

struct FitOptions {
  std::string data;
  SamplerConfig sampler;
  PriorSpec priors;
  double value_scale = 1.0;
  double value_offset = 0.0;
  CLI::Option *iters_opt = nullptr, *burn_opt = nullptr, *thin_opt = nullptr, *data_opt = nullptr;
  CLI::Option *scale_opt = nullptr, *offset_opt = nullptr;

  void add_to(CLI::App* app) {
    data_opt = app->add_option("--data", data, "CSV with columns replicate,time,value");
    iters_opt = app->add_option("--n-iters", sampler.n_iters, "Sampler iterations");
    burn_opt = app->add_option("--burn-in", sampler.burn_in, "Burn-in iterations");
    thin_opt = app->add_option("--thin", sampler.thin, "Thinning interval")->check(CLI::PositiveNumber);
    scale_opt = app->add_option("--value-scale", value_scale, "Multiply observed values by this factor");
    offset_opt = app->add_option("--value-offset", value_offset, "Add this to observed values after scaling");
  }

  void resolve(ConfigFile& cfg) {
    cfg.resolve(data_opt, "data", data);
    cfg.resolve(iters_opt, "n_iters", sampler.n_iters);
    cfg.resolve(burn_opt, "burn_in", sampler.burn_in);
    cfg.resolve(thin_opt, "thin", sampler.thin);
    cfg.resolve(scale_opt, "value_scale", value_scale);
    cfg.resolve(offset_opt, "value_offset", value_offset);
    cfg.resolve<std::vector<double>>(nullptr, "proposal_scales", sampler.proposal_scales);
    cfg.resolve(nullptr, "target_acceptance", sampler.target_acceptance);
    json pri = json::object();
    cfg.resolve(nullptr, "priors", pri);
    for (auto& [key, field] : std::map<std::string, double*>{{"mu_k", &priors.mu_k},
                                                              {"tau_k", &priors.tau_k},
                                                              {"mu_r", &priors.mu_r},
                                                              {"tau_r", &priors.tau_r},
                                                              {"mu_p", &priors.mu_p},
                                                              {"tau_p", &priors.tau_p},
                                                              {"mu_nu", &priors.mu_nu},
                                                              {"tau_nu", &priors.tau_nu},
                                                              {"mu_sigma", &priors.mu_sigma},
                                                              {"tau_sigma", &priors.tau_sigma},
                                                              {"sigma_trunc_low", &priors.sigma_trunc_low}}) {
      if (pri.contains(key)) {
        *field = pri[key].get<double>();
        pri.erase(key);
      }
    }
    if (!pri.empty()) throw ArgError("config priors: unknown key '" + pri.begin().key() + "'");
    if (data.empty()) throw ArgError("--data is required");
    try {
      sampler.validate();
      priors.validate();
    } catch (const InvalidInput& e) {
      throw ArgError(e.what());
    }
  }

  Dataset load() const {
    auto ds = read_dataset(data);
    if (value_scale != 1.0 || value_offset != 0.0) rescale(ds, value_scale, value_offset);
    return ds;
  }
};

// Every course must be usable on the model's scale before any sampling starts.
void check_courses(const Dataset& ds, Model m) {
  for (const auto& c : ds.courses) {
    c.validate();
    if (c.size() < 2) throw InvalidInput("time course '" + c.replicate_id + "' has fewer than two points");
    (void)observations_on_scale(c, observation_scale(m));
  }
}

// Course i samples with stream i of the master seed, whatever the model.
std::vector<PosteriorChain> fit_all(const Dataset& ds, Model m, const FitOptions& fo, std::uint64_t seed,
                                    unsigned jobs) {
  std::vector<PosteriorChain> chains(ds.courses.size());
  parallel_for(ds.courses.size(), jobs, [&](std::size_t i) {
    SamplerConfig cfg = fo.sampler;
    cfg.seed = stream_seed(seed, i);
    chains[i] = mwg_sample(ds.courses[i], m, fo.priors, cfg);
    chains[i].seed = seed;
  });
  return chains;
}

// --- subcommands ---

int cmd_simulate(const std::string& model_s, GrowthParams gp, std::size_t n, double t_start, double t_end,
                 double dt, std::size_t records, const Common& common) {
  std::vector<Model> models;
  const bool all = model_s == "all";
  if (all)
    models.assign(all_models.begin(), all_models.end());
  else
    models.push_back(model_arg(model_s, true));
  if (n == 0) throw ArgError("--n must be positive");
  if (records == 0) throw ArgError("--records must be positive");
  if (all && n < 2) throw ArgError("--model all needs --n >= 2 for standard-deviation curves");
  gp.nu = 0.0;
  gp.t0 = t_start;
  if (!gp.valid()) throw ArgError("parameters must be positive and finite (sigma >= 0)");
  const auto grid = SimGrid::uniform(t_start, t_end, dt, records);
  try {
    grid.validate();
  } catch (const InvalidInput& e) {
    throw ArgError(e.what());
  }

  std::map<Model, std::vector<TimedValue>> curves;
  for (Model m : models) {
    const auto ens = simulate_model(m, gp, grid, n, common.seed, common.jobs);
    if (ens.n_paths() == 0) throw SimulationError(std::string(to_string(m)) + ": every path failed");
    const auto path = fs::path(common.out_dir) / ("trajectories_" + std::string(to_string(m)) + ".csv");
    write_trajectories(ens, path);
    std::cout << to_string(m) << ": " << ens.n_paths() << " paths, " << ens.failed_paths << " failed, "
              << ens.negative_values << " negative values, seed " << common.seed << " -> " << path.string()
              << "\n";
    if (all) curves[m] = ensemble_std_over_time(ens);
  }
  if (all) {
    const auto path = fs::path(common.out_dir) / "std_curves.csv";
    atomic_write(path, std_curves_csv(curves, common.seed));
    std::cout << "std curves -> " << path.string() << "\n";
  }
  return 0;
}

int cmd_fit(const std::string& model_s, const FitOptions& fo, const Common& common) {
  const Model m = model_arg(model_s, false);
  const auto ds = fo.load();
  check_courses(ds, m);
  const auto chains = fit_all(ds, m, fo, common.seed, common.jobs);

  nlohmann::ordered_json summary;
  summary["model"] = to_string(m);
  summary["seed"] = common.seed;
  summary["data"] = fo.data;
  summary["courses"] = json::array();
  for (std::size_t i = 0; i < chains.size(); ++i) {
    const auto path = fs::path(common.out_dir) / ("chain_" + file_stem(chains[i].replicate_id) + ".csv");
    write_chain(chains[i], path);
    SamplerConfig cfg = fo.sampler;
    cfg.seed = stream_seed(common.seed, i);
    auto j = summary_json(chains[i], cfg, fo.priors);
    j["chain_file"] = path.filename().string();
    summary["courses"].push_back(j);
    const auto s = summarize(chains[i]);
    std::cout << chains[i].replicate_id << ": " << chains[i].size() << " samples, K=" << s.params[0].mean
              << " (sd " << s.params[0].sd << "), r=" << s.params[1].mean << " (sd " << s.params[1].sd
              << "), min ESS " << s.min_ess() << " -> " << path.string() << "\n";
  }
  atomic_write(fs::path(common.out_dir) / "summary.json", summary.dump(2) + "\n");
  return 0;
}

int cmd_predict(const std::string& model_s, const std::string& chain_path, const std::string& data_path,
                const std::string& replicate, std::optional<double> t_start, double t_end, std::size_t n_times,
                const Common& common) {
  const Model m = model_arg(model_s, false);
  PosteriorChain chain;
  try {
    chain = read_chain(chain_path);
  } catch (const IoError& e) {
    throw ArgError(e.what());
  }
  if (chain.model != m)
    throw ArgError("chain " + chain_path + " was fitted with " + std::string(to_string(chain.model)) +
                   ", not " + std::string(to_string(m)));
  if (chain.size() == 0) throw ArgError("chain " + chain_path + " has no samples");

  std::vector<double> times;
  if (!data_path.empty()) {
    const auto ds = read_dataset(data_path);
    const std::string want = replicate.empty() ? chain.replicate_id : replicate;
    for (const auto& c : ds.courses)
      if (c.replicate_id == want) times = c.times;
    if (times.empty()) throw ArgError("replicate '" + want + "' not found in " + data_path);
  } else {
    if (n_times < 2) throw ArgError("--n-times must be at least 2");
    const double a = t_start.value_or(chain.t0);
    if (!(t_end > a)) throw ArgError("--t-end must exceed the start time");
    times = observation_grid(a, t_end, n_times);
  }
  if (times.front() < chain.t0) throw ArgError("prediction times precede the chain's t0");

  auto ens = posterior_predictive(chain, m, times, common.seed, common.jobs);
  const std::string stem = file_stem(chain.replicate_id.empty() ? "chain" : chain.replicate_id);
  const auto path = fs::path(common.out_dir) / ("predictive_" + stem + ".csv");
  write_trajectories(ens, path);
  std::cout << chain.replicate_id << ": " << ens.n_paths() << " predictive trajectories, seed " << common.seed
            << " -> " << path.string() << "\n";
  return 0;
}

int cmd_compare(const std::vector<std::string>& model_s, const FitOptions& fo, const Common& common) {
  if (model_s.size() < 2) throw ArgError("--models needs at least two models");
  std::vector<Model> models;
  for (const auto& s : model_s) models.push_back(model_arg(s, false));
  const auto ds = fo.load();
  for (Model m : models) check_courses(ds, m);

  std::string csv = "# seed=" + std::to_string(common.seed) + " data=" + fo.data + "\nmodel";
  for (const auto& c : ds.courses) csv += "," + c.replicate_id;
  csv += ",total,sd\n";
  for (Model m : models) {
    const auto chains = fit_all(ds, m, fo, common.seed, common.jobs);
    std::vector<TrajectoryEnsemble> ens;
    for (std::size_t i = 0; i < chains.size(); ++i)
      ens.push_back(posterior_predictive(chains[i], m, ds.courses[i].times, stream_seed(common.seed, 1'000'000 + i),
                                         common.jobs));
    const auto rep = total_mse(ds.courses, ens);
    csv += std::string(to_string(m));
    for (double v : rep.per_course) csv += "," + format_double(v);
    csv += "," + format_double(rep.total) + "," + format_double(rep.sd) + "\n";
    std::cout << to_string(m) << ": total MSE " << rep.total << " (sd " << rep.sd << ")\n";
  }
  const auto path = fs::path(common.out_dir) / "mse.csv";
  atomic_write(path, csv);
  std::cout << "-> " << path.string() << "\n";
  return 0;
}

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("growthfit");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* lvl = std::getenv("GROWTHFIT_LOG")) {
    const auto level = spdlog::level::from_str(lvl);
    if (level == spdlog::level::off && std::string(lvl) != "off")
      spdlog::warn("GROWTHFIT_LOG='{}' is not a log level; keeping 'warn'", lvl);
    else
      spdlog::set_level(level);
  }
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Stochastic logistic growth: simulation, Kalman-filter inference and model comparison"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "Euler-Maruyama trajectories for one model or all four");
  Common sim_common;
  sim_common.add_to(sim);
  std::string sim_model = "all";
  GrowthParams sim_gp{0.11, 4.0, 5e-5, 0.05, 0.0, 0.0};
  std::size_t sim_n = 100, sim_records = 100;
  double sim_t_start = 0.0, sim_t_end = 5.0, sim_dt = 1e-4;
  std::map<std::string, CLI::Option*> so;
  so["model"] = sim->add_option("--model", sim_model, "slgm, rrtr, lnam, lnaa or all");
  so["k"] = sim->add_option("--k", sim_gp.k, "Carrying capacity");
  so["r"] = sim->add_option("--r", sim_gp.r, "Growth rate");
  so["p"] = sim->add_option("--p", sim_gp.p, "Initial density");
  so["sigma"] = sim->add_option("--sigma", sim_gp.sigma, "Intrinsic noise");
  so["n"] = sim->add_option("--n", sim_n, "Number of paths");
  so["t_start"] = sim->add_option("--t-start", sim_t_start, "Start time");
  so["t_end"] = sim->add_option("--t-end", sim_t_end, "End time");
  so["dt"] = sim->add_option("--dt", sim_dt, "Integration step");
  so["records"] = sim->add_option("--records", sim_records, "Evenly spaced record times");

  // fit
  auto* fit = app.add_subcommand("fit", "Posterior sampling for every course in a data file");
  Common fit_common;
  fit_common.add_to(fit);
  FitOptions fit_opts;
  fit_opts.add_to(fit);
  std::string fit_model;
  auto* fit_model_opt = fit->add_option("--model", fit_model, "rrtr, lnam or lnaa");

  // predict
  auto* pred = app.add_subcommand("predict", "Posterior-predictive trajectories from a chain file");
  Common pred_common;
  pred_common.add_to(pred);
  std::string pred_model, pred_chain, pred_data, pred_rep;
  double pred_t_end = 5.0;
  std::optional<double> pred_t_start;
  std::size_t pred_n_times = 27;
  auto* pred_model_opt = pred->add_option("--model", pred_model, "Model the chain was fitted with");
  auto* pred_chain_opt = pred->add_option("--chain", pred_chain, "Chain CSV written by fit");
  auto* pred_data_opt = pred->add_option("--data", pred_data, "Take prediction times from this data file");
  auto* pred_rep_opt = pred->add_option("--replicate", pred_rep, "Course in --data (default: the chain's)");
  auto* pred_ts_opt = pred->add_option("--t-start", pred_t_start, "Grid start (default: chain t0)");
  auto* pred_te_opt = pred->add_option("--t-end", pred_t_end, "Grid end");
  auto* pred_nt_opt = pred->add_option("--n-times", pred_n_times, "Grid size");

  // compare
  auto* cmp = app.add_subcommand("compare", "Fit several models and rank them by posterior-predictive MSE");
  Common cmp_common;
  cmp_common.add_to(cmp);
  FitOptions cmp_opts;
  cmp_opts.add_to(cmp);
  std::vector<std::string> cmp_models{"rrtr", "lnam", "lnaa"};
  auto* cmp_models_opt = cmp->add_option("--models", cmp_models, "Models to compare")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    ConfigFile cfg;
    if (sim->parsed()) {
      cfg.load(sim_common.config);
      sim_common.resolve(cfg);
      cfg.resolve(so["model"], "model", sim_model);
      cfg.resolve(so["k"], "k", sim_gp.k);
      cfg.resolve(so["r"], "r", sim_gp.r);
      cfg.resolve(so["p"], "p", sim_gp.p);
      cfg.resolve(so["sigma"], "sigma", sim_gp.sigma);
      cfg.resolve(so["n"], "n", sim_n);
      cfg.resolve(so["t_start"], "t_start", sim_t_start);
      cfg.resolve(so["t_end"], "t_end", sim_t_end);
      cfg.resolve(so["dt"], "dt", sim_dt);
      cfg.resolve(so["records"], "records", sim_records);
      cfg.finish();
      return cmd_simulate(sim_model, sim_gp, sim_n, sim_t_start, sim_t_end, sim_dt, sim_records, sim_common);
    }
    if (fit->parsed()) {
      cfg.load(fit_common.config);
      fit_common.resolve(cfg);
      cfg.resolve(fit_model_opt, "model", fit_model);
      fit_opts.resolve(cfg);
      cfg.finish();
      if (fit_model.empty()) throw ArgError("--model is required");
      return cmd_fit(fit_model, fit_opts, fit_common);
    }
    if (pred->parsed()) {
      cfg.load(pred_common.config);
      pred_common.resolve(cfg);
      cfg.resolve(pred_model_opt, "model", pred_model);
      cfg.resolve(pred_chain_opt, "chain", pred_chain);
      cfg.resolve(pred_data_opt, "data", pred_data);
      cfg.resolve(pred_rep_opt, "replicate", pred_rep);
      double ts = std::numeric_limits<double>::quiet_NaN();
      cfg.resolve(pred_ts_opt, "t_start", ts);
      if (!std::isnan(ts)) pred_t_start = ts;
      cfg.resolve(pred_te_opt, "t_end", pred_t_end);
      cfg.resolve(pred_nt_opt, "n_times", pred_n_times);
      cfg.finish();
      if (pred_model.empty() || pred_chain.empty()) throw ArgError("--model and --chain are required");
      return cmd_predict(pred_model, pred_chain, pred_data, pred_rep, pred_t_start, pred_t_end, pred_n_times,
                         pred_common);
    }
    if (cmp->parsed()) {
      cfg.load(cmp_common.config);
      cmp_common.resolve(cfg);
      cfg.resolve(cmp_models_opt, "models", cmp_models);
      cmp_opts.resolve(cfg);
      cfg.finish();
      return cmd_compare(cmp_models, cmp_opts, cmp_common);
    }
  } catch (const ArgError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
