#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "diagnostics.hpp"
#include "inference.hpp"
#include "params.hpp"
#include "sde.hpp"

namespace growthfit {

class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct Dataset {
  std::vector<TimeCourse> courses;
  std::string source;

  friend bool operator==(const Dataset& a, const Dataset& b) { return a.courses == b.courses; }
};

/// 17 significant digits: parses back to the identical double.
inline std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  if (ec != std::errc{}) throw IoError("format_double: conversion failed");
  return std::string(buf, end);
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline bool parse_number(std::string_view s, double& out) {
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

inline bool is_skippable(std::string_view line) {
  const auto t = trim(line);
  return t.empty() || t.front() == '#';
}

}  // namespace detail

/// Parses `replicate,time,value` rows. Courses keep first-appearance order and
/// are sorted by time. Positivity is checked later, by log-scale models.
inline Dataset parse_dataset(std::istream& in, const std::string& source = "<stream>") {
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  std::vector<TimeCourse> courses;
  std::unordered_map<std::string, std::size_t> index;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    if (detail::is_skippable(line)) continue;
    const auto fields = detail::split_csv(line);
    if (!have_header) {
      if (fields.size() != 3 || fields[0] != "replicate" || fields[1] != "time" || fields[2] != "value")
        throw IoError(source + ":" + std::to_string(lineno) + ": expected header 'replicate,time,value'");
      have_header = true;
      continue;
    }
    double t = 0.0;
    double v = 0.0;
    if (fields.size() != 3 || fields[0].empty() || !detail::parse_number(fields[1], t) ||
        !detail::parse_number(fields[2], v) || !std::isfinite(t) || !std::isfinite(v))
      throw IoError(source + ":" + std::to_string(lineno) + ": malformed row '" + line + "'");
    std::string id(fields[0]);
    auto [it, inserted] = index.try_emplace(id, courses.size());
    if (inserted) courses.push_back(TimeCourse{id, {}, {}});
    auto& c = courses[it->second];
    c.times.push_back(t);
    c.values.push_back(v);
  }
  if (!have_header) throw IoError(source + ": empty file");
  if (courses.empty()) throw IoError(source + ": no data rows");

  for (auto& c : courses) {
    std::vector<std::size_t> order(c.times.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return c.times[a] < c.times[b]; });
    TimeCourse sorted{c.replicate_id, {}, {}};
    for (auto i : order) {
      if (!sorted.times.empty() && sorted.times.back() == c.times[i])
        throw IoError(source + ": duplicate time " + format_double(c.times[i]) + " in replicate '" +
                      c.replicate_id + "'");
      sorted.times.push_back(c.times[i]);
      sorted.values.push_back(c.values[i]);
    }
    c = std::move(sorted);
  }
  return Dataset{std::move(courses), source};
}

inline Dataset read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return parse_dataset(in, path.string());
}

/// Affine rescaling of observed values, y -> scale * y + offset, for raw
/// readings that are proportional to density.
inline void rescale(Dataset& ds, double scale, double offset = 0.0) {
  if (!std::isfinite(scale) || !std::isfinite(offset) || scale == 0.0)
    throw InvalidInput("rescale: scale must be finite and nonzero, offset finite");
  for (auto& c : ds.courses)
    for (double& v : c.values) v = scale * v + offset;
}

/// Writes through a temporary sibling file and renames over the target.
inline void atomic_write(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << content;
    out.flush();
    if (!out) throw IoError("write failed for " + path.string());
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot move temporary file into place at " + path.string());
  }
}

inline std::string dataset_csv(const Dataset& ds) {
  std::string s = "replicate,time,value\n";
  for (const auto& c : ds.courses)
    for (std::size_t i = 0; i < c.size(); ++i)
      s += c.replicate_id + "," + format_double(c.times[i]) + "," + format_double(c.values[i]) + "\n";
  return s;
}

inline void write_dataset(const Dataset& ds, const std::filesystem::path& path) { atomic_write(path, dataset_csv(ds)); }

/// `time,path_0,...,path_{n-1}`, one row per record time, preceded by a
/// `#` metadata line.
inline std::string trajectories_csv(const TrajectoryEnsemble& ens) {
  std::string s = "# model=" + std::string(to_string(ens.model)) + " seed=" + std::to_string(ens.seed) +
                  " paths=" + std::to_string(ens.n_paths()) + " failed=" + std::to_string(ens.failed_paths) +
                  " negative_values=" + std::to_string(ens.negative_values) + "\n";
  s += "time";
  for (std::size_t i = 0; i < ens.n_paths(); ++i) s += ",path_" + std::to_string(i);
  s += "\n";
  for (std::size_t j = 0; j < ens.times.size(); ++j) {
    s += format_double(ens.times[j]);
    for (const auto& p : ens.paths) s += "," + format_double(p[j]);
    s += "\n";
  }
  return s;
}

inline void write_trajectories(const TrajectoryEnsemble& ens, const std::filesystem::path& path) {
  atomic_write(path, trajectories_csv(ens));
}

/// `time,std_slgm,std_rrtr,std_lnam,std_lnaa`. All four curves must share times.
inline std::string std_curves_csv(const std::map<Model, std::vector<TimedValue>>& curves, std::uint64_t seed) {
  for (Model m : all_models)
    if (!curves.contains(m)) throw InvalidInput("std_curves_csv: missing curve for " + std::string(to_string(m)));
  const auto& ref = curves.at(Model::slgm);
  for (const auto& [m, c] : curves)
    if (c.size() != ref.size()) throw InvalidInput("std_curves_csv: curves differ in length");
  std::string s = "# seed=" + std::to_string(seed) + "\ntime,std_slgm,std_rrtr,std_lnam,std_lnaa\n";
  for (std::size_t j = 0; j < ref.size(); ++j) {
    s += format_double(ref[j].time);
    for (Model m : all_models) s += "," + format_double(curves.at(m)[j].value);
    s += "\n";
  }
  return s;
}

inline std::string chain_csv(const PosteriorChain& chain) {
  std::string s = "# model=" + std::string(to_string(chain.model)) + " seed=" + std::to_string(chain.seed) +
                  " t0=" + format_double(chain.t0) + " replicate=" + chain.replicate_id + "\n";
  s += "iter,logK,logr,logP,log_nu_inv2,log_sigma_inv2,loglik\n";
  for (std::size_t i = 0; i < chain.size(); ++i) {
    s += std::to_string(chain.iterations.at(i));
    for (double v : chain.samples[i].v) s += "," + format_double(v);
    s += "," + format_double(chain.log_likelihood.at(i)) + "\n";
  }
  return s;
}

inline void write_chain(const PosteriorChain& chain, const std::filesystem::path& path) {
  atomic_write(path, chain_csv(chain));
}

/// Reads the chain format back. Metadata comes from the `#` line when present.
inline PosteriorChain parse_chain(std::istream& in, const std::string& source = "<stream>") {
  PosteriorChain chain;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = detail::trim(line);
    if (t.empty()) continue;
    if (t.front() == '#') {
      std::istringstream meta{std::string(t.substr(1))};
      std::string kv;
      while (meta >> kv) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) continue;
        const auto key = kv.substr(0, eq);
        const auto val = kv.substr(eq + 1);
        if (key == "model") {
          const auto m = parse_model(val);
          if (!m) throw IoError(source + ":" + std::to_string(lineno) + ": unknown model '" + val + "'");
          chain.model = *m;
        } else if (key == "seed") {
          chain.seed = std::stoull(val);
        } else if (key == "t0") {
          if (!detail::parse_number(val, chain.t0)) throw IoError(source + ": bad t0");
        } else if (key == "replicate") {
          chain.replicate_id = val;
        }
      }
      continue;
    }
    const auto fields = detail::split_csv(t);
    if (!have_header) {
      if (fields.size() != 7 || fields[0] != "iter")
        throw IoError(source + ":" + std::to_string(lineno) + ": expected chain header");
      have_header = true;
      continue;
    }
    if (fields.size() != 7) throw IoError(source + ":" + std::to_string(lineno) + ": expected 7 columns");
    double it = 0.0;
    if (!detail::parse_number(fields[0], it)) throw IoError(source + ":" + std::to_string(lineno) + ": bad iter");
    LogParams lp;
    for (std::size_t j = 0; j < LogParams::size; ++j)
      if (!detail::parse_number(fields[j + 1], lp[j]))
        throw IoError(source + ":" + std::to_string(lineno) + ": malformed value");
    double ll = 0.0;
    if (!detail::parse_number(fields[6], ll)) throw IoError(source + ":" + std::to_string(lineno) + ": bad loglik");
    chain.iterations.push_back(static_cast<std::size_t>(it));
    chain.samples.push_back(lp);
    chain.log_likelihood.push_back(ll);
  }
  if (!have_header) throw IoError(source + ": empty chain file");
  return chain;
}

inline PosteriorChain read_chain(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return parse_chain(in, path.string());
}

/// Posterior means/SDs on the natural scale, acceptance, ESS, seed and the
/// sampler configuration.
inline nlohmann::ordered_json summary_json(const PosteriorChain& chain, const SamplerConfig& config,
                                           const PriorSpec& priors) {
  const auto summary = summarize(chain);
  nlohmann::ordered_json j;
  j["replicate"] = chain.replicate_id;
  j["model"] = to_string(chain.model);
  j["seed"] = chain.seed;
  j["t0"] = chain.t0;
  j["n_samples"] = summary.n_samples;
  auto& params = j["parameters"];
  for (std::size_t i = 0; i < summary.params.size(); ++i) {
    const auto& p = summary.params[i];
    params[std::string(PosteriorSummary::names[i])] = {
        {"mean", p.mean}, {"sd", p.sd}, {"ess", p.ess}, {"acceptance", p.acceptance}};
  }
  j["min_ess"] = summary.min_ess();
  j["config"] = {{"n_iters", config.n_iters},   {"burn_in", config.burn_in},
                 {"thin", config.thin},         {"seed", config.seed},
                 {"adapt", config.adapt},       {"target_acceptance", config.target_acceptance}};
  j["priors"] = {{"mu_k", priors.mu_k},         {"tau_k", priors.tau_k},         {"mu_r", priors.mu_r},
                 {"tau_r", priors.tau_r},       {"mu_p", priors.mu_p},           {"tau_p", priors.tau_p},
                 {"mu_nu", priors.mu_nu},       {"tau_nu", priors.tau_nu},       {"mu_sigma", priors.mu_sigma},
                 {"tau_sigma", priors.tau_sigma}, {"sigma_trunc_low", priors.sigma_trunc_low}};
  return j;
}

}  // namespace growthfit
