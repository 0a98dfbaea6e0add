#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "ddep/errors.hpp"
#include "ddep/experiment.hpp"

namespace ddep::config {

using nlohmann::json;

// Config layout:
//
//   {
//     "market":     {"firms": 2, "horizon": 10000, "kappa": 0.05, "price_box": [0, 6]},
//     "demand":     {"family": "mnl", "alpha_range": [3, 4], "beta_range": [0.4, 0.5],
//                    "linear": {"intercept": 10, "own_slope": 2, "cross_slope": 1}},
//     "schedule":   {"v": 2, "i0": 3},
//     "experiment": {"draws": 100, "checkpoints": [100, 1000, 10000], "seed": 1,
//                    "mode": "full", "n_prime": 2, "workers": 0}
//   }
//
// Every key is optional; unknown keys are rejected.

namespace detail {

inline void reject_unknown(const json& obj, const std::set<std::string>& allowed,
                           const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, _] : obj.items())
    if (!allowed.contains(key)) throw ConfigError("unknown key '" + key + "' in " + where);
}

template <class T>
T get(const json& obj, const char* key, const std::string& where) {
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

inline std::pair<double, double> get_range(const json& obj, const char* key,
                                           const std::string& where) {
  const auto v = get<std::vector<double>>(obj, key, where);
  if (v.size() != 2) throw ConfigError(where + "." + key + " must be [low, high]");
  return {v[0], v[1]};
}

}  // namespace detail

inline ExperimentSpec spec_from_json(const json& root) {
  using detail::get;
  ExperimentSpec s;
  detail::reject_unknown(root, {"market", "demand", "schedule", "experiment"}, "config");

  if (root.contains("market")) {
    const auto& m = root["market"];
    detail::reject_unknown(m, {"firms", "horizon", "kappa", "price_box"}, "market");
    if (m.contains("firms")) s.n_firms = get<std::size_t>(m, "firms", "market");
    if (m.contains("horizon")) s.horizon = get<std::size_t>(m, "horizon", "market");
    if (m.contains("kappa")) s.kappa = get<double>(m, "kappa", "market");
    if (m.contains("price_box"))
      std::tie(s.price_low, s.price_high) = detail::get_range(m, "price_box", "market");
  }
  if (root.contains("demand")) {
    const auto& d = root["demand"];
    detail::reject_unknown(d, {"family", "alpha_range", "beta_range", "linear"}, "demand");
    if (d.contains("family")) {
      const auto f = get<std::string>(d, "family", "demand");
      if (f == "mnl") s.demand = DemandFamily::mnl;
      else if (f == "linear") s.demand = DemandFamily::linear;
      else throw ConfigError("demand.family must be 'mnl' or 'linear'");
    }
    if (d.contains("alpha_range"))
      std::tie(s.alpha_low, s.alpha_high) = detail::get_range(d, "alpha_range", "demand");
    if (d.contains("beta_range"))
      std::tie(s.beta_low, s.beta_high) = detail::get_range(d, "beta_range", "demand");
    if (d.contains("linear")) {
      const auto& l = d["linear"];
      detail::reject_unknown(l, {"intercept", "own_slope", "cross_slope"}, "demand.linear");
      if (l.contains("intercept")) s.linear_intercept = get<double>(l, "intercept", "demand.linear");
      if (l.contains("own_slope")) s.linear_own_slope = get<double>(l, "own_slope", "demand.linear");
      if (l.contains("cross_slope") && !l["cross_slope"].is_null())
        s.linear_cross_slope = get<double>(l, "cross_slope", "demand.linear");
    }
  }
  if (root.contains("schedule")) {
    const auto& c = root["schedule"];
    detail::reject_unknown(c, {"v", "i0"}, "schedule");
    if (c.contains("v")) s.v = get<double>(c, "v", "schedule");
    if (c.contains("i0") && !c["i0"].is_null()) s.i0 = get<std::size_t>(c, "i0", "schedule");
  }
  if (root.contains("experiment")) {
    const auto& e = root["experiment"];
    detail::reject_unknown(e, {"draws", "checkpoints", "seed", "mode", "n_prime", "workers"},
                           "experiment");
    if (e.contains("draws")) s.n_draws = get<std::size_t>(e, "draws", "experiment");
    if (e.contains("checkpoints"))
      s.checkpoints = get<std::vector<std::size_t>>(e, "checkpoints", "experiment");
    if (e.contains("seed")) s.master_seed = get<std::uint64_t>(e, "seed", "experiment");
    if (e.contains("workers")) s.workers = get<std::size_t>(e, "workers", "experiment");
    if (e.contains("n_prime") && !e["n_prime"].is_null())
      s.n_prime = get<std::size_t>(e, "n_prime", "experiment");
    if (e.contains("mode")) {
      const auto mode = get<std::string>(e, "mode", "experiment");
      if (mode == "full") s.n_prime.reset();
      else if (mode != "partial") throw ConfigError("experiment.mode must be 'full' or 'partial'");
      else if (!s.n_prime) throw ConfigError("experiment.mode 'partial' requires n_prime");
    }
  }
  return s;
}

inline json spec_to_json(const ExperimentSpec& s) {
  json linear = {{"intercept", s.linear_intercept}, {"own_slope", s.linear_own_slope}};
  linear["cross_slope"] = s.linear_cross_slope ? json(*s.linear_cross_slope) : json(nullptr);
  json out = {
      {"market",
       {{"firms", s.n_firms},
        {"horizon", s.effective_horizon()},
        {"kappa", s.kappa},
        {"price_box", {s.price_low, s.price_high}}}},
      {"demand",
       {{"family", to_string(s.demand)},
        {"alpha_range", {s.alpha_low, s.alpha_high}},
        {"beta_range", {s.beta_low, s.beta_high}},
        {"linear", linear}}},
      {"schedule", {{"v", s.v}, {"i0", s.effective_i0()}}},
      {"experiment",
       {{"draws", s.n_draws},
        {"checkpoints", s.checkpoints},
        {"seed", s.master_seed},
        {"mode", s.partial() ? "partial" : "full"},
        {"workers", s.workers}}},
  };
  out["experiment"]["n_prime"] = s.n_prime ? json(*s.n_prime) : json(nullptr);
  return out;
}

inline json parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  try {
    return json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file '" + path + "': " + e.what());
  }
}

inline ExperimentSpec load_spec(const std::string& path) { return spec_from_json(parse_file(path)); }

/// FNV-1a over the canonical JSON dump of the spec, excluding the worker
/// count (which never changes results).
inline std::string spec_hash(const ExperimentSpec& s) {
  json j = spec_to_json(s);
  j["experiment"].erase("workers");
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : j.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

}  // namespace ddep::config
