#pragma once

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "ddep/config.hpp"
#include "ddep/errors.hpp"
#include "ddep/experiment.hpp"
#include "ddep/metrics.hpp"

namespace ddep::io {

namespace fs = std::filesystem;
using nlohmann::json;

inline constexpr const char* kCodeVersion = "0.1.0";

/// Published number format: 6 significant digits.
inline std::string num(double v) { return fmt::format("{:.6g}", v); }
/// Round-trip format for intermediate files that get re-aggregated.
inline std::string exact(double v) { return fmt::format("{}", v); }

inline std::string table_csv(const ResultTable& t) {
  std::string out =
      "n_firms,n_prime,kappa,firm,clairvoyant_flag,checkpoint,mean_fraction,stderr,n_effective\n";
  for (const auto& c : t.rows)
    out += fmt::format("{},{},{},{},{},{},{},{},{}\n", t.n_firms, t.n_prime, num(t.kappa),
                       c.firm + 1, c.clairvoyant ? 1 : 0, c.checkpoint, num(c.mean_fraction),
                       num(c.stderr_fraction), c.n_effective);
  return out;
}

inline std::string stages_csv(std::span<const DrawResult> draws) {
  std::string out = "draw,stage,I_n,delta_n,gap_sq,converged\n";
  for (const auto& d : draws) {
    if (!d.ok) continue;
    for (const auto& s : d.summary.stages)
      out += fmt::format("{},{},{},{},{},{}\n", d.draw, s.stage, s.interval_len, num(s.delta),
                         num(s.gap_sq), s.converged ? 1 : 0);
  }
  return out;
}

/// Per-(draw, firm, checkpoint) metrics in round-trip precision.
inline std::string draws_csv(const ExperimentSpec& spec, std::span<const DrawResult> draws) {
  std::string out =
      "draw,firm,clairvoyant_flag,checkpoint,fraction,expected_fraction,regret,revenue_difference\n";
  for (const auto& d : draws) {
    if (!d.ok) continue;
    for (std::size_t i = 0; i < spec.n_firms; ++i)
      for (std::size_t c = 0; c < spec.checkpoints.size(); ++c)
        out += fmt::format("{},{},{},{},{},{},{},{}\n", d.draw, i + 1,
                           i >= spec.experimenting() ? 1 : 0, spec.checkpoints[c],
                           exact(d.series.fraction_of_optimal[i][c]),
                           exact(d.series.expected_fraction_of_optimal[i][c]),
                           exact(d.series.regret_cumulative[i][c]),
                           exact(d.series.revenue_difference_cumulative[i][c]));
  }
  return out;
}

inline std::string regret_csv(std::span<const DrawResult> draws) {
  std::string out = "draw,horizon,mean_regret\n";
  for (const auto& d : draws) {
    if (!d.ok) continue;
    for (const auto& r : d.summary.regret)
      out += fmt::format("{},{},{}\n", d.draw, r.horizon, exact(r.mean_regret));
  }
  return out;
}

/// One row per draw: status, noise level, clairvoyant prices, demand parameters.
inline std::string draw_summary_csv(std::span<const DrawResult> draws) {
  auto joined = [](const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ";" : "") + num(v[i]);
    return s;
  };
  std::string out = "draw,ok,sigma,p_star,alpha,beta,initial_prices,nonconverged_stages,error\n";
  for (const auto& d : draws) {
    std::string err = d.error;
    for (char& c : err)
      if (c == ',' || c == '\n') c = ' ';
    out += fmt::format("{},{},{},{},{},{},{},{},{}\n", d.draw, d.ok ? 1 : 0, num(d.sigma),
                       joined(d.p_star), joined(d.params.params.alpha),
                       joined(d.params.params.beta), joined(d.params.initial.to_vector()),
                       d.nonconverged_stages, err);
  }
  return out;
}

inline json diagnostics_json(const std::optional<ConvergenceDiagnostics>& diag,
                             const std::string& error) {
  if (!diag) return {{"error", error}};
  json stages = json::array(), horizons = json::array();
  for (const auto& m : diag->stage_means)
    stages.push_back({{"stage", m.stage},
                      {"I_n", m.interval_len},
                      {"mean_gap_sq", m.mean_gap_sq},
                      {"count", m.count}});
  for (const auto& h : diag->horizon_means)
    horizons.push_back({{"horizon", h.horizon}, {"mean_regret", h.mean_regret}});
  return {{"n_traces", diag->n_traces},
          {"gap_slope_vs_log_I_n", diag->gap_slope},
          {"regret_slope_vs_log_T", diag->regret_slope},
          {"stages", stages},
          {"horizons", horizons}};
}

inline json metadata_json(const ExperimentResult& r) {
  return {{"spec", config::spec_to_json(r.spec)},
          {"spec_hash", config::spec_hash(r.spec)},
          {"master_seed", r.spec.master_seed},
          {"code_version", kCodeVersion},
          {"noise_seed_policy", "fresh noise per (draw, kappa); parameters per draw only"},
          {"draws", r.draws.size()},
          {"failures", r.failures}};
}

inline void write_file(const fs::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << content;
}

/// Writes table.csv, stages.csv, draws.csv, regret.csv, draw_summary.csv,
/// diagnostics.json and metadata.json into `dir`.
inline void write_outputs(const ExperimentResult& r, const fs::path& dir) {
  fs::create_directories(dir);
  write_file(dir / "table.csv", table_csv(r.table));
  write_file(dir / "stages.csv", stages_csv(r.draws));
  write_file(dir / "draws.csv", draws_csv(r.spec, r.draws));
  write_file(dir / "regret.csv", regret_csv(r.draws));
  write_file(dir / "draw_summary.csv", draw_summary_csv(r.draws));
  write_file(dir / "diagnostics.json",
             diagnostics_json(r.diagnostics, r.diagnostics_error).dump(2) + "\n");
  write_file(dir / "metadata.json", metadata_json(r).dump(2) + "\n");
}

/// Header-keyed rows of a comma-separated file without quoting.
struct CsvFile {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw Error("csv: missing column '" + std::string(name) + "'");
  }
};

inline CsvFile read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  CsvFile f;
  std::string line;
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!s.empty() && s.back() == ',') out.emplace_back();
    return out;
  };
  if (!std::getline(in, line)) throw Error("csv: empty file '" + path.string() + "'");
  f.header = split(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto row = split(line);
    if (row.size() != f.header.size())
      throw Error("csv: ragged row in '" + path.string() + "'");
    f.rows.push_back(std::move(row));
  }
  return f;
}

inline ExperimentSpec read_spec(const fs::path& dir) {
  std::ifstream in(dir / "metadata.json");
  if (!in) throw Error("cannot open '" + (dir / "metadata.json").string() + "'");
  return config::spec_from_json(json::parse(in).at("spec"));
}

/// Rebuilds trace summaries from stages.csv and regret.csv.
inline std::vector<TraceSummary> read_summaries(const fs::path& dir) {
  std::map<std::size_t, TraceSummary> by_draw;
  const auto stages = read_csv(dir / "stages.csv");
  const auto c_draw = stages.column("draw"), c_stage = stages.column("stage"),
             c_len = stages.column("I_n"), c_delta = stages.column("delta_n"),
             c_gap = stages.column("gap_sq"), c_conv = stages.column("converged");
  for (const auto& r : stages.rows)
    by_draw[std::stoul(r[c_draw])].stages.push_back(
        {std::stoul(r[c_stage]), std::stoul(r[c_len]), std::stod(r[c_delta]),
         std::stod(r[c_gap]), r[c_conv] == "1"});
  const auto regret = read_csv(dir / "regret.csv");
  const auto r_draw = regret.column("draw"), r_h = regret.column("horizon"),
             r_val = regret.column("mean_regret");
  for (const auto& r : regret.rows)
    by_draw[std::stoul(r[r_draw])].regret.push_back({std::stoul(r[r_h]), std::stod(r[r_val])});
  std::vector<TraceSummary> out;
  for (auto& [_, s] : by_draw) out.push_back(std::move(s));
  return out;
}

/// Re-aggregates draws.csv into a ResultTable using the spec in metadata.json.
inline ResultTable reaggregate(const fs::path& dir) {
  const ExperimentSpec spec = read_spec(dir);
  const auto f = read_csv(dir / "draws.csv");
  const auto c_draw = f.column("draw"), c_firm = f.column("firm"),
             c_cp = f.column("checkpoint"), c_frac = f.column("fraction");
  std::map<std::size_t, DrawResult> by_draw;
  for (const auto& r : f.rows) {
    const std::size_t d = std::stoul(r[c_draw]);
    auto& dr = by_draw[d];
    if (!dr.ok) {
      dr.ok = true;
      dr.draw = d;
      dr.series.fraction_of_optimal.assign(
          spec.n_firms, std::vector<double>(spec.checkpoints.size(), 0.0));
    }
    const std::size_t firm = std::stoul(r[c_firm]) - 1;
    const std::size_t cp = std::stoul(r[c_cp]);
    const auto it = std::find(spec.checkpoints.begin(), spec.checkpoints.end(), cp);
    if (firm >= spec.n_firms || it == spec.checkpoints.end())
      throw Error("draws.csv does not match metadata.json");
    dr.series.fraction_of_optimal[firm][std::size_t(it - spec.checkpoints.begin())] =
        std::stod(r[c_frac]);
  }
  std::vector<DrawResult> draws;
  for (auto& [_, d] : by_draw) draws.push_back(std::move(d));
  return aggregate(spec, draws);
}

}  // namespace ddep::io
