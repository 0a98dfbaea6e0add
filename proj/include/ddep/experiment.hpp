#pragma once

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "ddep/engine.hpp"
#include "ddep/errors.hpp"
#include "ddep/market.hpp"
#include "ddep/metrics.hpp"
#include "ddep/rng.hpp"

namespace ddep {

enum class DemandFamily { mnl, linear };

inline const char* to_string(DemandFamily f) { return f == DemandFamily::mnl ? "mnl" : "linear"; }

/// One experimental protocol: market size, noise level, checkpoints and how
/// many random parameter draws to average over.
struct ExperimentSpec {
  std::size_t n_firms = 2;
  std::optional<std::size_t> n_prime;  ///< set => partially-clairvoyant run
  double kappa = 0.05;
  std::vector<std::size_t> checkpoints{100, 1000, 10000};
  std::size_t horizon = 0;  ///< 0 => largest checkpoint
  std::size_t n_draws = 100;
  double v = 2.0;
  std::optional<std::size_t> i0;  ///< unset => experimenting firms + 1
  double price_low = 0.0;
  double price_high = 6.0;
  double alpha_low = 3.0, alpha_high = 4.0;
  double beta_low = 0.4, beta_high = 0.5;
  std::uint64_t master_seed = 1;
  DemandFamily demand = DemandFamily::mnl;
  double linear_intercept = 10.0;
  double linear_own_slope = 2.0;
  std::optional<double> linear_cross_slope;  ///< unset => 1 / (N - 1)
  std::size_t workers = 0;                   ///< 0 => hardware concurrency

  bool partial() const noexcept { return n_prime.has_value(); }
  std::size_t experimenting() const noexcept { return n_prime.value_or(n_firms); }
  std::size_t effective_horizon() const {
    return horizon ? horizon : (checkpoints.empty() ? 0 : checkpoints.back());
  }
  std::size_t effective_i0() const { return i0.value_or(experimenting() + 1); }
  double effective_cross_slope() const {
    return linear_cross_slope.value_or(n_firms > 1 ? 1.0 / double(n_firms - 1) : 0.0);
  }

  void validate() const {
    if (n_firms < 1) throw ConfigError("firms must be >= 1");
    if (n_prime && (*n_prime < 1 || *n_prime > n_firms))
      throw ConfigError("n_prime must satisfy 1 <= n_prime <= firms");
    if (!(kappa >= 0.0) || !std::isfinite(kappa)) throw ConfigError("kappa must be >= 0");
    if (checkpoints.empty()) throw ConfigError("need at least one checkpoint");
    if (!std::is_sorted(checkpoints.begin(), checkpoints.end()) ||
        std::adjacent_find(checkpoints.begin(), checkpoints.end()) != checkpoints.end())
      throw ConfigError("checkpoints must be strictly ascending");
    if (checkpoints.front() < 1) throw ConfigError("checkpoints must be >= 1");
    if (checkpoints.back() > effective_horizon())
      throw ConfigError("largest checkpoint exceeds the horizon");
    if (n_draws < 1) throw ConfigError("draws must be >= 1");
    if (!(v > 1.0)) throw ConfigError("v must be > 1");
    if (effective_i0() < 1) throw ConfigError("i0 must be >= 1");
    if (!(price_low < price_high)) throw ConfigError("price box must have low < high");
    if (!(alpha_low <= alpha_high) || !(beta_low <= beta_high) || !(beta_low > 0.0))
      throw ConfigError("invalid alpha/beta ranges");
    if (demand == DemandFamily::linear && !(linear_own_slope > 0.0))
      throw ConfigError("linear own slope must be > 0");
  }

  /// Horizons at which per-draw regret is recorded for slope fits: the
  /// checkpoints plus a quarter-decade grid from 100 up to the horizon.
  std::vector<std::size_t> regret_horizons() const {
    std::vector<std::size_t> out(checkpoints.begin(), checkpoints.end());
    const std::size_t t = effective_horizon();
    for (int k = 0;; ++k) {
      const auto h = static_cast<std::size_t>(std::llround(100.0 * std::pow(10.0, k / 4.0)));
      if (h > t) break;
      out.push_back(h);
    }
    if (t > 0) out.push_back(t);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }
};

struct Draw {
  MnlDemandParams params;
  PriceVector initial;
};

/// Parameters and initial prices of draw `index`; a pure function of
/// (master_seed, index).
inline Draw sample_draw(const ExperimentSpec& spec, std::size_t index) {
  const std::size_t n = spec.n_firms;
  const auto box = PriceBox::uniform(n, spec.price_low, spec.price_high);
  Draw d;
  d.params.alpha.resize(n);
  d.params.beta.resize(n);
  std::vector<double> p(n);
  for (std::size_t i = 0; i < n; ++i) {
    d.params.alpha[i] = rng::uniform(spec.alpha_low, spec.alpha_high, spec.master_seed, index, i, 1);
    d.params.beta[i] = rng::uniform(spec.beta_low, spec.beta_high, spec.master_seed, index, i, 2);
    p[i] = rng::uniform(spec.price_low, spec.price_high, spec.master_seed, index, i, 3);
  }
  d.initial = PriceVector(std::move(p), box);
  return d;
}

/// Noise stream of one draw. Fresh per (draw, kappa); parameters are shared
/// across kappa settings.
inline std::uint64_t noise_seed(const ExperimentSpec& spec, std::size_t index) {
  return rng::hash_key(spec.master_seed, index, std::bit_cast<std::uint64_t>(spec.kappa),
                       0x4e015eULL);
}

inline std::unique_ptr<DemandModel> make_model(const ExperimentSpec& spec, const Draw& draw) {
  if (spec.demand == DemandFamily::linear)
    return std::make_unique<LinearDemand>(LinearDemandParams::symmetric(
        spec.n_firms, spec.linear_intercept, spec.linear_own_slope, spec.effective_cross_slope()));
  return std::make_unique<MnlDemand>(draw.params);
}

struct DrawResult {
  std::size_t draw = 0;
  bool ok = false;
  std::string error;
  Draw params;
  std::vector<double> p_star;
  double sigma = 0.0;
  MetricsSeries series;  ///< at spec.checkpoints
  TraceSummary summary;  ///< regret at spec.regret_horizons()
  std::size_t nonconverged_stages = 0;
};

struct ResultCell {
  std::size_t firm = 0;  ///< 0-based
  bool clairvoyant = false;
  std::size_t checkpoint = 0;
  double mean_fraction = 0.0;
  double stderr_fraction = 0.0;
  std::size_t n_effective = 0;
};

struct ResultTable {
  std::size_t n_firms = 0;
  std::size_t n_prime = 0;  ///< equals n_firms in full mode
  double kappa = 0.0;
  std::vector<ResultCell> rows;  ///< firm-major, checkpoints ascending

  const ResultCell& cell(std::size_t firm, std::size_t checkpoint) const {
    for (const auto& c : rows)
      if (c.firm == firm && c.checkpoint == checkpoint) return c;
    throw InvalidArgument("ResultTable: no such cell");
  }
};

/// Simulates one draw end to end and evaluates its metrics.
inline DrawResult run_draw(const ExperimentSpec& spec, std::size_t index) {
  DrawResult out;
  out.draw = index;
  try {
    out.params = sample_draw(spec, index);
    const auto model = make_model(spec, out.params);
    const MarketConfig market(spec.n_firms,
                              PriceBox::uniform(spec.n_firms, spec.price_low, spec.price_high),
                              spec.kappa, spec.effective_horizon());
    const ScheduleParams schedule(spec.effective_i0(), spec.v);
    const std::uint64_t seed = noise_seed(spec, index);
    const RunTrace trace =
        spec.partial()
            ? run_modified_ddep(market, *model, schedule, *spec.n_prime, out.params.initial, seed)
            : run_ddep(market, *model, schedule, out.params.initial, seed);
    out.p_star = trace.clairvoyant.prices.to_vector();
    out.sigma = trace.sigma;
    out.series = compute_series(trace, spec.checkpoints);
    const auto horizons = spec.regret_horizons();
    out.summary = summarize(trace, horizons);
    for (const auto& s : out.summary.stages) out.nonconverged_stages += !s.converged;
    out.ok = true;
  } catch (const std::exception& e) {
    out.ok = false;
    out.error = e.what();
  }
  return out;
}

/// Means and standard errors of the fraction of optimal revenue per
/// (firm, checkpoint) over the successful draws.
inline ResultTable aggregate(const ExperimentSpec& spec, std::span<const DrawResult> draws) {
  ResultTable table;
  table.n_firms = spec.n_firms;
  table.n_prime = spec.experimenting();
  table.kappa = spec.kappa;
  for (std::size_t i = 0; i < spec.n_firms; ++i) {
    for (std::size_t c = 0; c < spec.checkpoints.size(); ++c) {
      ResultCell cell;
      cell.firm = i;
      cell.clairvoyant = i >= spec.experimenting();
      cell.checkpoint = spec.checkpoints[c];
      double sum = 0.0, sum_sq = 0.0;
      for (const auto& d : draws) {
        if (!d.ok) continue;
        const double f = d.series.fraction_of_optimal[i][c];
        sum += f;
        sum_sq += f * f;
        ++cell.n_effective;
      }
      if (cell.n_effective > 0) {
        const double m = double(cell.n_effective);
        cell.mean_fraction = sum / m;
        if (cell.n_effective > 1) {
          const double var = std::max(0.0, (sum_sq - m * cell.mean_fraction * cell.mean_fraction) / (m - 1));
          cell.stderr_fraction = std::sqrt(var / m);
        }
      }
      table.rows.push_back(cell);
    }
  }
  return table;
}

struct ExperimentResult {
  ExperimentSpec spec;
  std::vector<DrawResult> draws;  ///< indexed by draw
  ResultTable table;
  std::size_t failures = 0;
  std::optional<ConvergenceDiagnostics> diagnostics;
  std::string diagnostics_error;

  /// More than 10% of draws failed.
  bool failed() const noexcept { return failures * 10 > draws.size(); }
};

inline std::optional<ConvergenceDiagnostics> try_diagnostics(std::span<const DrawResult> draws,
                                                             std::string& error) {
  std::vector<TraceSummary> summaries;
  for (const auto& d : draws)
    if (d.ok) summaries.push_back(d.summary);
  try {
    return convergence_diagnostics(summaries);
  } catch (const InsufficientData& e) {
    error = e.what();
    return std::nullopt;
  }
}

/// Runs every draw on a worker pool and aggregates once all have finished.
/// Results depend only on (spec, master_seed), never on scheduling.
inline ExperimentResult run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  ExperimentResult out;
  out.spec = spec;
  out.draws.resize(spec.n_draws);

  std::size_t workers = spec.workers ? spec.workers : std::thread::hardware_concurrency();
  workers = std::clamp<std::size_t>(workers, 1, spec.n_draws);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t d; (d = next.fetch_add(1)) < spec.n_draws;) out.draws[d] = run_draw(spec, d);
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }

  for (const auto& d : out.draws) out.failures += !d.ok;
  out.table = aggregate(spec, out.draws);
  out.diagnostics = try_diagnostics(out.draws, out.diagnostics_error);
  return out;
}

}  // namespace ddep
