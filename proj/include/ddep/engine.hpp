#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ddep/equilibrium.hpp"
#include "ddep/errors.hpp"
#include "ddep/estimation.hpp"
#include "ddep/market.hpp"

namespace ddep {

/// Stage lengths I_n = floor(I_0 v^n) and experiment sizes delta_n = I_n^{-1/4}.
struct ScheduleParams {
  std::size_t i0 = 0;
  double v = 2.0;

  ScheduleParams() = default;
  ScheduleParams(std::size_t initial, double growth) : i0(initial), v(growth) { validate(); }

  void validate() const {
    if (i0 < 1) throw InvalidArgument("ScheduleParams: I0 must be >= 1");
    if (!(v > 1.0) || !std::isfinite(v)) throw InvalidArgument("ScheduleParams: v must be > 1");
  }

  std::size_t interval_length(std::size_t stage) const {
    return static_cast<std::size_t>(std::floor(double(i0) * std::pow(v, double(stage))));
  }
  double delta(std::size_t stage) const {
    return std::pow(double(interval_length(stage)), -0.25);
  }
};

/// Row-major (period x firm) table.
class PeriodTable {
 public:
  PeriodTable() = default;
  PeriodTable(std::size_t periods, std::size_t firms)
      : firms_(firms), data_(periods * firms, 0.0) {}

  /// `t` is the 1-based period.
  double& operator()(std::size_t t, std::size_t i) { return data_[(t - 1) * firms_ + i]; }
  double operator()(std::size_t t, std::size_t i) const { return data_[(t - 1) * firms_ + i]; }
  std::span<const double> row(std::size_t t) const {
    return {data_.data() + (t - 1) * firms_, firms_};
  }
  std::size_t periods() const noexcept { return firms_ ? data_.size() / firms_ : 0; }

  friend bool operator==(const PeriodTable&, const PeriodTable&) = default;

 private:
  std::size_t firms_ = 0;
  std::vector<double> data_;
};

struct StageRecord {
  std::size_t index = 0;  ///< 1-based stage number
  std::size_t interval_len = 0;
  double delta = 0.0;
  PriceVector base;           ///< p_hat_n, played in the first interval
  std::size_t first_period = 0;  ///< 1-based
  std::size_t n_periods = 0;     ///< periods actually played (truncated at T)
  bool complete = false;
  std::optional<EstimatedDemand> estimate;
  std::optional<GneResult> next;  ///< p_hat_{n+1}
  std::size_t clamped = 0;        ///< own sensitivities raised to the floor
};

/// Everything one run produced. Period arrays are indexed by 1-based t.
struct RunTrace {
  std::size_t n_firms = 0;
  std::size_t n_experimenting = 0;  ///< N (full) or N' (partial)
  std::size_t horizon = 0;
  double sigma = 0.0;

  PeriodTable prices;
  PeriodTable demand;                 ///< realized D^i_t
  PeriodTable expected_revenue;       ///< p^i_t lambda^i(p_t)
  PeriodTable best_response;          ///< p^{i*}_t given p^{-i}_t
  PeriodTable best_response_revenue;  ///< p^{i*}_t lambda^i(p^{i*}_t, p^{-i}_t)
  std::vector<std::size_t> stage_of_period;  ///< index into `stages`

  std::vector<StageRecord> stages;
  GneResult clairvoyant;             ///< p*
  std::vector<double> clairvoyant_demand;  ///< lambda(p*)

  double revenue(std::size_t t, std::size_t i) const { return prices(t, i) * demand(t, i); }
  bool is_clairvoyant(std::size_t i) const { return i >= n_experimenting; }
};

struct EngineOptions {
  SolverSettings solver;
  /// Damping for a single retry when the Step-3 iteration does not converge.
  double retry_damping = 0.5;
};

namespace detail {

inline GneResult next_equilibrium(const EstimatedDemand& est, const DemandModel& model,
                                  const PriceBox& box, const SolverSettings& settings,
                                  const PriceVector& warm, bool partial) {
  return partial ? solve_mixed_gne(est, model, box, settings, warm)
                 : solve_estimated_gne(est, box, settings, warm);
}

inline RunTrace run_stages(const MarketConfig& market, const DemandModel& model,
                           const ScheduleParams& schedule, std::size_t n_experimenting,
                           const PriceVector& initial, std::uint64_t seed,
                           const EngineOptions& options) {
  market.validate();
  schedule.validate();
  const std::size_t n = market.n_firms;
  const std::size_t horizon = market.horizon;
  const PriceBox& box = market.box;
  if (model.n_firms() != n) throw InvalidArgument("run: model firm count does not match market");
  if (initial.size() != n || !box.contains(initial))
    throw InvalidArgument("run: initial prices must lie in the box");
  if (n_experimenting < 1 || n_experimenting > n)
    throw InvalidArgument("run: need 1 <= N' <= N");
  const bool partial = n_experimenting < n;
  const FitMode mode = partial ? FitMode::partial_over(n_experimenting) : FitMode::full();

  RunTrace trace;
  trace.n_firms = n;
  trace.n_experimenting = n_experimenting;
  trace.horizon = horizon;
  trace.prices = PeriodTable(horizon, n);
  trace.demand = PeriodTable(horizon, n);
  trace.expected_revenue = PeriodTable(horizon, n);
  trace.best_response = PeriodTable(horizon, n);
  trace.best_response_revenue = PeriodTable(horizon, n);
  trace.stage_of_period.reserve(horizon);

  std::vector<double> mid(n);
  for (std::size_t i = 0; i < n; ++i) mid[i] = 0.5 * (box.low(i) + box.high(i));
  trace.clairvoyant = solve_clairvoyant_gne(model, box, options.solver, PriceVector(mid, box));
  trace.clairvoyant_demand = model.means(trace.clairvoyant.prices);
  double mean_demand = 0.0;
  for (double d : trace.clairvoyant_demand) mean_demand += d;
  mean_demand /= double(n);
  trace.sigma = market.noise_ratio * mean_demand;
  const NoiseSpec noise(trace.sigma, seed);

  PriceVector base = initial;
  std::size_t t = 0;
  for (std::size_t stage = 0; t < horizon; ++stage) {
    StageRecord rec;
    rec.index = stage + 1;
    rec.interval_len = schedule.interval_length(stage);
    rec.delta = schedule.delta(stage);
    rec.base = base;
    rec.first_period = t + 1;

    StageObservations obs;
    obs.interval_len = rec.interval_len;
    obs.n_intervals = n_experimenting + 1;
    obs.delta = rec.delta;

    for (std::size_t m = 0; m <= n_experimenting && t < horizon; ++m) {
      std::vector<double> p = base.to_vector();
      if (m > 0) {
        // Experiment upward unless that leaves the box.
        const std::size_t f = m - 1;
        p[f] = p[f] + rec.delta <= box.high(f) ? p[f] + rec.delta
                                                : box.clip(f, p[f] - rec.delta);
      }
      const PriceVector played(p, box);
      const std::vector<double> lam = model.means(played);
      std::vector<double> br(n), br_rev(n);
      std::vector<double> q = p;
      for (std::size_t i = 0; i < n; ++i) {
        br[i] = best_response_true(model, i, played, box);
        q[i] = br[i];
        br_rev[i] = model.revenue(q, i);
        q[i] = p[i];
      }
      for (std::size_t r = 0; r < rec.interval_len && t < horizon; ++r) {
        ++t;
        std::vector<double> d = lam;
        for (std::size_t i = 0; i < n; ++i) {
          d[i] += noise.shock(t, i);
          trace.prices(t, i) = p[i];
          trace.demand(t, i) = d[i];
          trace.expected_revenue(t, i) = p[i] * lam[i];
          trace.best_response(t, i) = br[i];
          trace.best_response_revenue(t, i) = br_rev[i];
        }
        trace.stage_of_period.push_back(stage);
        obs.rows.push_back({played, std::move(d)});
      }
    }
    rec.n_periods = t + 1 - rec.first_period;
    rec.complete = obs.rows.size() == obs.n_intervals * obs.interval_len;

    if (rec.complete) {
      EstimatedDemand est = fit_stage(obs, mode);
      rec.clamped = clamp_own_sensitivity(est);
      GneResult next = next_equilibrium(est, model, box, options.solver, base, partial);
      if (!next.converged) {
        SolverSettings retry = options.solver;
        retry.damping = options.retry_damping;
        GneResult damped = next_equilibrium(est, model, box, retry, base, partial);
        if (damped.converged) next = std::move(damped);
      }
      base = next.prices;
      rec.estimate = std::move(est);
      rec.next = std::move(next);
    }
    trace.stages.push_back(std::move(rec));
  }
  return trace;
}

}  // namespace detail

/// Runs the learning-and-equilibrium stage loop for T periods with every firm
/// experimenting. p* and sigma = kappa * mean(lambda(p*)) are computed first.
inline RunTrace run_ddep(const MarketConfig& market, const DemandModel& model,
                         const ScheduleParams& schedule, const PriceVector& initial,
                         std::uint64_t seed, const EngineOptions& options = {}) {
  return detail::run_stages(market, model, schedule, market.n_firms, initial, seed, options);
}

/// Partially-clairvoyant variant: firms [0, n_prime) learn from a partially
/// flawed model, firms [n_prime, N) know demand, hold their price within each
/// stage and reprice to the true best response of the mixed game.
inline RunTrace run_modified_ddep(const MarketConfig& market, const DemandModel& model,
                                  const ScheduleParams& schedule, std::size_t n_prime,
                                  const PriceVector& initial, std::uint64_t seed,
                                  const EngineOptions& options = {}) {
  return detail::run_stages(market, model, schedule, n_prime, initial, seed, options);
}

}  // namespace ddep
