#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "ddep/engine.hpp"
#include "ddep/errors.hpp"

namespace ddep {

namespace detail {

inline void check_range(const RunTrace& trace, std::size_t firm, std::size_t first,
                        std::size_t last) {
  if (firm >= trace.n_firms) throw InvalidArgument("metrics: firm out of range");
  if (first < 1 || last > trace.horizon || first > last + 1)
    throw InvalidArgument("metrics: horizon out of range");
}

}  // namespace detail

/// Cumulative expected regret of `firm` over periods [first, last] against the
/// per-period true best response with competitors at their played prices.
inline double regret_between(const RunTrace& trace, std::size_t firm, std::size_t first,
                             std::size_t last) {
  detail::check_range(trace, firm, first, last);
  double s = 0.0;
  for (std::size_t t = first; t <= last; ++t)
    s += trace.best_response_revenue(t, firm) - trace.expected_revenue(t, firm);
  return s;
}

inline double regret(const RunTrace& trace, std::size_t firm, std::size_t horizon) {
  return regret_between(trace, firm, 1, horizon);
}

/// Sum over periods of |r^i(p*) - r^i(p_t)| with expected revenues.
inline double revenue_difference_between(const RunTrace& trace, std::size_t firm,
                                         std::size_t first, std::size_t last) {
  detail::check_range(trace, firm, first, last);
  const double at_star = trace.clairvoyant.prices[firm] * trace.clairvoyant_demand[firm];
  double s = 0.0;
  for (std::size_t t = first; t <= last; ++t)
    s += std::abs(at_star - trace.expected_revenue(t, firm));
  return s;
}

inline double revenue_difference(const RunTrace& trace, std::size_t firm,
                                 std::size_t horizon) {
  return revenue_difference_between(trace, firm, 1, horizon);
}

/// Realized revenue over the best-response expected revenue, periods 1..horizon.
inline double fraction_of_optimal(const RunTrace& trace, std::size_t firm,
                                  std::size_t horizon) {
  detail::check_range(trace, firm, 1, horizon);
  double num = 0.0, den = 0.0;
  for (std::size_t t = 1; t <= horizon; ++t) {
    num += trace.revenue(t, firm);
    den += trace.best_response_revenue(t, firm);
  }
  if (den == 0.0) throw DivisionByZero("fraction_of_optimal: zero optimal revenue");
  return num / den;
}

/// Same ratio with expected instead of realized revenue in the numerator.
inline double expected_fraction_of_optimal(const RunTrace& trace, std::size_t firm,
                                           std::size_t horizon) {
  detail::check_range(trace, firm, 1, horizon);
  double num = 0.0, den = 0.0;
  for (std::size_t t = 1; t <= horizon; ++t) {
    num += trace.expected_revenue(t, firm);
    den += trace.best_response_revenue(t, firm);
  }
  if (den == 0.0) throw DivisionByZero("expected_fraction_of_optimal: zero optimal revenue");
  return num / den;
}

/// Per-firm metric values at each checkpoint, plus per-stage price gaps.
struct MetricsSeries {
  std::vector<std::size_t> checkpoints;
  // [firm][checkpoint]
  std::vector<std::vector<double>> regret_cumulative;
  std::vector<std::vector<double>> revenue_difference_cumulative;
  std::vector<std::vector<double>> fraction_of_optimal;
  std::vector<std::vector<double>> expected_fraction_of_optimal;
  /// ||p_hat_{n+1} - p*||^2 for each completed stage.
  std::vector<double> price_gap_sq;
};

inline MetricsSeries compute_series(const RunTrace& trace,
                                    std::span<const std::size_t> checkpoints) {
  MetricsSeries out;
  out.checkpoints.assign(checkpoints.begin(), checkpoints.end());
  const std::size_t n = trace.n_firms;
  auto sized = [&] {
    return std::vector<std::vector<double>>(n, std::vector<double>(checkpoints.size()));
  };
  out.regret_cumulative = sized();
  out.revenue_difference_cumulative = sized();
  out.fraction_of_optimal = sized();
  out.expected_fraction_of_optimal = sized();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < checkpoints.size(); ++c) {
      const std::size_t h = checkpoints[c];
      out.regret_cumulative[i][c] = regret(trace, i, h);
      out.revenue_difference_cumulative[i][c] = revenue_difference(trace, i, h);
      out.fraction_of_optimal[i][c] = fraction_of_optimal(trace, i, h);
      out.expected_fraction_of_optimal[i][c] = expected_fraction_of_optimal(trace, i, h);
    }
  }
  for (const auto& s : trace.stages)
    if (s.next) out.price_gap_sq.push_back(squared_distance(s.next->prices, trace.clairvoyant.prices));
  return out;
}

/// Compact per-run input for convergence diagnostics; also what the CLI
/// writes to and reads back from disk.
struct TraceSummary {
  struct Stage {
    std::size_t stage = 0;  ///< 1-based
    std::size_t interval_len = 0;
    double delta = 0.0;
    double gap_sq = 0.0;  ///< ||p_hat_{n+1} - p*||^2
    bool converged = false;
  };
  struct Regret {
    std::size_t horizon = 0;
    double mean_regret = 0.0;  ///< averaged over firms
  };
  std::vector<Stage> stages;
  std::vector<Regret> regret;
};

inline TraceSummary summarize(const RunTrace& trace, std::span<const std::size_t> horizons) {
  TraceSummary out;
  for (const auto& s : trace.stages) {
    if (!s.next) continue;
    out.stages.push_back({s.index, s.interval_len, s.delta,
                          squared_distance(s.next->prices, trace.clairvoyant.prices),
                          s.next->converged});
  }
  for (std::size_t h : horizons) {
    double r = 0.0;
    for (std::size_t i = 0; i < trace.n_firms; ++i) r += regret(trace, i, h);
    out.regret.push_back({h, r / double(trace.n_firms)});
  }
  return out;
}

/// Slope of the ordinary least-squares line through (x, y).
inline double ols_slope(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) throw InsufficientData("ols_slope: need at least two points");
  double mx = 0, my = 0;
  for (std::size_t k = 0; k < n; ++k) {
    mx += x[k];
    my += y[k];
  }
  mx /= double(n);
  my /= double(n);
  double sxy = 0, sxx = 0;
  for (std::size_t k = 0; k < n; ++k) {
    sxy += (x[k] - mx) * (y[k] - my);
    sxx += (x[k] - mx) * (x[k] - mx);
  }
  if (sxx == 0.0) throw InsufficientData("ols_slope: x has no spread");
  return sxy / sxx;
}

struct ConvergenceDiagnostics {
  struct StageMean {
    std::size_t stage = 0;
    std::size_t interval_len = 0;
    double mean_gap_sq = 0.0;
    std::size_t count = 0;
  };
  struct HorizonMean {
    std::size_t horizon = 0;
    double mean_regret = 0.0;
  };
  std::size_t n_traces = 0;
  std::vector<StageMean> stage_means;
  double gap_slope = 0.0;  ///< d log E||p_hat - p*||^2 / d log I_n
  std::vector<HorizonMean> horizon_means;
  double regret_slope = 0.0;  ///< d log E[regret] / d log T
};

inline constexpr std::size_t kMinDiagnosticTraces = 10;
inline constexpr std::size_t kMinDiagnosticStages = 4;

/// Averages the summaries per stage and per horizon, then fits log-log slopes.
/// Non-converged stages are left out of the gap means.
inline ConvergenceDiagnostics convergence_diagnostics(std::span<const TraceSummary> traces) {
  if (traces.size() < kMinDiagnosticTraces)
    throw InsufficientData("convergence_diagnostics: need at least " +
                           std::to_string(kMinDiagnosticTraces) + " traces, got " +
                           std::to_string(traces.size()));
  ConvergenceDiagnostics out;
  out.n_traces = traces.size();

  std::map<std::size_t, ConvergenceDiagnostics::StageMean> by_stage;
  std::map<std::size_t, std::pair<double, std::size_t>> by_horizon;
  for (const auto& tr : traces) {
    for (const auto& s : tr.stages) {
      if (!s.converged) continue;
      auto& m = by_stage[s.stage];
      m.stage = s.stage;
      m.interval_len = s.interval_len;
      m.mean_gap_sq += s.gap_sq;
      ++m.count;
    }
    for (const auto& r : tr.regret) {
      auto& h = by_horizon[r.horizon];
      h.first += r.mean_regret;
      ++h.second;
    }
  }
  std::vector<double> lx, ly;
  for (auto& [_, m] : by_stage) {
    m.mean_gap_sq /= double(m.count);
    out.stage_means.push_back(m);
    if (m.mean_gap_sq > 0.0) {
      lx.push_back(std::log(double(m.interval_len)));
      ly.push_back(std::log(m.mean_gap_sq));
    }
  }
  if (lx.size() < kMinDiagnosticStages)
    throw InsufficientData("convergence_diagnostics: need at least " +
                           std::to_string(kMinDiagnosticStages) + " stages");
  out.gap_slope = ols_slope(lx, ly);

  std::vector<double> hx, hy;
  for (const auto& [h, acc] : by_horizon) {
    const double mean = acc.first / double(acc.second);
    out.horizon_means.push_back({h, mean});
    if (mean > 0.0 && h > 0) {
      hx.push_back(std::log(double(h)));
      hy.push_back(std::log(mean));
    }
  }
  if (hx.size() < 2) throw InsufficientData("convergence_diagnostics: need at least two horizons");
  out.regret_slope = ols_slope(hx, hy);
  return out;
}

inline ConvergenceDiagnostics convergence_diagnostics(std::span<const RunTrace> traces,
                                                      std::span<const std::size_t> horizons) {
  std::vector<TraceSummary> summaries;
  summaries.reserve(traces.size());
  for (const auto& t : traces) summaries.push_back(summarize(t, horizons));
  return convergence_diagnostics(summaries);
}

}  // namespace ddep
