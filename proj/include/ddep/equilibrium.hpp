#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "ddep/errors.hpp"
#include "ddep/estimation.hpp"
#include "ddep/market.hpp"

namespace ddep {

struct SolverSettings {
  double tolerance = 1e-10;  ///< max-norm of successive iterates
  std::size_t max_iterations = 10000;
  double damping = 1.0;  ///< p <- (1 - damping) p + damping BR(p)

  void validate() const {
    if (!(tolerance > 0.0)) throw InvalidArgument("SolverSettings: tolerance must be > 0");
    if (max_iterations < 1) throw InvalidArgument("SolverSettings: max_iterations must be >= 1");
    if (!(damping > 0.0 && damping <= 1.0))
      throw InvalidArgument("SolverSettings: damping must be in (0, 1]");
  }
};

struct GneResult {
  PriceVector prices;
  double kkt_residual = std::numeric_limits<double>::infinity();
  std::size_t iterations = 0;
  bool converged = false;
};

namespace detail {

/// Residual of the one-dimensional KKT system
///   g + mu1 d_lambda - mu2 + mu3 = 0,  mu >= 0,
///   mu1 lambda = 0, mu2 (high - p) = 0, mu3 (p - low) = 0,
/// where g = d r / d p and d_lambda = d lambda / d p < 0. Multipliers are
/// chosen so stationarity holds exactly; the residual is then the worst
/// complementarity product or primal infeasibility.
inline double kkt_residual_1d(double p, double low, double high, double g,
                              double demand, double d_lambda) {
  double infeasibility = std::max({0.0, low - p, p - high, -demand});
  double complementarity = 0.0;
  if (g >= 0.0) {
    double slack = high - p;
    if (d_lambda < 0.0 && demand >= 0.0) slack = std::min(slack, demand / -d_lambda);
    complementarity = g * std::max(slack, 0.0);
  } else {
    complementarity = -g * std::max(p - low, 0.0);
  }
  return std::max(infeasibility, complementarity);
}

/// Largest p^i in the box with lambda^i(p^i, p^{-i}) >= 0; the lower bound
/// when no such price exists.
inline double demand_cap(const DemandModel& model, std::vector<double>& q,
                         std::size_t i, const PriceBox& box) {
  const double saved = q[i];
  double lo = box.low(i), hi = box.high(i);
  q[i] = hi;
  double cap = hi;
  if (model.mean(q, i) < 0.0) {
    q[i] = lo;
    if (model.mean(q, i) < 0.0) {
      cap = lo;
    } else {
      for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++it) {
        const double mid = 0.5 * (lo + hi);
        q[i] = mid;
        (model.mean(q, i) >= 0.0 ? lo : hi) = mid;
      }
      cap = lo;
    }
  }
  q[i] = saved;
  return cap;
}

/// Synchronous (Jacobi) projected best-response iteration over `firms`;
/// other coordinates stay fixed. `br(p, i)` returns firm i's response to p.
template <class BestResponse>
GneResult jacobi(const PriceBox& box, const SolverSettings& settings,
                 std::vector<double> p, std::span<const std::size_t> firms,
                 BestResponse&& br) {
  settings.validate();
  GneResult out;
  std::vector<double> next = p;
  for (std::size_t it = 1; it <= settings.max_iterations; ++it) {
    double step = 0.0;
    for (std::size_t i : firms) {
      const double target = br(std::span<const double>(p), i);
      next[i] = box.clip(i, (1.0 - settings.damping) * p[i] + settings.damping * target);
      step = std::max(step, std::abs(next[i] - p[i]));
    }
    p = next;
    out.iterations = it;
    if (step <= settings.tolerance) {
      out.converged = true;
      break;
    }
  }
  out.prices = PriceVector(std::move(p), box);
  return out;
}

inline std::vector<std::size_t> firm_range(std::size_t first, std::size_t last) {
  std::vector<std::size_t> out;
  for (std::size_t i = first; i < last; ++i) out.push_back(i);
  return out;
}

}  // namespace detail

/// Maximizer of p (A - b p) over {p in box : A - b p >= 0}, where A is firm i's
/// estimated intercept given competitors' prices and b its own sensitivity.
inline double best_response_linear(const EstimatedDemand& est, std::size_t firm,
                                   std::span<const double> prices, const PriceBox& box) {
  const double b = est.own(firm);
  if (!(b > 0.0)) throw NonConcave("best_response_linear: own sensitivity must be positive");
  const double a = est.effective_intercept(prices, firm);
  double p = box.clip(firm, a / (2.0 * b));
  if (a - b * p < 0.0) p = box.clip(firm, a / b);
  return p;
}

/// True revenue maximizer of `firm` with competitors fixed at `prices`.
///
/// Solves lambda + p d_lambda = 0 by Newton's method safeguarded with a
/// bisection bracket inside [low, demand cap]. Without a sign change the better
/// endpoint wins, the lower one on exact ties.
inline double best_response_true(const DemandModel& model, std::size_t firm,
                                 std::span<const double> prices, const PriceBox& box) {
  std::vector<double> q(prices.begin(), prices.end());
  const double lo = box.low(firm);
  const double hi = detail::demand_cap(model, q, firm, box);
  auto foc = [&](double x) {
    q[firm] = x;
    return model.mean(q, firm) + x * model.gradient(q, firm, firm);
  };
  auto foc_slope = [&](double x) {
    q[firm] = x;
    return 2.0 * model.gradient(q, firm, firm) + x * model.own_curvature(q, firm);
  };
  auto rev = [&](double x) {
    q[firm] = x;
    return model.revenue(q, firm);
  };

  if (!(hi > lo)) return lo;
  const double f_lo = foc(lo), f_hi = foc(hi);
  if (!(f_lo > 0.0 && f_hi < 0.0)) return rev(lo) >= rev(hi) ? lo : hi;

  double a = lo, b = hi;
  double x = prices[firm] > a && prices[firm] < b ? prices[firm] : 0.5 * (a + b);
  for (int it = 0; it < 200; ++it) {
    const double f = foc(x);
    if (f == 0.0) return x;
    (f > 0.0 ? a : b) = x;
    const double d = foc_slope(x);
    const double newton = x - f / d;
    const double next = (d < 0.0 && newton > a && newton < b) ? newton : 0.5 * (a + b);
    if (std::abs(next - x) <= 1e-15 * std::max(1.0, std::abs(x)) ||
        b - a <= 1e-15 * std::max(1.0, std::abs(b)))
      return next;
    x = next;
  }
  return x;
}

/// Worst per-firm KKT residual of the estimated game at `p`.
inline double estimated_kkt_residual(const EstimatedDemand& est, std::span<const double> p,
                                     const PriceBox& box) {
  double r = 0.0;
  for (std::size_t i = 0; i < est.modeled(); ++i) {
    const double b = est.own(i);
    const double a = est.effective_intercept(p, i);
    r = std::max(r, detail::kkt_residual_1d(p[i], box.low(i), box.high(i), a - 2.0 * b * p[i],
                                            a - b * p[i], -b));
  }
  return r;
}

/// Worst KKT residual of the true-demand revenue problems of `firms` at `p`.
inline double true_kkt_residual(const DemandModel& model, std::span<const double> p,
                                const PriceBox& box, std::span<const std::size_t> firms) {
  double r = 0.0;
  for (std::size_t k : firms) {
    const double lam = model.mean(p, k);
    const double dl = model.gradient(p, k, k);
    r = std::max(r, detail::kkt_residual_1d(p[k], box.low(k), box.high(k), lam + p[k] * dl,
                                            lam, dl));
  }
  return r;
}

inline double true_kkt_residual(const DemandModel& model, std::span<const double> p,
                                const PriceBox& box) {
  const auto all = detail::firm_range(0, model.n_firms());
  return true_kkt_residual(model, p, box, all);
}

/// Equilibrium of the estimated linear-quadratic game by projected
/// best-response iteration from `warm_start`.
inline GneResult solve_estimated_gne(const EstimatedDemand& est, const PriceBox& box,
                                     const SolverSettings& settings,
                                     const PriceVector& warm_start) {
  for (std::size_t i = 0; i < est.modeled(); ++i)
    if (!(est.own(i) > 0.0))
      throw NonConcave("solve_estimated_gne: own sensitivity must be positive");
  const auto firms = detail::firm_range(0, est.modeled());
  auto out = detail::jacobi(box, settings, warm_start.to_vector(), firms,
                            [&](std::span<const double> p, std::size_t i) {
                              return best_response_linear(est, i, p, box);
                            });
  out.kkt_residual = estimated_kkt_residual(est, out.prices, box);
  return out;
}

/// Clairvoyant equilibrium p* of the true game.
inline GneResult solve_clairvoyant_gne(const DemandModel& model, const PriceBox& box,
                                       const SolverSettings& settings,
                                       const PriceVector& start) {
  const auto firms = detail::firm_range(0, model.n_firms());
  auto out = detail::jacobi(box, settings, start.to_vector(), firms,
                            [&](std::span<const double> p, std::size_t i) {
                              return best_response_true(model, i, p, box);
                            });
  out.kkt_residual = true_kkt_residual(model, out.prices, box, firms);
  return out;
}

/// Equilibrium of the partially-clairvoyant game.
///
/// Firms below est.modeled() price against the partially-flawed estimate,
/// which never reads clairvoyant prices, so that subsystem is solved first.
/// The clairvoyant firms then best-respond to true demand given all prices.
inline GneResult solve_mixed_gne(const EstimatedDemand& est, const DemandModel& model,
                                 const PriceBox& box, const SolverSettings& settings,
                                 const PriceVector& warm_start) {
  const std::size_t n = model.n_firms();
  const std::size_t k = est.modeled();
  if (k > n || est.n_firms != n)
    throw InvalidArgument("solve_mixed_gne: estimate does not match the market");
  for (std::size_t i = 0; i < k; ++i)
    if (!(est.own(i) > 0.0))
      throw NonConcave("solve_mixed_gne: own sensitivity must be positive");

  const auto uninformed = detail::firm_range(0, k);
  const auto clairvoyant = detail::firm_range(k, n);
  GneResult first = detail::jacobi(box, settings, warm_start.to_vector(), uninformed,
                                   [&](std::span<const double> p, std::size_t i) {
                                     return best_response_linear(est, i, p, box);
                                   });
  GneResult second = detail::jacobi(box, settings, first.prices.to_vector(), clairvoyant,
                                    [&](std::span<const double> p, std::size_t i) {
                                      return best_response_true(model, i, p, box);
                                    });
  GneResult out = std::move(second);
  out.iterations += first.iterations;
  out.converged = out.converged && first.converged;
  out.kkt_residual = std::max(estimated_kkt_residual(est, out.prices, box),
                              true_kkt_residual(model, out.prices, box, clairvoyant));
  return out;
}

/// Largest observed ratio ||p_{k+1} - p*|| / ||p_k - p*|| (max-norm) along the
/// clairvoyant best-response iteration. A value below one on the sampled path
/// is the empirical contraction the convergence analysis relies on.
inline double contraction_factor(const DemandModel& model, const PriceBox& box,
                                 const PriceVector& start, const PriceVector& p_star,
                                 std::size_t steps = 50) {
  std::vector<double> p = start.to_vector(), next = p;
  double worst = 0.0;
  for (std::size_t s = 0; s < steps; ++s) {
    const double before = max_abs_diff(p, p_star);
    if (before < 1e-9) break;
    for (std::size_t i = 0; i < p.size(); ++i) next[i] = best_response_true(model, i, p, box);
    worst = std::max(worst, max_abs_diff(next, p_star) / before);
    p = next;
  }
  return worst;
}

}  // namespace ddep
